//! Sequential decision policies.
//!
//! Every policy alternates strictly between [`Policy::select`] and
//! [`Policy::observe`]; it sees only the round's contexts and the realized
//! reward of the arm it picked.

mod linucb;
mod lsw;
mod mab;
mod suplin;

pub use linucb::LinUcb;
pub use lsw::{Lsw, LSW_DEFAULT_MAX_HORIZON};
pub use mab::MabUcb;
pub use suplin::{LevelBeta, SupLinUcb, MAX_LEVELS};

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, BanditError, Result};
use crate::linalg::RidgeState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Oful,
    DsOful,
    SupLinUcb,
    Lsw,
    MabUcb,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Oful => "oful",
            PolicyKind::DsOful => "ds_oful",
            PolicyKind::SupLinUcb => "suplinucb",
            PolicyKind::Lsw => "lsw",
            PolicyKind::MabUcb => "mab_ucb",
        }
    }

    /// Whether the policy fits a linear model (everything except `MabUcb`).
    pub fn is_linear(self) -> bool {
        !matches!(self, PolicyKind::MabUcb)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = BanditError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "oful" => Ok(PolicyKind::Oful),
            "ds_oful" | "dsoful" => Ok(PolicyKind::DsOful),
            "suplinucb" | "suplin_ucb" | "suplin" => Ok(PolicyKind::SupLinUcb),
            "lsw" => Ok(PolicyKind::Lsw),
            "mab_ucb" | "mab" | "ucb" => Ok(PolicyKind::MabUcb),
            other => Err(invalid(format!("unknown policy kind {other:?}"))),
        }
    }
}

/// How a SupLinUCB round ended; single-level policies always report `UcbArgmax`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitReason {
    UcbArgmax,
    /// Some arm's bonus at the final level was at least `2^-l`; the most
    /// uncertain arm was played and its level regression set grows.
    LargeUncertainty,
    /// `k ≤ 4^l·d`: the level-`l` optimistic argmax was played, no update.
    DepthCap,
}

impl ExitReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExitReason::UcbArgmax => "ucb-argmax",
            ExitReason::LargeUncertainty => "large-uncertainty",
            ExitReason::DepthCap => "depth-cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmChoice {
    /// 1-based round index.
    pub round: u64,
    pub index: usize,
    /// Optimistic value the choice maximized (bonus-only for a
    /// large-uncertainty SupLinUCB exit).
    pub score: f64,
    /// `‖x‖_{U⁻¹}` of the chosen arm under the state used for the decision.
    pub bonus_at_choice: f64,
    pub selected_for_regression: bool,
    /// SupLinUCB level the round ended at; 0 for other policies.
    pub level: u32,
    pub exit_reason: ExitReason,
    /// Surviving arm indices `D_k^l` for each visited level, when the policy
    /// was asked to record them.
    pub level_sets: Option<Vec<Vec<usize>>>,
}

pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;

    fn select(&mut self, contexts: &[&[f64]]) -> Result<ArmChoice>;

    fn observe(&mut self, choice: &ArmChoice, x: &[f64], reward: f64) -> Result<()>;

    /// Regression-set sizes: one entry for single-level policies, one per
    /// level (starting at level 1) for SupLinUCB, empty for `MabUcb`.
    fn selection_counts(&self) -> Vec<usize>;

    /// The regressor driving decisions, if there is exactly one.
    fn ridge(&self) -> Option<&RidgeState> {
        None
    }
}

/// Enforces select/observe alternation and hands out round numbers.
#[derive(Debug, Clone, Default)]
pub(crate) struct Turn {
    round: u64,
    pending: Option<usize>,
}

impl Turn {
    pub(crate) fn begin(&mut self, n_arms: usize) -> Result<u64> {
        if self.pending.is_some() {
            return Err(BanditError::ProtocolViolation(format!(
                "select called twice without observe (round {})",
                self.round
            )));
        }
        if n_arms == 0 {
            return Err(invalid("decision set is empty"));
        }
        Ok(self.round + 1)
    }

    pub(crate) fn commit(&mut self, choice: &ArmChoice) {
        self.round = choice.round;
        self.pending = Some(choice.index);
    }

    pub(crate) fn finish(&mut self, choice: &ArmChoice) -> Result<()> {
        match self.pending {
            Some(index) if index == choice.index && choice.round == self.round => {
                self.pending = None;
                Ok(())
            }
            Some(index) => Err(BanditError::ProtocolViolation(format!(
                "observe for arm {} in round {} does not match pending arm {index} in round {}",
                choice.index, choice.round, self.round
            ))),
            None => Err(BanditError::ProtocolViolation(format!(
                "observe for round {} without a preceding select",
                choice.round
            ))),
        }
    }
}

/// `(xᵀθ̂, ‖x‖_{U⁻¹})`, refreshing the inverse once if it has degraded.
pub(crate) fn predict_and_bonus(ridge: &mut RidgeState, x: &[f64]) -> Result<(f64, f64)> {
    let bonus = ridge.bonus_refreshing(x)?;
    Ok((ridge.predict(x)?, bonus))
}

/// Index of the first maximum.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Positions of the arms whose level-`l` optimistic score is within
/// `2β(l)·2^-l` of the best one.
pub fn eliminate(scores: &[f64], beta_l: f64, level: u32) -> Result<Vec<usize>> {
    if scores.is_empty() {
        return Err(invalid("cannot eliminate from an empty arm list"));
    }
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = 2.0 * beta_l * 2f64.powi(-(level as i32));
    Ok(scores
        .iter()
        .enumerate()
        .filter(|(_, s)| best - **s <= width)
        .map(|(i, _)| i)
        .collect())
}
