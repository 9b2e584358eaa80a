use super::{argmax, eliminate, predict_and_bonus, ArmChoice, ExitReason, Policy, PolicyKind, Turn};
use crate::error::{invalid, BanditError, Result};
use crate::linalg::RidgeState;
use crate::theory::{level_params, ProblemConstants};

/// Any round still descending past this level is reported as an anomaly.
pub const MAX_LEVELS: u32 = 64;

/// Confidence multiplier `β(l)` per level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelBeta {
    /// `1 + R√(2dι₂(l))` from the problem constants.
    Theory(ProblemConstants),
    /// The same value at every level.
    Constant(f64),
}

impl LevelBeta {
    pub fn at(&self, level: u32) -> f64 {
        match self {
            LevelBeta::Theory(c) => level_params(c, level).beta,
            LevelBeta::Constant(b) => *b,
        }
    }
}

/// Multi-level SupLinUCB with arm elimination.
#[derive(Debug, Clone)]
pub struct SupLinUcb {
    dim: usize,
    lambda: f64,
    beta: LevelBeta,
    beta_cache: Vec<f64>,
    // `levels[l - 1]` is created on first visit to level `l`.
    levels: Vec<RidgeState>,
    record_level_sets: bool,
    turn: Turn,
}

impl SupLinUcb {
    pub fn new(dim: usize, lambda: f64, beta: LevelBeta) -> Result<Self> {
        // validates dim and lambda
        RidgeState::new(dim, lambda)?;
        if let LevelBeta::Constant(b) = beta {
            if !(b >= 0.0) || !b.is_finite() {
                return Err(invalid(format!("beta must be finite and non-negative, got {b}")));
            }
        }
        Ok(Self {
            dim,
            lambda,
            beta,
            beta_cache: Vec::new(),
            levels: Vec::new(),
            record_level_sets: false,
            turn: Turn::default(),
        })
    }

    /// Record `D_k^l` for every visited level in each [`ArmChoice`].
    pub fn with_level_sets(mut self, on: bool) -> Self {
        self.record_level_sets = on;
        self
    }

    pub fn beta_schedule(&self) -> &LevelBeta {
        &self.beta
    }

    pub fn level_state(&self, level: u32) -> Option<&RidgeState> {
        self.levels.get(level.checked_sub(1)? as usize)
    }

    fn beta_at(&mut self, level: u32) -> f64 {
        while self.beta_cache.len() < level as usize {
            let next = self.beta_cache.len() as u32 + 1;
            self.beta_cache.push(self.beta.at(next));
        }
        self.beta_cache[level as usize - 1]
    }

    fn state_at(&mut self, level: u32) -> Result<&mut RidgeState> {
        while self.levels.len() < level as usize {
            self.levels.push(RidgeState::new(self.dim, self.lambda)?);
        }
        Ok(&mut self.levels[level as usize - 1])
    }
}

impl Policy for SupLinUcb {
    fn kind(&self) -> PolicyKind {
        PolicyKind::SupLinUcb
    }

    fn select(&mut self, contexts: &[&[f64]]) -> Result<ArmChoice> {
        let round = self.turn.begin(contexts.len())?;
        let mut active: Vec<usize> = (0..contexts.len()).collect();
        let mut level_sets = self.record_level_sets.then(Vec::new);
        let d = self.dim as f64;

        for level in 1..=MAX_LEVELS {
            if let Some(sets) = level_sets.as_mut() {
                sets.push(active.clone());
            }
            let beta = self.beta_at(level);
            let state = self.state_at(level)?;
            let mut scores = Vec::with_capacity(active.len());
            let mut bonuses = Vec::with_capacity(active.len());
            for &i in &active {
                let (pred, bonus) = predict_and_bonus(state, contexts[i])?;
                scores.push(pred + beta * bonus);
                bonuses.push(bonus);
            }

            let threshold = 2f64.powi(-(level as i32));
            let widest = argmax(bonuses.iter().copied()).expect("active set is never empty");
            let (pos, score, exit) = if bonuses[widest] >= threshold {
                (widest, bonuses[widest], ExitReason::LargeUncertainty)
            } else if round as f64 <= 4f64.powi(level as i32) * d {
                let best = argmax(scores.iter().copied()).expect("active set is never empty");
                (best, scores[best], ExitReason::DepthCap)
            } else {
                active = eliminate(&scores, beta, level)?
                    .into_iter()
                    .map(|p| active[p])
                    .collect();
                continue;
            };

            let choice = ArmChoice {
                round,
                index: active[pos],
                score,
                bonus_at_choice: bonuses[pos],
                selected_for_regression: exit == ExitReason::LargeUncertainty,
                level,
                exit_reason: exit,
                level_sets,
            };
            self.turn.commit(&choice);
            return Ok(choice);
        }
        Err(BanditError::ProtocolViolation(format!(
            "round {round} descended past {MAX_LEVELS} levels"
        )))
    }

    fn observe(&mut self, choice: &ArmChoice, x: &[f64], reward: f64) -> Result<()> {
        self.turn.finish(choice)?;
        if choice.exit_reason == ExitReason::LargeUncertainty {
            self.state_at(choice.level)?.update(x, reward)?;
        }
        Ok(())
    }

    fn selection_counts(&self) -> Vec<usize> {
        self.levels.iter().map(RidgeState::count).collect()
    }
}
