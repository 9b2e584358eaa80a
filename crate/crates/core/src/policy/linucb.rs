use super::{argmax, predict_and_bonus, ArmChoice, ExitReason, Policy, PolicyKind, Turn};
use crate::error::{invalid, Result};
use crate::linalg::RidgeState;

/// OFUL with a data-selection threshold: the played context joins the
/// regression set only if its bonus was at least `Γ`. `Γ = 0` is plain OFUL.
#[derive(Debug, Clone)]
pub struct LinUcb {
    kind: PolicyKind,
    ridge: RidgeState,
    beta: f64,
    gamma: f64,
    turn: Turn,
    scratch: Vec<f64>,
}

impl LinUcb {
    pub fn oful(dim: usize, lambda: f64, beta: f64) -> Result<Self> {
        Self::build(PolicyKind::Oful, dim, lambda, beta, 0.0)
    }

    pub fn ds_oful(dim: usize, lambda: f64, beta: f64, gamma: f64) -> Result<Self> {
        Self::build(PolicyKind::DsOful, dim, lambda, beta, gamma)
    }

    fn build(kind: PolicyKind, dim: usize, lambda: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(invalid(format!("beta must be finite and non-negative, got {beta}")));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(invalid(format!("gamma must be finite and non-negative, got {gamma}")));
        }
        Ok(Self {
            kind,
            ridge: RidgeState::new(dim, lambda)?,
            beta,
            gamma,
            turn: Turn::default(),
            scratch: Vec::new(),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl Policy for LinUcb {
    fn kind(&self) -> PolicyKind {
        self.kind
    }

    fn select(&mut self, contexts: &[&[f64]]) -> Result<ArmChoice> {
        let round = self.turn.begin(contexts.len())?;
        self.scratch.clear();
        let mut bonuses = Vec::with_capacity(contexts.len());
        for x in contexts {
            let (pred, bonus) = predict_and_bonus(&mut self.ridge, x)?;
            self.scratch.push(pred + self.beta * bonus);
            bonuses.push(bonus);
        }
        let index = argmax(self.scratch.iter().copied()).expect("non-empty decision set");
        let choice = ArmChoice {
            round,
            index,
            score: self.scratch[index],
            bonus_at_choice: bonuses[index],
            selected_for_regression: bonuses[index] >= self.gamma,
            level: 0,
            exit_reason: ExitReason::UcbArgmax,
            level_sets: None,
        };
        self.turn.commit(&choice);
        Ok(choice)
    }

    fn observe(&mut self, choice: &ArmChoice, x: &[f64], reward: f64) -> Result<()> {
        self.turn.finish(choice)?;
        if choice.selected_for_regression {
            self.ridge.update(x, reward)?;
        }
        Ok(())
    }

    fn selection_counts(&self) -> Vec<usize> {
        vec![self.ridge.count()]
    }

    fn ridge(&self) -> Option<&RidgeState> {
        Some(&self.ridge)
    }
}
