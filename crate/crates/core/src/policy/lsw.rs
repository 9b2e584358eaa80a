use super::{argmax, ArmChoice, ExitReason, Policy, PolicyKind, Turn};
use crate::error::{invalid, BanditError, Result};
use crate::linalg::{dot, RidgeState};

/// Horizon above which the harness refuses to run LSW unless told otherwise;
/// the correction term makes a run quadratic in the horizon.
pub const LSW_DEFAULT_MAX_HORIZON: u64 = 2000;

/// Optimistic least squares with a misspecification correction:
/// `xᵀθ̂ + β‖x‖_{U⁻¹} + ε·Σ_s |xᵀU⁻¹x_s|` over every past played context `x_s`.
#[derive(Debug, Clone)]
pub struct Lsw {
    ridge: RidgeState,
    beta: f64,
    eps: f64,
    // Played contexts, row-major.
    history: Vec<f64>,
    turn: Turn,
}

impl Lsw {
    pub fn new(dim: usize, lambda: f64, beta: f64, eps: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(invalid(format!("beta must be finite and non-negative, got {beta}")));
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(invalid(format!("eps_lsw must be finite and non-negative, got {eps}")));
        }
        Ok(Self {
            ridge: RidgeState::new(dim, lambda)?,
            beta,
            eps,
            history: Vec::new(),
            turn: Turn::default(),
        })
    }

    pub fn history_len(&self) -> usize {
        self.history.len() / self.ridge.dim()
    }

    fn score(&mut self, x: &[f64]) -> Result<(f64, f64)> {
        let (v, bonus) = match self.ridge.solve_with_bonus(x) {
            Err(BanditError::NumericalDegradation { .. }) => {
                self.ridge.refresh_inverse()?;
                self.ridge.solve_with_bonus(x)?
            }
            other => other?,
        };
        let correction: f64 = self
            .history
            .chunks_exact(self.ridge.dim())
            .map(|xs| dot(&v, xs).abs())
            .sum();
        Ok((self.ridge.predict(x)? + self.beta * bonus + self.eps * correction, bonus))
    }
}

impl Policy for Lsw {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Lsw
    }

    fn select(&mut self, contexts: &[&[f64]]) -> Result<ArmChoice> {
        let round = self.turn.begin(contexts.len())?;
        let mut scores = Vec::with_capacity(contexts.len());
        let mut bonuses = Vec::with_capacity(contexts.len());
        for x in contexts {
            let (s, b) = self.score(x)?;
            scores.push(s);
            bonuses.push(b);
        }
        let index = argmax(scores.iter().copied()).expect("non-empty decision set");
        let choice = ArmChoice {
            round,
            index,
            score: scores[index],
            bonus_at_choice: bonuses[index],
            selected_for_regression: true,
            level: 0,
            exit_reason: ExitReason::UcbArgmax,
            level_sets: None,
        };
        self.turn.commit(&choice);
        Ok(choice)
    }

    fn observe(&mut self, choice: &ArmChoice, x: &[f64], reward: f64) -> Result<()> {
        self.turn.finish(choice)?;
        self.ridge.update(x, reward)?;
        self.history.extend_from_slice(x);
        Ok(())
    }

    fn selection_counts(&self) -> Vec<usize> {
        vec![self.ridge.count()]
    }

    fn ridge(&self) -> Option<&RidgeState> {
        Some(&self.ridge)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::LinUcb;

    #[test]
    fn zero_eps_matches_oful() {
        let set = [vec![0.6, 0.8], vec![1.0, 0.0], vec![0.0, -1.0]];
        let views: Vec<&[f64]> = set.iter().map(Vec::as_slice).collect();
        let mut a = Lsw::new(2, 1.0, 1.0, 0.0).unwrap();
        let mut b = LinUcb::oful(2, 1.0, 1.0).unwrap();
        for k in 0..200 {
            let ca = a.select(&views).unwrap();
            let cb = b.select(&views).unwrap();
            assert_eq!(ca.index, cb.index);
            assert_eq!(ca.score, cb.score);
            let r = [0.9, 0.5, 0.1][ca.index] + if k % 2 == 0 { 0.3 } else { -0.3 };
            a.observe(&ca, views[ca.index], r).unwrap();
            b.observe(&cb, views[cb.index], r).unwrap();
        }
        assert_eq!(a.history_len(), 200);
    }

    #[test]
    fn correction_term_by_hand() {
        // λ = 1, one past context (1, 0): U⁻¹ = diag(1/2, 1).
        let mut p = Lsw::new(2, 1.0, 0.0, 2.0).unwrap();
        let set = [vec![1.0, 0.0]];
        let views: Vec<&[f64]> = set.iter().map(Vec::as_slice).collect();
        let c = p.select(&views).unwrap();
        p.observe(&c, &set[0], 0.0).unwrap();
        let probe = [vec![-1.0, 1.0]];
        let views: Vec<&[f64]> = probe.iter().map(Vec::as_slice).collect();
        // θ̂ = 0; correction = 2·|(−1/2, 1)·(1, 0)| = 1
        assert_eq!(p.select(&views).unwrap().score, 1.0);
    }
}
