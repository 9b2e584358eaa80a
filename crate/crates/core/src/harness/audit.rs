//! Runtime checks of the guarantees against ground truth.

use crate::env::{DecisionSet, Environment};
use crate::linalg::RidgeState;
use crate::policy::ArmChoice;
use crate::theory::{confidence_radius, level_params, per_level_cap, selection_cap, ProblemConstants};

/// Coverage probes per round.
pub const COVERAGE_PROBES: usize = 8;

/// Relative slack when deciding whether a configured `λ` equals `B⁻²`.
const LAMBDA_MATCH_TOL: f64 = 1e-9;

pub(crate) fn lambda_is_theory(lambda: f64, c: &ProblemConstants) -> bool {
    (lambda - c.lambda()).abs() <= LAMBDA_MATCH_TOL * c.lambda()
}

/// Final regression-set sizes against their caps.
#[derive(Debug, Clone, PartialEq)]
pub struct CapAudit {
    pub counts: Vec<usize>,
    pub caps: Vec<f64>,
    pub violations: u64,
}

impl CapAudit {
    pub(crate) fn single(count: usize, c: &ProblemConstants, gamma: f64) -> Self {
        let cap = selection_cap(c.dim, gamma, c.context_bound, c.param_bound);
        Self::from_caps(vec![count], vec![cap])
    }

    pub(crate) fn levels(counts: Vec<usize>, c: &ProblemConstants) -> Self {
        let caps = (1..=counts.len() as u32)
            .map(|l| per_level_cap(c.dim, l, c.context_bound, c.param_bound))
            .collect();
        Self::from_caps(counts, caps)
    }

    fn from_caps(counts: Vec<usize>, caps: Vec<f64>) -> Self {
        let violations = counts.iter().zip(&caps).filter(|(n, cap)| **n as f64 > **cap).count() as u64;
        Self {
            counts,
            caps,
            violations,
        }
    }
}

/// Whether every probe stayed inside the confidence ellipsoid in every round.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageAudit {
    pub rounds_checked: u64,
    pub rounds_failed: u64,
}

impl CoverageAudit {
    pub fn held(&self) -> bool {
        self.rounds_failed == 0
    }

    pub(crate) fn check(&mut self, ridge: &RidgeState, set: &DecisionSet<'_>, env: &Environment, c: &ProblemConstants) {
        let radius = confidence_radius(c, ridge.count());
        let err: Vec<f64> = ridge
            .estimate()
            .iter()
            .zip(env.theta_star())
            .map(|(a, b)| a - b)
            .collect();
        let mut ok = true;
        for x in set.contexts.iter().take(COVERAGE_PROBES) {
            let lhs: f64 = x.iter().zip(&err).map(|(a, b)| a * b).sum::<f64>().abs();
            // a degraded inverse counts as a miss rather than aborting the trial
            let bonus = ridge.bonus(x).unwrap_or(0.0);
            if lhs > radius * bonus {
                ok = false;
                break;
            }
        }
        self.rounds_checked += 1;
        self.rounds_failed += u64::from(!ok);
    }
}

/// Rounds left out of the regression set must have been optimal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SkipAudit {
    pub skipped: u64,
    pub violations: u64,
}

impl SkipAudit {
    pub(crate) fn check(&mut self, choice: &ArmChoice, inst_regret: f64) {
        if !choice.selected_for_regression {
            self.skipped += 1;
            if inst_regret != 0.0 {
                self.violations += 1;
            }
        }
    }
}

/// The optimal arm survives every visited level up to `l_Δ`, and the arms
/// that survive elimination at level `l` are within
/// `4β(l)2^-l + 2lζ(1 + 4√(dι₁(l)))` of optimal.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalAudit {
    pub l_delta: u32,
    pub levels_checked: u64,
    pub violations: u64,
    pub quality_checked: u64,
    pub quality_violations: u64,
    quality_bounds: Vec<f64>,
}

impl SurvivalAudit {
    pub(crate) fn new(l_delta: u32, c: &ProblemConstants) -> Self {
        let quality_bounds = (1..=crate::policy::MAX_LEVELS)
            .map(|l| {
                let p = level_params(c, l);
                let lf = l as f64;
                4.0 * p.beta * 2f64.powi(-(l as i32))
                    + 2.0 * lf * c.zeta * (1.0 + 4.0 * (c.dim as f64 * p.iota1).sqrt())
            })
            .collect();
        Self {
            l_delta,
            levels_checked: 0,
            violations: 0,
            quality_checked: 0,
            quality_violations: 0,
            quality_bounds,
        }
    }

    pub(crate) fn check(&mut self, choice: &ArmChoice, set: &DecisionSet<'_>) {
        let Some(sets) = &choice.level_sets else {
            return;
        };
        let optimal = set.optimal_arms();
        let best = set.optimal_reward();
        let exp = set.expected_rewards();
        for (i, active) in sets.iter().enumerate() {
            let level = i as u32 + 1;
            if level <= self.l_delta {
                self.levels_checked += 1;
                if !optimal.iter().any(|o| active.contains(o)) {
                    self.violations += 1;
                }
            }
            // sets[i] for i ≥ 1 is what survived elimination at level i
            if i >= 1 {
                self.quality_checked += 1;
                let bound = self.quality_bounds[i - 1];
                if active.iter().any(|&a| best - exp[a] > bound) {
                    self.quality_violations += 1;
                }
            }
        }
    }
}

/// Everything the enabled audits found in one trial. `None` means the audit
/// was disabled or its preconditions did not hold.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditReport {
    pub selection_cap: Option<CapAudit>,
    pub coverage: Option<CoverageAudit>,
    pub skipped_round: Option<SkipAudit>,
    pub arm_survival: Option<SurvivalAudit>,
}

impl AuditReport {
    /// Hard violations; coverage misses are probabilistic and not counted.
    pub fn violations(&self) -> u64 {
        self.selection_cap.as_ref().map_or(0, |a| a.violations)
            + self.skipped_round.as_ref().map_or(0, |a| a.violations)
            + self
                .arm_survival
                .as_ref()
                .map_or(0, |a| a.violations + a.quality_violations)
    }
}

/// Audit outcomes summed over the trials of one grid point. A `*_runs`
/// count of zero means the audit never applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AuditTally {
    pub cap_runs: usize,
    pub cap_violations: u64,
    pub coverage_runs: usize,
    pub coverage_held: usize,
    pub skip_runs: usize,
    pub skipped: u64,
    pub skip_violations: u64,
    pub survival_runs: usize,
    pub levels_checked: u64,
    pub survival_violations: u64,
    pub quality_checked: u64,
    pub quality_violations: u64,
}

impl AuditTally {
    pub fn add(&mut self, r: &AuditReport) {
        if let Some(a) = &r.selection_cap {
            self.cap_runs += 1;
            self.cap_violations += a.violations;
        }
        if let Some(a) = &r.coverage {
            self.coverage_runs += 1;
            self.coverage_held += usize::from(a.held());
        }
        if let Some(a) = &r.skipped_round {
            self.skip_runs += 1;
            self.skipped += a.skipped;
            self.skip_violations += a.violations;
        }
        if let Some(a) = &r.arm_survival {
            self.survival_runs += 1;
            self.levels_checked += a.levels_checked;
            self.survival_violations += a.violations;
            self.quality_checked += a.quality_checked;
            self.quality_violations += a.quality_violations;
        }
    }

    pub fn merge(&mut self, o: &AuditTally) {
        self.cap_runs += o.cap_runs;
        self.cap_violations += o.cap_violations;
        self.coverage_runs += o.coverage_runs;
        self.coverage_held += o.coverage_held;
        self.skip_runs += o.skip_runs;
        self.skipped += o.skipped;
        self.skip_violations += o.skip_violations;
        self.survival_runs += o.survival_runs;
        self.levels_checked += o.levels_checked;
        self.survival_violations += o.survival_violations;
        self.quality_checked += o.quality_checked;
        self.quality_violations += o.quality_violations;
    }

    /// Hard violations, as in [`AuditReport::violations`].
    pub fn violations(&self) -> u64 {
        self.cap_violations + self.skip_violations + self.survival_violations + self.quality_violations
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts() -> ProblemConstants {
        ProblemConstants {
            dim: 2,
            gap: 0.5,
            zeta: 0.0,
            context_bound: 1.0,
            param_bound: 1.0,
            noise: 1.0,
            failure_prob: 0.1,
        }
    }

    #[test]
    fn caps_count_violations() {
        let c = consts();
        let cap = selection_cap(2, 0.5, 1.0, 1.0);
        assert_eq!(CapAudit::single(cap.floor() as usize, &c, 0.5).violations, 0);
        assert_eq!(CapAudit::single(cap.floor() as usize + 1, &c, 0.5).violations, 1);
        let a = CapAudit::levels(vec![0, 10_000_000], &c);
        assert_eq!(a.violations, 1);
        assert_eq!(a.caps[1], per_level_cap(2, 2, 1.0, 1.0));
    }

    #[test]
    fn lambda_match() {
        let mut c = consts();
        assert!(lambda_is_theory(1.0, &c));
        assert!(!lambda_is_theory(3.0, &c));
        c.param_bound = 1.0 + 1e-15;
        assert!(lambda_is_theory(1.0, &c));
    }
}
