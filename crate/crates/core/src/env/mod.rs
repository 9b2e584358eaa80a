//! Bandit environments and ground-truth regret accounting.
//!
//! An [`Environment`] owns the true parameter, the misspecification map and the
//! noise model. Policies only ever see the contexts of a [`DecisionSet`] and the
//! realized reward returned by [`Environment::step`].

mod dataset;
mod hard;
mod synthetic;

pub use dataset::{gen_labelled_features, load_dataset, read_feature_file, write_feature_file, FeatureFile};
pub use hard::{gen_hard_instance, sparse_vector_set, zero_information_rounds, HardInstanceFamily, HardParam};
pub use synthetic::{find_seed_with_gap, gen_synthetic};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, BanditError, Result};
use crate::linalg::dot;

/// Where each round's decision set comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ArmSource {
    /// The same contexts every round.
    Fixed { contexts: Vec<Vec<f64>> },
    /// One positive-label and one negative-label vector per round, drawn
    /// uniformly with replacement. Index 0 is always the positive draw.
    BinaryChoice {
        positives: Vec<Vec<f64>>,
        negatives: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    dim: usize,
    theta_star: Vec<f64>,
    arms: ArmSource,
    // Expected reward per context; for `BinaryChoice` it is indexed
    // positives-then-negatives.
    expected: Vec<f64>,
    misspec: Vec<f64>,
    zeta: f64,
    noise_scale: f64,
    context_bound: f64,
    param_bound: f64,
    gap: f64,
    reward_range: (f64, f64),
}

/// One round's arms. `contexts` is what a policy may see.
#[derive(Debug, Clone)]
pub struct DecisionSet<'a> {
    pub contexts: Vec<&'a [f64]>,
    expected: Vec<f64>,
    best: f64,
}

impl DecisionSet<'_> {
    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    /// Ground truth; for harness audits only.
    pub fn expected_rewards(&self) -> &[f64] {
        &self.expected
    }

    pub fn optimal_reward(&self) -> f64 {
        self.best
    }

    /// Indices attaining the optimal expected reward.
    pub fn optimal_arms(&self) -> Vec<usize> {
        self.expected
            .iter()
            .enumerate()
            .filter(|(_, &r)| r == self.best)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub expected_reward: f64,
    pub regret: f64,
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest strictly positive `max(r) − r(x)`.
pub fn min_gap(expected: &[f64]) -> Result<f64> {
    let best = max_of(expected);
    expected
        .iter()
        .map(|r| best - r)
        .filter(|g| *g > 0.0)
        .min_by(f64::total_cmp)
        .ok_or(BanditError::GapUndefined)
}

pub(crate) fn sample_unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = dot(&v, &v).sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

impl Environment {
    /// Builds a fixed-arm environment with `r(x_i) = x_iᵀθ* + η_i`.
    pub fn fixed(
        theta_star: Vec<f64>,
        contexts: Vec<Vec<f64>>,
        misspec: Vec<f64>,
        zeta: f64,
        noise_scale: f64,
    ) -> Result<Self> {
        let dim = theta_star.len();
        if dim == 0 {
            return Err(invalid("theta_star must be non-empty"));
        }
        if contexts.is_empty() {
            return Err(invalid("a fixed-arm environment needs at least one context"));
        }
        if contexts.len() != misspec.len() {
            return Err(invalid("contexts and misspecification map differ in length"));
        }
        if contexts.iter().any(|x| x.len() != dim) {
            return Err(invalid("context dimension does not match theta_star"));
        }
        if !(noise_scale >= 0.0) {
            return Err(invalid(format!("noise scale must be non-negative, got {noise_scale}")));
        }
        if let Some(bad) = misspec.iter().find(|e| e.abs() > zeta) {
            return Err(invalid(format!("misspecification {bad} exceeds declared zeta {zeta}")));
        }
        let expected: Vec<f64> = contexts
            .iter()
            .zip(&misspec)
            .map(|(x, e)| dot(x, &theta_star) + e)
            .collect();
        let gap = min_gap(&expected)?;
        let context_bound = contexts.iter().map(|x| dot(x, x).sqrt()).fold(1.0, f64::max);
        let param_bound = dot(&theta_star, &theta_star).sqrt().max(1.0);
        let reward_range = (
            expected.iter().copied().fold(f64::INFINITY, f64::min),
            max_of(&expected),
        );
        Ok(Self {
            dim,
            theta_star,
            arms: ArmSource::Fixed { contexts },
            expected,
            misspec,
            zeta,
            noise_scale,
            context_bound,
            param_bound,
            gap,
            reward_range,
        })
    }

    /// Builds a binary-choice environment: the positive vector pays 1, the negative 0.
    pub fn binary_choice(
        theta_star: Vec<f64>,
        positives: Vec<Vec<f64>>,
        negatives: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let dim = theta_star.len();
        if positives.is_empty() {
            return Err(BanditError::EmptyClass { label: 1, zeta: f64::NAN });
        }
        if negatives.is_empty() {
            return Err(BanditError::EmptyClass { label: 0, zeta: f64::NAN });
        }
        if positives.iter().chain(&negatives).any(|x| x.len() != dim) {
            return Err(invalid("feature dimension does not match theta_star"));
        }
        let expected: Vec<f64> = std::iter::repeat(1.0)
            .take(positives.len())
            .chain(std::iter::repeat(0.0).take(negatives.len()))
            .collect();
        let misspec: Vec<f64> = positives
            .iter()
            .chain(&negatives)
            .zip(&expected)
            .map(|(x, r)| r - dot(x, &theta_star))
            .collect();
        let zeta = misspec.iter().map(|e| e.abs()).fold(0.0, f64::max);
        let context_bound = positives
            .iter()
            .chain(&negatives)
            .map(|x| dot(x, x).sqrt())
            .fold(1.0, f64::max);
        let param_bound = dot(&theta_star, &theta_star).sqrt().max(1.0);
        Ok(Self {
            dim,
            theta_star,
            arms: ArmSource::BinaryChoice { positives, negatives },
            expected,
            misspec,
            zeta,
            noise_scale: 0.0,
            context_bound,
            param_bound,
            gap: 1.0,
            reward_range: (0.0, 1.0),
        })
    }

    /// Overrides `r(x_i)` with exact table values that `θᵀx + η` only reproduces
    /// up to round-off.
    pub(crate) fn with_exact_rewards(mut self, expected: Vec<f64>) -> Self {
        debug_assert_eq!(expected.len(), self.expected.len());
        self.gap = min_gap(&expected).unwrap_or(self.gap);
        self.reward_range = (
            expected.iter().copied().fold(f64::INFINITY, f64::min),
            max_of(&expected),
        );
        self.expected = expected;
        self
    }

    /// Replaces the reward-noise standard deviation `R`.
    pub fn with_noise_scale(mut self, noise_scale: f64) -> Result<Self> {
        if !(noise_scale >= 0.0) || !noise_scale.is_finite() {
            return Err(invalid(format!("noise scale must be non-negative, got {noise_scale}")));
        }
        self.noise_scale = noise_scale;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.theta_star
    }

    pub fn arms(&self) -> &ArmSource {
        &self.arms
    }

    /// `r(x_i)` for every context, in storage order.
    pub fn expected_rewards(&self) -> &[f64] {
        &self.expected
    }

    /// `η(x_i)` for every context, in storage order.
    pub fn misspecification(&self) -> &[f64] {
        &self.misspec
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    /// `L`, at least 1.
    pub fn context_bound(&self) -> f64 {
        self.context_bound
    }

    /// `B`, at least 1.
    pub fn param_bound(&self) -> f64 {
        self.param_bound
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Smallest and largest expected reward over all contexts.
    pub fn reward_range(&self) -> (f64, f64) {
        self.reward_range
    }

    /// Whether every round presents the same contexts in the same order.
    pub fn has_fixed_arms(&self) -> bool {
        matches!(self.arms, ArmSource::Fixed { .. })
    }

    pub fn num_contexts(&self) -> usize {
        self.expected.len()
    }

    /// Draws the decision set for one round. Fixed-arm environments do not
    /// touch `rng`.
    pub fn decision_set(&self, rng: &mut ChaCha8Rng) -> DecisionSet<'_> {
        match &self.arms {
            ArmSource::Fixed { contexts } => DecisionSet {
                contexts: contexts.iter().map(Vec::as_slice).collect(),
                expected: self.expected.clone(),
                best: max_of(&self.expected),
            },
            ArmSource::BinaryChoice { positives, negatives } => {
                let p = rng.random_range(0..positives.len());
                let n = rng.random_range(0..negatives.len());
                // random order, so index tie-breaking carries no label information
                if rng.random_bool(0.5) {
                    DecisionSet {
                        contexts: vec![positives[p].as_slice(), negatives[n].as_slice()],
                        expected: vec![1.0, 0.0],
                        best: 1.0,
                    }
                } else {
                    DecisionSet {
                        contexts: vec![negatives[n].as_slice(), positives[p].as_slice()],
                        expected: vec![0.0, 1.0],
                        best: 1.0,
                    }
                }
            }
        }
    }

    /// Plays `chosen` in `set`, drawing reward noise from `rng`.
    pub fn step(&self, set: &DecisionSet<'_>, chosen: usize, rng: &mut ChaCha8Rng) -> Result<StepOutcome> {
        let Some(&expected_reward) = set.expected.get(chosen) else {
            return Err(invalid(format!(
                "arm index {chosen} out of range for a decision set of {}",
                set.len()
            )));
        };
        let noise = if self.noise_scale > 0.0 {
            self.noise_scale * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        Ok(StepOutcome {
            reward: expected_reward + noise,
            expected_reward,
            regret: set.best - expected_reward,
        })
    }
}
