//! Near-orthogonal arm sets and the mixture parameter family that forces
//! uninformative exploration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{sample_unit_vector, Environment};
use crate::error::{invalid, BanditError, Result};
use crate::linalg::dot;

/// Candidate draws per vector before a full restart.
const PER_VECTOR_TRIES: usize = 1_000;

/// Below this, `epsilon` is treated as exact orthogonality.
const ORTHOGONAL_TOL: f64 = 1e-12;

/// `n` unit vectors in `R^dim` with pairwise `|⟨x_i, x_j⟩| ≤ epsilon`, found by
/// rejection sampling normalized Gaussian vectors.
///
/// Requires `dim ≥ ⌈8·ln(n)/ε²⌉`. For `ε = 0` candidates are projected onto the
/// orthogonal complement of the accepted vectors, which needs `n ≤ dim`.
pub fn sparse_vector_set(
    dim: usize,
    n: usize,
    epsilon: f64,
    seed: u64,
    max_attempts: usize,
) -> Result<Vec<Vec<f64>>> {
    if dim == 0 || n == 0 {
        return Err(invalid("sparse vector set needs dim >= 1 and n >= 1"));
    }
    if !(epsilon >= 0.0) {
        return Err(invalid(format!("epsilon must be non-negative, got {epsilon}")));
    }
    let orthogonal = epsilon < ORTHOGONAL_TOL;
    if orthogonal {
        if n > dim {
            return Err(invalid(format!("{n} exactly orthogonal vectors do not fit in dimension {dim}")));
        }
    } else {
        let required = (8.0 * (n as f64).ln() / (epsilon * epsilon)).ceil();
        if (dim as f64) < required {
            return Err(invalid(format!(
                "dimension {dim} below the required ceil(8 ln {n} / eps^2) = {required}"
            )));
        }
    }
    let tol = if orthogonal { ORTHOGONAL_TOL } else { epsilon };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rejection_sample(dim, n, tol, orthogonal, &mut rng, max_attempts, PER_VECTOR_TRIES)
}

fn rejection_sample(
    dim: usize,
    n: usize,
    tol: f64,
    orthogonal: bool,
    rng: &mut ChaCha8Rng,
    max_attempts: usize,
    per_vector_tries: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut tightest = f64::INFINITY;
    for _ in 0..max_attempts.max(1) {
        let mut set: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut stuck = f64::INFINITY;
        while set.len() < n {
            let mut accepted = None;
            for _ in 0..per_vector_tries {
                let mut c = sample_unit_vector(dim, rng);
                if orthogonal {
                    for x in &set {
                        let p = dot(&c, x);
                        c.iter_mut().zip(x).for_each(|(ci, xi)| *ci -= p * xi);
                    }
                    let nrm = dot(&c, &c).sqrt();
                    if nrm < 1e-8 {
                        continue;
                    }
                    c.iter_mut().for_each(|ci| *ci /= nrm);
                }
                let worst = set.iter().map(|x| dot(&c, x).abs()).fold(0.0, f64::max);
                if worst <= tol {
                    accepted = Some(c);
                    break;
                }
                stuck = stuck.min(worst);
            }
            match accepted {
                Some(c) => set.push(c),
                None => break,
            }
        }
        if set.len() == n {
            return Ok(set);
        }
        tightest = tightest.min(stuck);
    }
    Err(BanditError::ConstructionFailure {
        attempts: max_attempts.max(1),
        tightest,
    })
}

/// Member of the parameter family `Θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HardParam {
    /// `θ_(i,j) = Δx_i + 2Δx_j`, `i ≠ j`.
    Pair { i: usize, j: usize },
    /// `θ_i = Δx_i`.
    Single { i: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardInstanceFamily {
    pub arms: Vec<Vec<f64>>,
    pub params: Vec<HardParam>,
    pub delta: f64,
    pub epsilon: f64,
    pub zeta: f64,
}

impl HardInstanceFamily {
    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    /// Expected reward of arm `m` under `param`.
    pub fn reward(&self, param: HardParam, m: usize) -> f64 {
        match param {
            HardParam::Pair { i, j } => {
                if m == j {
                    2.0 * self.delta
                } else if m == i {
                    self.delta
                } else {
                    0.0
                }
            }
            HardParam::Single { i } => {
                if m == i {
                    self.delta
                } else {
                    0.0
                }
            }
        }
    }

    pub fn theta(&self, param: HardParam) -> Vec<f64> {
        match param {
            HardParam::Pair { i, j } => self.arms[i]
                .iter()
                .zip(&self.arms[j])
                .map(|(a, b)| self.delta * a + 2.0 * self.delta * b)
                .collect(),
            HardParam::Single { i } => self.arms[i].iter().map(|a| self.delta * a).collect(),
        }
    }

    /// Largest `|r_θ(x) − θᵀx|` over the whole family.
    pub fn max_misspecification(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for &p in &self.params {
            let theta = self.theta(p);
            for (m, x) in self.arms.iter().enumerate() {
                worst = worst.max((self.reward(p, m) - dot(&theta, x)).abs());
            }
        }
        worst
    }

    /// The bandit problem for one member of `Θ`, with unit Gaussian noise.
    pub fn environment(&self, param: HardParam) -> Result<Environment> {
        let theta = self.theta(param);
        let misspec: Vec<f64> = self
            .arms
            .iter()
            .enumerate()
            .map(|(m, x)| self.reward(param, m) - dot(&theta, x))
            .collect();
        let env = Environment::fixed(theta, self.arms.clone(), misspec, self.zeta + 1e-12, 1.0)?;
        // Round-trip through θᵀx + η loses the exact table values; restore them.
        Ok(env.with_exact_rewards((0..self.arms.len()).map(|m| self.reward(param, m)).collect()))
    }

    /// Uniform draw from `Θ`.
    pub fn draw_param(&self, rng: &mut impl Rng) -> HardParam {
        self.params[rng.random_range(0..self.params.len())]
    }
}

/// Builds the family on `n_arms` arms with `ε = √(8·ln(n_arms)/(dim − 1))`.
pub fn gen_hard_instance(dim: usize, n_arms: usize, delta: f64, seed: u64) -> Result<HardInstanceFamily> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1], got {delta}")));
    }
    if dim < 2 || n_arms < 2 {
        return Err(invalid("hard instances need dim >= 2 and at least 2 arms"));
    }
    let epsilon = (8.0 * (n_arms as f64).ln() / (dim as f64 - 1.0)).sqrt();
    let arms = sparse_vector_set(dim, n_arms, epsilon, seed, 100_000)?;
    let coherence = max_coherence(&arms);
    if coherence > epsilon {
        return Err(BanditError::ConstructionFailure {
            attempts: 1,
            tightest: coherence,
        });
    }
    let mut params = Vec::with_capacity(n_arms * n_arms);
    for i in 0..n_arms {
        for j in 0..n_arms {
            if i != j {
                params.push(HardParam::Pair { i, j });
            }
        }
    }
    params.extend((0..n_arms).map(|i| HardParam::Single { i }));
    let family = HardInstanceFamily {
        arms,
        params,
        delta,
        epsilon,
        zeta: 3.0 * delta * epsilon,
    };
    let worst = family.max_misspecification();
    if worst > family.zeta + 1e-12 {
        return Err(BanditError::ConstructionFailure {
            attempts: 1,
            tightest: worst,
        });
    }
    Ok(family)
}

/// Largest `|⟨x_i, x_j⟩|` over distinct pairs.
pub fn max_coherence(set: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, x) in set.iter().enumerate() {
        for y in &set[a + 1..] {
            worst = worst.max(dot(x, y).abs());
        }
    }
    worst
}

/// Expected number of leading zero-reward rounds, for `θ ~ Unif(Θ)`, when the
/// first `horizon` pulls go to distinct arms: `Σ_{s=1}^{K} (n − s)²/n²`.
pub fn zero_information_rounds(n_arms: usize, horizon: usize) -> f64 {
    let n = n_arms as f64;
    (1..=horizon.min(n_arms))
        .map(|s| {
            let rest = n - s as f64;
            rest * rest / (n * n)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::min_gap;
    use crate::linalg::norm;

    #[test]
    fn orthogonal_pair() {
        let set = sparse_vector_set(2, 2, 0.0, 5, 10).unwrap();
        assert!(dot(&set[0], &set[1]).abs() <= 1e-12);
        for x in &set {
            assert!((norm(x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn d64_n32_passes_exhaustive_check() {
        let required = (8.0 * 32f64.ln() / (0.66 * 0.66)).ceil();
        assert_eq!(required, 64.0);
        let set = sparse_vector_set(64, 32, 0.66, 1, 1000).unwrap();
        assert_eq!(set.len(), 32);
        for (a, x) in set.iter().enumerate() {
            assert!((norm(x) - 1.0).abs() < 1e-12);
            for (b, y) in set.iter().enumerate() {
                if a != b {
                    assert!(dot(x, y).abs() <= 0.66);
                }
            }
        }
    }

    #[test]
    fn precondition_violation() {
        assert!(matches!(sparse_vector_set(4, 100, 0.1, 0, 10), Err(BanditError::InvalidArgument(_))));
        assert!(sparse_vector_set(2, 3, 0.0, 0, 10).is_err());
    }

    #[test]
    fn exhausted_attempts_report_failure() {
        // Three unit vectors in the plane cannot be pairwise within 0.1 of orthogonal.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        match rejection_sample(2, 3, 0.1, false, &mut rng, 3, 50) {
            Err(BanditError::ConstructionFailure { attempts, tightest }) => {
                assert_eq!(attempts, 3);
                assert!(tightest > 0.1 && tightest <= 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn family_reward_table_and_size() {
        let fam = gen_hard_instance(64, 32, 0.25, 3).unwrap();
        assert_eq!(fam.params.len(), 32 * 32);
        assert_eq!(fam.reward(HardParam::Pair { i: 0, j: 5 }, 5), 0.5);
        assert_eq!(fam.reward(HardParam::Pair { i: 0, j: 5 }, 0), 0.25);
        assert_eq!(fam.reward(HardParam::Pair { i: 0, j: 5 }, 7), 0.0);
        assert_eq!(fam.reward(HardParam::Single { i: 4 }, 4), 0.25);
        for m in (0..32).filter(|&m| m != 4) {
            assert_eq!(fam.reward(HardParam::Single { i: 4 }, m), 0.0);
        }
        assert!(fam.max_misspecification() <= fam.zeta + 1e-12);
        assert!((fam.epsilon - (8.0 * 32f64.ln() / 63.0).sqrt()).abs() < 1e-15);
        assert!(max_coherence(&fam.arms) <= fam.epsilon);
    }

    #[test]
    fn every_member_has_one_optimum_and_gap_delta() {
        let fam = gen_hard_instance(64, 8, 0.25, 9).unwrap();
        for &p in &fam.params {
            let env = fam.environment(p).unwrap();
            let exp = env.expected_rewards();
            let best = exp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(exp.iter().filter(|&&r| r == best).count(), 1);
            assert_eq!(min_gap(exp).unwrap(), 0.25);
            assert_eq!(env.gap(), 0.25);
            assert!(env.misspecification().iter().all(|e| e.abs() <= fam.zeta + 1e-12));
            for (m, r) in exp.iter().enumerate() {
                assert_eq!(*r, fam.reward(p, m));
            }
        }
    }

    #[test]
    fn closed_form_zero_information() {
        // n = 32, K = 5: (31² + 30² + 29² + 28² + 27²)/32²
        assert!((zero_information_rounds(32, 5) - 4215.0 / 1024.0).abs() < 1e-15);
        // full horizon: Σ_{i<n} i²/n² = (n−1)(2n−1)/(6n)
        for n in [2usize, 5, 32, 100] {
            let nf = n as f64;
            let want = (nf - 1.0) * (2.0 * nf - 1.0) / (6.0 * nf);
            assert!((zero_information_rounds(n, n) - want).abs() < 1e-9);
            assert!(want >= (nf - 1.0) / 6.0);
        }
    }

    #[test]
    fn rejects_bad_delta() {
        assert!(gen_hard_instance(64, 32, 1.5, 0).is_err());
        assert!(gen_hard_instance(64, 32, 0.0, 0).is_err());
    }
}
