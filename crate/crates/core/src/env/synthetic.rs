use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{sample_unit_vector, Environment};
use crate::error::{invalid, BanditError, Result};

/// Random misspecified instance: unit-norm Gaussian `θ*` and contexts,
/// `η(x_i)` uniform on `{−ζ, +ζ}`, standard normal reward noise.
pub fn gen_synthetic(dim: usize, n_contexts: usize, zeta: f64, seed: u64) -> Result<Environment> {
    if dim < 2 {
        return Err(invalid(format!("synthetic instances need dim >= 2, got {dim}")));
    }
    if n_contexts < 2 {
        return Err(invalid(format!(
            "synthetic instances need at least 2 contexts for a gap, got {n_contexts}"
        )));
    }
    if !(zeta >= 0.0) || !zeta.is_finite() {
        return Err(invalid(format!("zeta must be finite and non-negative, got {zeta}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta_star = sample_unit_vector(dim, &mut rng);
    let contexts: Vec<Vec<f64>> = (0..n_contexts).map(|_| sample_unit_vector(dim, &mut rng)).collect();
    let misspec: Vec<f64> = (0..n_contexts)
        .map(|_| if rng.random_bool(0.5) { zeta } else { -zeta })
        .collect();
    Environment::fixed(theta_star, contexts, misspec, zeta, 1.0)
}

/// First seed in `start..start + max_tries` whose synthetic instance has a gap in
/// `[lo, hi]`.
pub fn find_seed_with_gap(
    dim: usize,
    n_contexts: usize,
    zeta: f64,
    (lo, hi): (f64, f64),
    start: u64,
    max_tries: u64,
) -> Result<u64> {
    for seed in start..start.saturating_add(max_tries) {
        match gen_synthetic(dim, n_contexts, zeta, seed) {
            Ok(env) if env.gap() >= lo && env.gap() <= hi => return Ok(seed),
            Ok(_) | Err(BanditError::GapUndefined) => {}
            Err(e) => return Err(e),
        }
    }
    Err(invalid(format!(
        "no seed in {start}..{} gives a gap within [{lo}, {hi}]",
        start.saturating_add(max_tries)
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::min_gap;
    use crate::linalg::{dot, norm};

    #[test]
    fn same_seed_same_instance() {
        let a = gen_synthetic(16, 100, 0.02, 7).unwrap();
        let b = gen_synthetic(16, 100, 0.02, 7).unwrap();
        assert_eq!(a, b);
        let c = gen_synthetic(16, 100, 0.02, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn well_specified_when_zeta_is_zero() {
        let env = gen_synthetic(2, 2, 0.0, 3).unwrap();
        let super::super::ArmSource::Fixed { contexts } = env.arms() else {
            panic!("expected fixed arms")
        };
        for (x, r) in contexts.iter().zip(env.expected_rewards()) {
            assert_eq!(*r, dot(x, env.theta_star()));
        }
    }

    #[test]
    fn construction_invariants() {
        let env = gen_synthetic(16, 100, 0.02, 11).unwrap();
        assert!((norm(env.theta_star()) - 1.0).abs() < 1e-12);
        let super::super::ArmSource::Fixed { contexts } = env.arms() else {
            panic!("expected fixed arms")
        };
        for x in contexts {
            assert!((norm(x) - 1.0).abs() < 1e-12);
        }
        for (e, (x, r)) in env.misspecification().iter().zip(contexts.iter().zip(env.expected_rewards())) {
            assert_eq!(e.abs(), 0.02);
            assert!((r - dot(x, env.theta_star())).abs() <= 0.02 + 1e-15);
        }
        // gap brute-forced over all pairs
        let exp = env.expected_rewards();
        let mut brute = f64::INFINITY;
        for a in exp {
            for b in exp {
                if a > b && exp.iter().all(|c| c <= a) {
                    brute = brute.min(a - b);
                }
            }
        }
        assert_eq!(env.gap(), brute);
        assert_eq!(env.gap(), min_gap(exp).unwrap());
        assert!((env.context_bound() - 1.0).abs() < 1e-12);
        assert!((env.param_bound() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_arguments() {
        assert!(matches!(gen_synthetic(16, 1, 0.02, 0), Err(BanditError::InvalidArgument(_))));
        assert!(gen_synthetic(1, 10, 0.02, 0).is_err());
        assert!(gen_synthetic(4, 10, -0.1, 0).is_err());
    }

    #[test]
    fn seed_search_hits_window() {
        let seed = find_seed_with_gap(16, 100, 0.02, (0.17, 0.19), 0, 10_000).unwrap();
        let g = gen_synthetic(16, 100, 0.02, seed).unwrap().gap();
        assert!((0.17..=0.19).contains(&g));
    }
}
