//! Incremental ridge regression.
//!
//! [`RidgeState`] keeps the precision matrix `U = λI + Σ x xᵀ`, its inverse
//! (maintained with Sherman–Morrison rank-one updates), the response sum
//! `Σ r x` and the estimate `θ̂ = U⁻¹ Σ r x`. Every policy in this crate is
//! built on top of it.

use nalgebra::DMatrix;

use crate::error::{invalid, BanditError, Result};

/// Number of rank-one updates between full re-inversions of the precision matrix.
pub const REFRESH_INTERVAL: usize = 512;

/// Quadratic forms in `[-NEGATIVE_FORM_TOLERANCE, 0]` are clamped to zero.
pub const NEGATIVE_FORM_TOLERANCE: f64 = 1e-12;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeState {
    dim: usize,
    lambda: f64,
    // Row-major d×d.
    precision: Vec<f64>,
    precision_inv: Vec<f64>,
    response_sum: Vec<f64>,
    estimate: Vec<f64>,
    count: usize,
    since_refresh: usize,
}

impl RidgeState {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("ridge dimension must be at least 1"));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid(format!("ridge regularizer must be positive, got {lambda}")));
        }
        let mut precision = vec![0.0; dim * dim];
        let mut precision_inv = vec![0.0; dim * dim];
        for i in 0..dim {
            precision[i * dim + i] = lambda;
            precision_inv[i * dim + i] = 1.0 / lambda;
        }
        Ok(Self {
            dim,
            lambda,
            precision,
            precision_inv,
            response_sum: vec![0.0; dim],
            estimate: vec![0.0; dim],
            count: 0,
            since_refresh: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of update calls since construction (`|C|`).
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn estimate(&self) -> &[f64] {
        &self.estimate
    }

    pub fn response_sum(&self) -> &[f64] {
        &self.response_sum
    }

    /// Row-major `U`.
    pub fn precision(&self) -> &[f64] {
        &self.precision
    }

    /// Row-major `U⁻¹`.
    pub fn precision_inv(&self) -> &[f64] {
        &self.precision_inv
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(invalid(format!(
                "vector has length {}, ridge state has dimension {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// `U⁻¹ x`.
    pub fn solve(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.inv_times(x))
    }

    fn inv_times(&self, x: &[f64]) -> Vec<f64> {
        self.precision_inv
            .chunks_exact(self.dim)
            .map(|row| dot(row, x))
            .collect()
    }

    /// Adds `(x, r)` to the regression set.
    pub fn update(&mut self, x: &[f64], r: f64) -> Result<()> {
        self.check_dim(x)?;
        if !r.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite context or reward passed to ridge update"));
        }
        let d = self.dim;
        for i in 0..d {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let row = &mut self.precision[i * d..(i + 1) * d];
            for (p, xj) in row.iter_mut().zip(x) {
                *p += xi * xj;
            }
        }

        let u = self.inv_times(x);
        let denom = 1.0 + dot(x, &u);
        if denom > 0.0 {
            for i in 0..d {
                let ui = u[i] / denom;
                if ui == 0.0 {
                    continue;
                }
                let row = &mut self.precision_inv[i * d..(i + 1) * d];
                for (p, uj) in row.iter_mut().zip(&u) {
                    *p -= ui * uj;
                }
            }
        }
        for (s, xi) in self.response_sum.iter_mut().zip(x) {
            *s += r * xi;
        }
        self.count += 1;
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_INTERVAL || !(denom > 0.0) {
            self.refresh_inverse()?;
        } else {
            self.estimate = self.inv_times(&self.response_sum);
        }
        Ok(())
    }

    /// Recomputes `U⁻¹` by a Cholesky inversion of `U` and resets the drift counter.
    pub fn refresh_inverse(&mut self) -> Result<()> {
        let d = self.dim;
        let u = DMatrix::from_row_slice(d, d, &self.precision);
        let chol = u.cholesky().ok_or(BanditError::NumericalDegradation {
            value: f64::NAN,
        })?;
        let inv = chol.inverse();
        for i in 0..d {
            for j in 0..d {
                // Symmetrize to stop round-off from accumulating asymmetry.
                self.precision_inv[i * d + j] = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            }
        }
        self.since_refresh = 0;
        self.estimate = self.inv_times(&self.response_sum);
        Ok(())
    }

    /// `xᵀ θ̂`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(dot(x, &self.estimate))
    }

    /// `‖x‖_{U⁻¹}`.
    pub fn bonus(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let q = dot(x, &self.inv_times(x));
        clamp_form(q)
    }

    /// Returns `(U⁻¹x, ‖x‖_{U⁻¹})` in one pass.
    pub fn solve_with_bonus(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.check_dim(x)?;
        let v = self.inv_times(x);
        let q = clamp_form(dot(x, &v))?;
        Ok((v, q))
    }

    /// Bonus that refreshes the inverse once on numerical degradation.
    pub fn bonus_refreshing(&mut self, x: &[f64]) -> Result<f64> {
        match self.bonus(x) {
            Err(BanditError::NumericalDegradation { .. }) => {
                self.refresh_inverse()?;
                self.bonus(x)
            }
            other => other,
        }
    }

    /// Max-abs entry of `U·U⁻¹ − I`.
    pub fn inverse_drift(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += self.precision[i * d + k] * self.precision_inv[k * d + j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }
}

fn clamp_form(q: f64) -> Result<f64> {
    if q >= 0.0 {
        Ok(q.sqrt())
    } else if q >= -NEGATIVE_FORM_TOLERANCE {
        Ok(0.0)
    } else {
        Err(BanditError::NumericalDegradation { value: q })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn init_is_scaled_identity() {
        let s = RidgeState::new(2, 1.0).unwrap();
        assert_eq!(s.precision(), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(s.estimate(), &[0.0, 0.0]);
        assert_eq!(s.count(), 0);

        let s = RidgeState::new(1, 4.0).unwrap();
        assert_eq!(s.precision_inv(), &[0.25]);

        // λ = B⁻² with B = 2
        let s = RidgeState::new(3, 0.25).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.25 } else { 0.0 };
                assert_eq!(s.precision()[i * 3 + j], want);
            }
        }
    }

    #[test]
    fn init_rejects_bad_arguments() {
        assert!(matches!(RidgeState::new(0, 1.0), Err(BanditError::InvalidArgument(_))));
        assert!(matches!(RidgeState::new(2, 0.0), Err(BanditError::InvalidArgument(_))));
        assert!(matches!(RidgeState::new(2, -1.0), Err(BanditError::InvalidArgument(_))));
        assert!(RidgeState::new(2, f64::NAN).is_err());
    }

    #[test]
    fn single_update_matches_hand_solve() {
        let mut s = RidgeState::new(2, 1.0).unwrap();
        s.update(&[1.0, 0.0], 1.0).unwrap();
        assert_eq!(s.precision(), &[2.0, 0.0, 0.0, 1.0]);
        assert!((s.estimate()[0] - 0.5).abs() < 1e-15);
        assert_eq!(s.estimate()[1], 0.0);
        assert!((s.predict(&[1.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(s.predict(&[0.0, 1.0]).unwrap(), 0.0);
        assert!((s.bonus(&[1.0, 0.0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_context_only_bumps_count() {
        let mut s = RidgeState::new(3, 1.0).unwrap();
        s.update(&[0.3, -0.2, 0.5], 0.7).unwrap();
        let before = s.clone();
        s.update(&[0.0, 0.0, 0.0], 123.0).unwrap();
        assert_eq!(s.precision(), before.precision());
        assert_eq!(s.estimate(), before.estimate());
        assert_eq!(s.count(), before.count() + 1);
    }

    #[test]
    fn cold_bonus_is_norm_over_sqrt_lambda() {
        let s = RidgeState::new(3, 1.0).unwrap();
        assert_eq!(s.bonus(&[0.0, 1.0, 0.0]).unwrap(), 1.0);
        let s = RidgeState::new(3, 4.0).unwrap();
        assert_eq!(s.bonus(&[0.0, 0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(s.predict(&[0.0, 0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn dimension_and_finiteness_errors() {
        let mut s = RidgeState::new(2, 1.0).unwrap();
        assert!(matches!(s.update(&[1.0], 0.0), Err(BanditError::InvalidArgument(_))));
        assert!(matches!(s.update(&[f64::NAN, 0.0], 0.0), Err(BanditError::InvalidArgument(_))));
        assert!(matches!(s.update(&[1.0, 0.0], f64::INFINITY), Err(BanditError::InvalidArgument(_))));
        assert!(s.predict(&[1.0, 2.0, 3.0]).is_err());
        assert!(s.bonus(&[1.0, 2.0, 3.0]).is_err());
        assert_eq!(s.count(), 0);
    }

    #[test]
    fn negative_forms_clamp_or_fail() {
        assert_eq!(clamp_form(-5e-13).unwrap(), 0.0);
        assert!(matches!(clamp_form(-1e-9), Err(BanditError::NumericalDegradation { .. })));
    }

    #[test]
    fn corrupted_inverse_is_repaired_by_refresh() {
        let mut s = RidgeState::new(2, 1.0).unwrap();
        s.precision_inv = vec![-1.0, 0.0, 0.0, -1.0];
        assert!(s.bonus(&[1.0, 0.0]).is_err());
        assert_eq!(s.bonus_refreshing(&[1.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn periodic_refresh_keeps_drift_small() {
        let mut s = RidgeState::new(4, 0.5).unwrap();
        for k in 0..(REFRESH_INTERVAL * 2 + 7) {
            let t = k as f64;
            s.update(&[t.sin(), t.cos(), (0.3 * t).sin(), 0.1], (0.7 * t).cos()).unwrap();
        }
        assert!(s.inverse_drift() < 1e-10);
        assert_eq!(s.count(), REFRESH_INTERVAL * 2 + 7);
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 64, .. ProptestConfig::default() })]

        #[test]
        fn bonus_never_grows_after_update(
            xs in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 4), 1..40),
            probe in proptest::collection::vec(-1.0f64..1.0, 4),
            lambda in 0.05f64..5.0,
        ) {
            let mut s = RidgeState::new(4, lambda).unwrap();
            let mut prev = s.bonus(&probe).unwrap();
            for x in &xs {
                s.update(x, 0.5).unwrap();
                let b = s.bonus(&probe).unwrap();
                prop_assert!(b <= prev + 1e-12);
                prev = b;
            }
        }

        #[test]
        fn reads_do_not_mutate(
            xs in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 3), 0..10),
            probe in proptest::collection::vec(-1.0f64..1.0, 3),
        ) {
            let mut s = RidgeState::new(3, 1.0).unwrap();
            for x in &xs {
                s.update(x, 1.0).unwrap();
            }
            let before = s.clone();
            let _ = s.predict(&probe).unwrap();
            let _ = s.bonus(&probe).unwrap();
            prop_assert_eq!(before, s);
        }
    }
}
