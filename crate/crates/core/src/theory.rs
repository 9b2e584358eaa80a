//! Closed-form constants and bounds for DS-OFUL and SupLinUCB.
//!
//! Everything here is a pure function of the problem constants. Logarithms are
//! natural except inside [`solve_l_delta`], whose predicate is dyadic
//! (`2^l > 8β(l)/Δ`).

use crate::error::{invalid, BanditError, Result};

/// Scan limit for [`solve_l_delta`].
pub const L_DELTA_SCAN_CAP: u32 = 64;

/// Problem constants shared by every formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    pub dim: usize,
    /// Minimal sub-optimality gap Δ.
    pub gap: f64,
    /// Misspecification level ζ.
    pub zeta: f64,
    /// Context norm bound L.
    pub context_bound: f64,
    /// Parameter norm bound B.
    pub param_bound: f64,
    /// Sub-Gaussian noise scale R.
    pub noise: f64,
    /// Failure probability δ.
    pub failure_prob: f64,
}

impl ProblemConstants {
    /// The regularizer the bounds assume, `λ = B⁻²`.
    pub fn lambda(&self) -> f64 {
        self.param_bound.powi(-2)
    }

    fn check_common(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if !(self.context_bound >= 1.0) || !(self.param_bound >= 1.0) {
            return Err(invalid(format!(
                "norm bounds must satisfy L, B >= 1 (got L = {}, B = {})",
                self.context_bound, self.param_bound
            )));
        }
        if !(self.noise > 0.0) || !self.noise.is_finite() {
            return Err(invalid(format!("noise scale must be positive, got {}", self.noise)));
        }
        if !(self.failure_prob > 0.0 && self.failure_prob < 1.0) {
            return Err(invalid(format!(
                "failure probability must lie in (0, 1), got {}",
                self.failure_prob
            )));
        }
        Ok(())
    }

    fn check_gap(&self) -> Result<()> {
        if !(self.gap > 0.0) || !self.gap.is_finite() {
            return Err(invalid(format!("gap must be positive, got {}", self.gap)));
        }
        Ok(())
    }
}

/// DS-OFUL constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsOfulParams {
    pub iota1: f64,
    pub gamma: f64,
    pub iota2: f64,
    pub iota3: f64,
    pub beta: f64,
}

pub fn iota1(c: &ProblemConstants) -> f64 {
    let r = c.noise;
    let d = c.dim as f64;
    (24.0 + 18.0 * r) * ((72.0 + 54.0 * r) * c.context_bound * c.param_bound * d.sqrt() / c.gap).ln()
        + (8.0 * r * r * (1.0 / c.failure_prob).ln()).sqrt()
}

/// `ι₂ = log(3LBΓ⁻¹)`.
pub fn iota2(c: &ProblemConstants, gamma: f64) -> f64 {
    (3.0 * c.context_bound * c.param_bound / gamma).ln()
}

/// `ι₃ = log((1 + 16L²B²Γ⁻²ι₂)/δ)`.
pub fn iota3(c: &ProblemConstants, gamma: f64, iota2: f64) -> f64 {
    let lb = c.context_bound * c.param_bound;
    ((1.0 + 16.0 * lb * lb * iota2 / (gamma * gamma)) / c.failure_prob).ln()
}

/// `β = 1 + 4√(dι₂) + R√(2dι₃)`.
pub fn ds_beta(c: &ProblemConstants, iota2: f64, iota3: f64) -> f64 {
    let d = c.dim as f64;
    1.0 + 4.0 * (d * iota2).sqrt() + c.noise * (2.0 * d * iota3).sqrt()
}

pub fn compute_theorem1_params(c: &ProblemConstants) -> Result<DsOfulParams> {
    c.check_common()?;
    c.check_gap()?;
    let iota1 = iota1(c);
    let gamma = c.gap / (2.0 * (c.dim as f64).sqrt() * iota1);
    let iota2 = iota2(c, gamma);
    let iota3 = iota3(c, gamma, iota2);
    let beta = ds_beta(c, iota2, iota3);
    Ok(DsOfulParams {
        iota1,
        gamma,
        iota2,
        iota3,
        beta,
    })
}

/// The threshold the experiments use instead of the theory value: `Γ = Δ/√d`.
pub fn heuristic_gamma(dim: usize, gap: f64) -> f64 {
    gap / (dim as f64).sqrt()
}

/// Per-level SupLinUCB constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelParams {
    pub level: u32,
    /// `ι₁(l) = log(3LB·2ˡ)`
    pub iota1: f64,
    /// `ι₂(l) = log((d·2ˡ + 16L²B²·8ˡ·ι₁(l))/(dδ))`
    pub iota2: f64,
    /// `β(l) = 1 + R√(2dι₂(l))`
    pub beta: f64,
    /// `16d·4ˡ·ι₁(l)`
    pub cap: f64,
}

pub fn level_params(c: &ProblemConstants, level: u32) -> LevelParams {
    let d = c.dim as f64;
    let lb = c.context_bound * c.param_bound;
    let l = level as i32;
    let two_l = 2f64.powi(l);
    let iota1 = (3.0 * lb * two_l).ln();
    let iota2 = ((d * two_l + 16.0 * lb * lb * 8f64.powi(l) * iota1) / (d * c.failure_prob)).ln();
    let beta = 1.0 + c.noise * (2.0 * d * iota2).sqrt();
    LevelParams {
        level,
        iota1,
        iota2,
        beta,
        cap: 16.0 * d * 4f64.powi(l) * iota1,
    }
}

/// Levels `1..=max_level`.
pub fn compute_theorem2_params(c: &ProblemConstants, max_level: u32) -> Result<Vec<LevelParams>> {
    c.check_common()?;
    if max_level == 0 {
        return Err(invalid("max_level must be at least 1"));
    }
    Ok((1..=max_level).map(|l| level_params(c, l)).collect())
}

/// Smallest integer `l ≥ 1` with `2^l > 8β(l)/Δ`.
pub fn solve_l_delta(c: &ProblemConstants) -> Result<u32> {
    c.check_common()?;
    c.check_gap()?;
    (1..=L_DELTA_SCAN_CAP)
        .find(|&l| 2f64.powi(l as i32) * c.gap > 8.0 * level_params(c, l).beta)
        .ok_or(BanditError::NoSolution {
            cap: L_DELTA_SCAN_CAP,
        })
}

/// `2√d·ζ·ι₁ ≤ Δ`.
pub fn misspec_admissible(zeta: f64, gap: f64, dim: usize, iota1: f64) -> bool {
    2.0 * (dim as f64).sqrt() * zeta * iota1 <= gap
}

/// `4·l_Δ·ζ·(1 + 4√(d·ι₁(l_Δ))) < Δ`.
pub fn misspec_admissible_sup(zeta: f64, gap: f64, dim: usize, l_delta: u32, iota1_l: f64) -> bool {
    4.0 * l_delta as f64 * zeta * (1.0 + 4.0 * (dim as f64 * iota1_l).sqrt()) < gap
}

/// Maximum size of the DS-OFUL regression set, `16dΓ⁻²log(3LBΓ⁻¹)`, for `0 < Γ ≤ 1`.
pub fn selection_cap(dim: usize, gamma: f64, context_bound: f64, param_bound: f64) -> f64 {
    16.0 * dim as f64 * (3.0 * context_bound * param_bound / gamma).ln() / (gamma * gamma)
}

/// Maximum size of the level-`l` SupLinUCB regression set, `16d·4ˡ·log(3LB·2ˡ)`.
pub fn per_level_cap(dim: usize, level: u32, context_bound: f64, param_bound: f64) -> f64 {
    let l = level as i32;
    16.0 * dim as f64 * 4f64.powi(l) * (3.0 * context_bound * param_bound * 2f64.powi(l)).ln()
}

/// Confidence radius for a regression set of size `count`.
pub fn confidence_radius(c: &ProblemConstants, count: usize) -> f64 {
    let d = c.dim as f64;
    let lb = c.context_bound * c.param_bound;
    let iota = ((d + count as f64 * lb * lb) / (d * c.failure_prob)).ln();
    1.0 + c.noise * (2.0 * d * iota).sqrt() + c.zeta * (count as f64).sqrt()
}

/// `32β√(2d³ι₂·log(1 + 16dΓ⁻²ι₂))·ι₁ / Δ`.
pub fn ds_regret_bound(c: &ProblemConstants, p: &DsOfulParams) -> f64 {
    let d = c.dim as f64;
    let inner = 2.0 * d.powi(3) * p.iota2 * (1.0 + 16.0 * d * p.iota2 / (p.gamma * p.gamma)).ln();
    32.0 * p.beta * inner.sqrt() * p.iota1 / c.gap
}

/// `2560·d·β²(l_Δ)·ι₁(l_Δ) / Δ`.
pub fn sup_regret_bound(c: &ProblemConstants, at_l_delta: &LevelParams) -> f64 {
    2560.0 * c.dim as f64 * at_l_delta.beta * at_l_delta.beta * at_l_delta.iota1 / c.gap
}

/// Every constant of both theorems for one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryParams {
    pub inputs: ProblemConstants,
    pub lambda: f64,
    pub ds: DsOfulParams,
    pub levels: Vec<LevelParams>,
    pub l_delta: u32,
    pub selection_cap: f64,
    pub regret_bound_ds: f64,
    pub regret_bound_sup: f64,
    pub admissible_ds: bool,
    pub admissible_sup: bool,
}

impl TheoryParams {
    /// Evaluates levels up to `max(max_level, l_Δ)`.
    pub fn compute(c: &ProblemConstants, max_level: u32) -> Result<Self> {
        let ds = compute_theorem1_params(c)?;
        let l_delta = solve_l_delta(c)?;
        let levels = compute_theorem2_params(c, max_level.max(l_delta))?;
        let at = levels[l_delta as usize - 1];
        let (regret_bound_ds, regret_bound_sup) = regret_bounds(c, &ds, &at);
        Ok(Self {
            inputs: *c,
            lambda: c.lambda(),
            selection_cap: selection_cap(c.dim, ds.gamma, c.context_bound, c.param_bound),
            regret_bound_ds,
            regret_bound_sup,
            admissible_ds: misspec_admissible(c.zeta, c.gap, c.dim, ds.iota1),
            admissible_sup: misspec_admissible_sup(c.zeta, c.gap, c.dim, l_delta, at.iota1),
            ds,
            levels,
            l_delta,
        })
    }

    pub fn level(&self, level: u32) -> LevelParams {
        self.levels
            .get(level as usize - 1)
            .copied()
            .unwrap_or_else(|| level_params(&self.inputs, level))
    }
}

pub fn regret_bounds(c: &ProblemConstants, ds: &DsOfulParams, at_l_delta: &LevelParams) -> (f64, f64) {
    (ds_regret_bound(c, ds), sup_regret_bound(c, at_l_delta))
}
