//! Independent reference computations shared by the integration tests. None
//! of this calls into the library's numerics.
#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;

/// Solves `a·z = b` by Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        assert!(p.abs() > 1e-300, "singular system");
        for row in col + 1..n {
            let f = m[row][col] / p;
            if f != 0.0 {
                for k in col..=n {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * z[k]).sum();
        z[i] = (m[i][n] - s) / m[i][i];
    }
    z
}

/// Ridge regression recomputed from scratch: `U = λI + Σ xxᵀ`, `θ = U⁻¹ Σ r x`.
pub struct RidgeOracle {
    pub dim: usize,
    pub lambda: f64,
    gram: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

impl RidgeOracle {
    pub fn new(dim: usize, lambda: f64) -> Self {
        let mut gram = vec![vec![0.0; dim]; dim];
        for (i, row) in gram.iter_mut().enumerate() {
            row[i] = lambda;
        }
        Self { dim, lambda, gram, rhs: vec![0.0; dim] }
    }

    pub fn push(&mut self, x: &[f64], r: f64) {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.gram[i][j] += x[i] * x[j];
            }
            self.rhs[i] += r * x[i];
        }
    }

    pub fn estimate(&self) -> Vec<f64> {
        dense_solve(&self.gram, &self.rhs)
    }

    pub fn bonus(&self, x: &[f64]) -> f64 {
        let z = dense_solve(&self.gram, x);
        x.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>().sqrt()
    }
}

pub fn gaussian_vec(dim: usize, scale: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Expected reward of arm `m` in the hard family, with parameters numbered
/// `0..n(n−1)` for the ordered pairs `(i, j)`, `i ≠ j`, then `n` singles.
/// Pairs pay 2Δ on `j` and Δ on `i`; singles pay Δ on `i`; everything else 0.
pub fn hard_reward(n: usize, param: usize, m: usize, delta: f64) -> f64 {
    if param < n * (n - 1) {
        let i = param / (n - 1);
        let mut j = param % (n - 1);
        if j >= i {
            j += 1;
        }
        if m == j {
            2.0 * delta
        } else if m == i {
            delta
        } else {
            0.0
        }
    } else if m == param - n * (n - 1) {
        delta
    } else {
        0.0
    }
}

/// Leading zero-reward rounds when the arms in `order` are pulled in sequence,
/// averaged over a uniform parameter.
pub fn zero_info_for_order(n: usize, order: &[usize]) -> f64 {
    let params = n * n;
    let mut total = 0usize;
    for p in 0..params {
        total += order.iter().take_while(|&&m| hard_reward(n, p, m, 1.0) == 0.0).count();
    }
    total as f64 / params as f64
}

/// [`zero_info_for_order`] averaged over every ordered `k`-tuple of distinct arms.
pub fn zero_info_all_orders(n: usize, k: usize) -> f64 {
    fn rec(n: usize, k: usize, prefix: &mut Vec<usize>, acc: &mut (f64, usize)) {
        if prefix.len() == k {
            acc.0 += zero_info_for_order(n, prefix);
            acc.1 += 1;
            return;
        }
        for m in 0..n {
            if !prefix.contains(&m) {
                prefix.push(m);
                rec(n, k, prefix, acc);
                prefix.pop();
            }
        }
    }
    let mut acc = (0.0, 0);
    rec(n, k, &mut Vec::new(), &mut acc);
    acc.0 / acc.1 as f64
}

/// DS-OFUL constants written out directly from their definitions:
/// `(ι₁, Γ, ι₂, ι₃, β)`.
pub fn ds_constants(d: f64, gap: f64, l: f64, b: f64, r: f64, delta: f64) -> (f64, f64, f64, f64, f64) {
    let iota1 = (24.0 + 18.0 * r) * ((72.0 + 54.0 * r) * l * b * d.sqrt() / gap).ln()
        + (8.0 * r * r * (1.0 / delta).ln()).sqrt();
    let gamma = gap / (2.0 * d.sqrt() * iota1);
    let iota2 = (3.0 * l * b / gamma).ln();
    let iota3 = ((1.0 + 16.0 * l * l * b * b * iota2 / (gamma * gamma)) / delta).ln();
    let beta = 1.0 + 4.0 * (d * iota2).sqrt() + r * (2.0 * d * iota3).sqrt();
    (iota1, gamma, iota2, iota3, beta)
}
