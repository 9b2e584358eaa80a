//! Binary-choice environments backed by a labelled feature file.
//!
//! File layout:
//!
//! ```text
//! dim=<d> n=<rows>
//! <label> <x_1> ... <x_d>        (n rows, label in {0, 1})
//! theta_star <t_1> ... <t_d>     (optional)
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{sample_unit_vector, Environment};
use crate::error::{invalid, BanditError, Result};
use crate::linalg::dot;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub dim: usize,
    pub labels: Vec<u8>,
    pub features: Vec<Vec<f64>>,
    pub theta_star: Option<Vec<f64>>,
}

impl FeatureFile {
    /// Least-squares fit of `label ≈ φᵀθ` over every row.
    pub fn fit_theta(&self) -> Result<Vec<f64>> {
        let d = self.dim;
        let mut gram = DMatrix::<f64>::zeros(d, d);
        let mut rhs = DVector::<f64>::zeros(d);
        for (x, &y) in self.features.iter().zip(&self.labels) {
            for i in 0..d {
                rhs[i] += x[i] * y as f64;
                for j in 0..d {
                    gram[(i, j)] += x[i] * x[j];
                }
            }
        }
        let svd = gram.svd(true, true);
        let theta = svd
            .solve(&rhs, 1e-12)
            .map_err(|e| invalid(format!("least-squares fit failed: {e}")))?;
        Ok(theta.iter().copied().collect())
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> BanditError {
    BanditError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_floats<'a>(
    path: &Path,
    line: usize,
    tokens: impl Iterator<Item = &'a str>,
    dim: usize,
) -> Result<Vec<f64>> {
    let values = tokens
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| parse_err(path, line, format!("not a number: {t:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != dim {
        return Err(parse_err(
            path,
            line,
            format!("expected {dim} values, found {}", values.len()),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(parse_err(path, line, "non-finite value"));
    }
    Ok(values)
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<FeatureFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| BanditError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let mut dim = None;
    let mut rows = None;
    for tok in header.split_whitespace() {
        match tok.split_once('=') {
            Some(("dim", v)) => dim = v.parse::<usize>().ok(),
            Some(("n", v)) => rows = v.parse::<usize>().ok(),
            _ => return Err(parse_err(path, hline, format!("unexpected header token {tok:?}"))),
        }
    }
    let (Some(dim), Some(rows)) = (dim, rows) else {
        return Err(parse_err(path, hline, "header must be `dim=<d> n=<rows>`"));
    };
    if dim == 0 {
        return Err(parse_err(path, hline, "dim must be positive"));
    }

    let mut labels = Vec::with_capacity(rows);
    let mut features = Vec::with_capacity(rows);
    let mut theta_star = None;
    for (lineno, line) in lines {
        let mut tokens = line.split_whitespace();
        let head = tokens.next().unwrap_or_default();
        if theta_star.is_some() {
            return Err(parse_err(path, lineno, "content after theta_star block"));
        }
        match head {
            "theta_star" => theta_star = Some(parse_floats(path, lineno, tokens, dim)?),
            "0" | "1" => {
                labels.push(if head == "1" { 1 } else { 0 });
                features.push(parse_floats(path, lineno, tokens, dim)?);
            }
            other => return Err(parse_err(path, lineno, format!("bad label {other:?}"))),
        }
    }
    if labels.len() != rows {
        return Err(parse_err(
            path,
            hline,
            format!("header declares {rows} rows, file has {}", labels.len()),
        ));
    }
    Ok(FeatureFile {
        dim,
        labels,
        features,
        theta_star,
    })
}

fn write_row(out: &mut String, values: &[f64]) {
    for v in values {
        out.push(' ');
        out.push_str(&format!("{v:.16e}"));
    }
    out.push('\n');
}

pub fn write_feature_file(path: impl AsRef<Path>, file: &FeatureFile) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("dim={} n={}\n", file.dim, file.labels.len());
    for (label, x) in file.labels.iter().zip(&file.features) {
        out.push_str(&label.to_string());
        write_row(&mut out, x);
    }
    if let Some(theta) = &file.theta_star {
        out.push_str("theta_star");
        write_row(&mut out, theta);
    }
    let io = |source| BanditError::Io {
        path: PathBuf::from(path),
        source,
    };
    fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(io)
}

/// Loads `path` and keeps rows with `|φᵀθ* − label| ≤ zeta_filter`.
pub fn load_dataset(path: impl AsRef<Path>, zeta_filter: f64) -> Result<Environment> {
    if !(zeta_filter >= 0.0) {
        return Err(invalid(format!("zeta filter must be non-negative, got {zeta_filter}")));
    }
    let file = read_feature_file(path)?;
    let theta = match &file.theta_star {
        Some(t) => t.clone(),
        None => file.fit_theta()?,
    };
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (x, &label) in file.features.iter().zip(&file.labels) {
        if (dot(x, &theta) - label as f64).abs() <= zeta_filter {
            if label == 1 {
                positives.push(x.clone());
            } else {
                negatives.push(x.clone());
            }
        }
    }
    if positives.is_empty() {
        return Err(BanditError::EmptyClass { label: 1, zeta: zeta_filter });
    }
    if negatives.is_empty() {
        return Err(BanditError::EmptyClass { label: 0, zeta: zeta_filter });
    }
    Environment::binary_choice(theta, positives, negatives)
}

/// Synthetic stand-in for pretrained image features: unit vectors clustered
/// around `signal·w₁` (label 1) or `signal·w₀` (label 0) for orthogonal random
/// directions, with `N(0, 1/d)` noise per coordinate before normalizing.
pub fn gen_labelled_features(dim: usize, per_class: usize, signal: f64, seed: u64) -> Result<FeatureFile> {
    if dim < 2 || per_class == 0 {
        return Err(invalid("labelled features need dim >= 2 and per_class >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w1 = sample_unit_vector(dim, &mut rng);
    let mut w0 = sample_unit_vector(dim, &mut rng);
    let p = dot(&w0, &w1);
    w0.iter_mut().zip(&w1).for_each(|(a, b)| *a -= p * b);
    let n0 = dot(&w0, &w0).sqrt();
    w0.iter_mut().for_each(|a| *a /= n0);
    let scale = 1.0 / (dim as f64).sqrt();
    let mut labels = Vec::with_capacity(2 * per_class);
    let mut features = Vec::with_capacity(2 * per_class);
    for (label, w) in [(1u8, &w1), (0u8, &w0)] {
        for _ in 0..per_class {
            let mut x: Vec<f64> = w
                .iter()
                .map(|wi| signal * wi + scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let n = dot(&x, &x).sqrt();
            x.iter_mut().for_each(|v| *v /= n);
            labels.push(label);
            features.push(x);
        }
    }
    Ok(FeatureFile {
        dim,
        labels,
        features,
        theta_star: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> FeatureFile {
        FeatureFile {
            dim: 2,
            labels: vec![1, 1, 0, 0],
            features: vec![
                vec![1.0, 0.0],
                vec![0.8, 0.6],
                vec![0.0, 1.0],
                vec![-0.6, 0.8],
            ],
            theta_star: Some(vec![1.0, 0.0]),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.txt");
        let f = gen_labelled_features(5, 7, 0.5, 1).unwrap();
        write_feature_file(&p, &f).unwrap();
        assert_eq!(read_feature_file(&p).unwrap(), f);
    }

    #[test]
    fn filter_keeps_rows_within_zeta() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.txt");
        write_feature_file(&p, &tiny()).unwrap();
        // residuals: 0, 0.2, 0, 0.6
        let env = load_dataset(&p, 0.25).unwrap();
        let super::super::ArmSource::BinaryChoice { positives, negatives } = env.arms() else {
            panic!()
        };
        assert_eq!((positives.len(), negatives.len()), (2, 1));
        assert_eq!(env.gap(), 1.0);
        let all = load_dataset(&p, f64::INFINITY).unwrap();
        let super::super::ArmSource::BinaryChoice { positives, negatives } = all.arms() else {
            panic!()
        };
        assert_eq!((positives.len(), negatives.len()), (2, 2));
        assert!(matches!(load_dataset(&p, -1.0), Err(BanditError::InvalidArgument(_))));
    }

    #[test]
    fn empty_class_after_filter() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.txt");
        let mut f = tiny();
        f.theta_star = Some(vec![0.0, 0.0]);
        write_feature_file(&p, &f).unwrap();
        assert!(matches!(load_dataset(&p, 0.5), Err(BanditError::EmptyClass { label: 1, .. })));
    }

    #[test]
    fn missing_theta_is_fit_by_least_squares() {
        let f = FeatureFile {
            dim: 2,
            labels: vec![1, 0, 1],
            features: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            theta_star: None,
        };
        // normal equations: [[2,1],[1,2]] θ = [2,1] → θ = (1, 0)
        let t = f.fit_theta().unwrap();
        assert!((t[0] - 1.0).abs() < 1e-12 && t[1].abs() < 1e-12);
    }

    #[test]
    fn malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [
            ("", "empty"),
            ("dim=2\n1 0 1\n", "header"),
            ("dim=2 n=1\n1 0\n", "values"),
            ("dim=2 n=1\n2 0 1\n", "label"),
            ("dim=2 n=2\n1 0 1\n", "rows"),
            ("dim=2 n=1\n1 0 x\n", "number"),
        ];
        for (i, (body, what)) in cases.iter().enumerate() {
            let p = dir.path().join(format!("bad{i}.txt"));
            fs::write(&p, body).unwrap();
            assert!(matches!(read_feature_file(&p), Err(BanditError::Parse { .. })), "{what}");
        }
        assert!(matches!(
            read_feature_file(dir.path().join("missing.txt")),
            Err(BanditError::Io { .. })
        ));
    }
}
