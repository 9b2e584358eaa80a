//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # synthetic instance
//! env.kind = synthetic
//! env.d = 16
//! policy.ds.kind = ds_oful
//! policy.ds.gamma = 0.05
//! policy.ds.beta = 1, 3, 10      # a list is a grid
//! horizon = 10000
//! ```
//!
//! Every key has a default; an empty file describes the 16-dimensional,
//! 100-context synthetic comparison of OFUL, DS-OFUL and SupLinUCB.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{BanditError, Result};
use crate::policy::PolicyKind;

/// Seed whose 16-dimensional, 100-context instance at `ζ = 0.02` has a gap of
/// about 0.18.
pub const DEFAULT_SYNTHETIC_SEED: u64 = 54;

#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    Synthetic { dim: usize, n: usize, zeta: f64, seed: u64 },
    Dataset { path: PathBuf, zeta: f64 },
    /// One parameter drawn uniformly from the family per trial.
    Hard { dim: usize, arms: usize, delta: f64, seed: u64 },
}

impl Default for EnvSpec {
    fn default() -> Self {
        EnvSpec::Synthetic {
            dim: 16,
            n: 100,
            zeta: 0.02,
            seed: DEFAULT_SYNTHETIC_SEED,
        }
    }
}

/// One hyperparameter grid entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamValue {
    Number(f64),
    /// The value the bounds prescribe (for `eps_lsw`: the instance's `ζ`).
    Theory,
    /// `Γ = Δ/√d`.
    Heuristic,
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Number(v) => write!(f, "{v}"),
            ParamValue::Theory => f.write_str("theory"),
            ParamValue::Heuristic => f.write_str("heuristic"),
        }
    }
}

impl FromStr for ParamValue {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "theory" => Ok(ParamValue::Theory),
            "heuristic" => Ok(ParamValue::Heuristic),
            _ => match s.parse::<f64>() {
                Ok(v) if v.is_finite() && v >= 0.0 => Ok(ParamValue::Number(v)),
                _ => Err(format!("expected a non-negative number, `theory` or `heuristic`, got {s:?}")),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySpec {
    pub name: String,
    pub kind: PolicyKind,
    pub gamma: Vec<ParamValue>,
    pub beta: Vec<ParamValue>,
    pub lambda: Vec<ParamValue>,
    pub eps_lsw: Vec<ParamValue>,
    /// Longest horizon LSW accepts.
    pub max_horizon: Option<u64>,
}

impl PolicySpec {
    /// A spec with the per-kind default grids.
    pub fn new(name: impl Into<String>, kind: PolicyKind) -> Self {
        let n = |v: &[f64]| v.iter().map(|&x| ParamValue::Number(x)).collect::<Vec<_>>();
        let (gamma, beta, lambda) = match kind {
            PolicyKind::Oful => (n(&[0.0]), n(&[1.0, 3.0, 10.0]), n(&[1.0, 3.0, 10.0])),
            PolicyKind::DsOful => (
                vec![ParamValue::Heuristic],
                n(&[1.0, 3.0, 10.0]),
                n(&[1.0, 3.0, 10.0]),
            ),
            PolicyKind::SupLinUcb => {
                let mut beta = vec![ParamValue::Theory];
                beta.extend(n(&[1.0, 3.0, 10.0]));
                (Vec::new(), beta, n(&[1.0, 3.0, 10.0]))
            }
            PolicyKind::Lsw => (Vec::new(), n(&[1.0, 3.0, 10.0]), n(&[1.0, 3.0, 10.0])),
            PolicyKind::MabUcb => (Vec::new(), Vec::new(), Vec::new()),
        };
        let eps_lsw = if kind == PolicyKind::Lsw {
            vec![ParamValue::Theory]
        } else {
            Vec::new()
        };
        Self {
            name: name.into(),
            kind,
            gamma,
            beta,
            lambda,
            eps_lsw,
            max_horizon: None,
        }
    }

    pub fn with_gamma(mut self, gamma: &[ParamValue]) -> Self {
        self.gamma = gamma.to_vec();
        self
    }

    pub fn with_beta(mut self, beta: &[ParamValue]) -> Self {
        self.beta = beta.to_vec();
        self
    }

    pub fn with_lambda(mut self, lambda: &[ParamValue]) -> Self {
        self.lambda = lambda.to_vec();
        self
    }

    pub fn with_eps_lsw(mut self, eps: &[ParamValue]) -> Self {
        self.eps_lsw = eps.to_vec();
        self
    }

    /// Number of grid points.
    pub fn grid_size(&self) -> usize {
        [&self.gamma, &self.beta, &self.lambda, &self.eps_lsw]
            .iter()
            .map(|g| g.len().max(1))
            .product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditFlags {
    pub selection_cap: bool,
    pub coverage: bool,
    pub skipped_round: bool,
    pub arm_survival: bool,
}

impl AuditFlags {
    pub const ALL: AuditFlags = AuditFlags {
        selection_cap: true,
        coverage: true,
        skipped_round: true,
        arm_survival: true,
    };
    pub const NONE: AuditFlags = AuditFlags {
        selection_cap: false,
        coverage: false,
        skipped_round: false,
        arm_survival: false,
    };
}

impl Default for AuditFlags {
    fn default() -> Self {
        AuditFlags::ALL
    }
}

/// Which per-round traces to keep and write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceMode {
    /// Only the winning grid point of each policy.
    #[default]
    Best,
    All,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub policies: Vec<PolicySpec>,
    pub horizon: u64,
    pub trials: usize,
    pub base_seed: u64,
    pub audits: AuditFlags,
    pub output_dir: Option<PathBuf>,
    pub traces: TraceMode,
    /// Overrides the environment's reward-noise scale.
    pub noise: Option<f64>,
    /// Failure probability `δ` used by every theory-mode value.
    pub failure_prob: f64,
    pub threads: Option<usize>,
}

/// Γ values of the default DS-OFUL rows.
pub const DEFAULT_GAMMAS: [f64; 4] = [0.02, 0.05, 0.08, 0.18];

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut policies = vec![PolicySpec::new("oful", PolicyKind::Oful)];
        for g in DEFAULT_GAMMAS {
            policies.push(
                PolicySpec::new(format!("ds_oful_{g}"), PolicyKind::DsOful).with_gamma(&[ParamValue::Number(g)]),
            );
        }
        policies.push(PolicySpec::new("suplinucb", PolicyKind::SupLinUcb));
        Self {
            env: EnvSpec::default(),
            policies,
            horizon: 10_000,
            trials: 8,
            base_seed: 0,
            audits: AuditFlags::ALL,
            output_dir: None,
            traces: TraceMode::Best,
            noise: None,
            failure_prob: 0.1,
            threads: None,
        }
    }
}

fn config_err(path: &Path, line: usize, message: impl Into<String>) -> BanditError {
    BanditError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| BanditError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Parses config text; `origin` only labels error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(config_err(origin, i + 1, format!("expected `key = value`, got {line:?}")));
            };
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if k.is_empty() || v.is_empty() {
                return Err(config_err(origin, i + 1, "empty key or value"));
            }
            if let Some((first, _)) = entries.insert(k.clone(), (i + 1, v)) {
                return Err(config_err(origin, i + 1, format!("{k} already set on line {first}")));
            }
        }
        let mut p = Parser {
            origin,
            entries,
        };
        let cfg = p.build()?;
        if let Some((key, (line, _))) = p.entries.into_iter().next() {
            return Err(config_err(origin, line, format!("unknown key {key:?}")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| BanditError::InvalidArgument(m);
        if self.horizon == 0 {
            return Err(err("horizon must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(err("trials must be at least 1".into()));
        }
        if self.policies.is_empty() {
            return Err(err("at least one policy is required".into()));
        }
        if !(self.failure_prob > 0.0 && self.failure_prob < 1.0) {
            return Err(err(format!("theory.delta must lie in (0, 1), got {}", self.failure_prob)));
        }
        let mut names: Vec<&str> = self.policies.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(err(format!("duplicate policy name {:?}", w[0])));
        }
        for p in &self.policies {
            if p.kind == PolicyKind::Oful && p.gamma.iter().any(|g| *g != ParamValue::Number(0.0)) {
                return Err(err(format!("policy {}: OFUL has no gamma (use ds_oful)", p.name)));
            }
            if p.gamma.contains(&ParamValue::Heuristic) && p.kind != PolicyKind::DsOful {
                return Err(err(format!("policy {}: `heuristic` only applies to gamma", p.name)));
            }
            for v in p.beta.iter().chain(&p.lambda).chain(&p.eps_lsw) {
                if *v == ParamValue::Heuristic {
                    return Err(err(format!("policy {}: `heuristic` only applies to gamma", p.name)));
                }
            }
            if p.lambda.contains(&ParamValue::Number(0.0)) {
                return Err(err(format!("policy {}: lambda must be positive", p.name)));
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    origin: &'a Path,
    entries: BTreeMap<String, (usize, String)>,
}

impl Parser<'_> {
    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| config_err(self.origin, line, format!("bad value {v:?} for {key}"))),
        }
    }

    fn take_list(&mut self, key: &str) -> Result<Option<Vec<ParamValue>>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|s| s.trim().parse::<ParamValue>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|m| config_err(self.origin, line, format!("{key}: {m}"))),
        }
    }

    fn build(&mut self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();

        let kind = self.take::<String>("env.kind")?.unwrap_or_else(|| "synthetic".into());
        cfg.env = match kind.as_str() {
            "synthetic" => EnvSpec::Synthetic {
                dim: self.take("env.d")?.unwrap_or(16),
                n: self.take("env.n")?.unwrap_or(100),
                zeta: self.take("env.zeta")?.unwrap_or(0.02),
                seed: self.take("env.seed")?.unwrap_or(DEFAULT_SYNTHETIC_SEED),
            },
            "dataset" => {
                let Some(path) = self.take::<PathBuf>("env.path")? else {
                    return Err(BanditError::InvalidArgument("env.kind = dataset needs env.path".into()));
                };
                EnvSpec::Dataset {
                    path,
                    zeta: self.take("env.zeta")?.unwrap_or(f64::INFINITY),
                }
            }
            "hard" => EnvSpec::Hard {
                dim: self.take("env.d")?.unwrap_or(64),
                arms: self.take("env.n")?.unwrap_or(32),
                delta: self.take("env.delta")?.unwrap_or(0.25),
                seed: self.take("env.seed")?.unwrap_or(0),
            },
            other => return Err(BanditError::InvalidArgument(format!("unknown env.kind {other:?}"))),
        };
        cfg.noise = self.take("env.noise")?;
        if let Some(h) = self.take("horizon")? {
            cfg.horizon = h;
        }
        if let Some(t) = self.take("trials")? {
            cfg.trials = t;
        }
        if let Some(s) = self.take("base_seed")? {
            cfg.base_seed = s;
        }
        if let Some(d) = self.take("theory.delta")? {
            cfg.failure_prob = d;
        }
        cfg.output_dir = self.take("output_dir")?;
        cfg.threads = self.take("threads")?;
        if let Some((line, v)) = self.entries.remove("audits") {
            cfg.audits = parse_audits(&v).map_err(|m| config_err(self.origin, line, m))?;
        }
        if let Some((line, v)) = self.entries.remove("traces") {
            cfg.traces = match v.as_str() {
                "best" => TraceMode::Best,
                "all" => TraceMode::All,
                "none" => TraceMode::None,
                _ => return Err(config_err(self.origin, line, format!("traces must be best|all|none, got {v:?}"))),
            };
        }

        let names: Vec<String> = self
            .entries
            .keys()
            .filter_map(|k| k.strip_prefix("policy."))
            .filter_map(|rest| rest.rsplit_once('.').map(|(name, _)| name.to_string()))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        if !names.is_empty() {
            cfg.policies.clear();
        }
        for name in names {
            let prefix = format!("policy.{name}.");
            let Some(kind) = self.take::<String>(&format!("{prefix}kind"))? else {
                return Err(BanditError::InvalidArgument(format!("policy {name} has no kind")));
            };
            let mut spec = PolicySpec::new(&name, kind.parse()?);
            if let Some(g) = self.take_list(&format!("{prefix}gamma"))? {
                spec.gamma = g;
            }
            if let Some(b) = self.take_list(&format!("{prefix}beta"))? {
                spec.beta = b;
            }
            if let Some(l) = self.take_list(&format!("{prefix}lambda"))? {
                spec.lambda = l;
            }
            if let Some(e) = self.take_list(&format!("{prefix}eps_lsw"))? {
                spec.eps_lsw = e;
            }
            spec.max_horizon = self.take(&format!("{prefix}max_horizon"))?;
            cfg.policies.push(spec);
        }
        Ok(cfg)
    }
}

/// `on`, `off`, or a comma list of audit names.
pub fn parse_audits(v: &str) -> std::result::Result<AuditFlags, String> {
    match v.trim() {
        "on" | "all" => return Ok(AuditFlags::ALL),
        "off" | "none" => return Ok(AuditFlags::NONE),
        _ => {}
    }
    let mut flags = AuditFlags::NONE;
    for name in v.split(',').map(|s| s.trim().replace('-', "_")) {
        match name.as_str() {
            "selection_cap" => flags.selection_cap = true,
            "coverage" => flags.coverage = true,
            "skipped_round" => flags.skipped_round = true,
            "arm_survival" => flags.arm_survival = true,
            other => return Err(format!("unknown audit {other:?}")),
        }
    }
    Ok(flags)
}
