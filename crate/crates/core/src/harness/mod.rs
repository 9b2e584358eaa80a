//! Seeded experiment orchestration.
//!
//! A trial is a pure function of `(config, policy, grid point, seed)`: the
//! environment draws decision sets from stream 1 of a ChaCha8 generator seeded
//! with the trial seed, reward noise from stream 2, and a hard-family parameter
//! from stream 3. Trials therefore run in any order or in parallel with
//! identical results.

mod audit;
mod config;
mod export;

pub use audit::{AuditReport, AuditTally, CapAudit, CoverageAudit, SkipAudit, SurvivalAudit, COVERAGE_PROBES};
pub use config::{
    parse_audits, AuditFlags, EnvSpec, ExperimentConfig, ParamValue, PolicySpec, TraceMode, DEFAULT_GAMMAS,
    DEFAULT_SYNTHETIC_SEED,
};
pub use export::{
    export_csv, read_summary_csv, read_trace_csv, trace_file_name, write_summary_csv, write_trace_csv, SummaryCsvRow,
    SUMMARY_HEADER, TRACE_HEADER,
};

use std::borrow::Cow;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::env::{gen_hard_instance, gen_synthetic, load_dataset, Environment, HardInstanceFamily};
use crate::error::{BanditError, Result};
use crate::policy::{LevelBeta, LinUcb, Lsw, MabUcb, Policy, PolicyKind, SupLinUcb, LSW_DEFAULT_MAX_HORIZON};
use crate::theory::{
    compute_theorem1_params, heuristic_gamma, misspec_admissible, misspec_admissible_sup, solve_l_delta,
    ProblemConstants, TheoryParams,
};

/// Width of the trailing regret window.
pub const LAST_WINDOW: u64 = 1000;

const DECISION_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;
const PARAM_STREAM: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// The environment (or family of environments) an experiment runs on.
#[derive(Debug, Clone)]
pub enum Instance {
    Single(Environment),
    Family(HardInstanceFamily),
}

impl Instance {
    pub fn build(spec: &EnvSpec, noise: Option<f64>) -> Result<Self> {
        let inst = match spec {
            EnvSpec::Synthetic { dim, n, zeta, seed } => Instance::Single(gen_synthetic(*dim, *n, *zeta, *seed)?),
            EnvSpec::Dataset { path, zeta } => Instance::Single(load_dataset(path, *zeta)?),
            EnvSpec::Hard { dim, arms, delta, seed } => {
                Instance::Family(gen_hard_instance(*dim, *arms, *delta, *seed)?)
            }
        };
        match (inst, noise) {
            (Instance::Single(env), Some(r)) => Ok(Instance::Single(env.with_noise_scale(r)?)),
            (inst, _) => Ok(inst),
        }
    }

    /// The environment trial `seed` plays; for a family, a parameter drawn
    /// uniformly from stream 3.
    pub fn environment(&self, seed: u64, noise: Option<f64>) -> Result<Cow<'_, Environment>> {
        match self {
            Instance::Single(env) => Ok(Cow::Borrowed(env)),
            Instance::Family(fam) => {
                let param = fam.draw_param(&mut stream(seed, PARAM_STREAM));
                let env = fam.environment(param)?;
                Ok(Cow::Owned(match noise {
                    Some(r) => env.with_noise_scale(r)?,
                    None => env,
                }))
            }
        }
    }
}

/// Constants the bounds need, read off an environment. Noiseless
/// environments use `R = 1`, which is a valid (loose) sub-Gaussian scale.
pub fn problem_constants(env: &Environment, failure_prob: f64) -> ProblemConstants {
    let noise = env.noise_scale();
    ProblemConstants {
        dim: env.dim(),
        gap: env.gap(),
        zeta: env.zeta(),
        context_bound: env.context_bound(),
        param_bound: env.param_bound(),
        noise: if noise > 0.0 { noise } else { 1.0 },
        failure_prob,
    }
}

/// Closed-form constants for the environment a config describes (its first
/// trial for a family).
pub fn theory_for_config(cfg: &ExperimentConfig) -> Result<TheoryParams> {
    let inst = Instance::build(&cfg.env, cfg.noise)?;
    let env = inst.environment(cfg.base_seed, cfg.noise)?;
    TheoryParams::compute(&problem_constants(&env, cfg.failure_prob), 1)
}

/// One point of a policy's hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variant {
    pub beta: Option<ParamValue>,
    pub lambda: Option<ParamValue>,
    pub gamma: Option<ParamValue>,
    pub eps_lsw: Option<ParamValue>,
}

impl Variant {
    /// The cross product of a spec's grids, `beta` varying slowest.
    pub fn expand(spec: &PolicySpec) -> Vec<Variant> {
        let opts = |g: &[ParamValue]| -> Vec<Option<ParamValue>> {
            if g.is_empty() {
                vec![None]
            } else {
                g.iter().copied().map(Some).collect()
            }
        };
        let mut out = Vec::new();
        for beta in opts(&spec.beta) {
            for lambda in opts(&spec.lambda) {
                for gamma in opts(&spec.gamma) {
                    for eps_lsw in opts(&spec.eps_lsw) {
                        out.push(Variant {
                            beta,
                            lambda,
                            gamma,
                            eps_lsw,
                        });
                    }
                }
            }
        }
        out
    }
}

/// A grid point with every keyword replaced by a number.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub beta: f64,
    pub level_beta: Option<LevelBeta>,
    pub lambda: f64,
    pub gamma: f64,
    pub eps_lsw: f64,
    pub label: String,
    /// `(β, λ, Γ, ε)` for tie-breaking; `β(1)` for a level schedule.
    pub key: [f64; 4],
}

pub fn resolve(kind: PolicyKind, v: &Variant, env: &Environment, c: &ProblemConstants) -> Result<Resolved> {
    let ds = || compute_theorem1_params(c);
    let mut label = Vec::new();
    let mut level_beta = None;
    let beta = match v.beta {
        None => 0.0,
        Some(ParamValue::Number(b)) => {
            if kind == PolicyKind::SupLinUcb {
                level_beta = Some(LevelBeta::Constant(b));
            }
            label.push(format!("beta={b}"));
            b
        }
        Some(ParamValue::Theory) if kind == PolicyKind::SupLinUcb => {
            let s = LevelBeta::Theory(*c);
            label.push("beta=theory".to_string());
            let b1 = s.at(1);
            level_beta = Some(s);
            b1
        }
        Some(ParamValue::Theory) => {
            let b = ds()?.beta;
            label.push(format!("beta=theory({b:.6})"));
            b
        }
        Some(ParamValue::Heuristic) => return Err(BanditError::InvalidArgument("beta cannot be heuristic".into())),
    };
    let lambda = match v.lambda {
        None => c.lambda(),
        Some(ParamValue::Number(l)) => {
            label.push(format!("lambda={l}"));
            l
        }
        Some(_) => {
            label.push("lambda=theory".to_string());
            c.lambda()
        }
    };
    let gamma = match v.gamma {
        None => 0.0,
        Some(ParamValue::Number(g)) => {
            label.push(format!("gamma={g}"));
            g
        }
        Some(ParamValue::Theory) => {
            let g = ds()?.gamma;
            label.push(format!("gamma=theory({g:.6e})"));
            g
        }
        Some(ParamValue::Heuristic) => {
            let g = heuristic_gamma(c.dim, c.gap);
            label.push(format!("gamma=heuristic({g:.6})"));
            g
        }
    };
    let eps_lsw = match v.eps_lsw {
        None => 0.0,
        Some(ParamValue::Number(e)) => {
            label.push(format!("eps_lsw={e}"));
            e
        }
        Some(_) => {
            label.push(format!("eps_lsw=zeta({})", env.zeta()));
            env.zeta()
        }
    };
    Ok(Resolved {
        beta,
        level_beta,
        lambda,
        gamma,
        eps_lsw,
        label: label.join(";"),
        key: [beta, lambda, gamma, eps_lsw],
    })
}

fn build_policy(kind: PolicyKind, r: &Resolved, env: &Environment, level_sets: bool) -> Result<Box<dyn Policy>> {
    let d = env.dim();
    Ok(match kind {
        PolicyKind::Oful => Box::new(LinUcb::oful(d, r.lambda, r.beta)?),
        PolicyKind::DsOful => Box::new(LinUcb::ds_oful(d, r.lambda, r.beta, r.gamma)?),
        PolicyKind::SupLinUcb => {
            let schedule = r.level_beta.unwrap_or(LevelBeta::Constant(r.beta));
            Box::new(SupLinUcb::new(d, r.lambda, schedule)?.with_level_sets(level_sets))
        }
        PolicyKind::Lsw => Box::new(Lsw::new(d, r.lambda, r.beta, r.eps_lsw)?),
        PolicyKind::MabUcb => Box::new(MabUcb::new()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub round: u64,
    pub arm: usize,
    pub reward: f64,
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub bonus: f64,
    pub selected: bool,
    pub level: u32,
    /// Policy time (select plus observe) for this round.
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub policy: String,
    pub kind: PolicyKind,
    pub params: String,
    pub seed: u64,
    pub records: Vec<RoundRecord>,
    pub final_regret: f64,
    pub last_window_regret: f64,
    /// Regression-set size per level (a single entry for one-level policies).
    pub selection_counts: Vec<usize>,
    pub elapsed_s: f64,
    /// `T_i(K)` per context for fixed-arm environments.
    pub arm_visits: Option<Vec<u64>>,
    pub audit: AuditReport,
}

impl RegretTrace {
    pub fn selection_total(&self) -> usize {
        self.selection_counts.iter().sum()
    }

    /// Rounds, among the first `horizon`, whose expected reward was zero.
    pub fn zero_reward_rounds(&self, env: &Environment) -> usize {
        self.records
            .iter()
            .filter(|r| env.expected_rewards().get(r.arm) == Some(&0.0))
            .count()
    }
}

/// Everything a single trial needs besides its seed.
pub struct TrialSetup<'a> {
    pub instance: &'a Instance,
    pub spec: &'a PolicySpec,
    pub variant: Variant,
    pub horizon: u64,
    pub audits: AuditFlags,
    pub failure_prob: f64,
    pub noise: Option<f64>,
    /// Keep per-round records; off keeps only totals.
    pub keep_records: bool,
}

pub fn run_trial(setup: &TrialSetup<'_>, seed: u64) -> Result<RegretTrace> {
    let spec = setup.spec;
    let env = setup.instance.environment(seed, setup.noise)?;
    let env: &Environment = &env;
    if spec.kind == PolicyKind::MabUcb && !env.has_fixed_arms() {
        return Err(BanditError::InvalidCombination(format!(
            "policy {} (mab_ucb) needs a fixed-arm environment",
            spec.name
        )));
    }
    if spec.kind == PolicyKind::Lsw {
        let cap = spec.max_horizon.unwrap_or(LSW_DEFAULT_MAX_HORIZON);
        if setup.horizon > cap {
            return Err(BanditError::InvalidCombination(format!(
                "policy {} (lsw) is capped at horizon {cap}, asked for {}",
                spec.name, setup.horizon
            )));
        }
    }
    let c = problem_constants(env, setup.failure_prob);
    let r = resolve(spec.kind, &setup.variant, env, &c)?;
    let theory_lambda = audit::lambda_is_theory(r.lambda, &c);
    let theory = |v: Option<ParamValue>| v == Some(ParamValue::Theory);

    let mut report = AuditReport::default();
    let mut survival = None;
    if setup.audits.arm_survival
        && spec.kind == PolicyKind::SupLinUcb
        && theory(setup.variant.beta)
        && theory_lambda
    {
        if let Ok(l_delta) = solve_l_delta(&c) {
            let at = crate::theory::level_params(&c, l_delta);
            if misspec_admissible_sup(c.zeta, c.gap, c.dim, l_delta, at.iota1) {
                survival = Some(SurvivalAudit::new(l_delta, &c));
            }
        }
    }
    let mut skip = None;
    if setup.audits.skipped_round
        && spec.kind == PolicyKind::DsOful
        && theory(setup.variant.gamma)
        && theory(setup.variant.beta)
        && theory_lambda
    {
        let p = compute_theorem1_params(&c)?;
        if misspec_admissible(c.zeta, c.gap, c.dim, p.iota1) {
            skip = Some(SkipAudit::default());
        }
    }
    let mut coverage = (setup.audits.coverage
        && matches!(spec.kind, PolicyKind::Oful | PolicyKind::DsOful | PolicyKind::Lsw)
        && theory_lambda)
        .then_some(CoverageAudit {
            rounds_checked: 0,
            rounds_failed: 0,
        });

    let mut policy = build_policy(spec.kind, &r, env, survival.is_some())?;
    let mut decisions = stream(seed, DECISION_STREAM);
    let mut noise = stream(seed, NOISE_STREAM);
    let mut records = Vec::with_capacity(if setup.keep_records { setup.horizon as usize } else { 0 });
    let mut visits = env.has_fixed_arms().then(|| vec![0u64; env.num_contexts()]);
    let window_start = setup.horizon.saturating_sub(LAST_WINDOW) + 1;
    let (mut cum, mut window, mut total_time) = (0.0, 0.0, Duration::ZERO);

    for k in 1..=setup.horizon {
        let set = env.decision_set(&mut decisions);
        let t0 = Instant::now();
        let choice = policy.select(&set.contexts)?;
        let mut spent = t0.elapsed();
        if let (Some(cov), Some(ridge)) = (coverage.as_mut(), policy.ridge()) {
            cov.check(ridge, &set, env, &c);
        }
        let out = env.step(&set, choice.index, &mut noise)?;
        let t1 = Instant::now();
        policy.observe(&choice, set.contexts[choice.index], out.reward)?;
        spent += t1.elapsed();
        total_time += spent;

        cum += out.regret;
        if k >= window_start {
            window += out.regret;
        }
        if let Some(v) = visits.as_mut() {
            v[choice.index] += 1;
        }
        if let Some(s) = skip.as_mut() {
            s.check(&choice, out.regret);
        }
        if let Some(s) = survival.as_mut() {
            s.check(&choice, &set);
        }
        if setup.keep_records {
            records.push(RoundRecord {
                round: k,
                arm: choice.index,
                reward: out.reward,
                inst_regret: out.regret,
                cum_regret: cum,
                bonus: choice.bonus_at_choice,
                selected: choice.selected_for_regression,
                level: choice.level,
                elapsed: spent,
            });
        }
    }

    let counts = policy.selection_counts();
    if setup.audits.selection_cap && theory_lambda {
        report.selection_cap = match spec.kind {
            PolicyKind::DsOful if r.gamma > 0.0 && r.gamma <= 1.0 => Some(CapAudit::single(counts[0], &c, r.gamma)),
            PolicyKind::SupLinUcb => Some(CapAudit::levels(counts.clone(), &c)),
            _ => None,
        };
    }
    report.coverage = coverage;
    report.skipped_round = skip;
    report.arm_survival = survival;

    Ok(RegretTrace {
        policy: spec.name.clone(),
        kind: spec.kind,
        params: r.label,
        seed,
        records,
        final_regret: cum,
        last_window_regret: window,
        selection_counts: counts,
        elapsed_s: total_time.as_secs_f64(),
        arm_visits: visits,
        audit: report,
    })
}

/// Aggregate of one grid point over all trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub policy: String,
    pub kind: PolicyKind,
    pub params: String,
    pub key: [f64; 4],
    pub trials: usize,
    pub mean_final_regret: f64,
    pub std_final_regret: f64,
    pub mean_last1k_regret: f64,
    pub mean_elapsed_s: f64,
    /// Mean total regression-set size.
    pub selection_count: f64,
    pub final_regrets: Vec<f64>,
    pub last1k_regrets: Vec<f64>,
    pub audit_violations: u64,
    pub audits: AuditTally,
    pub failure: Option<String>,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; 0 for a single value.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

impl SummaryRow {
    fn from_traces(spec: &PolicySpec, key: [f64; 4], traces: &[RegretTrace]) -> Self {
        let finals: Vec<f64> = traces.iter().map(|t| t.final_regret).collect();
        let last: Vec<f64> = traces.iter().map(|t| t.last_window_regret).collect();
        let elapsed: Vec<f64> = traces.iter().map(|t| t.elapsed_s).collect();
        let sel: Vec<f64> = traces.iter().map(|t| t.selection_total() as f64).collect();
        let mut audits = AuditTally::default();
        traces.iter().for_each(|t| audits.add(&t.audit));
        SummaryRow {
            policy: spec.name.clone(),
            kind: spec.kind,
            params: traces[0].params.clone(),
            key,
            trials: traces.len(),
            mean_final_regret: mean(&finals),
            std_final_regret: sample_std(&finals),
            mean_last1k_regret: mean(&last),
            mean_elapsed_s: mean(&elapsed),
            selection_count: mean(&sel),
            final_regrets: finals,
            last1k_regrets: last,
            audit_violations: audits.violations(),
            audits,
            failure: None,
        }
    }

    fn failed(spec: &PolicySpec, label: String, key: [f64; 4], err: &BanditError) -> Self {
        SummaryRow {
            policy: spec.name.clone(),
            kind: spec.kind,
            params: label,
            key,
            trials: 0,
            mean_final_regret: f64::NAN,
            std_final_regret: f64::NAN,
            mean_last1k_regret: f64::NAN,
            mean_elapsed_s: f64::NAN,
            selection_count: f64::NAN,
            final_regrets: Vec::new(),
            last1k_regrets: Vec::new(),
            audit_violations: 0,
            audits: AuditTally::default(),
            failure: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    /// One row per grid point, in config order.
    pub rows: Vec<SummaryRow>,
    /// Index into `rows` of each policy's winning grid point, in policy order.
    pub winners: Vec<Option<usize>>,
    /// Traces kept under the config's [`TraceMode`].
    pub traces: Vec<RegretTrace>,
}

impl ExperimentReport {
    pub fn total_violations(&self) -> u64 {
        self.rows.iter().map(|r| r.audit_violations).sum()
    }

    pub fn winner(&self, policy: &str) -> Option<&SummaryRow> {
        self.winners
            .iter()
            .flatten()
            .map(|&i| &self.rows[i])
            .find(|r| r.policy == policy)
    }

    pub fn best_rows(&self) -> Vec<&SummaryRow> {
        self.winners.iter().flatten().map(|&i| &self.rows[i]).collect()
    }
}

/// Lowest mean final regret; ties go to the lexicographically smallest key.
/// Failed rows never win.
pub fn pick_winner<'a>(rows: impl IntoIterator<Item = (usize, &'a SummaryRow)>) -> Option<usize> {
    rows.into_iter()
        .filter(|(_, r)| r.failure.is_none())
        .min_by(|(_, a), (_, b)| {
            a.mean_final_regret
                .total_cmp(&b.mean_final_regret)
                .then_with(|| a.key.iter().zip(&b.key).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal))
        })
        .map(|(i, _)| i)
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| BanditError::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

/// Runs every grid point of every policy for `trials` seeds
/// (`base_seed + i`), trials in parallel.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let instance = Instance::build(&cfg.env, cfg.noise)?;
    let reference = instance.environment(cfg.base_seed, cfg.noise)?.into_owned();
    let c = problem_constants(&reference, cfg.failure_prob);
    let seeds: Vec<u64> = (0..cfg.trials as u64).map(|i| cfg.base_seed + i).collect();

    with_pool(cfg.threads, || {
        let mut rows = Vec::new();
        let mut winners = Vec::new();
        let mut kept = Vec::new();
        for spec in &cfg.policies {
            let variants = Variant::expand(spec);
            let jobs: Vec<(usize, u64)> = (0..variants.len())
                .flat_map(|v| seeds.iter().map(move |&s| (v, s)))
                .collect();
            let keep_records = cfg.traces != TraceMode::None;
            let results: Vec<Result<RegretTrace>> = jobs
                .par_iter()
                .map(|&(v, seed)| {
                    let setup = TrialSetup {
                        instance: &instance,
                        spec,
                        variant: variants[v],
                        horizon: cfg.horizon,
                        audits: cfg.audits,
                        failure_prob: cfg.failure_prob,
                        noise: cfg.noise,
                        keep_records,
                    };
                    run_trial(&setup, seed)
                })
                .collect();

            let first_row = rows.len();
            let mut per_variant: Vec<Vec<RegretTrace>> = Vec::new();
            let mut results = results.into_iter();
            for variant in &variants {
                let outcome: Result<Vec<RegretTrace>> = results.by_ref().take(seeds.len()).collect();
                let (label, key) = match resolve(spec.kind, variant, &reference, &c) {
                    Ok(r) => (r.label, r.key),
                    Err(_) => (String::new(), [f64::NAN; 4]),
                };
                match outcome {
                    Ok(traces) => {
                        rows.push(SummaryRow::from_traces(spec, key, &traces));
                        per_variant.push(traces);
                    }
                    Err(e) => {
                        rows.push(SummaryRow::failed(spec, label, key, &e));
                        per_variant.push(Vec::new());
                    }
                }
            }
            let win = pick_winner((first_row..rows.len()).map(|i| (i, &rows[i])));
            winners.push(win);
            match cfg.traces {
                TraceMode::All => kept.extend(per_variant.into_iter().flatten()),
                TraceMode::Best => {
                    if let Some(w) = win {
                        kept.extend(per_variant.swap_remove(w - first_row));
                    }
                }
                TraceMode::None => {}
            }
        }
        ExperimentReport {
            rows,
            winners,
            traces: kept,
        }
    })
}

/// Winning grid point per policy (see [`pick_winner`]).
pub fn grid_search(cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    let report = run_experiment(cfg)?;
    Ok(report.best_rows().into_iter().cloned().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            env: EnvSpec::Synthetic {
                dim: 3,
                n: 5,
                zeta: 0.01,
                seed: 4,
            },
            policies: vec![
                PolicySpec::new("oful", PolicyKind::Oful).with_lambda(&[ParamValue::Number(1.0)]),
                PolicySpec::new("ds", PolicyKind::DsOful)
                    .with_beta(&[ParamValue::Number(1.0)])
                    .with_lambda(&[ParamValue::Number(1.0)]),
                PolicySpec::new("sup", PolicyKind::SupLinUcb)
                    .with_beta(&[ParamValue::Theory])
                    .with_lambda(&[ParamValue::Theory]),
                PolicySpec::new("mab", PolicyKind::MabUcb),
            ],
            horizon: 300,
            trials: 3,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn grid_expansion_order() {
        let spec = PolicySpec::new("x", PolicyKind::DsOful)
            .with_gamma(&[ParamValue::Number(0.1), ParamValue::Number(0.2)]);
        let v = Variant::expand(&spec);
        assert_eq!(v.len(), 18);
        assert_eq!(v[0].beta, Some(ParamValue::Number(1.0)));
        assert_eq!(v[1].gamma, Some(ParamValue::Number(0.2)));
        assert_eq!(v[2].lambda, Some(ParamValue::Number(3.0)));
        assert_eq!(Variant::expand(&PolicySpec::new("m", PolicyKind::MabUcb)).len(), 1);
    }

    #[test]
    fn rows_and_winners_line_up() {
        let report = run_experiment(&tiny_config()).unwrap();
        assert_eq!(report.rows.len(), 3 + 1 + 1 + 1);
        assert_eq!(report.winners.len(), 4);
        for (w, name) in report.winners.iter().zip(["oful", "ds", "sup", "mab"]) {
            assert_eq!(report.rows[w.unwrap()].policy, name);
        }
        // best-mode keeps one variant's trials per policy
        assert_eq!(report.traces.len(), 4 * 3);
        for t in &report.traces {
            assert_eq!(t.records.len(), 300);
        }
    }

    #[test]
    fn single_trial_has_zero_std() {
        let mut cfg = tiny_config();
        cfg.trials = 1;
        let report = run_experiment(&cfg).unwrap();
        for row in &report.rows {
            assert_eq!(row.std_final_regret, 0.0);
            assert_eq!(row.mean_final_regret, row.final_regrets[0]);
        }
    }

    #[test]
    fn failures_stay_in_their_row() {
        let mut cfg = tiny_config();
        cfg.horizon = 50;
        let mut lsw = PolicySpec::new("lsw", PolicyKind::Lsw).with_lambda(&[ParamValue::Number(1.0)]);
        lsw.beta = vec![ParamValue::Number(1.0)];
        lsw.max_horizon = Some(10);
        cfg.policies.push(lsw);
        let report = run_experiment(&cfg).unwrap();
        let row = report.rows.last().unwrap();
        assert!(row.failure.as_deref().unwrap().contains("capped"));
        assert_eq!(report.winners.last().unwrap(), &None);
        assert!(report.rows[0].failure.is_none());
    }

    #[test]
    fn mab_needs_fixed_arms() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.txt");
        crate::env::write_feature_file(&p, &crate::env::gen_labelled_features(4, 10, 0.8, 1).unwrap()).unwrap();
        let cfg = ExperimentConfig {
            env: EnvSpec::Dataset {
                path: p,
                zeta: f64::INFINITY,
            },
            policies: vec![PolicySpec::new("mab", PolicyKind::MabUcb)],
            horizon: 10,
            trials: 1,
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&cfg).unwrap();
        assert!(report.rows[0].failure.as_deref().unwrap().contains("fixed-arm"));
    }

    #[test]
    fn winner_tie_breaks_on_key() {
        let spec = PolicySpec::new("x", PolicyKind::Oful);
        let mk = |regret: f64, key: [f64; 4]| {
            let mut r = SummaryRow::failed(&spec, String::new(), key, &BanditError::GapUndefined);
            r.failure = None;
            r.mean_final_regret = regret;
            r
        };
        let rows = [
            mk(5.0, [3.0, 1.0, 0.0, 0.0]),
            mk(5.0, [1.0, 10.0, 0.0, 0.0]),
            mk(6.0, [0.0, 0.0, 0.0, 0.0]),
        ];
        assert_eq!(pick_winner(rows.iter().enumerate()), Some(1));
    }

    #[test]
    fn statistics() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(sample_std(&[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(sample_std(&[4.0]), 0.0);
    }
}
