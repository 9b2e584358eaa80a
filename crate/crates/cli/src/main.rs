use std::path::PathBuf;
use std::process::ExitCode;

use bandit_core::env::zero_information_rounds;
use bandit_core::harness::{
    export_csv, parse_audits, run_experiment, theory_for_config, AuditFlags, EnvSpec,
    ExperimentConfig, ExperimentReport, PolicySpec, SummaryRow, TraceMode,
};
use bandit_core::policy::PolicyKind;
use bandit_core::BanditError;
use clap::{Parser, Subcommand};

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_AUDIT: u8 = 3;

#[derive(Parser)]
#[command(name = "bandit", version, about = "Misspecified linear contextual bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every policy of a config and report the best grid point of each.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Directory for summary.csv and trace files (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; `BANDIT_THREADS` takes precedence.
        #[arg(long)]
        threads: Option<usize>,
        /// `on`, `off` or a comma list of selection-cap, coverage, skipped-round, arm-survival.
        #[arg(long, value_parser = parse_audits)]
        audits: Option<AuditFlags>,
    },
    /// Run a config and print every grid point.
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Regret of every policy on the hard family against the counting bound.
    Hard {
        #[arg(long, default_value_t = 64)]
        d: usize,
        #[arg(long, default_value_t = 32)]
        arms: usize,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        #[arg(long, default_value_t = 5)]
        k: u64,
        /// Parameter draws, one per trial.
        #[arg(long, default_value_t = 64)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the closed-form constants for a config's environment.
    CheckTheory {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Config(BanditError),
    Runtime(BanditError),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let (Failure::Config(e) | Failure::Runtime(e)) = &f;
            eprintln!("error: {e}");
            ExitCode::from(f.code())
        }
    }
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    match std::env::var("BANDIT_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Failure::Config(BanditError::InvalidArgument(format!("BANDIT_THREADS={v:?} is not a count")))),
        Err(_) => Ok(flag),
    }
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, Failure> {
    let cfg = ExperimentConfig::load(path).map_err(Failure::Config)?;
    cfg.validate().map_err(Failure::Config)?;
    Ok(cfg)
}

fn dispatch(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Run {
            config,
            out,
            threads: t,
            audits,
        } => {
            let mut cfg = load(&config)?;
            cfg.threads = threads(t)?.or(cfg.threads);
            if let Some(a) = audits {
                cfg.audits = a;
            }
            if out.is_some() {
                cfg.output_dir = out;
            }
            if cfg.output_dir.is_none() {
                cfg.traces = TraceMode::None;
            }
            let report = run_experiment(&cfg).map_err(Failure::Runtime)?;
            print_rows(report.best_rows());
            if let Some(dir) = &cfg.output_dir {
                let files = export_csv(&report, dir).map_err(Failure::Runtime)?;
                println!("wrote {} files to {}", files.len(), dir.display());
            }
            Ok(verdict(&report))
        }
        Command::Grid { config, threads: t } => {
            let mut cfg = load(&config)?;
            cfg.threads = threads(t)?.or(cfg.threads);
            cfg.traces = TraceMode::None;
            let report = run_experiment(&cfg).map_err(Failure::Runtime)?;
            print_rows(report.rows.iter());
            println!();
            println!("best per policy:");
            for r in report.best_rows() {
                println!("  {:<16} {}", r.policy, r.params);
            }
            Ok(verdict(&report))
        }
        Command::Hard {
            d,
            arms,
            delta,
            k,
            draws,
            seed,
            threads: t,
        } => hard(d, arms, delta, k, draws, seed, threads(t)?),
        Command::CheckTheory { config } => {
            let cfg = load(&config)?;
            let t = theory_for_config(&cfg).map_err(Failure::Runtime)?;
            let c = &t.inputs;
            println!("d = {}", c.dim);
            println!("gap = {}", c.gap);
            println!("zeta = {}", c.zeta);
            println!("L = {}", c.context_bound);
            println!("B = {}", c.param_bound);
            println!("R = {}", c.noise);
            println!("delta = {}", c.failure_prob);
            println!("lambda = {}", t.lambda);
            println!("iota1 = {}", t.ds.iota1);
            println!("gamma = {}", t.ds.gamma);
            println!("iota2 = {}", t.ds.iota2);
            println!("iota3 = {}", t.ds.iota3);
            println!("beta = {}", t.ds.beta);
            println!("selection_cap = {}", t.selection_cap);
            println!("l_delta = {}", t.l_delta);
            for l in 1..=t.l_delta {
                let p = t.level(l);
                println!(
                    "level {l}: iota1 = {} iota2 = {} beta = {} cap = {}",
                    p.iota1, p.iota2, p.beta, p.cap
                );
            }
            println!("regret_bound_ds = {}", t.regret_bound_ds);
            println!("regret_bound_sup = {}", t.regret_bound_sup);
            println!("admissible_ds = {}", t.admissible_ds);
            println!("admissible_sup = {}", t.admissible_sup);
            Ok(0)
        }
    }
}

fn verdict(report: &ExperimentReport) -> u8 {
    let failed: Vec<&SummaryRow> = report.rows.iter().filter(|r| r.failure.is_some()).collect();
    for r in &failed {
        eprintln!("{} [{}] failed: {}", r.policy, r.params, r.failure.as_deref().unwrap_or(""));
    }
    if !failed.is_empty() {
        return EXIT_RUNTIME;
    }
    let v = report.total_violations();
    if v > 0 {
        eprintln!("{v} audit violations");
        return EXIT_AUDIT;
    }
    0
}

fn print_rows<'a>(rows: impl IntoIterator<Item = &'a SummaryRow>) {
    println!(
        "{:<16} {:<36} {:>22} {:>10} {:>10} {:>10} {:>6}",
        "policy", "params", "regret", "last 1k", "elapsed s", "|C_K|", "audit"
    );
    for r in rows {
        if let Some(f) = &r.failure {
            println!("{:<16} {:<36} failed: {f}", r.policy, r.params);
            continue;
        }
        let regret = format!("{:.2} ± {:.2}", r.mean_final_regret, r.std_final_regret);
        println!(
            "{:<16} {:<36} {:>22} {:>10.2} {:>10.3} {:>10.1} {:>6}",
            r.policy, r.params, regret, r.mean_last1k_regret, r.mean_elapsed_s, r.selection_count, r.audit_violations
        );
    }
}

#[allow(clippy::too_many_arguments)]
fn hard(
    dim: usize,
    arms: usize,
    delta: f64,
    horizon: u64,
    draws: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<u8, Failure> {
    let mut cfg = ExperimentConfig {
        env: EnvSpec::Hard {
            dim,
            arms,
            delta,
            seed,
        },
        policies: [
            PolicyKind::Oful,
            PolicyKind::DsOful,
            PolicyKind::SupLinUcb,
            PolicyKind::Lsw,
            PolicyKind::MabUcb,
        ]
        .into_iter()
        .map(|k| PolicySpec::new(k.as_str(), k))
        .collect(),
        horizon,
        trials: draws,
        traces: TraceMode::None,
        threads,
        ..ExperimentConfig::default()
    };
    cfg.audits = AuditFlags::NONE;
    cfg.validate().map_err(Failure::Config)?;
    let report = run_experiment(&cfg).map_err(Failure::Runtime)?;

    let zero = zero_information_rounds(arms, horizon as usize);
    let bound = 0.5 * delta * zero;
    println!(
        "expected zero-information rounds {zero:.4} of {horizon}; linear policies need mean regret >= {bound:.4}"
    );
    print_rows(report.rows.iter());
    let mut below = 0;
    for r in report.rows.iter().filter(|r| r.kind.is_linear() && r.failure.is_none()) {
        if r.mean_final_regret < bound {
            eprintln!("{} [{}] mean regret {} below {bound}", r.policy, r.params, r.mean_final_regret);
            below += 1;
        }
    }
    let code = verdict(&report);
    if code == 0 && below > 0 {
        return Ok(EXIT_AUDIT);
    }
    Ok(code)
}
