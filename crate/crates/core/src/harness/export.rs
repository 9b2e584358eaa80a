//! CSV persistence for traces and summaries. Floats carry 17 significant
//! digits so every value round-trips exactly.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use super::{ExperimentReport, RegretTrace, RoundRecord, SummaryRow};
use crate::error::{BanditError, Result};
use crate::policy::PolicyKind;

pub const TRACE_HEADER: [&str; 8] = [
    "round",
    "arm",
    "reward",
    "inst_regret",
    "cum_regret",
    "bonus",
    "selected",
    "level",
];

pub const SUMMARY_HEADER: [&str; 7] = [
    "policy",
    "params",
    "mean_final_regret",
    "std_final_regret",
    "mean_last1k_regret",
    "mean_elapsed_s",
    "selection_count",
];

fn f(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> BanditError + '_ {
    move |source| BanditError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> BanditError {
    BanditError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// `trace_<policy>_<seed>.csv`, with anything outside `[A-Za-z0-9._-]` in the
/// policy name replaced by `-`.
pub fn trace_file_name(policy: &str, seed: u64) -> String {
    let safe: String = policy
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '-' })
        .collect();
    format!("trace_{safe}_{seed}.csv")
}

pub fn write_trace_csv(path: impl AsRef<Path>, trace: &RegretTrace) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(TRACE_HEADER).map_err(csv_err(path))?;
    for r in &trace.records {
        w.write_record([
            r.round.to_string(),
            r.arm.to_string(),
            f(r.reward),
            f(r.inst_regret),
            f(r.cum_regret),
            f(r.bonus),
            u8::from(r.selected).to_string(),
            r.level.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| BanditError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads the per-round records back; per-round timings are not persisted.
pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<Vec<RoundRecord>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(parse_err(path, 1, format!("unexpected trace header {header:?}")));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let line = i + 2;
        let num = |j: usize| -> Result<f64> {
            rec[j]
                .parse::<f64>()
                .map_err(|_| parse_err(path, line, format!("bad {} {:?}", TRACE_HEADER[j], &rec[j])))
        };
        let int = |j: usize| -> Result<u64> {
            rec[j]
                .parse::<u64>()
                .map_err(|_| parse_err(path, line, format!("bad {} {:?}", TRACE_HEADER[j], &rec[j])))
        };
        if rec.len() != TRACE_HEADER.len() {
            return Err(parse_err(path, line, "wrong field count"));
        }
        out.push(RoundRecord {
            round: int(0)?,
            arm: int(1)? as usize,
            reward: num(2)?,
            inst_regret: num(3)?,
            cum_regret: num(4)?,
            bonus: num(5)?,
            selected: match &rec[6] {
                "0" => false,
                "1" => true,
                other => return Err(parse_err(path, line, format!("bad selected {other:?}"))),
            },
            level: int(7)? as u32,
            elapsed: Duration::ZERO,
        });
    }
    Ok(out)
}

pub fn write_summary_csv(path: impl AsRef<Path>, rows: &[SummaryRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(SUMMARY_HEADER).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.policy.clone(),
            r.params.clone(),
            f(r.mean_final_regret),
            f(r.std_final_regret),
            f(r.mean_last1k_regret),
            f(r.mean_elapsed_s),
            f(r.selection_count),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| BanditError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A parsed `summary.csv` line.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryCsvRow {
    pub policy: String,
    pub params: String,
    pub mean_final_regret: f64,
    pub std_final_regret: f64,
    pub mean_last1k_regret: f64,
    pub mean_elapsed_s: f64,
    pub selection_count: f64,
}

pub fn read_summary_csv(path: impl AsRef<Path>) -> Result<Vec<SummaryCsvRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?;
    if header.iter().ne(SUMMARY_HEADER) {
        return Err(parse_err(path, 1, format!("unexpected summary header {header:?}")));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let num = |j: usize| -> Result<f64> {
            rec[j]
                .parse::<f64>()
                .map_err(|_| parse_err(path, i + 2, format!("bad {} {:?}", SUMMARY_HEADER[j], &rec[j])))
        };
        out.push(SummaryCsvRow {
            policy: rec[0].to_string(),
            params: rec[1].to_string(),
            mean_final_regret: num(2)?,
            std_final_regret: num(3)?,
            mean_last1k_regret: num(4)?,
            mean_elapsed_s: num(5)?,
            selection_count: num(6)?,
        });
    }
    Ok(out)
}

/// Writes `summary.csv` (every grid point) and one trace file per kept trace
/// into `dir`. Returns the paths written, summary first.
pub fn export_csv(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| BanditError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = vec![dir.join("summary.csv")];
    write_summary_csv(&written[0], &report.rows)?;
    // Under `traces = all` one policy has several grid points per seed.
    let several: Vec<&str> = report
        .rows
        .iter()
        .map(|r| r.policy.as_str())
        .filter(|p| report.rows.iter().filter(|r| r.policy == *p).count() > 1)
        .collect();
    for t in &report.traces {
        let name = if several.contains(&t.policy.as_str())
            && report.traces.iter().filter(|o| o.policy == t.policy && o.seed == t.seed).count() > 1
        {
            format!("{}-{}", t.policy, t.params)
        } else {
            t.policy.clone()
        };
        let path = dir.join(trace_file_name(&name, t.seed));
        write_trace_csv(&path, t)?;
        written.push(path);
    }
    Ok(written)
}

impl RegretTrace {
    /// An empty trace shell, for writing records produced elsewhere.
    pub fn from_records(policy: &str, kind: PolicyKind, seed: u64, records: Vec<RoundRecord>) -> Self {
        let final_regret = records.last().map_or(0.0, |r| r.cum_regret);
        RegretTrace {
            policy: policy.to_string(),
            kind,
            params: String::new(),
            seed,
            records,
            final_regret,
            last_window_regret: 0.0,
            selection_counts: Vec::new(),
            elapsed_s: 0.0,
            arm_visits: None,
            audit: Default::default(),
        }
    }
}
