//! CSV and JSON persistence for experiment artifacts.
//!
//! Floats are written with Rust's shortest-roundtrip formatting, so equal
//! seeds produce byte-identical files.

use super::{ExperimentData, SweepRow};
use crate::error::{Error, Result};
use crate::game::Action;
use std::fs;
use std::io::Write;
use std::path::Path;

/// Fixed header of the per-round CSV.
pub const ROUNDS_HEADER: &str = "rep,t,policy,action,true_class,expected_regret,cum_regret";

/// Header of the long-format quantile-curve CSV.
pub const CURVES_HEADER: &str = "policy,t,q05,median,q95";

/// Writes `rounds.csv`, `curves.csv` and `summary.json` into `dir`.
pub fn persist(data: &ExperimentData, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_rounds_csv(&dir.join("rounds.csv"), data)?;
    write_curves_csv(&dir.join("curves.csv"), data)?;
    write_summary_json(&dir.join("summary.json"), data)?;
    Ok(())
}

pub fn write_rounds_csv(path: &Path, data: &ExperimentData) -> Result<()> {
    let mut out = String::new();
    out.push_str(ROUNDS_HEADER);
    out.push('\n');
    for rep in &data.reps {
        for traj in &rep.trajectories {
            for r in &traj.rounds {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    rep.rep, r.t, traj.policy, r.action, r.true_class, r.expected_regret,
                    r.cum_regret
                ));
            }
        }
    }
    atomic_write(path, out.as_bytes())
}

pub fn write_curves_csv(path: &Path, data: &ExperimentData) -> Result<()> {
    let mut out = String::new();
    out.push_str(CURVES_HEADER);
    out.push('\n');
    for curve in &data.curves {
        for t in 0..curve.median.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                curve.policy,
                t + 1,
                curve.q05[t],
                curve.median[t],
                curve.q95[t]
            ));
        }
    }
    atomic_write(path, out.as_bytes())
}

pub fn write_summary_json(path: &Path, data: &ExperimentData) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&data.summary)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = String::new();
    out.push_str(
        "axis,value,policy,final_regret_mean,final_regret_median,final_regret_q05,final_regret_q95,mean_over_sqrt_d\n",
    );
    for r in rows {
        let scaled = r
            .mean_over_sqrt_d
            .map(|v| v.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.axis,
            r.value,
            r.policy,
            r.final_regret_mean,
            r.final_regret_median,
            r.final_regret_q05,
            r.final_regret_q95,
            scaled
        ));
    }
    atomic_write(path, out.as_bytes())
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

/// One parsed row of `rounds.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundsRow {
    pub rep: usize,
    pub t: usize,
    pub policy: String,
    pub action: Action,
    pub true_class: u8,
    pub expected_regret: f64,
    pub cum_regret: f64,
}

/// Parses a `rounds.csv` produced by [`write_rounds_csv`]; used to verify
/// that summaries are recomputable from the persisted artifact alone.
pub fn parse_rounds_csv(text: &str) -> Result<Vec<RoundsRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == ROUNDS_HEADER => {}
        other => {
            return Err(Error::InvalidConfig(vec![format!(
                "rounds.csv: unexpected header {other:?}"
            )]))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 7 {
            return Err(Error::InvalidConfig(vec![format!(
                "rounds.csv line {}: expected 7 fields, got {}",
                i + 2,
                parts.len()
            )]));
        }
        let field = |j: usize| -> &str { parts[j] };
        rows.push(RoundsRow {
            rep: parse(field(0), i, "rep")?,
            t: parse(field(1), i, "t")?,
            policy: field(2).to_string(),
            action: Action::from_index(parse::<usize>(field(3), i, "action")?),
            true_class: parse(field(4), i, "true_class")?,
            expected_regret: parse(field(5), i, "expected_regret")?,
            cum_regret: parse(field(6), i, "cum_regret")?,
        });
    }
    Ok(rows)
}

fn parse<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.parse().map_err(|_| {
        Error::InvalidConfig(vec![format!(
            "rounds.csv line {}: bad {what} value {s:?}",
            line + 2
        )])
    })
}
