//! Sweeps over (policy, horizon) cells and CSV emission.
//!
//! Every cell reuses the same per-repetition seeds, so policies and horizons
//! are compared on identical channel, noise and offset realizations.
//!
//! Files written to the output directory:
//!
//! | file | columns |
//! |------|---------|
//! | `{name}-{policy}-h{H}.csv` | [`RESULT_COLUMNS`] |
//! | `summary.csv` | [`SUMMARY_COLUMNS`] |
//! | `plot_mse.csv`, `plot_aoi.csv` | [`PLOT_COLUMNS`] |
//!
//! Sub-systems are numbered from 1; aggregate rows use `network`. Summary
//! statistics skip diverged repetitions; `ci_half` is `NaN` with fewer than
//! two usable runs.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentSpec;
use crate::error::Result;
use crate::scheduler::Policy;
use crate::sim::{aggregate, run, MetricsAccumulator, SimConfig};

pub const RESULT_COLUMNS: [&str; 11] = [
    "experiment",
    "policy",
    "horizon",
    "repetition",
    "subsystem",
    "mse",
    "aoi_mean",
    "tx_count",
    "success_count",
    "nodes_mean",
    "diverged",
];

pub const SUMMARY_COLUMNS: [&str; 12] = [
    "experiment",
    "policy",
    "horizon",
    "subsystem",
    "runs",
    "diverged",
    "mse_mean",
    "mse_ci_half",
    "aoi_mean",
    "aoi_ci_half",
    "nodes_mean",
    "nodes_ci_half",
];

pub const PLOT_COLUMNS: [&str; 5] = ["policy", "horizon", "series", "mean", "ci_half"];

pub const NETWORK: &str = "network";

/// One repetition of one sub-system (or the network) in one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub policy: Policy,
    pub horizon: usize,
    pub repetition: u64,
    pub subsystem: String,
    pub mse: f64,
    pub aoi_mean: f64,
    pub tx_count: u64,
    pub success_count: u64,
    pub nodes_mean: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub policy: Policy,
    pub horizon: usize,
    pub subsystem: String,
    pub runs: usize,
    pub diverged: usize,
    pub mse_mean: f64,
    pub mse_ci_half: f64,
    pub aoi_mean: f64,
    pub aoi_ci_half: f64,
    pub nodes_mean: f64,
    pub nodes_ci_half: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotRow {
    pub policy: Policy,
    pub horizon: usize,
    pub series: String,
    pub mean: f64,
    pub ci_half: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutput {
    /// Grouped by cell in (policy, horizon) config order, then repetition.
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

/// The (policy, horizon) cells of a sweep, in output order.
pub fn cells(spec: &ExperimentSpec) -> Vec<(Policy, usize)> {
    spec.policies
        .iter()
        .flat_map(|&p| spec.horizons.iter().map(move |&h| (p, h)))
        .collect()
}

fn cell_config(spec: &ExperimentSpec, policy: Policy, horizon: usize) -> SimConfig {
    SimConfig {
        policy,
        horizon,
        ..spec.base.clone()
    }
}

fn rows_for(
    spec: &ExperimentSpec,
    policy: Policy,
    horizon: usize,
    rep: u64,
    outcome: Result<MetricsAccumulator>,
) -> Vec<ResultRow> {
    let n = spec.base.subsystems.len();
    let row = |subsystem: String| ResultRow {
        experiment: spec.name.clone(),
        policy,
        horizon,
        repetition: rep,
        subsystem,
        mse: f64::NAN,
        aoi_mean: f64::NAN,
        tx_count: 0,
        success_count: 0,
        nodes_mean: f64::NAN,
        diverged: true,
    };
    let labels = (1..=n).map(|i| i.to_string()).chain([NETWORK.to_string()]);
    match outcome {
        Err(_) => labels.map(row).collect(),
        Ok(m) => {
            let nodes = m.nodes_mean();
            let diverged = m.diverged();
            let mut out: Vec<ResultRow> = (0..n)
                .map(|i| ResultRow {
                    mse: m.mse(i),
                    aoi_mean: m.aoi(i),
                    tx_count: m.subsystems[i].transmissions,
                    success_count: m.subsystems[i].successes,
                    nodes_mean: nodes,
                    diverged,
                    ..row((i + 1).to_string())
                })
                .collect();
            out.push(ResultRow {
                mse: m.network_mse(),
                aoi_mean: m.network_aoi(),
                tx_count: m.transmissions(),
                success_count: m.successes(),
                nodes_mean: nodes,
                diverged,
                ..row(NETWORK.to_string())
            });
            out
        }
    }
}

fn estimate(samples: &[f64]) -> (f64, f64) {
    match samples.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (samples[0], f64::NAN),
        _ => {
            let e = aggregate(samples).expect("two or more samples");
            (e.mean, e.ci_half)
        }
    }
}

/// Means and CI half-widths per (policy, horizon, sub-system).
pub fn summarize_rows(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: Vec<(&ResultRow, Vec<&ResultRow>)> = Vec::new();
    for r in rows {
        let key = |g: &ResultRow| (g.policy, g.horizon, g.subsystem.clone());
        match groups.iter_mut().find(|(head, _)| key(head) == key(r)) {
            Some((_, members)) => members.push(r),
            None => groups.push((r, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(head, members)| {
            let ok: Vec<&&ResultRow> = members.iter().filter(|r| !r.diverged).collect();
            let column =
                |f: fn(&ResultRow) -> f64| estimate(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (mse_mean, mse_ci_half) = column(|r| r.mse);
            let (aoi_mean, aoi_ci_half) = column(|r| r.aoi_mean);
            let (nodes_mean, nodes_ci_half) = column(|r| r.nodes_mean);
            SummaryRow {
                experiment: head.experiment.clone(),
                policy: head.policy,
                horizon: head.horizon,
                subsystem: head.subsystem.clone(),
                runs: members.len(),
                diverged: members.len() - ok.len(),
                mse_mean,
                mse_ci_half,
                aoi_mean,
                aoi_ci_half,
                nodes_mean,
                nodes_ci_half,
            }
        })
        .collect()
}

/// Long-format plot series: `(MSE_i, MSE_avg)` and `(Δ_i, Δ_avg)`.
pub fn plot_data(summary: &[SummaryRow]) -> (Vec<PlotRow>, Vec<PlotRow>) {
    let series = |prefix: &str, s: &SummaryRow| {
        if s.subsystem == NETWORK {
            format!("{prefix}_avg")
        } else {
            format!("{prefix}_{}", s.subsystem)
        }
    };
    let mse = summary
        .iter()
        .map(|s| PlotRow {
            policy: s.policy,
            horizon: s.horizon,
            series: series("MSE", s),
            mean: s.mse_mean,
            ci_half: s.mse_ci_half,
        })
        .collect();
    let aoi = summary
        .iter()
        .map(|s| PlotRow {
            policy: s.policy,
            horizon: s.horizon,
            series: series("Δ", s),
            mean: s.aoi_mean,
            ci_half: s.aoi_ci_half,
        })
        .collect();
    (mse, aoi)
}

/// Runs every (policy, horizon, repetition) job without writing files.
///
/// `threads = None` uses rayon's default pool size.
pub fn execute(spec: &ExperimentSpec, threads: Option<usize>) -> Result<SweepOutput> {
    spec.base.validate()?;
    let jobs: Vec<(Policy, usize, u64)> = cells(spec)
        .into_iter()
        .flat_map(|(p, h)| (0..spec.base.repetitions).map(move |r| (p, h, r)))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|&(p, h, rep)| rows_for(spec, p, h, rep, run(&cell_config(spec, p, h), rep)))
            .collect::<Vec<_>>()
    };
    let per_job = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| crate::error::invalid("threads", e.to_string()))?
            .install(work),
        None => work(),
    };
    let rows: Vec<ResultRow> = per_job.into_iter().flatten().collect();
    let summary = summarize_rows(&rows);
    Ok(SweepOutput { rows, summary })
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes per-cell result files, `summary.csv` and the plot series into `dir`.
pub fn write_outputs(spec: &ExperimentSpec, output: &SweepOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (p, h) in cells(spec) {
        let rows: Vec<&ResultRow> = output
            .rows
            .iter()
            .filter(|r| r.policy == p && r.horizon == h)
            .collect();
        let file = dir.join(format!("{}-{}-h{}.csv", spec.name, p.id(), h));
        write_csv(&file, &RESULT_COLUMNS, &rows)?;
    }
    write_csv(&dir.join("summary.csv"), &SUMMARY_COLUMNS, &output.summary)?;
    let (mse, aoi) = plot_data(&output.summary);
    write_csv(&dir.join("plot_mse.csv"), &PLOT_COLUMNS, &mse)?;
    write_csv(&dir.join("plot_aoi.csv"), &PLOT_COLUMNS, &aoi)?;
    Ok(())
}

/// [`execute`] followed by [`write_outputs`] into `spec.out_dir`.
pub fn run_sweep(spec: &ExperimentSpec, threads: Option<usize>) -> Result<SweepOutput> {
    let output = execute(spec, threads)?;
    write_outputs(spec, &output, &spec.out_dir)?;
    Ok(output)
}
