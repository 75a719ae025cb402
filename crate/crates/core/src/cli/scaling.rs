//! Success-rate grids over `(d, n)`.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::commands::{planted_frame, recover, resolve_steps, trial_record, BINNING_CAVEAT};
use super::config::ExperimentConfig;
use super::report::{quantile, RunReport, TrialRecord};
use super::RunContext;
use crate::error::{Error, Result};
use crate::models::sample_mim;
use crate::rng::{self, tag};

pub const SCALING_HEADER: &str = "d,n,trials,success_rate,median_distance,median_wall_ms";
const RESUME_PREFIX: &str = "# resume";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub d: usize,
    pub n: usize,
    pub trials: usize,
    pub success_rate: f64,
    pub median_distance: f64,
    pub median_wall_ms: f64,
}

impl ScalingRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:.3}",
            self.d, self.n, self.trials, self.success_rate, self.median_distance, self.median_wall_ms
        )
    }

    fn parse(line: &str) -> Option<(usize, usize)> {
        let mut it = line.split(',');
        Some((it.next()?.trim().parse().ok()?, it.next()?.trim().parse().ok()?))
    }
}

#[derive(Clone, Debug)]
pub struct ScalingOutput {
    pub rows: Vec<ScalingRow>,
    /// Set when the time budget ran out before the grid finished.
    pub resume_marker: Option<String>,
}

/// Seed of trial `i` at grid point `(d, n)`.
pub fn trial_seed(master: u64, d: usize, n: usize, i: usize) -> u64 {
    rng::derive(master, &[tag::TRIAL, d as u64, n as u64, i as u64])
}

/// One trial: fresh planted frame and dataset from `seed`, then recovery.
pub fn run_trial(
    cfg: &ExperimentConfig,
    steps: &super::ResolvedSteps,
    d: usize,
    n: usize,
    seed: u64,
) -> Result<TrialRecord> {
    let w = planted_frame(d, cfg.link.s(), seed)?;
    let data = sample_mim(&cfg.link, &w, n, seed)?;
    let start = Instant::now();
    let outcome = recover(&data, cfg, steps, seed)?;
    let wall = start.elapsed().as_secs_f64() * 1e3;
    trial_record(seed, outcome, Some(&w), wall)
}

fn grid_ns(cfg: &ExperimentConfig, d: usize) -> Vec<usize> {
    match &cfg.scaling.ratios {
        Some(r) => r.iter().map(|x| ((x * d as f64).round() as usize).max(2)).collect(),
        None => cfg.data.n.values(),
    }
}

fn row(d: usize, n: usize, threshold: f64, trials: &[TrialRecord]) -> ScalingRow {
    let mut dist: Vec<f64> = trials.iter().map(|t| t.frame_distance.unwrap_or(1.0)).collect();
    let mut wall: Vec<f64> = trials.iter().map(|t| t.wall_ms).collect();
    let ok = dist.iter().filter(|&&x| x <= threshold).count();
    dist.sort_by(f64::total_cmp);
    wall.sort_by(f64::total_cmp);
    ScalingRow {
        d,
        n,
        trials: trials.len(),
        success_rate: ok as f64 / trials.len() as f64,
        median_distance: quantile(&dist, 0.5),
        median_wall_ms: quantile(&wall, 0.5),
    }
}

fn read_existing(path: &Path) -> Result<(Vec<String>, BTreeSet<(usize, usize)>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = Vec::new();
    let mut done = BTreeSet::new();
    for line in text.lines().skip(1) {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let key = ScalingRow::parse(line).ok_or_else(|| Error::Format(format!("bad scaling row {line:?}")))?;
        done.insert(key);
        lines.push(line.to_string());
    }
    Ok((lines, done))
}

/// Run the grid; writes `scaling.csv` and `scaling.json`.
///
/// Grid points run in order and trials within a point in parallel. When
/// `scaling.budget_seconds` runs out the CSV ends with a `# resume` marker;
/// rerunning with `scaling.resume = true` skips the finished points.
pub fn cmd_scaling(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<ScalingOutput> {
    let csv_path = ctx.out.join("scaling.csv");
    let (mut lines, done) = if cfg.scaling.resume && csv_path.exists() {
        read_existing(&csv_path)?
    } else {
        (Vec::new(), BTreeSet::new())
    };
    let start = Instant::now();
    let threshold = cfg.scaling.threshold;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut marker = None;
    'grid: for d in cfg.d_values() {
        let mut steps = None;
        for n in grid_ns(cfg, d) {
            if done.contains(&(d, n)) {
                continue;
            }
            if let Some(b) = cfg.scaling.budget_seconds {
                if start.elapsed().as_secs_f64() > b {
                    marker = Some(format!("{RESUME_PREFIX} from d={d} n={n}"));
                    break 'grid;
                }
            }
            if steps.is_none() {
                steps = Some(resolve_steps(cfg, d, ctx.seed)?);
            }
            let st = steps.as_ref().expect("resolved");
            let trials: Vec<TrialRecord> = (0..cfg.data.trials)
                .into_par_iter()
                .map(|i| run_trial(cfg, st, d, n, trial_seed(ctx.seed, d, n, i)))
                .collect::<Result<_>>()?;
            let r = row(d, n, threshold, &trials);
            lines.push(r.csv_line());
            rows.push(r);
            records.extend(trials);
        }
    }
    let mut csv = String::from(SCALING_HEADER);
    csv.push('\n');
    for l in &lines {
        csv.push_str(l);
        csv.push('\n');
    }
    if let Some(m) = &marker {
        csv.push_str(m);
        csv.push('\n');
    }
    std::fs::write(&csv_path, csv)?;
    let mut config = cfg.clone();
    config.seed = ctx.seed;
    let report = RunReport::new("scaling", config, vec![BINNING_CAVEAT.to_string()], records);
    std::fs::write(ctx.out.join("scaling.json"), report.to_json())?;
    Ok(ScalingOutput { rows, resume_marker: marker })
}
