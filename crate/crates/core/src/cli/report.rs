//! JSON run reports.

use serde::Serialize;

use super::ExperimentConfig;
use crate::estimator::RecoveryTrace;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvironmentStamp {
    pub version: String,
    pub build: String,
}

impl EnvironmentStamp {
    pub fn current() -> Self {
        let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
        EnvironmentStamp {
            version: env!("CARGO_PKG_VERSION").to_string(),
            build: format!("{}-{}-{}", std::env::consts::ARCH, std::env::consts::OS, profile),
        }
    }
}

/// One recovery run.
#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame_distance: Option<f64>,
    pub recovered_rank: usize,
    /// Leading `M_hat` eigenvalues per step.
    pub eigen_profile: Vec<Vec<f64>>,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stalled: Option<String>,
    pub trace: RecoveryTrace,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Summaries recomputable from the trial records.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregates {
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame_distance: Option<Quartiles>,
    pub wall_ms: Quartiles,
}

/// Linear-interpolated quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn quartiles(mut v: Vec<f64>) -> Quartiles {
    v.sort_by(f64::total_cmp);
    Quartiles { q1: quantile(&v, 0.25), median: quantile(&v, 0.5), q3: quantile(&v, 0.75) }
}

impl Aggregates {
    pub fn from_trials(trials: &[TrialRecord]) -> Self {
        let dists: Vec<f64> = trials.iter().filter_map(|t| t.frame_distance).collect();
        Aggregates {
            trials: trials.len(),
            frame_distance: (!dists.is_empty()).then(|| quartiles(dists)),
            wall_ms: quartiles(trials.iter().map(|t| t.wall_ms).collect()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub environment: EnvironmentStamp,
    /// Resolved configuration; re-running it reproduces the report.
    pub config: ExperimentConfig,
    pub caveats: Vec<String>,
    pub trials: Vec<TrialRecord>,
    pub aggregates: Aggregates,
}

impl RunReport {
    pub fn new(command: &str, config: ExperimentConfig, caveats: Vec<String>, trials: Vec<TrialRecord>) -> Self {
        let aggregates = Aggregates::from_trials(&trials);
        RunReport { command: command.into(), environment: EnvironmentStamp::current(), config, caveats, trials, aggregates }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}
