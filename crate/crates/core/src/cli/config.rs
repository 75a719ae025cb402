//! Experiment configuration: TOML sections with flat keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::complexity::Mode;
use crate::error::{Error, Result};
use crate::estimator::{RankRule, Solver, MultiStepOptions, OracleOptions};
use crate::harmonic::MATVEC_MAX_ORDER;
use crate::models::LinkSpec;

/// Largest degree the Monte Carlo planner explores.
pub const PLANNER_MAX_DEGREE: usize = 8;
/// Largest degree for prescribed (symbolic) scalings.
pub const SYMBOLIC_MAX_DEGREE: usize = 64;

/// A single value or a list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    One(usize),
    Many(Vec<usize>),
}

impl Grid {
    pub fn values(&self) -> Vec<usize> {
        match self {
            Grid::One(v) => vec![*v],
            Grid::Many(v) => v.clone(),
        }
    }

    fn single(&self, name: &str) -> Result<usize> {
        match self.values().as_slice() {
            [v] => Ok(*v),
            _ => Err(Error::Config(format!("`data.{name}` must be a single value for this command"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub d: Grid,
    pub n: Grid,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub binary: bool,
}

fn one() -> usize {
    1
}

/// `"auto"`, `"adaptive"` or an explicit `[[t, s0], ...]` per step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RanksSetting {
    Named(String),
    Fixed(Vec<[usize; 2]>),
}

impl Default for RanksSetting {
    fn default() -> Self {
        RanksSetting::Named("auto".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    /// Degree per step; planned from the link when absent.
    pub degrees: Option<Vec<usize>>,
    /// `"oracle"` or `"table:<path>"`.
    pub kernel: String,
    pub ranks: RanksSetting,
    pub tolerance: f64,
    pub solver: Solver,
    pub n_cal: usize,
    pub n_bins: usize,
    pub bound: f64,
    pub n_rot: usize,
    /// Monte Carlo samples for population ranks and default degrees.
    pub mc: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        let o = OracleOptions::default();
        EstimatorConfig {
            degrees: None,
            kernel: "oracle".into(),
            ranks: RanksSetting::default(),
            tolerance: 1e-6,
            solver: Solver::Auto,
            n_cal: o.n_cal,
            n_bins: o.n_bins,
            bound: o.bound,
            n_rot: MultiStepOptions::default().n_rot,
            mc: 40_000,
        }
    }
}

impl EstimatorConfig {
    pub fn oracle_options(&self) -> OracleOptions {
        OracleOptions { n_cal: self.n_cal, n_bins: self.n_bins, bound: self.bound, ..OracleOptions::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    Both,
    Sample,
    Query,
}

impl PlanMode {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            PlanMode::Both => vec![Mode::Sample, Mode::Query],
            PlanMode::Sample => vec![Mode::Sample],
            PlanMode::Query => vec![Mode::Query],
        }
    }
}

/// Prescribed coefficient scalings for the two-parity mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolicConfig {
    pub k0: usize,
    pub k1: usize,
    pub k2: usize,
    /// `p = d^{-p_exponent}`.
    pub p_exponent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub max_degree: usize,
    pub mode: PlanMode,
    pub mc_budget: usize,
    pub n_bins: Option<usize>,
    pub symbolic: Option<SymbolicConfig>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig { max_degree: 4, mode: PlanMode::Both, mc_budget: 40_000, n_bins: None, symbolic: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    /// When set, `n = round(ratio * d)` replaces `data.n`.
    pub ratios: Option<Vec<f64>>,
    pub threshold: f64,
    pub budget_seconds: Option<f64>,
    /// Skip grid points already present in an existing CSV.
    pub resume: bool,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig { ratios: None, threshold: 0.3, budget_seconds: None, resume: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub link: LinkSpec,
    pub data: DataConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub scaling: ScalingConfig,
}

/// Kernel source for the estimator.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelChoice {
    Oracle,
    Table(PathBuf),
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse JSON: either a bare config or a report embedding one under `config`.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(inner) = v.get_mut("config").filter(|c| c.is_object()) {
            v = inner.take();
        }
        let cfg: ExperimentConfig = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load TOML, or JSON when the file starts with `{` (so reports can be replayed).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let parsed = if text.trim_start().starts_with('{') { Self::from_json(&text) } else { Self::from_toml(&text) };
        parsed.map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn d_values(&self) -> Vec<usize> {
        self.data.d.values()
    }

    pub fn single_d(&self) -> Result<usize> {
        self.data.d.single("d")
    }

    pub fn single_n(&self) -> Result<usize> {
        self.data.n.single("n")
    }

    pub fn kernel_choice(&self) -> Result<KernelChoice> {
        let k = self.estimator.kernel.trim();
        if k == "oracle" {
            Ok(KernelChoice::Oracle)
        } else if let Some(p) = k.strip_prefix("table:") {
            Ok(KernelChoice::Table(PathBuf::from(p)))
        } else {
            Err(Error::Config(format!("`estimator.kernel` must be \"oracle\" or \"table:<path>\", got {k:?}")))
        }
    }

    /// Explicit rank rules, or `None` for `"auto"`.
    pub fn rank_rules(&self, steps: usize) -> Result<Option<Vec<RankRule>>> {
        match &self.estimator.ranks {
            RanksSetting::Named(s) if s == "auto" => Ok(None),
            RanksSetting::Named(s) if s == "adaptive" => Ok(Some(vec![RankRule::Adaptive; steps])),
            RanksSetting::Named(s) => {
                Err(Error::Config(format!("`estimator.ranks` must be \"auto\", \"adaptive\" or a list, got {s:?}")))
            }
            RanksSetting::Fixed(v) => {
                if v.len() != steps {
                    return Err(Error::Config(format!("`estimator.ranks` has {} entries for {steps} steps", v.len())));
                }
                Ok(Some(v.iter().map(|&[t, s0]| RankRule::Fixed { t, s0 }).collect()))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.link.validate().map_err(|e| Error::Config(format!("`link`: {e}")))?;
        let s = self.link.s();
        let ds = self.data.d.values();
        let ns = self.data.n.values();
        if ds.is_empty() || ns.is_empty() {
            return bad("`data.d` and `data.n` must be nonempty".into());
        }
        if let Some(&d) = ds.iter().find(|&&d| d <= s || d < 3) {
            return bad(format!("`data.d` = {d} must be at least 3 and exceed the link rank s = {s}"));
        }
        if let Some(&n) = ns.iter().find(|&&n| n < 2) {
            return bad(format!("`data.n` = {n} must be at least 2"));
        }
        if self.data.trials == 0 {
            return bad("`data.trials` must be at least 1".into());
        }
        let e = &self.estimator;
        if let Some(deg) = &e.degrees {
            if deg.is_empty() {
                return bad("`estimator.degrees` must be nonempty".into());
            }
            if deg.len() > s {
                return bad(format!("`estimator.degrees` has {} steps but the link has rank s = {s}", deg.len()));
            }
            if let Some(&l) = deg.iter().find(|&&l| l == 0 || l > MATVEC_MAX_ORDER) {
                return bad(format!("`estimator.degrees`: degree {l} outside 1..={MATVEC_MAX_ORDER}"));
            }
            self.rank_rules(deg.len())?;
            if let RanksSetting::Fixed(v) = &e.ranks {
                let total: usize = v.iter().map(|r| r[1]).sum();
                if total > s || v.iter().any(|r| r[0] == 0 || r[1] == 0) {
                    return bad(format!("`estimator.ranks`: need t, s0 >= 1 and total s0 <= s = {s}"));
                }
            }
        } else if let RanksSetting::Fixed(_) = e.ranks {
            return bad("`estimator.ranks` lists need explicit `estimator.degrees`".into());
        }
        self.kernel_choice()?;
        if !(e.tolerance > 0.0) {
            return bad("`estimator.tolerance` must be positive".into());
        }
        if e.n_cal < 100 || e.n_bins == 0 || !(e.bound > 0.0) || e.mc < 100 {
            return bad("`estimator`: need n_cal >= 100, mc >= 100, n_bins >= 1, bound > 0".into());
        }
        let p = &self.planner;
        let cap = if p.symbolic.is_some() { SYMBOLIC_MAX_DEGREE } else { PLANNER_MAX_DEGREE };
        if p.max_degree == 0 || p.max_degree > cap {
            return bad(format!("`planner.max_degree` must lie in 1..={cap}"));
        }
        if p.mc_budget < 100 {
            return bad("`planner.mc_budget` must be at least 100".into());
        }
        let sc = &self.scaling;
        if !(sc.threshold > 0.0 && sc.threshold <= 1.0) {
            return bad("`scaling.threshold` must lie in (0, 1]".into());
        }
        if let Some(r) = &sc.ratios {
            if r.is_empty() || r.iter().any(|x| !(*x > 0.0)) {
                return bad("`scaling.ratios` must be a nonempty list of positive numbers".into());
            }
        }
        Ok(())
    }
}
