//! `generate`, `estimate` and `complexity`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{ExperimentConfig, KernelChoice, RanksSetting, PLANNER_MAX_DEGREE};
use super::report::{EnvironmentStamp, RunReport, TrialRecord};
use super::RunContext;
use crate::complexity::{
    leap_plan, mixture_components, planted_path, symbolic_plan, LeapPlan, Mode, SymbolicPlan, XiOptions,
};
use crate::error::{Error, Result};
use crate::estimator::{multi_step, oracle_kernel_reduced, Kernel, MultiStepOptions, MultiStepOutcome, RankRule};
use crate::models::{io, random_frame, sample_mim, Dataset, PlantedReduction};
use crate::rng::{self, tag};
use crate::tensor_core::{frame_distance, Frame};

pub(crate) const BINNING_CAVEAT: &str =
    "labels are binned for kernel calibration; the discretisation bias shrinks as estimator.n_bins grows";

pub struct GenerateOutput {
    pub dataset: PathBuf,
    pub sidecar: PathBuf,
    pub n: usize,
}

pub(crate) fn planted_frame(d: usize, s: usize, seed: u64) -> Result<Frame> {
    random_frame(d, s, &mut rng::stream(seed, &[tag::FRAME]))
}

/// Sample `n` points of the configured model with a fresh planted frame.
pub fn cmd_generate(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<GenerateOutput> {
    let d = cfg.single_d()?;
    let n = cfg.single_n()?;
    let w = planted_frame(d, cfg.link.s(), ctx.seed)?;
    let data = sample_mim(&cfg.link, &w, n, ctx.seed)?;
    let dataset = ctx.out.join(if cfg.data.binary { "dataset.smimb" } else { "dataset.smim" });
    io::write_dataset(&dataset, &data, cfg.data.binary)?;
    let sidecar = io::sidecar_path(&dataset);
    io::write_frame(&sidecar, &w, "planted frame; for evaluation only")?;
    Ok(GenerateOutput { dataset, sidecar, n })
}

fn xi_options(n_mc: usize, n_bins: Option<usize>) -> XiOptions {
    XiOptions { n_mc, n_bins, ..XiOptions::default() }
}

/// Degrees, rank rules and kernels for every step at dimension `d`.
#[derive(Clone, Debug)]
pub struct ResolvedSteps {
    pub degrees: Vec<usize>,
    pub ranks: Vec<RankRule>,
    pub kernels: Vec<Kernel>,
}

/// Fill in planned degrees, population ranks and kernels.
///
/// Everything here depends on the master seed and `d` only, so scaling trials
/// at one `d` share it.
pub fn resolve_steps(cfg: &ExperimentConfig, d: usize, seed: u64) -> Result<ResolvedSteps> {
    let est = &cfg.estimator;
    let mc = xi_options(est.mc, None);
    let degrees = match &est.degrees {
        Some(v) => v.clone(),
        None => {
            let plan = leap_plan(&cfg.link, d, cfg.planner.max_degree, Mode::Sample, &mc, seed)?;
            if plan.stalled {
                return Err(Error::Stall("no degree up to planner.max_degree carries signal".into()));
            }
            plan.steps.iter().map(|s| s.degree).collect()
        }
    };
    let explicit = cfg.rank_rules(degrees.len())?;
    let kernel_choice = cfg.kernel_choice()?;
    let need_path = explicit.is_none() || (kernel_choice == KernelChoice::Oracle && degrees.len() > 1);
    let path = if need_path { Some(planted_path(&cfg.link, d, &degrees, &mc, seed)?) } else { None };
    let ranks = match explicit {
        Some(r) => r,
        None => path
            .as_ref()
            .expect("path computed")
            .iter()
            .map(|p| {
                if p.entry.t > 0 && p.entry.s0 > 0 {
                    RankRule::Fixed { t: p.entry.t, s0: p.entry.s0 }
                } else {
                    RankRule::Adaptive
                }
            })
            .collect(),
    };
    let kernels = match kernel_choice {
        KernelChoice::Oracle => {
            let opts = est.oracle_options();
            degrees
                .iter()
                .enumerate()
                .map(|(k, &l)| {
                    let recovered = match &path {
                        Some(p) => p[k].recovered.clone(),
                        None => nalgebra::DMatrix::zeros(cfg.link.s(), 0),
                    };
                    let red = PlantedReduction::new(&cfg.link, d, &recovered)?;
                    oracle_kernel_reduced(&red, l, &opts, rng::derive(seed, &[tag::CALIBRATION, k as u64]))
                })
                .collect::<Result<Vec<_>>>()?
        }
        KernelChoice::Table(p) => {
            let text = std::fs::read_to_string(&p)?;
            let k = Kernel::from_json(&text)?;
            vec![k; degrees.len()]
        }
    };
    Ok(ResolvedSteps { degrees, ranks, kernels })
}

/// Config with planned degrees and ranks written back.
pub(crate) fn resolved_config(cfg: &ExperimentConfig, seed: u64, steps: &ResolvedSteps) -> ExperimentConfig {
    let mut out = cfg.clone();
    out.seed = seed;
    out.estimator.degrees = Some(steps.degrees.clone());
    let fixed: Option<Vec<[usize; 2]>> = steps
        .ranks
        .iter()
        .map(|r| match r {
            RankRule::Fixed { t, s0 } => Some([*t, *s0]),
            RankRule::Adaptive => None,
        })
        .collect();
    out.estimator.ranks = match fixed {
        Some(v) => RanksSetting::Fixed(v),
        None if steps.ranks.iter().all(|r| *r == RankRule::Adaptive) => RanksSetting::Named("adaptive".into()),
        None => cfg.estimator.ranks.clone(),
    };
    out
}

/// Split into one batch per step and run the recovery.
pub(crate) fn recover(data: &Dataset, cfg: &ExperimentConfig, steps: &ResolvedSteps, seed: u64) -> Result<MultiStepOutcome> {
    let batches = if steps.degrees.len() == 1 { vec![data.clone()] } else { data.split(steps.degrees.len())? };
    let opts = MultiStepOptions {
        n_rot: cfg.estimator.n_rot,
        seed,
        solver: cfg.estimator.solver,
        tol: Some(cfg.estimator.tolerance),
    };
    multi_step(&batches, &steps.degrees, &steps.kernels, &steps.ranks, &opts)
}

pub(crate) fn trial_record(seed: u64, outcome: MultiStepOutcome, truth: Option<&Frame>, wall_ms: f64) -> Result<TrialRecord> {
    let frame_distance = match truth {
        Some(w) => Some(frame_distance(&outcome.frame, w)?),
        None => None,
    };
    let steps = &outcome.trace.steps;
    Ok(TrialRecord {
        seed,
        frame_distance,
        recovered_rank: outcome.frame.rank(),
        eigen_profile: steps.iter().map(|s| s.diagnostics.mhat_eigenvalues.clone()).collect(),
        iterations: steps.iter().map(|s| s.diagnostics.iterations).sum(),
        stalled: outcome.stalled.clone(),
        trace: outcome.trace,
        wall_ms,
    })
}

/// Recover a frame from a dataset file; writes `frame.txt` and `report.json`.
///
/// A stalled run still writes both files; the stall is reported in the record.
pub fn cmd_estimate(cfg: &ExperimentConfig, ctx: &RunContext, dataset: &Path) -> Result<RunReport> {
    let data = io::read_dataset(dataset)?;
    let d = data.dim();
    if !cfg.d_values().contains(&d) {
        return Err(Error::Config(format!("dimension mismatch: dataset has d = {d}, config `data.d` = {:?}", cfg.d_values())));
    }
    if data.label_arity() != cfg.link.label_arity() {
        return Err(Error::Config(format!(
            "label arity mismatch: dataset has {}, link expects {}",
            data.label_arity(),
            cfg.link.label_arity()
        )));
    }
    let steps = resolve_steps(cfg, d, ctx.seed)?;
    if data.len() < 2 * steps.degrees.len() {
        return Err(Error::Config(format!("{} samples cannot feed {} steps", data.len(), steps.degrees.len())));
    }
    let sidecar = io::sidecar_path(dataset);
    let truth = if sidecar.exists() { Some(io::read_frame(&sidecar)?) } else { None };
    let start = Instant::now();
    let outcome = recover(&data, cfg, &steps, ctx.seed)?;
    let wall = start.elapsed().as_secs_f64() * 1e3;
    io::write_frame(&ctx.out.join("frame.txt"), &outcome.frame, "recovered frame")?;
    let record = trial_record(ctx.seed, outcome, truth.as_ref(), wall)?;
    let mut caveats = Vec::new();
    if cfg.kernel_choice()? == KernelChoice::Oracle {
        caveats.push(BINNING_CAVEAT.to_string());
    }
    let report = RunReport::new("estimate", resolved_config(cfg, ctx.seed, &steps), caveats, vec![record]);
    std::fs::write(ctx.out.join("report.json"), report.to_json())?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum PlanEntry {
    Monte(LeapPlan),
    Symbolic(SymbolicPlan),
}

#[derive(Clone, Debug, Serialize)]
pub struct ComplexityReport {
    pub command: String,
    pub environment: EnvironmentStamp,
    pub config: ExperimentConfig,
    pub symbolic: bool,
    pub plans: Vec<PlanEntry>,
    pub warnings: Vec<String>,
    pub caveats: Vec<String>,
    #[serde(skip)]
    pub table: String,
}

fn fmt_exp(e: Option<f64>) -> String {
    e.map_or("inf".into(), |v| format!("{v:.3}"))
}

fn plan_table(plans: &[(Mode, Vec<usize>, Vec<f64>, Option<f64>, bool)]) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "{:<8} {:<14} {:<28} {:>10}  verdict", "mode", "degrees", "step exponents", "total");
    for (mode, degrees, exps, total, stalled) in plans {
        let mode = match mode {
            Mode::Sample => "sample",
            Mode::Query => "query",
        };
        let degs: Vec<String> = degrees.iter().map(|l| l.to_string()).collect();
        let es: Vec<String> = exps.iter().map(|e| format!("{e:.3}")).collect();
        let verdict = if *stalled { "infinite leap" } else { "finite" };
        let _ = writeln!(
            t,
            "{:<8} {:<14} {:<28} {:>10}  {verdict}",
            mode,
            format!("({})", degs.join(",")),
            es.join(" "),
            fmt_exp(*total)
        );
    }
    t
}

/// Plan degrees in the configured modes; writes `complexity.json`.
pub fn cmd_complexity(cfg: &ExperimentConfig, ctx: &RunContext, symbolic: bool) -> Result<ComplexityReport> {
    let p = &cfg.planner;
    let mut warnings = Vec::new();
    let mut plans = Vec::new();
    let mut rows = Vec::new();
    if symbolic {
        let sym = p
            .symbolic
            .as_ref()
            .ok_or_else(|| Error::Config("`--symbolic` needs a `[planner.symbolic]` section".into()))?;
        let comps = mixture_components(sym.k0, sym.k1, sym.k2, sym.p_exponent)?;
        for mode in p.mode.modes() {
            let plan = symbolic_plan(&comps, p.max_degree, mode);
            let exps = plan.steps.iter().map(|s| s.exponent).collect();
            rows.push((mode, plan.degrees(), exps, plan.total_exponent, plan.stalled));
            plans.push(PlanEntry::Symbolic(plan));
        }
    } else {
        if p.max_degree > PLANNER_MAX_DEGREE {
            return Err(Error::Config(format!("`planner.max_degree` must be at most {PLANNER_MAX_DEGREE} without `--symbolic`")));
        }
        let d = cfg.single_d()?;
        let opts = xi_options(p.mc_budget, p.n_bins);
        for mode in p.mode.modes() {
            let plan = leap_plan(&cfg.link, d, p.max_degree, mode, &opts, ctx.seed)?;
            for (k, step) in plan.steps.iter().enumerate() {
                let best = step.spectrum.entries.iter().max_by(|a, b| a.xi_norm_sq.total_cmp(&b.xi_norm_sq));
                if let Some(b) = best {
                    if b.xi_norm_sq < 3.0 * b.std_error {
                        warnings.push(format!(
                            "step {}: Monte Carlo error dominates every degree up to {}; raise planner.mc_budget",
                            k + 1,
                            p.max_degree
                        ));
                    }
                }
            }
            let exps = plan.steps.iter().map(|s| s.exponent).collect();
            rows.push((mode, plan.steps.iter().map(|s| s.degree).collect(), exps, plan.total_exponent, plan.stalled));
            plans.push(PlanEntry::Monte(plan));
        }
    }
    warnings.dedup();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let mut config = cfg.clone();
    config.seed = ctx.seed;
    let caveats = if symbolic {
        vec![]
    } else {
        vec![
            "costs use the squared coefficient norm as a proxy for operator and Frobenius norms; exponents are meaningful, constants are not".into(),
            BINNING_CAVEAT.into(),
        ]
    };
    let report = ComplexityReport {
        command: "complexity".into(),
        environment: EnvironmentStamp::current(),
        config,
        symbolic,
        plans,
        warnings,
        caveats,
        table: plan_table(&rows),
    };
    std::fs::write(ctx.out.join("complexity.json"), serde_json::to_string_pretty(&report).expect("serialises"))?;
    Ok(report)
}
