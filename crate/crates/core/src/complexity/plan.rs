//! Degree selection and greedy leap plans from Monte Carlo spectra.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::xi::{estimate_xi_spectrum_reduced, XiEntry, XiOptions};
use crate::error::{invalid, Result};
use crate::linalg;
use crate::models::{LinkSpec, PlantedReduction};
use crate::rng::{self, tag};

/// Whether costs count samples (`d^{l/2}`) or runtime (`d^l`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Sample,
    Query,
}

impl Mode {
    /// Exponent of `d` contributed by the degree alone.
    pub fn degree_exponent(self, l: usize) -> f64 {
        match self {
            Mode::Sample => l as f64 / 2.0,
            Mode::Query => l as f64,
        }
    }
}

/// Spectra at degrees `1..=L` for one conditioning frame.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XiSpectrum {
    /// Rank of the frame conditioned on.
    pub conditioned_rank: usize,
    pub entries: Vec<XiEntry>,
}

/// Cheapest degree under a mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Alignment {
    pub degree: usize,
    /// `d^{l/2} / ||xi||^2` or `d^l / ||xi||^2`.
    pub cost: f64,
    /// `log_d` of the cost.
    pub exponent: f64,
}

/// Minimise the predicted cost over degrees with signal; ties go to the smaller degree.
pub fn align_complexity(spectrum: &XiSpectrum, d: usize, mode: Mode) -> Option<Alignment> {
    let ln_d = (d as f64).ln();
    let mut best: Option<Alignment> = None;
    let mut entries: Vec<&XiEntry> = spectrum.entries.iter().filter(|e| e.degree >= 1 && e.has_signal()).collect();
    entries.sort_by_key(|e| e.degree);
    for e in entries {
        let exponent = mode.degree_exponent(e.degree) - e.xi_norm_sq.ln() / ln_d;
        let cand = Alignment { degree: e.degree, cost: (exponent * ln_d).exp(), exponent };
        if best.map_or(true, |b| cand.exponent < b.exponent - 1e-12) {
            best = Some(cand);
        }
    }
    best
}

/// One step of a [`LeapPlan`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanStep {
    pub degree: usize,
    pub cost: f64,
    pub exponent: f64,
    pub rank_increment: usize,
    /// Unfolding rank for the chosen degree.
    pub t: usize,
    pub spectrum: XiSpectrum,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeapPlan {
    pub mode: Mode,
    pub steps: Vec<PlanStep>,
    /// Largest step cost; `None` when the plan stalled.
    pub total_cost: Option<f64>,
    pub total_exponent: Option<f64>,
    /// Query-mode costs carry an extra logarithmic factor.
    pub log_factor: bool,
    pub stalled: bool,
}

/// New recovered block after a step: `orth([R | C X])` in frame coordinates.
fn extend_recovered(red: &PlantedReduction, entry: &XiEntry) -> DMatrix<f64> {
    let x = entry.signal_directions();
    let new = red.residual_basis() * x;
    let r = red.recovered();
    let mut m = DMatrix::zeros(r.nrows(), r.ncols() + new.ncols());
    m.columns_mut(0, r.ncols()).copy_from(r);
    m.columns_mut(r.ncols(), new.ncols()).copy_from(&new);
    linalg::orthonormalize(&m)
}

fn spectrum_at(red: &PlantedReduction, degrees: &[usize], opts: &XiOptions, seed: u64, step: usize) -> Result<XiSpectrum> {
    let entries = degrees
        .iter()
        .map(|&l| estimate_xi_spectrum_reduced(red, l, opts, rng::derive(seed, &[tag::PLAN, step as u64, l as u64])))
        .collect::<Result<_>>()?;
    Ok(XiSpectrum { conditioned_rank: red.recovered().ncols(), entries })
}

/// Greedy plan: at each step pick the cheapest degree for the current reduced
/// model, recover the directions its signal reaches, and recurse.
pub fn leap_plan(link: &LinkSpec, d: usize, max_l: usize, mode: Mode, opts: &XiOptions, seed: u64) -> Result<LeapPlan> {
    if max_l == 0 {
        return Err(invalid("max degree must be at least 1"));
    }
    let s = link.s();
    let degrees: Vec<usize> = (1..=max_l).collect();
    let mut recovered = DMatrix::zeros(s, 0);
    let mut steps = Vec::new();
    let mut stalled = false;
    while recovered.ncols() < s {
        let red = PlantedReduction::new(link, d, &recovered)?;
        let spectrum = spectrum_at(&red, &degrees, opts, seed, steps.len())?;
        let Some(best) = align_complexity(&spectrum, d, mode) else {
            stalled = true;
            break;
        };
        let entry = spectrum.entries.iter().find(|e| e.degree == best.degree).expect("aligned degree");
        let next = extend_recovered(&red, entry);
        let inc = next.ncols() - recovered.ncols();
        let t = entry.t;
        steps.push(PlanStep { degree: best.degree, cost: best.cost, exponent: best.exponent, rank_increment: inc, t, spectrum });
        if inc == 0 {
            stalled = true;
            break;
        }
        recovered = next;
    }
    let (total_cost, total_exponent) = if stalled {
        (None, None)
    } else {
        let c = steps.iter().map(|s| s.cost).fold(0.0, f64::max);
        let e = steps.iter().map(|s| s.exponent).fold(f64::MIN, f64::max);
        (Some(c), Some(e))
    };
    Ok(LeapPlan { mode, steps, total_cost, total_exponent, log_factor: mode == Mode::Query, stalled })
}

/// Population quantities along a given degree sequence.
#[derive(Clone, Debug)]
pub struct PathStep {
    pub degree: usize,
    /// Recovered block (frame coordinates) before this step.
    pub recovered: DMatrix<f64>,
    pub entry: XiEntry,
}

/// Follow `degrees` on the planted model: the block recovered before each
/// step and the spectrum at that step's degree.
pub fn planted_path(link: &LinkSpec, d: usize, degrees: &[usize], opts: &XiOptions, seed: u64) -> Result<Vec<PathStep>> {
    let mut recovered = DMatrix::zeros(link.s(), 0);
    let mut out = Vec::with_capacity(degrees.len());
    for (k, &l) in degrees.iter().enumerate() {
        if recovered.ncols() >= link.s() {
            return Err(invalid(format!("degree list is longer than needed: nothing left to recover at step {}", k + 1)));
        }
        let red = PlantedReduction::new(link, d, &recovered)?;
        let entry = estimate_xi_spectrum_reduced(&red, l, opts, rng::derive(seed, &[tag::PLAN, k as u64, l as u64]))?;
        let next = extend_recovered(&red, &entry);
        out.push(PathStep { degree: l, recovered: recovered.clone(), entry });
        recovered = next;
    }
    Ok(out)
}
