//! One-step harmonic tensor unfolding.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kernel::Kernel;
use super::mhat::MhatOperator;
use super::power::{subspace_iteration, PowerOptions};
use crate::error::{invalid, Result};
use crate::linalg;
use crate::models::Dataset;
use crate::rng::{self, tag};
use crate::tensor_core::Frame;

/// Largest `d^a` for which `Solver::Auto` assembles `M_hat` densely.
pub const DENSE_SOLVER_MAX: usize = 512;

/// Eigenvalues computed under `RankRule::Adaptive` with the iterative solver.
const ADAPTIVE_BLOCK: usize = 16;

/// How `t` and `s0` are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankRule {
    Fixed { t: usize, s0: usize },
    /// Keep eigenvalues above `median + 4 MAD` of the computed spectrum.
    Adaptive,
}

/// Eigen-solver for the top of `M_hat`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Dense when `d^a <= DENSE_SOLVER_MAX`, subspace iteration otherwise.
    #[default]
    Auto,
    Dense,
    Subspace,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnfoldConfig {
    pub l: usize,
    pub a: usize,
    pub b: usize,
    pub ranks: RankRule,
    pub power: PowerOptions,
    pub solver: Solver,
    /// Gap `mu_t / mu_{t+1}` reported as satisfied or not.
    pub gap: f64,
    /// Seed for the iterative solver's initial block.
    pub seed: u64,
}

/// Default split: `(1, 0)` for `l = 1`, otherwise `(floor(l/2), ceil(l/2))`.
pub fn default_split(l: usize) -> (usize, usize) {
    if l == 1 {
        (1, 0)
    } else {
        (l / 2, l - l / 2)
    }
}

impl UnfoldConfig {
    pub fn new(l: usize, d: usize, ranks: RankRule) -> Self {
        let (a, b) = default_split(l);
        UnfoldConfig { l, a, b, ranks, power: PowerOptions::for_dim(d), solver: Solver::Auto, gap: 4.0, seed: 0 }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.a + self.b != self.l || self.a == 0 {
            return Err(invalid(format!("split ({}, {}) must have a >= 1 and sum to l = {}", self.a, self.b, self.l)));
        }
        if let RankRule::Fixed { t, s0 } = self.ranks {
            if t == 0 || s0 == 0 || s0 > d {
                return Err(invalid(format!("ranks need 1 <= t and 1 <= s0 <= d, got t={t}, s0={s0}")));
            }
            if t > d.pow(self.a as u32) {
                return Err(invalid(format!("t = {t} exceeds d^a")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OneStepDiagnostics {
    /// Leading eigenvalues of `M_hat`, descending.
    pub mhat_eigenvalues: Vec<f64>,
    /// Leading eigenvalues of the contracted matrix `P`.
    pub p_eigenvalues: Vec<f64>,
    pub t: usize,
    pub s0: usize,
    pub iterations: usize,
    pub converged: bool,
    pub rank_deficient: bool,
    /// Whether `mu_t / mu_{t+1} >= gap`, when `mu_{t+1}` is available.
    pub gap_ok: Option<bool>,
    #[serde(skip)]
    pub wall_ms: f64,
}

#[derive(Clone, Debug)]
pub struct OneStepResult {
    pub frame: Frame,
    pub diagnostics: OneStepDiagnostics,
}

/// Number of values above `median + 4 MAD` (and above a relative floor).
pub fn mad_count(values: &[f64]) -> usize {
    if values.is_empty() {
        return 0;
    }
    let med = |v: &mut Vec<f64>| {
        v.sort_by(|a, b| a.total_cmp(b));
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    };
    let m = med(&mut values.to_vec());
    let mad = med(&mut values.iter().map(|x| (x - m).abs()).collect());
    let top = values.iter().cloned().fold(f64::MIN, f64::max);
    let thr = (m + 4.0 * mad).max(1e-8 * top.abs());
    values.iter().filter(|&&v| v > thr).count()
}

fn truncate(v: &[f64], k: usize) -> Vec<f64> {
    v[..v.len().min(k)].to_vec()
}

/// Recover a rank-`s0` frame from `data` with the kernel-weighted unfolding.
pub fn one_step(data: &Dataset, cfg: &UnfoldConfig, kernel: &Kernel) -> Result<OneStepResult> {
    one_step_with_init(data, cfg, kernel, None)
}

/// [`one_step`] with an explicit initial block for the iterative solver.
pub fn one_step_with_init(
    data: &Dataset,
    cfg: &UnfoldConfig,
    kernel: &Kernel,
    init: Option<&DMatrix<f64>>,
) -> Result<OneStepResult> {
    let start = Instant::now();
    let d = data.dim();
    cfg.validate(d)?;
    let op = MhatOperator::new(data, kernel, cfg.l, cfg.a, cfg.b)?;
    let big_d = op.dim();
    let dense = match cfg.solver {
        Solver::Auto => big_d <= DENSE_SOLVER_MAX && init.is_none(),
        Solver::Dense => true,
        Solver::Subspace => false,
    };
    let (values, vectors, iterations, converged) = if dense {
        let (vals, vecs) = linalg::sym_eigen_desc(&op.to_dense());
        (vals, vecs, 0, true)
    } else {
        let k = match cfg.ranks {
            RankRule::Fixed { t, .. } => t,
            RankRule::Adaptive => ADAPTIVE_BLOCK.min(big_d),
        };
        let mut power = cfg.power.clone();
        power.shift = op.psd_shift();
        let mut r = rng::stream(cfg.seed, &[tag::INIT]);
        let res = subspace_iteration(|x| op.apply_block(x), big_d, k, &power, init, &mut r)?;
        if !res.converged {
            log::warn!("subspace iteration stopped after {} iterations without converging", res.iterations);
        }
        (res.values, res.vectors, res.iterations, res.converged)
    };
    let t = match cfg.ranks {
        RankRule::Fixed { t, .. } => t.min(values.len()),
        RankRule::Adaptive => mad_count(&values).max(1),
    };
    let top = values[0].abs().max(f64::MIN_POSITIVE);
    let mut rank_deficient = values[t - 1] <= 1e-12 * top;
    let gap_ok = values.get(t).map(|&next| next <= 0.0 || values[t - 1] / next >= cfg.gap);
    // contract: P = sum_s Mat_{1,a-1}(v_s) Mat_{1,a-1}(v_s)^T
    let cols = big_d / d;
    let mut p = DMatrix::zeros(d, d);
    for s in 0..t {
        let v = vectors.column(s);
        let m = DMatrix::from_row_slice(d, cols, v.as_slice());
        p += &m * m.transpose();
    }
    let (pvals, pvecs) = linalg::sym_eigen_desc(&p);
    let s0 = match cfg.ranks {
        RankRule::Fixed { s0, .. } => s0,
        RankRule::Adaptive => mad_count(&pvals).max(1),
    };
    if pvals[s0 - 1] <= 1e-10 * pvals[0].max(f64::MIN_POSITIVE) {
        rank_deficient = true;
    }
    if rank_deficient {
        log::warn!("one-step unfolding: requested ranks (t={t}, s0={s0}) exceed the numerically nonzero spectrum");
    }
    let frame = Frame::new(linalg::orthonormalize(&pvecs.columns(0, s0).into_owned()))?;
    let diagnostics = OneStepDiagnostics {
        mhat_eigenvalues: truncate(&values, (2 * t + 8).max(ADAPTIVE_BLOCK)),
        p_eigenvalues: truncate(&pvals, 2 * s0 + 8),
        t,
        s0,
        iterations,
        converged,
        rank_deficient,
        gap_ok,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(OneStepResult { frame, diagnostics })
}
