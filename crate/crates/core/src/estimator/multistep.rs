//! Multi-step unfolding: condition on what has been recovered, symmetrise the
//! kernel over the recovered coordinates, unfold again and lift back.

use serde::Serialize;

use super::kernel::{symmetrize_kernel, Kernel};
use super::unfold::{one_step, OneStepDiagnostics, RankRule, Solver, UnfoldConfig};
use crate::error::{invalid, Result};
use crate::linalg;
use crate::models::{condition_dataset, Dataset};
use crate::rng::{self, tag};
use crate::tensor_core::Frame;

#[derive(Clone, Debug, PartialEq)]
pub struct MultiStepOptions {
    /// Haar rotations used to symmetrise kernels over recovered coordinates.
    pub n_rot: usize,
    pub seed: u64,
    pub solver: Solver,
    /// Overrides the default power-iteration tolerance when set.
    pub tol: Option<f64>,
}

impl Default for MultiStepOptions {
    fn default() -> Self {
        MultiStepOptions { n_rot: 16, seed: 0, solver: Solver::Auto, tol: None }
    }
}

/// One step of a [`RecoveryTrace`].
#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub degree: usize,
    /// Newly recovered directions in `R^d`.
    #[serde(skip)]
    pub frame: Frame,
    pub diagnostics: OneStepDiagnostics,
    /// Samples dropped while conditioning.
    pub dropped: usize,
    pub kernel_rank: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecoveryTrace {
    pub steps: Vec<StepRecord>,
    #[serde(skip)]
    pub accumulated: Frame,
}

#[derive(Clone, Debug)]
pub struct MultiStepOutcome {
    pub frame: Frame,
    pub trace: RecoveryTrace,
    /// Set when a step produced a degenerate frame and the loop stopped early.
    pub stalled: Option<String>,
}

/// Seed used for the solver of step `t`; step 0 with this seed reproduces [`one_step`].
pub fn step_seed(seed: u64, t: usize) -> u64 {
    rng::derive(seed, &[tag::INIT, t as u64])
}

/// Run the steps in order, one fresh batch per step.
pub fn multi_step(
    batches: &[Dataset],
    degrees: &[usize],
    kernels: &[Kernel],
    ranks: &[RankRule],
    opts: &MultiStepOptions,
) -> Result<MultiStepOutcome> {
    let steps = degrees.len();
    if steps == 0 || batches.len() != steps || kernels.len() != steps || ranks.len() != steps {
        return Err(invalid("multi_step needs one batch, kernel and rank rule per degree"));
    }
    let d = batches[0].dim();
    let arity = batches[0].label_arity();
    if batches.iter().any(|b| b.dim() != d || b.label_arity() != arity) {
        return Err(invalid("all batches must share the dimension and label arity"));
    }
    let mut acc = Frame::empty(d);
    let mut records: Vec<StepRecord> = Vec::with_capacity(steps);
    let mut stalled = None;
    for t in 0..steps {
        let s_u = acc.rank();
        if s_u + 1 >= d {
            return Err(invalid("recovered rank leaves no residual dimensions"));
        }
        let u_perp = acc.complement();
        let (reduced, dropped) = condition_dataset(&batches[t], &acc, &u_perp)?;
        let kernel = if s_u > 0 && opts.n_rot > 0 && kernels[t].min_arity() > arity {
            let mut r = rng::stream(opts.seed, &[tag::ROTATION, t as u64]);
            symmetrize_kernel(&kernels[t], arity + s_u, s_u, opts.n_rot, &mut r)?
        } else {
            kernels[t].clone()
        };
        let mut cfg = UnfoldConfig::new(degrees[t], reduced.dim(), ranks[t]);
        cfg.solver = opts.solver;
        cfg.seed = step_seed(opts.seed, t);
        if let Some(tol) = opts.tol {
            cfg.power.tol = tol;
        }
        let res = one_step(&reduced, &cfg, &kernel)?;
        let lifted = if s_u == 0 {
            res.frame.clone()
        } else {
            Frame::new(linalg::orthonormalize(&(u_perp.matrix() * res.frame.matrix())))?
        };
        let deficient = res.diagnostics.rank_deficient;
        records.push(StepRecord {
            degree: degrees[t],
            frame: lifted.clone(),
            diagnostics: res.diagnostics,
            dropped,
            kernel_rank: kernel.rank(),
        });
        if deficient {
            stalled = Some(format!("step {} (degree {}) returned a degenerate frame", t + 1, degrees[t]));
            break;
        }
        acc = acc.direct_sum(&lifted)?;
    }
    Ok(MultiStepOutcome {
        frame: acc.clone(),
        trace: RecoveryTrace { steps: records, accumulated: acc },
        stalled,
    })
}
