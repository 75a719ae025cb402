//! Block subspace iteration with Rayleigh-Ritz extraction.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::linalg;
use crate::tensor_core::{frame_distance, Frame};

/// Stopping rule and block shape.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerOptions {
    /// Stop when consecutive top-`k` Ritz subspaces are within this projector distance.
    pub tol: f64,
    pub max_iter: usize,
    /// Extra block columns beyond `k`.
    pub oversample: usize,
    /// Added to the operator so it is positive semidefinite; removed from the reported values.
    pub shift: f64,
}

impl PowerOptions {
    /// Defaults for ambient dimension `d`: `tol = 1e-6`, `max_iter = 50 ceil(ln d)`.
    pub fn for_dim(d: usize) -> Self {
        PowerOptions { tol: 1e-6, max_iter: 50 * (d.max(2) as f64).ln().ceil() as usize, oversample: 4, shift: 0.0 }
    }
}

/// Top eigenpairs of a symmetric operator.
#[derive(Clone, Debug, Serialize)]
pub struct EigenResult {
    #[serde(skip)]
    pub vectors: DMatrix<f64>,
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Top-`k` eigenpairs of the symmetric operator `op` on `R^dim`.
///
/// `op` maps a `dim x p` block to its image. `init` seeds the leading block
/// columns; the rest are Gaussian draws from `rng`.
pub fn subspace_iteration<F, R>(
    op: F,
    dim: usize,
    k: usize,
    opts: &PowerOptions,
    init: Option<&DMatrix<f64>>,
    rng: &mut R,
) -> Result<EigenResult>
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
    R: Rng + ?Sized,
{
    if k == 0 || k > dim {
        return Err(invalid(format!("cannot extract {k} eigenvectors in dimension {dim}")));
    }
    let p = (k + opts.oversample).min(dim);
    let mut x = DMatrix::<f64>::from_fn(dim, p, |_, _| rng.sample(StandardNormal));
    if let Some(b) = init {
        if b.nrows() != dim {
            return Err(invalid("initial block has the wrong number of rows"));
        }
        for c in 0..b.ncols().min(p) {
            x.set_column(c, &b.column(c));
        }
    }
    let mut prev: Option<Frame> = None;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let q = linalg::orthonormalize(&x);
        let mut y = op(&q);
        if opts.shift != 0.0 {
            y += &q * opts.shift;
        }
        let h = q.transpose() * &y;
        let (vals, vecs) = linalg::sym_eigen_desc(&h);
        let ritz = &q * &vecs;
        let cur = Frame::new(linalg::orthonormalize(&ritz.columns(0, k).into_owned()))?;
        let done = match &prev {
            Some(pf) => frame_distance(pf, &cur)? < opts.tol,
            None => false,
        };
        if done || iterations >= opts.max_iter {
            let values = vals[..k].iter().map(|v| v - opts.shift).collect();
            return Ok(EigenResult { vectors: ritz.columns(0, k).into_owned(), values, iterations, converged: done });
        }
        prev = Some(cur);
        x = y * vecs;
    }
}
