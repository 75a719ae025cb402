//! The implicit operator `M_hat` built from unfolded harmonic tensors.
//!
//! With `M_i = Mat_{a,b}(H(z_i))` and `S_r = (1/n) sum_i T_r(y_i) M_i`:
//! for `a = b` the operator is `sum_r S_r S_r^T`; for `a != b` it is the
//! off-diagonal pair sum `(1/(n(n-1))) sum_{i != j} K(y_i, y_j) M_i M_j^T`,
//! evaluated as `(1 + 1/(n-1)) sum_r [S_r S_r^T - D_r]` with
//! `D_r = (1/n^2) sum_i T_r(y_i)^2 M_i M_i^T`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::kernel::Kernel;
use crate::error::{invalid, shape, Result};
use crate::harmonic::UnfoldedHarmonic;
use crate::models::Dataset;
use crate::tensor_core::harmonic_dim;

const MIN_CHUNK: usize = 256;
const MAX_CHUNKS: usize = 64;

/// Chunk boundaries that depend only on `n`.
fn chunks(n: usize) -> Vec<(usize, usize)> {
    let count = n.div_ceil(MIN_CHUNK).clamp(1, MAX_CHUNKS);
    let size = n.div_ceil(count);
    (0..count).map(|c| (c * size, ((c + 1) * size).min(n))).filter(|(s, e)| s < e).collect()
}

/// Pairwise reduction in a fixed order, independent of scheduling.
fn tree_sum(mut parts: Vec<Vec<f64>>) -> Vec<f64> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

/// `M_hat` for one dataset, kernel and split.
pub struct MhatOperator<'a> {
    data: &'a Dataset,
    op: UnfoldedHarmonic,
    op_t: UnfoldedHarmonic,
    feats: Vec<f64>,
    m: usize,
}

impl<'a> MhatOperator<'a> {
    pub fn new(data: &'a Dataset, kernel: &Kernel, l: usize, a: usize, b: usize) -> Result<Self> {
        if data.len() < 2 {
            return Err(invalid("M_hat needs at least two samples"));
        }
        if kernel.min_arity() > data.label_arity() {
            return Err(shape(format!(
                "kernel reads {} label coordinates, dataset has {}",
                kernel.min_arity(),
                data.label_arity()
            )));
        }
        let d = data.dim();
        let op = UnfoldedHarmonic::new(d, l, a, b)?;
        let op_t = UnfoldedHarmonic::new(d, l, b, a)?;
        let m = kernel.rank();
        let n = data.len();
        let mut feats = vec![0.0; n * m];
        feats.par_chunks_mut(m).enumerate().for_each(|(i, f)| kernel.features_into(data.label(i), f));
        Ok(MhatOperator { data, op, op_t, feats, m })
    }

    /// Side length `d^a`.
    pub fn dim(&self) -> usize {
        self.op.rows()
    }

    pub fn split(&self) -> (usize, usize) {
        self.op.split()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn symmetric_split(&self) -> bool {
        let (a, b) = self.op.split();
        a == b
    }

    /// Per-sample feature values `T_r(y_i)`, row-major `n x m`.
    pub fn features(&self) -> &[f64] {
        &self.feats
    }

    /// A shift `sigma` with `M_hat + sigma I` positive semidefinite (zero when `a = b`).
    pub fn psd_shift(&self) -> f64 {
        if self.symmetric_split() {
            return 0.0;
        }
        let n = self.len() as f64;
        let t2: f64 = self.feats.iter().map(|x| x * x).sum::<f64>() / n;
        let nd = harmonic_dim(self.data.dim(), self.op.degree()) as f64;
        (1.0 + 1.0 / (n - 1.0)) * t2 * nd / n
    }

    /// `M_hat v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let block = DMatrix::from_column_slice(v.len(), 1, v);
        self.apply_block(&block).as_slice().to_vec()
    }

    /// `M_hat V` for a `d^a x k` block, in two passes over the samples.
    pub fn apply_block(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.len();
        let k = v.ncols();
        let da = self.op.rows();
        let db = self.op.cols();
        let m = self.m;
        assert_eq!(v.nrows(), da, "M_hat: vector length must be d^a");
        let ranges = chunks(n);
        let nf = n as f64;
        // pass 1: q[r][c] = (1/n) sum_i T_r(y_i) M_i^T v_c
        let parts: Vec<Vec<f64>> = ranges
            .par_iter()
            .map(|&(s, e)| {
                let mut q = vec![0.0; m * k * db];
                let mut x = vec![0.0; db];
                let mut scratch = Vec::new();
                for i in s..e {
                    let z = self.data.input(i);
                    let t = &self.feats[i * m..(i + 1) * m];
                    for c in 0..k {
                        x.iter_mut().for_each(|e| *e = 0.0);
                        self.op_t.matvec_acc(z, v.column(c).as_slice(), 1.0, &mut x, &mut scratch);
                        for (r, &tr) in t.iter().enumerate() {
                            if tr == 0.0 {
                                continue;
                            }
                            let dst = &mut q[(r * k + c) * db..(r * k + c + 1) * db];
                            dst.iter_mut().zip(&x).for_each(|(a, b)| *a += tr * b);
                        }
                    }
                }
                q
            })
            .collect();
        let mut q = tree_sum(parts);
        q.iter_mut().for_each(|x| *x /= nf);
        // pass 2: (1/n) sum_i M_i [sum_r T_r(y_i) q_r - (|T(y_i)|^2 / n) M_i^T v]
        let diag = !self.symmetric_split();
        let parts: Vec<Vec<f64>> = ranges
            .par_iter()
            .map(|&(s, e)| {
                let mut out = vec![0.0; da * k];
                let mut u = vec![0.0; db];
                let mut scratch = Vec::new();
                for i in s..e {
                    let z = self.data.input(i);
                    let t = &self.feats[i * m..(i + 1) * m];
                    let t2: f64 = t.iter().map(|x| x * x).sum();
                    if t2 == 0.0 {
                        continue;
                    }
                    for c in 0..k {
                        u.iter_mut().for_each(|e| *e = 0.0);
                        for (r, &tr) in t.iter().enumerate() {
                            let src = &q[(r * k + c) * db..(r * k + c + 1) * db];
                            u.iter_mut().zip(src).for_each(|(a, b)| *a += tr * b);
                        }
                        if diag {
                            self.op_t.matvec_acc(z, v.column(c).as_slice(), -t2 / nf, &mut u, &mut scratch);
                        }
                        self.op.matvec_acc(z, &u, 1.0 / nf, &mut out[c * da..(c + 1) * da], &mut scratch);
                    }
                }
                out
            })
            .collect();
        let mut out = tree_sum(parts);
        if diag {
            let f = 1.0 + 1.0 / (nf - 1.0);
            out.iter_mut().for_each(|x| *x *= f);
        }
        DMatrix::from_vec(da, k, out)
    }

    /// The explicit `d^a x d^a` matrix, symmetrised.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let da = self.dim();
        let m = self.apply_block(&DMatrix::identity(da, da));
        (&m + m.transpose()) * 0.5
    }
}

/// `M_hat v` for a single vector.
pub fn mhat_matvec(op: &MhatOperator<'_>, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != op.dim() {
        return Err(shape(format!("vector length {} but d^a = {}", v.len(), op.dim())));
    }
    Ok(op.apply(v))
}
