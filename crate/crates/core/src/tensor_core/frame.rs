use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::error::{invalid, shape, Result};
use crate::linalg;

/// Orthonormal `s`-frame in `R^d`, stored as a `d x s` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    cols: DMatrix<f64>,
}

impl Frame {
    /// Validating constructor: `W^T W = I` to `1e-12`.
    pub fn new(cols: DMatrix<f64>) -> Result<Self> {
        let s = cols.ncols();
        if s > cols.nrows() {
            return Err(invalid("frame rank exceeds dimension"));
        }
        let g = cols.transpose() * &cols;
        let err = (g - DMatrix::<f64>::identity(s, s)).amax();
        if s > 0 && err > 1e-12 {
            return Err(invalid(format!("columns are not orthonormal (error {err:e})")));
        }
        Ok(Frame { cols })
    }

    /// Orthonormalise arbitrary columns (QR, positive diagonal).
    pub fn orthonormalized(m: &DMatrix<f64>) -> Result<Self> {
        if m.ncols() > m.nrows() {
            return Err(invalid("frame rank exceeds dimension"));
        }
        Frame::new(linalg::orthonormalize(m))
    }

    pub fn empty(d: usize) -> Self {
        Frame { cols: DMatrix::zeros(d, 0) }
    }

    /// First `s` coordinate vectors.
    pub fn canonical(d: usize, s: usize) -> Self {
        Frame { cols: DMatrix::identity(d, s) }
    }

    pub fn dim(&self) -> usize {
        self.cols.nrows()
    }

    pub fn rank(&self) -> usize {
        self.cols.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.cols
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.cols.column(k).iter().copied().collect()
    }

    /// `W^T z`.
    pub fn coords(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.dim());
        (0..self.rank())
            .map(|k| self.cols.column(k).iter().zip(z).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `W x` for `x` in `R^s`.
    pub fn lift(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rank());
        let mut out = vec![0.0; self.dim()];
        for (k, &xk) in x.iter().enumerate() {
            for (o, w) in out.iter_mut().zip(self.cols.column(k).iter()) {
                *o += xk * w;
            }
        }
        out
    }

    /// Concatenation `[self other]`; the spans must be orthogonal.
    pub fn direct_sum(&self, other: &Frame) -> Result<Frame> {
        if self.dim() != other.dim() {
            return Err(shape("direct_sum: dimension mismatch"));
        }
        let mut m = DMatrix::zeros(self.dim(), self.rank() + other.rank());
        m.columns_mut(0, self.rank()).copy_from(&self.cols);
        m.columns_mut(self.rank(), other.rank()).copy_from(&other.cols);
        Frame::new(m)
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn complement(&self) -> Frame {
        Frame { cols: linalg::complement(&self.cols) }
    }

    /// `Q W` for a `d x d` matrix `Q`.
    pub fn rotated(&self, q: &DMatrix<f64>) -> Result<Frame> {
        Frame::new(q * &self.cols)
    }

    /// Short content hash of the exact column entries.
    pub fn hash(&self) -> u64 {
        let mut h = Sha256::new();
        h.update((self.dim() as u64).to_le_bytes());
        h.update((self.rank() as u64).to_le_bytes());
        for v in self.cols.iter() {
            h.update(v.to_le_bytes());
        }
        let out = h.finalize();
        u64::from_le_bytes(out[..8].try_into().unwrap())
    }
}

/// `|| Pi_U - Pi_V ||_op`.
///
/// Uses `||P - Q|| = max(||(I-Q)P||, ||(I-P)Q||)` for orthogonal projectors and
/// `||(I - Pi_V) U||^2 = lambda_max(I - C^T C)` with `C = V^T U`, so only the
/// small cross-Gram block is formed.
pub fn frame_distance(u: &Frame, v: &Frame) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(shape("frame_distance: dimension mismatch"));
    }
    let one_side = |a: &Frame, b: &Frame| -> f64 {
        if a.rank() == 0 {
            return 0.0;
        }
        let c = b.matrix().transpose() * a.matrix();
        let m = DMatrix::<f64>::identity(a.rank(), a.rank()) - c.transpose() * c;
        let (vals, _) = linalg::sym_eigen_desc(&m);
        vals[0].clamp(0.0, 1.0).sqrt()
    };
    Ok(one_side(u, v).max(one_side(v, u)))
}
