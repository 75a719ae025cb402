//! Coordinates of `H_{d,l}(z)` on the harmonic subspace generated by a frame.
//!
//! For an `s`-frame `W` the tensors `P_tf(W^{(x) l} B)`, `B` symmetric over
//! `R^s`, span the part of `V_{d,l}` that depends on `z` only through `W^T z`.
//! [`FrameCoefficients`] returns the coordinates of `H(z)` in an orthonormal
//! basis of that span, computed from `u = W^T z` alone.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::linalg;
use crate::tensor_core::{h_coeffs, harmonic_dim, kappa, partial_trace, sym_dim, sym_with_identity, SymTensor, Tensor};

/// Nondecreasing index tuples of length `l` over `0..s`.
pub fn multisets(s: usize, l: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(l);
    fn rec(s: usize, l: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == l {
            out.push(cur.clone());
            return;
        }
        for i in start..s {
            cur.push(i);
            rec(s, l, i, cur, out);
            cur.pop();
        }
    }
    rec(s, l, 0, &mut cur, &mut out);
    out
}

/// Unit-norm symmetric basis tensor for the multiset `alpha`.
fn basis_tensor(s: usize, alpha: &[usize]) -> Tensor {
    let l = alpha.len();
    let mut t = Tensor::zeros(s, l);
    let mut perms: Vec<Vec<usize>> = crate::tensor_core::permutations(l)
        .into_iter()
        .map(|p| p.iter().map(|&k| alpha[k]).collect())
        .collect();
    perms.sort();
    perms.dedup();
    let w = 1.0 / (perms.len() as f64).sqrt();
    for idx in &perms {
        let off = t.offset(idx);
        t.data_mut()[off] = w;
    }
    t
}

fn powers(u: &[f64], l: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![1.0]];
    for k in 1..=l {
        let prev = &out[k - 1];
        let mut next = Vec::with_capacity(prev.len() * u.len());
        for &p in prev {
            next.extend(u.iter().map(|x| p * x));
        }
        out.push(next);
    }
    out
}

/// Orthonormal coordinates `c(z)` of `H_{d,l}(z)` on the frame-generated subspace.
///
/// `E_z[c c^T] = I` and `||E[H | y]||^2 = ||E[c | y]||^2` whenever `y` depends
/// on `z` only through `W^T z`.
#[derive(Clone, Debug)]
pub struct FrameCoefficients {
    s: usize,
    l: usize,
    alphas: Vec<Vec<usize>>,
    /// `G^{-1/2}`, mapping coordinates back to multiset coefficients.
    g_inv_sqrt: DMatrix<f64>,
    /// Per trace level `j`: `D x s^{l-2j}` map applied to `u^{(x) l-2j}`.
    maps: Vec<DMatrix<f64>>,
}

impl FrameCoefficients {
    pub fn new(d: usize, s: usize, l: usize) -> Result<Self> {
        if s >= d {
            return Err(invalid(format!("frame rank {s} must be below d = {d}")));
        }
        let alphas = multisets(s, l);
        let n = alphas.len();
        debug_assert!(s == 0 || n == sym_dim(s, l));
        if n == 0 {
            return Ok(FrameCoefficients { s, l, alphas, g_inv_sqrt: DMatrix::zeros(0, 0), maps: Vec::new() });
        }
        let h = h_coeffs(d, l);
        let scale = kappa(d, l)? * (harmonic_dim(d, l) as f64).sqrt();
        let es: Vec<SymTensor> =
            alphas.iter().map(|a| SymTensor::from_raw(basis_tensor(s, a))).collect();
        let traces: Vec<Vec<Tensor>> = es
            .iter()
            .map(|e| (0..=l / 2).map(|j| partial_trace(e, j).map(|t| t.into_tensor())).collect())
            .collect::<Result<_>>()?;
        let mut g = DMatrix::zeros(n, n);
        for b in 0..n {
            let mut col = Tensor::zeros(s, l);
            for (j, &hj) in h.iter().enumerate() {
                col.axpy(hj, sym_with_identity(&traces[b][j], j)?.tensor());
            }
            for a in 0..n {
                g[(a, b)] = es[a].tensor().dot(&col);
            }
        }
        let g = (&g + g.transpose()) * 0.5;
        let g_inv_sqrt = linalg::inv_sqrt_psd(&g);
        let maps = (0..=l / 2)
            .map(|j| {
                let k = l - 2 * j;
                let len = s.pow(k as u32);
                let f = DMatrix::from_fn(n, len, |a, c| traces[a][j].data()[c]);
                &g_inv_sqrt * f * (scale * h[j])
            })
            .collect();
        Ok(FrameCoefficients { s, l, alphas, g_inv_sqrt, maps })
    }

    /// Number of coordinates, `sym_dim(s, l)`.
    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    pub fn rank(&self) -> usize {
        self.s
    }

    pub fn degree(&self) -> usize {
        self.l
    }

    /// Coordinates from `u = W^T z` (with `|z| = 1`).
    pub fn coeffs(&self, u: &[f64]) -> Vec<f64> {
        let mut out = DVector::zeros(self.dim());
        if self.dim() == 0 {
            return Vec::new();
        }
        let pw = powers(u, self.l);
        for (j, m) in self.maps.iter().enumerate() {
            let p = DVector::from_column_slice(&pw[self.l - 2 * j]);
            out.gemv(1.0, m, &p, 1.0);
        }
        out.as_slice().to_vec()
    }

    /// Symmetric tensor `B` over `R^s` whose `P_tf(W^{(x) l} B)` is the basis
    /// element with coordinate vector `v`.
    pub fn frame_tensor(&self, v: &[f64]) -> Tensor {
        let w = &self.g_inv_sqrt * DVector::from_column_slice(v);
        let mut t = Tensor::zeros(self.s, self.l);
        for (a, alpha) in self.alphas.iter().enumerate() {
            t.axpy(w[a], &basis_tensor(self.s, alpha));
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::HarmonicEvaluator;
    use crate::models::sample_sphere;
    use crate::tensor_core::{apply_frame, tf_project, Frame};
    use rand::SeedableRng;

    #[test]
    fn coordinates_match_dense_projection() {
        let (d, s) = (6, 2);
        let w = Frame::canonical(d, s);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for l in 0..=3 {
            let fc = FrameCoefficients::new(d, s, l).unwrap();
            let ev = HarmonicEvaluator::new(d, l).unwrap();
            let basis: Vec<Tensor> = (0..fc.dim())
                .map(|k| {
                    let mut e = vec![0.0; fc.dim()];
                    e[k] = 1.0;
                    let b = fc.frame_tensor(&e);
                    tf_project(&apply_frame(&w, &b).unwrap()).unwrap().into_tensor()
                })
                .collect();
            for a in 0..basis.len() {
                for b in 0..basis.len() {
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((basis[a].dot(&basis[b]) - want).abs() < 1e-10);
                }
            }
            for _ in 0..5 {
                let z = sample_sphere(d, &mut rng);
                let hz = ev.tensor(&z).unwrap();
                let c = fc.coeffs(&w.coords(&z));
                for (k, bk) in basis.iter().enumerate() {
                    assert!((c[k] - bk.dot(hz.tensor())).abs() < 1e-9, "l={l}");
                }
            }
        }
    }

    #[test]
    fn identity_second_moment() {
        let (d, s, l) = (9, 3, 2);
        let fc = FrameCoefficients::new(d, s, l).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 40000;
        let mut m = DMatrix::<f64>::zeros(fc.dim(), fc.dim());
        for _ in 0..n {
            let z = sample_sphere(d, &mut rng);
            let c = DVector::from_vec(fc.coeffs(&z[..s]));
            m += &c * c.transpose();
        }
        m /= n as f64;
        assert!((m - DMatrix::identity(fc.dim(), fc.dim())).amax() < 0.06);
        assert_eq!(multisets(3, 2).len(), 6);
        assert_eq!(FrameCoefficients::new(9, 0, 2).unwrap().dim(), 0);
        assert_eq!(FrameCoefficients::new(9, 0, 0).unwrap().coeffs(&[]), vec![1.0]);
    }
}
