//! Orthonormal Gegenbauer polynomials for the marginal of `<w, z>` under the
//! uniform measure on the sphere, scaled so that
//! `<H(w), H(z)> = sqrt(N) Q_l(<w, z>)` holds exactly.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::tensor_core::harmonic_dim;

/// Classically normalised values `P_0(t), ..., P_L(t)` with `P_l(1) = 1`.
fn normalized_values(d: usize, max_l: usize, t: f64) -> Vec<f64> {
    let df = d as f64;
    let mut out = Vec::with_capacity(max_l + 1);
    out.push(1.0);
    if max_l >= 1 {
        out.push(t);
    }
    for l in 1..max_l {
        let lf = l as f64;
        let next = ((2.0 * lf + df - 2.0) * t * out[l] - lf * out[l - 1]) / (lf + df - 2.0);
        out.push(next);
    }
    out
}

fn check(d: usize, t: f64) -> Result<f64> {
    if d < 3 {
        return Err(invalid(format!("gegenbauer requires d >= 3, got {d}")));
    }
    if !(t.abs() <= 1.0 + 1e-12) {
        return Err(invalid(format!("gegenbauer argument {t} outside [-1, 1]")));
    }
    Ok(t.clamp(-1.0, 1.0))
}

/// `Q_l^{(d)}(t)`, orthonormal under the marginal density of `z_1`.
pub fn gegenbauer(d: usize, l: usize, t: f64) -> Result<f64> {
    let t = check(d, t)?;
    let p = normalized_values(d, l, t)[l];
    Ok((harmonic_dim(d, l) as f64).sqrt() * p)
}

/// Recurrence data for `Q_0 .. Q_L` in a fixed dimension.
#[derive(Clone, Debug)]
pub struct GegenbauerBasis {
    d: usize,
    max_l: usize,
    sqrt_n: Vec<f64>,
}

impl GegenbauerBasis {
    pub fn new(d: usize, max_l: usize) -> Result<Self> {
        if d < 3 {
            return Err(invalid(format!("gegenbauer requires d >= 3, got {d}")));
        }
        let sqrt_n = (0..=max_l).map(|l| (harmonic_dim(d, l) as f64).sqrt()).collect();
        Ok(GegenbauerBasis { d, max_l, sqrt_n })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn max_degree(&self) -> usize {
        self.max_l
    }

    /// `[Q_0(t), ..., Q_L(t)]`.
    pub fn eval_all(&self, t: f64) -> Result<Vec<f64>> {
        let t = check(self.d, t)?;
        Ok(normalized_values(self.d, self.max_l, t)
            .into_iter()
            .zip(&self.sqrt_n)
            .map(|(p, s)| p * s)
            .collect())
    }

    /// Reproducing kernel `sqrt(N_l) Q_l(t) = N_l P_l(t)`, i.e. `<H(w), H(z)>`.
    pub fn kernel(&self, l: usize, t: f64) -> f64 {
        let t = t.clamp(-1.0, 1.0);
        let p = normalized_values(self.d, l, t)[l];
        self.sqrt_n[l] * self.sqrt_n[l] * p
    }

    /// Monomial coefficients `c_k` with `sqrt(N_l) Q_l(t) = sum_k c_k t^k`.
    pub fn kernel_monomials(&self, l: usize) -> Vec<f64> {
        let df = self.d as f64;
        let mut prev = vec![1.0];
        let mut cur = vec![0.0, 1.0];
        if l == 0 {
            cur = prev.clone();
        } else {
            for k in 1..l {
                let kf = k as f64;
                let mut next = vec![0.0; k + 2];
                for (i, c) in cur.iter().enumerate() {
                    next[i + 1] += (2.0 * kf + df - 2.0) * c;
                }
                for (i, c) in prev.iter().enumerate() {
                    next[i] -= kf * c;
                }
                for c in next.iter_mut() {
                    *c /= kf + df - 2.0;
                }
                prev = cur;
                cur = next;
            }
        }
        let n = self.sqrt_n[l] * self.sqrt_n[l];
        cur.into_iter().map(|c| c * n).collect()
    }
}

/// Gauss quadrature for the density proportional to `(1 - t^2)^{(d-3)/2}` on
/// `[-1, 1]` (a symmetric Gauss-Jacobi rule), weights normalised to sum 1.
///
/// Nodes are the eigenvalues of the Jacobi matrix of the monic recurrence.
pub fn gauss_sphere_marginal(d: usize, nodes: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if d < 3 {
        return Err(invalid("quadrature requires d >= 3"));
    }
    if d > 200 {
        return Err(invalid("quadrature weights underflow above d = 200; use Monte Carlo"));
    }
    let lam = (d as f64 - 2.0) / 2.0;
    let mut j = DMatrix::zeros(nodes, nodes);
    for n in 1..nodes {
        let nf = n as f64;
        let beta = nf * (nf + 2.0 * lam - 1.0) / (4.0 * (nf + lam) * (nf + lam - 1.0));
        j[(n, n - 1)] = beta.sqrt();
        j[(n - 1, n)] = beta.sqrt();
    }
    let eig = nalgebra::SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..nodes)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Ok((pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1 / total).collect()))
}
