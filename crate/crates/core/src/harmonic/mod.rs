//! Harmonic tensors `H_{d,l}(z) = kappa_{d,l} sqrt(N_{d,l}) P_tf(z^{(x) l})`.
//!
//! Normalisation follows `||H(z)||_F = sqrt(N)`, so that
//! `E_z <A, H(z)> <B, H(z)> = <A, B>` for traceless `A, B` and
//! `<H(w), H(z)> = sqrt(N) Q_l(<w, z>)` with orthonormal Gegenbauer `Q_l`.

mod gegenbauer;
mod frame_coeffs;
mod matvec;

pub use gegenbauer::{gauss_sphere_marginal, gegenbauer, GegenbauerBasis};
pub use frame_coeffs::{multisets, FrameCoefficients};
pub use matvec::{unfolded_matvec, UnfoldedHarmonic, MATVEC_MAX_ORDER};

use crate::error::{invalid, shape, Error, Result};
use crate::tensor_core::{
    f_coeff, h_coeffs, harmonic_dim, kappa, partial_trace, tf_project, Frame, SymTensor, Tensor,
    TracelessSymTensor,
};

/// Entries allowed when a harmonic tensor is materialised densely.
pub const DENSE_BUDGET: usize = 1 << 24;

fn check_unit(z: &[f64]) -> Result<()> {
    let n = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (n - 1.0).abs() > 1e-10 {
        return Err(invalid(format!("expected a unit vector, norm is {n}")));
    }
    Ok(())
}

/// Cached constants for `H_{d,l}`.
#[derive(Clone, Debug)]
pub struct HarmonicEvaluator {
    d: usize,
    l: usize,
    h: Vec<f64>,
    kappa: f64,
    n_dim: f64,
}

impl HarmonicEvaluator {
    pub fn new(d: usize, l: usize) -> Result<Self> {
        Ok(HarmonicEvaluator {
            d,
            l,
            h: h_coeffs(d, l),
            kappa: kappa(d, l)?,
            n_dim: harmonic_dim(d, l) as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> usize {
        self.l
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn harmonic_dim(&self) -> f64 {
        self.n_dim
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// `kappa sqrt(N)`.
    pub fn scale(&self) -> f64 {
        self.kappa * self.n_dim.sqrt()
    }

    /// Dense `H_{d,l}(z)`.
    pub fn tensor(&self, z: &[f64]) -> Result<TracelessSymTensor> {
        check_unit(z)?;
        if z.len() != self.d {
            return Err(shape("harmonic_tensor: dimension mismatch"));
        }
        if self.d.checked_pow(self.l as u32).map_or(true, |n| n > DENSE_BUDGET) {
            return Err(Error::Budget(format!("d^l = {}^{} entries", self.d, self.l)));
        }
        let p = tf_project(&Tensor::outer_power(z, self.l))?;
        Ok(TracelessSymTensor::from_raw(p.tensor().scaled(self.scale())))
    }

    /// `<A, H(z)> = kappa sqrt(N) <A, z^{(x) l}>` for traceless `A`.
    pub fn eval(&self, a: &TracelessSymTensor, z: &[f64]) -> Result<f64> {
        if a.order() != self.l || a.dim() != self.d || z.len() != self.d {
            return Err(shape("harmonic_eval: shape mismatch"));
        }
        check_unit(z)?;
        Ok(self.scale() * contract_power(a.tensor().data(), z, self.l))
    }

    /// `<P_tf(W^{(x) l} B), H(z)>` for symmetric `B` over `R^s`, in `O(l d s + s^l)`.
    ///
    /// Uses `sum_j h_j <tau^j B, u^{(x) l-2j}>` with `u = W^T z`.
    pub fn eval_factored(&self, w: &Frame, b: &SymTensor, z: &[f64]) -> Result<f64> {
        if b.order() != self.l || b.dim() != w.rank() || w.dim() != self.d || z.len() != self.d {
            return Err(shape("eval_factored: shape mismatch"));
        }
        let u = w.coords(z);
        let mut acc = 0.0;
        for (j, &hj) in self.h.iter().enumerate() {
            let tr = partial_trace(b, j)?;
            acc += hj * contract_power(tr.tensor().data(), &u, self.l - 2 * j);
        }
        Ok(self.scale() * acc)
    }
}

/// `<T, u^{(x) k}>` for a dense order-`k` tensor stored in `data`.
pub(crate) fn contract_power(data: &[f64], u: &[f64], k: usize) -> f64 {
    let d = u.len();
    let mut cur = data.to_vec();
    for _ in 0..k {
        let next: Vec<f64> = cur.chunks(d).map(|c| c.iter().zip(u).map(|(x, y)| x * y).sum()).collect();
        cur = next;
    }
    cur[0]
}

/// Dense harmonic tensor `H_{d,l}(z)`.
pub fn harmonic_tensor(z: &[f64], l: usize) -> Result<TracelessSymTensor> {
    HarmonicEvaluator::new(z.len(), l)?.tensor(z)
}

/// `<A, H_{d,l}(z)>` without forming `H`.
pub fn harmonic_eval(a: &TracelessSymTensor, z: &[f64]) -> Result<f64> {
    HarmonicEvaluator::new(a.dim(), a.order())?.eval(a, z)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Coefficient `b_{p,q,j}` in
/// `<A (x) B, H_p(z) (x) H_q(z)> = sum_j b_{p,q,j} <A <>_j B, H_{p+q-2j}(z)>`.
pub fn product_b_coeff(d: usize, p: usize, q: usize, j: usize) -> Result<f64> {
    if j > p.min(q) {
        return Err(invalid(format!("j = {j} exceeds min(p, q)")));
    }
    let m = p + q - 2 * j;
    let norm = |l: usize| -> Result<f64> { Ok(kappa(d, l)? * (harmonic_dim(d, l) as f64).sqrt()) };
    let comb = 2f64.powi(j as i32) * factorial(p) * factorial(q) * factorial(m)
        / (factorial(p + q) * factorial(p - j) * factorial(q - j));
    Ok(f_coeff(d, p + q, j)? * norm(p)? * norm(q)? / norm(m)? * comb)
}

#[cfg(test)]
mod tests;
