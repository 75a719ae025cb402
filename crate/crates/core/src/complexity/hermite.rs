//! Hermite tensors and their expansion into harmonic tensors of lower degree.
//!
//! `He_k(x) = sum_j beta_{k,k-2j}(|x|) P_sym(P_tf-part ...)` in the sense that
//! `<A, He_k(x)> = sum_j beta_{k,k-2j}(|x|) <P_tf(tau^j A), H_{d,k-2j}(x/|x|)>`
//! for symmetric `A` of order `k`.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::tensor_core::{f_coeff, harmonic_dim, kappa, pochhammer, sym_with_identity, SymTensor, Tensor};

/// Largest Hermite tensor order built densely.
pub const HERMITE_TENSOR_CAP: usize = 4;

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

/// `(-1)^i k! / (2^i i! (k-2i)!)`, the coefficient of `x^{k-2i} I^i`.
fn hermite_term(k: usize, i: usize) -> f64 {
    let s = if i % 2 == 0 { 1.0 } else { -1.0 };
    s * factorial(k) / (2f64.powi(i as i32) * factorial(i) * factorial(k - 2 * i))
}

/// Normalised Hermite tensor `He_k(x)`.
pub fn hermite_tensor(x: &[f64], k: usize) -> Result<SymTensor> {
    if k > HERMITE_TENSOR_CAP {
        return Err(Error::OrderCap { order: k, cap: HERMITE_TENSOR_CAP });
    }
    let d = x.len();
    let mut out = Tensor::zeros(d, k);
    for i in 0..=k / 2 {
        let t = sym_with_identity(&Tensor::outer_power(x, k - 2 * i), i)?;
        out.axpy(hermite_term(k, i), t.tensor());
    }
    SymTensor::new(out.scaled(1.0 / factorial(k).sqrt()))
}

fn check(d: usize, k: usize, l: usize) -> Result<usize> {
    if l > k || (k - l) % 2 != 0 {
        return Err(invalid(format!("beta_({k},{l}) needs l <= k and k - l even")));
    }
    if d < 3 {
        return Err(invalid("beta coefficients need d >= 3"));
    }
    Ok((k - l) / 2)
}

fn harmonic_norm(d: usize, l: usize) -> Result<f64> {
    Ok(kappa(d, l)? * (harmonic_dim(d, l) as f64).sqrt())
}

/// Monomial coefficients of `beta_{k,l}(r) = sum_i a_i r^{l + 2i}`, from the Laguerre form.
fn laguerre_monomials(d: usize, k: usize, l: usize) -> Result<Vec<f64>> {
    let j = check(d, k, l)?;
    let alpha = d as f64 / 2.0 + l as f64 - 1.0;
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    let pre = sign * factorial(k).sqrt()
        / (2f64.powi(j as i32) * harmonic_norm(d, l)? * factorial(l) * pochhammer(d as f64 / 2.0 + l as f64, j));
    // L_j^(alpha)(u) = sum_i (-1)^i binom(j + alpha, j - i) u^i / i!, u = r^2 / 2
    Ok((0..=j)
        .map(|i| {
            let binom: f64 = (1..=j - i).map(|m| (alpha + i as f64 + m as f64) / m as f64).product();
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            pre * s * binom / (factorial(i) * 2f64.powi(i as i32))
        })
        .collect())
}

/// `beta^{(d)}_{k,l}(r)` via generalised Laguerre polynomials.
pub fn beta_coeff(d: usize, k: usize, l: usize, r: f64) -> Result<f64> {
    let a = laguerre_monomials(d, k, l)?;
    Ok(a.iter().enumerate().map(|(i, c)| c * r.powi((l + 2 * i) as i32)).sum())
}

/// `beta^{(d)}_{k,l}(r)` from the explicit Hermite sum followed by the
/// Fischer decomposition of each `x^{k-2i} I^i` term.
pub fn beta_coeff_sum(d: usize, k: usize, l: usize, r: f64) -> Result<f64> {
    let j = check(d, k, l)?;
    let mut acc = 0.0;
    for i in 0..=j {
        let m = k - 2 * i;
        acc += hermite_term(k, i) * r.powi(m as i32) * f_coeff(d, m, j - i)?;
    }
    Ok(acc / (factorial(k).sqrt() * harmonic_norm(d, l)?))
}

/// `E r^p` for `r ~ chi_d`.
fn chi_moment(d: usize, p: usize) -> f64 {
    let h = d as f64 / 2.0;
    (p as f64 / 2.0 * 2f64.ln() + ln_gamma(h + p as f64 / 2.0) - ln_gamma(h)).exp()
}

/// First and second moments of `beta_{l+2j,l}(r)` under `r ~ chi_d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BetaMoments {
    pub mean: f64,
    pub second_moment: f64,
    /// `l = 0, j >= 1`: the mean vanishes identically.
    pub mean_vanishes: bool,
}

/// Closed-form moments, from term-wise `chi_d` moments of the Laguerre form.
pub fn beta_moments(d: usize, l: usize, j: usize) -> Result<BetaMoments> {
    let a = laguerre_monomials(d, l + 2 * j, l)?;
    let mean: f64 = a.iter().enumerate().map(|(i, c)| c * chi_moment(d, l + 2 * i)).sum();
    let mut second = 0.0;
    for (i, ci) in a.iter().enumerate() {
        for (k, ck) in a.iter().enumerate() {
            second += ci * ck * chi_moment(d, 2 * l + 2 * i + 2 * k);
        }
    }
    let mean_vanishes = l == 0 && j >= 1;
    Ok(BetaMoments { mean: if mean_vanishes { 0.0 } else { mean }, second_moment: second, mean_vanishes })
}
