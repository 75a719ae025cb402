//! Dimension counts and the scalar coefficients of the traceless projection,
//! the Fischer decomposition and the harmonic normalisation.

use crate::error::{invalid, Result};

/// Above this dimension double factorials and Pochhammer symbols are
/// accumulated in log space.
const LOG_SPACE_DIM: usize = 80;

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Binomial coefficient as an exact integer.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Dimension of the space of symmetric order-`l` tensors over `R^s`.
pub fn sym_dim(s: usize, l: usize) -> usize {
    assert!(s >= 1, "sym_dim requires s >= 1");
    binomial((s + l - 1) as u64, l as u64) as usize
}

/// Dimension of the degree-`l` spherical harmonics on the sphere in `R^d`.
pub fn harmonic_dim(d: usize, l: usize) -> u64 {
    assert!(d >= 2, "harmonic_dim requires d >= 2");
    match l {
        0 => 1,
        1 => d as u64,
        _ => {
            let c = binomial((d + l - 3) as u64, (l - 1) as u64);
            ((d + 2 * l - 2) as u128 * c / l as u128) as u64
        }
    }
}

/// Rising factorial `(x)_k`.
pub fn pochhammer(x: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (x + i as f64))
}

/// Double factorial with the convention `n!! = 1` for `n <= 0`.
pub fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// Harmonic normalising constant `kappa_{d,l}`.
pub fn kappa(d: usize, l: usize) -> Result<f64> {
    if d < 3 {
        return Err(invalid(format!("kappa requires d >= 3, got {d}")));
    }
    Ok(kappa_sq(d, l).sqrt())
}

pub(crate) fn kappa_sq(d: usize, l: usize) -> f64 {
    // 2^l (d/2-1)_l / (d-2)_l = prod_i (d-2+2i)/(d-2+i)
    let df = d as f64;
    (0..l).fold(1.0, |acc, i| acc * (df - 2.0 + 2.0 * i as f64) / (df - 2.0 + i as f64))
}

fn check_j(l: usize, j: usize) -> Result<()> {
    if 2 * j > l {
        return Err(invalid(format!("j = {j} out of range for order {l}")));
    }
    Ok(())
}

/// Coefficient `h_{l,j}` of the traceless projection, from the recursion.
pub fn h_coeff(d: usize, l: usize, j: usize) -> Result<f64> {
    check_j(l, j)?;
    let df = d as f64;
    let mut h = 1.0;
    for i in 1..=j {
        let num = ((l - 2 * i + 2) * (l - 2 * i + 1)) as f64;
        let den = 2.0 * i as f64 * (df + 2.0 * l as f64 - 2.0 * i as f64 - 2.0);
        h *= -num / den;
    }
    Ok(h)
}

/// Closed form of `h_{l,j}` through double factorials.
pub fn h_coeff_closed(d: usize, l: usize, j: usize) -> Result<f64> {
    check_j(l, j)?;
    let comb = factorial(l) / (2f64.powi(j as i32) * factorial(j) * factorial(l - 2 * j));
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    let top = d as i64 + 2 * l as i64 - 2 * j as i64 - 4;
    let bot = d as i64 + 2 * l as i64 - 4;
    let ratio = if d > LOG_SPACE_DIM {
        // log of bot!!/top!! accumulated factor by factor
        let mut lg = 0.0;
        let mut k = bot;
        while k > top.max(0) {
            lg += (k as f64).ln();
            k -= 2;
        }
        (-lg).exp()
    } else {
        double_factorial(top) / double_factorial(bot)
    };
    Ok(sign * ratio * comb)
}

/// Coefficient `f_{l,j}` of the Fischer decomposition.
pub fn f_coeff(d: usize, l: usize, j: usize) -> Result<f64> {
    check_j(l, j)?;
    let x = d as f64 / 2.0 + (l - 2 * j) as f64;
    let comb = factorial(l) / (4f64.powi(j as i32) * factorial(j) * factorial(l - 2 * j));
    let poch = if d > LOG_SPACE_DIM {
        (0..j).map(|i| (x + i as f64).ln()).sum::<f64>().exp()
    } else {
        pochhammer(x, j)
    };
    Ok(comb / poch)
}

/// All `h_{l,j}`, `j = 0..=l/2`.
pub fn h_coeffs(d: usize, l: usize) -> Vec<f64> {
    (0..=l / 2).map(|j| h_coeff(d, l, j).unwrap()).collect()
}
