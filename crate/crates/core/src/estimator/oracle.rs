//! Oracle kernels `K(y, y') = lambda(y)^T E[lambda lambda^T]^+ lambda(y')`
//! with `lambda(y) = E[c(z) | y]` estimated by label binning on a calibration
//! sample of the planted model.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::kernel::{BinTable, FeatureMap, Kernel};
use crate::binning::Binning;
use crate::error::{Error, Result};
use crate::harmonic::FrameCoefficients;
use crate::linalg;
use crate::models::{LinkSpec, PlantedReduction};
use crate::rng::{self, tag};

/// Calibration settings for [`oracle_kernel`].
#[derive(Clone, Debug, PartialEq)]
pub struct OracleOptions {
    pub n_cal: usize,
    /// Bins per label coordinate.
    pub n_bins: usize,
    /// Eigenvalues below `rel_threshold * mu_1` are discarded.
    pub rel_threshold: f64,
    /// Cap on `sum_r T_r(y)^2`.
    pub bound: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { n_cal: 50_000, n_bins: 10, rel_threshold: 0.02, bound: 50.0 }
    }
}

/// Per-cell sufficient statistics of the frame coordinates.
struct CellStats {
    count: Vec<usize>,
    sum: Vec<DVector<f64>>,
    sum_sq: Vec<DMatrix<f64>>,
}

/// Samples of the reduced planted model, with frame coordinates of the residual signal.
fn calibration_sample(
    red: &PlantedReduction,
    l: usize,
    n: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let fc = FrameCoefficients::new(red.reduced_dim(), red.residual_rank(), l)?;
    let sr = red.residual_rank();
    let arity = red.label_arity();
    let chunk = 1024;
    let parts: Vec<Result<(Vec<f64>, Vec<Vec<f64>>)>> = (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut ys = Vec::new();
            let mut cs = Vec::new();
            for i in c * chunk..((c + 1) * chunk).min(n) {
                match red.sample(seed, i) {
                    Ok((y, z)) => {
                        ys.extend_from_slice(&y[..arity]);
                        cs.push(fc.coeffs(&z[..sr]));
                    }
                    Err(Error::Degenerate(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            Ok((ys, cs))
        })
        .collect();
    let mut ys = Vec::new();
    let mut cs = Vec::new();
    for p in parts {
        let (y, c) = p?;
        ys.extend(y);
        cs.extend(c);
    }
    Ok((ys, cs))
}

fn cell_stats(binning: &Binning, ys: &[f64], cs: &[Vec<f64>], arity: usize, dim: usize) -> CellStats {
    let cells = binning.n_cells();
    let mut st = CellStats {
        count: vec![0; cells],
        sum: vec![DVector::zeros(dim); cells],
        sum_sq: vec![DMatrix::zeros(dim, dim); cells],
    };
    for (i, c) in cs.iter().enumerate() {
        let b = binning.cell(&ys[i * arity..(i + 1) * arity]);
        let v = DVector::from_column_slice(c);
        st.count[b] += 1;
        st.sum[b] += &v;
        st.sum_sq[b].ger(1.0, &v, &v, 1.0);
    }
    st
}

/// Oracle kernel for the unconditioned model `link` in dimension `d` at degree `l`.
pub fn oracle_kernel(link: &LinkSpec, d: usize, l: usize, opts: &OracleOptions, seed: u64) -> Result<Kernel> {
    let red = PlantedReduction::new(link, d, &DMatrix::zeros(link.s(), 0))?;
    oracle_kernel_reduced(&red, l, opts, seed)
}

/// Oracle kernel over augmented labels `(y, r)` of a reduced planted model.
pub fn oracle_kernel_reduced(red: &PlantedReduction, l: usize, opts: &OracleOptions, seed: u64) -> Result<Kernel> {
    let dim = crate::harmonic::FrameCoefficients::new(red.reduced_dim(), red.residual_rank(), l)?.dim();
    if dim == 0 || l == 0 {
        return Err(Error::Degenerate("no residual signal at this degree".into()));
    }
    let arity = red.label_arity();
    let (ys, cs) = calibration_sample(red, l, opts.n_cal, rng::derive(seed, &[tag::CALIBRATION, l as u64]))?;
    let n = cs.len();
    let binning = Binning::equal_mass(&ys, arity, &vec![opts.n_bins; arity])?;
    let st = cell_stats(&binning, &ys, &cs, arity, dim);
    let cells = binning.n_cells();
    let nf = n as f64;
    let mut second = DMatrix::zeros(dim, dim);
    let mut bias = DMatrix::zeros(dim, dim);
    let mut means = vec![DVector::zeros(dim); cells];
    let mut used = 0;
    for b in 0..cells {
        let nb = st.count[b];
        if nb < 2 {
            continue;
        }
        used += 1;
        let nbf = nb as f64;
        let mean = &st.sum[b] / nbf;
        let p = nbf / nf;
        second.ger(p, &mean, &mean, 1.0);
        let cov = (&st.sum_sq[b] - &mean * mean.transpose() * nbf) / (nbf - 1.0);
        bias += cov * (p / nbf);
        means[b] = mean;
    }
    if used == 0 {
        return Err(Error::Degenerate("every label cell is empty".into()));
    }
    let (bias_vals, _) = linalg::sym_eigen_desc(&bias);
    let floor = 3.0 * bias_vals.first().copied().unwrap_or(0.0).max(0.0);
    let (mu, vecs) = linalg::sym_eigen_desc(&(second - bias));
    let top = mu[0];
    let keep: Vec<usize> = (0..dim).filter(|&r| mu[r] > (opts.rel_threshold * top).max(floor) && mu[r] > 0.0).collect();
    log::debug!("oracle kernel: eigenvalues {mu:?}, floor {floor:.3e}, rank {}", keep.len());
    if keep.is_empty() {
        return Err(Error::Degenerate(format!(
            "label-conditional mean is indistinguishable from zero (top eigenvalue {top:.3e}, noise floor {floor:.3e})"
        )));
    }
    let rank = keep.len();
    let mut features = vec![0.0; cells * rank];
    for b in 0..cells {
        if st.count[b] < 2 {
            continue;
        }
        for (k, &r) in keep.iter().enumerate() {
            features[b * rank + k] = vecs.column(r).dot(&means[b]) / mu[r].sqrt();
        }
    }
    Kernel::new(FeatureMap::Table(BinTable { binning, rank, features }), opts.bound)
}
