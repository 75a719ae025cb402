//! Monte Carlo estimates of `||xi_{U,l}||^2 = E ||E[H_l(z_U) | y_U]||^2` and of
//! the second moment of the frame coordinates of `E[H | y]`.
//!
//! Labels are cut into equal-mass product bins. Within a bin the squared mean
//! is estimated by the pair U-statistic, which has no diagonal bias. Standard
//! errors come from a grouped jackknife.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::binning::{default_bins, Binning};
use crate::error::{invalid, Result};
use crate::harmonic::{FrameCoefficients, GegenbauerBasis};
use crate::linalg;
use crate::models::PlantedReduction;
use crate::tensor_core::Tensor;

/// Jackknife groups; sample `i` belongs to group `i mod JACKKNIFE_GROUPS`.
pub const JACKKNIFE_GROUPS: usize = 20;

/// Settings shared by the estimators of this module.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XiOptions {
    pub n_mc: usize,
    /// Bins per label coordinate; default `ceil(n_mc^{1/3})` total cells, capped at 64 per coordinate.
    pub n_bins: Option<usize>,
    /// Relative floor `c_mu` of the gap rule.
    pub c_mu: f64,
    /// Ratio `gamma` required between consecutive kept eigenvalues.
    pub gamma: f64,
    /// Relative tolerance for the unfolding ranks `t` and `s0`.
    pub rank_tol: f64,
}

impl Default for XiOptions {
    fn default() -> Self {
        XiOptions { n_mc: 100_000, n_bins: None, c_mu: 0.5, gamma: 4.0, rank_tol: 0.1 }
    }
}

impl XiOptions {
    fn bins(&self, arity: usize) -> usize {
        self.n_bins.unwrap_or_else(|| {
            let per = (self.n_mc as f64).powf(1.0 / (3.0 * arity as f64)).ceil() as usize;
            per.clamp(1, default_bins(self.n_mc))
        })
    }
}

/// Estimate with a jackknife standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct XiEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

fn jackknife(full: f64, loo: &[f64]) -> XiEstimate {
    let g = loo.len() as f64;
    let mean = loo.iter().sum::<f64>() / g;
    let var = (g - 1.0) / g * loo.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    XiEstimate { estimate: full, std_error: var.sqrt() }
}

/// Labels of the reduced model; inputs are regenerated on demand from the
/// per-sample streams.
fn labels(red: &PlantedReduction, n: usize, seed: u64) -> Result<(Vec<f64>, Vec<bool>)> {
    let arity = red.label_arity();
    let rows: Vec<Result<Option<Vec<f64>>>> = (0..n)
        .into_par_iter()
        .map(|i| match red.sample(seed, i) {
            Ok((y, _)) => Ok(Some(y)),
            Err(crate::Error::Degenerate(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();
    let mut ys = vec![0.0; n * arity];
    let mut ok = vec![false; n];
    for (i, r) in rows.into_iter().enumerate() {
        if let Some(y) = r? {
            ys[i * arity..(i + 1) * arity].copy_from_slice(&y);
            ok[i] = true;
        }
    }
    Ok((ys, ok))
}

/// Sample indices per bin, in increasing order.
fn bin_members(red: &PlantedReduction, opts: &XiOptions, seed: u64) -> Result<(Vec<Vec<usize>>, usize)> {
    let arity = red.label_arity();
    let (ys, ok) = labels(red, opts.n_mc, seed)?;
    let kept: Vec<usize> = (0..opts.n_mc).filter(|&i| ok[i]).collect();
    let flat: Vec<f64> = kept.iter().flat_map(|&i| ys[i * arity..(i + 1) * arity].to_vec()).collect();
    let binning = Binning::equal_mass(&flat, arity, &vec![opts.bins(arity); arity])?;
    let mut members = vec![Vec::new(); binning.n_cells()];
    for &i in &kept {
        members[binning.cell(&ys[i * arity..(i + 1) * arity])].push(i);
    }
    let usable: usize = members.iter().filter(|m| m.len() >= 2).map(|m| m.len()).sum();
    if usable * 2 < kept.len() || usable == 0 {
        return Err(invalid(format!(
            "too few samples per bin: {usable} of {} samples fall in bins with at least two members",
            kept.len()
        )));
    }
    Ok((members, kept.len()))
}

/// `||xi_{U,l}||^2` for the reduced planted model, via
/// `<H(z_i), H(z_j)> = sqrt(N) Q_l(<z_i, z_j>)`.
pub fn estimate_xi_norm_reduced(red: &PlantedReduction, l: usize, opts: &XiOptions, seed: u64) -> Result<XiEstimate> {
    if l == 0 {
        return Ok(XiEstimate { estimate: 1.0, std_error: 0.0 });
    }
    let d = red.reduced_dim();
    let (members, n) = bin_members(red, opts, seed)?;
    let basis = GegenbauerBasis::new(d, l)?;
    let coeffs = basis.kernel_monomials(l);
    let g = JACKKNIFE_GROUPS;
    // power sums cost n * sum_k d^k, pairs cost sum_b n_b^2 d
    let power_cost: f64 = (0..=l).filter(|k| coeffs[*k] != 0.0).map(|k| (d as f64).powi(k as i32)).sum::<f64>() * n as f64;
    let pair_cost: f64 = members.iter().map(|m| (m.len() as f64).powi(2)).sum::<f64>() * d as f64;
    let memory_ok = (d as f64).powi(l as i32) * g as f64 <= 4e7;
    let use_power = memory_ok && power_cost <= pair_cost;
    let pairs: Vec<(usize, f64, Vec<(usize, f64)>)> = members
        .par_iter()
        .map(|m| {
            let zs: Vec<Vec<f64>> = m.iter().map(|&i| red.sample(seed, i).expect("checked in pass one").1).collect();
            let groups: Vec<usize> = m.iter().map(|&i| i % g).collect();
            if use_power {
                power_sum_bin(&zs, &groups, &coeffs)
            } else {
                pairwise_bin(&zs, &groups, &basis, l)
            }
        })
        .collect();
    Ok(combine_groups(&pairs, n))
}

/// Per-bin result: `(n_b, pair sum, per group (n_b without g, pair sum without g))`.
type BinPairs = (usize, f64, Vec<(usize, f64)>);

fn combine_groups(pairs: &[BinPairs], n: usize) -> XiEstimate {
    let g = JACKKNIFE_GROUPS;
    let stat = |nb: usize, s: f64| if nb >= 2 { s / (nb as f64 * (nb as f64 - 1.0)) } else { 0.0 };
    let full: f64 = pairs.iter().map(|(nb, s, _)| *nb as f64 / n as f64 * stat(*nb, *s)).sum();
    let mut n_minus = vec![n as f64; g];
    for (nb, _, per) in pairs {
        for k in 0..g {
            n_minus[k] -= (*nb - per[k].0) as f64;
        }
    }
    let mut loo = vec![0.0; g];
    for (_, _, per) in pairs {
        for k in 0..g {
            let (nb, s) = per[k];
            loo[k] += nb as f64 / n_minus[k] * stat(nb, s);
        }
    }
    jackknife(full, &loo)
}

fn power_sum_bin(zs: &[Vec<f64>], groups: &[usize], coeffs: &[f64]) -> BinPairs {
    let g = JACKKNIFE_GROUPS;
    let nb = zs.len();
    let mut counts = vec![0usize; g];
    groups.iter().for_each(|&k| counts[k] += 1);
    let mut total = 0.0;
    let mut per = vec![0.0; g];
    for (k, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        if nb < 2 {
            continue;
        }
        let dim = zs[0].len().pow(k as u32);
        let mut sg = vec![vec![0.0; dim]; g];
        for (z, &grp) in zs.iter().zip(groups) {
            let p = Tensor::outer_power(z, k);
            sg[grp].iter_mut().zip(p.data()).for_each(|(a, b)| *a += b);
        }
        let mut s = vec![0.0; dim];
        for v in &sg {
            s.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        }
        let ss: f64 = s.iter().map(|x| x * x).sum();
        // |z| = 1, so sum_i <z_i, z_i>^k = n_b
        total += c * (ss - nb as f64);
        for q in 0..g {
            let sq: f64 = sg[q].iter().map(|x| x * x).sum();
            let cross: f64 = s.iter().zip(&sg[q]).map(|(a, b)| a * b).sum();
            per[q] += c * (ss - 2.0 * cross + sq - (nb - counts[q]) as f64);
        }
    }
    (nb, total, (0..g).map(|q| (nb - counts[q], per[q])).collect())
}

fn pairwise_bin(zs: &[Vec<f64>], groups: &[usize], basis: &GegenbauerBasis, l: usize) -> BinPairs {
    let g = JACKKNIFE_GROUPS;
    let nb = zs.len();
    let mut counts = vec![0usize; g];
    groups.iter().for_each(|&k| counts[k] += 1);
    let mut block = vec![0.0; g * g];
    for i in 0..nb {
        for j in 0..i {
            let t: f64 = zs[i].iter().zip(&zs[j]).map(|(a, b)| a * b).sum();
            let k = basis.kernel(l, t);
            let (gi, gj) = (groups[i], groups[j]);
            block[gi * g + gj] += k;
            block[gj * g + gi] += k;
        }
    }
    let total: f64 = block.iter().sum();
    let per = (0..g)
        .map(|q| {
            let row: f64 = (0..g).map(|h| block[q * g + h]).sum();
            let col: f64 = (0..g).map(|h| block[h * g + q]).sum();
            (nb - counts[q], total - row - col + block[q * g + q])
        })
        .collect();
    (nb, total, per)
}

/// One degree of an [`XiSpectrum`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XiEntry {
    pub degree: usize,
    /// Trace of the estimated second moment, `||xi||^2`.
    pub xi_norm_sq: f64,
    pub std_error: f64,
    /// Eigenvalues `mu_1 >= mu_2 >= ...` of the second moment.
    pub eigenvalues: Vec<f64>,
    /// Rank chosen by the gap rule.
    pub rank: usize,
    /// Unfolding rank `t` under the default split.
    pub t: usize,
    /// Rank of the contracted signal, `s0`.
    pub s0: usize,
    /// Top-`rank` eigenvectors as symmetric tensors over the residual frame.
    #[serde(skip)]
    pub signal: Vec<(f64, Tensor)>,
}

impl XiEntry {
    /// Nonzero beyond three standard errors and with a nonempty signal.
    pub fn has_signal(&self) -> bool {
        self.rank > 0 && self.xi_norm_sq > 3.0 * self.std_error
    }

    /// Orthonormal basis (`s' x s0`, residual coordinates) of the directions the signal reaches.
    pub fn signal_directions(&self) -> DMatrix<f64> {
        match contracted(&self.signal, 1) {
            Some(p) => {
                let (_, vecs) = linalg::sym_eigen_desc(&p);
                vecs.columns(0, self.s0).into_owned()
            }
            None => DMatrix::zeros(0, 0),
        }
    }
}

/// `sum_k mu_k Mat_{a, l-a}(B_k) Mat_{a, l-a}(B_k)^T`.
fn contracted(signal: &[(f64, Tensor)], a: usize) -> Option<DMatrix<f64>> {
    let (_, first) = signal.first()?;
    let s = first.dim();
    let l = first.order();
    let rows = s.pow(a as u32);
    let cols = s.pow((l - a) as u32);
    let mut p = DMatrix::zeros(rows, rows);
    for (mu, b) in signal {
        let m = DMatrix::from_row_slice(rows, cols, b.data());
        p += &m * m.transpose() * *mu;
    }
    Some(p)
}

/// Gap rule: the largest `r` with `mu_r >= max(c_mu mu_1, floor)` and
/// `mu_r / mu_{r+1} >= gamma` (`mu_{D+1} = 0`).
pub fn gap_rank(mu: &[f64], c_mu: f64, gamma: f64, floor: f64) -> usize {
    let Some(&top) = mu.first() else { return 0 };
    let thr = (c_mu * top).max(floor);
    let mut best = 0;
    for r in 1..=mu.len() {
        if mu[r - 1] < thr || mu[r - 1] <= 0.0 {
            break;
        }
        let next = mu.get(r).copied().unwrap_or(0.0).max(0.0);
        if next == 0.0 || mu[r - 1] / next >= gamma {
            best = r;
        }
    }
    best
}

/// Spectrum of the frame-coordinate second moment at degree `l`.
pub fn estimate_xi_spectrum_reduced(red: &PlantedReduction, l: usize, opts: &XiOptions, seed: u64) -> Result<XiEntry> {
    let sr = red.residual_rank();
    let fc = FrameCoefficients::new(red.reduced_dim(), sr, l)?;
    let dim = fc.dim();
    if l == 0 {
        return Ok(XiEntry {
            degree: 0,
            xi_norm_sq: 1.0,
            std_error: 0.0,
            eigenvalues: vec![1.0],
            rank: 0,
            t: 0,
            s0: 0,
            signal: Vec::new(),
        });
    }
    if dim == 0 {
        return Ok(XiEntry { degree: l, xi_norm_sq: 0.0, std_error: 0.0, eigenvalues: vec![], rank: 0, t: 0, s0: 0, signal: vec![] });
    }
    let (members, n) = bin_members(red, opts, seed)?;
    let g = JACKKNIFE_GROUPS;
    // per bin: count, U-statistic matrix, per group (count without g, matrix without g)
    type BinMoment = (usize, DMatrix<f64>, Vec<(usize, DMatrix<f64>)>);
    let per_bin: Vec<BinMoment> = members
        .par_iter()
        .map(|m| {
            let nb = m.len();
            let mut sg = vec![DVector::zeros(dim); g];
            let mut qg = vec![DMatrix::zeros(dim, dim); g];
            let mut counts = vec![0usize; g];
            for &i in m {
                let z = red.sample(seed, i).expect("checked in pass one").1;
                let c = DVector::from_vec(fc.coeffs(&z[..sr]));
                let k = i % g;
                counts[k] += 1;
                qg[k].ger(1.0, &c, &c, 1.0);
                sg[k] += c;
            }
            let s: DVector<f64> = sg.iter().fold(DVector::zeros(dim), |a, b| a + b);
            let q: DMatrix<f64> = qg.iter().fold(DMatrix::zeros(dim, dim), |a, b| a + b);
            let ustat = |cnt: usize, s: &DVector<f64>, q: &DMatrix<f64>| {
                if cnt < 2 {
                    DMatrix::zeros(dim, dim)
                } else {
                    (s * s.transpose() - q) / (cnt as f64 * (cnt as f64 - 1.0))
                }
            };
            let full = ustat(nb, &s, &q);
            let per = (0..g)
                .map(|k| {
                    let cnt = nb - counts[k];
                    (cnt, ustat(cnt, &(&s - &sg[k]), &(&q - &qg[k])))
                })
                .collect();
            (nb, full, per)
        })
        .collect();
    let mut ups = DMatrix::zeros(dim, dim);
    let mut n_minus = vec![n as f64; g];
    for (nb, full, per) in &per_bin {
        ups += full * (*nb as f64 / n as f64);
        for k in 0..g {
            n_minus[k] -= (*nb - per[k].0) as f64;
        }
    }
    let mut loo = vec![0.0; g];
    for (_, _, per) in &per_bin {
        for k in 0..g {
            loo[k] += per[k].1.trace() * per[k].0 as f64 / n_minus[k];
        }
    }
    let tr = jackknife(ups.trace(), &loo);
    let (mu, vecs) = linalg::sym_eigen_desc(&ups);
    let rank = gap_rank(&mu, opts.c_mu, opts.gamma, 3.0 * tr.std_error);
    let signal: Vec<(f64, Tensor)> =
        (0..rank).map(|k| (mu[k], fc.frame_tensor(vecs.column(k).as_slice()))).collect();
    let (a, _) = crate::estimator::default_split(l);
    let t = contracted(&signal, a).map_or(0, |p| linalg::psd_rank(&p, opts.rank_tol));
    let s0 = contracted(&signal, 1).map_or(0, |p| linalg::psd_rank(&p, opts.rank_tol));
    Ok(XiEntry { degree: l, xi_norm_sq: tr.estimate, std_error: tr.std_error, eigenvalues: mu, rank, t, s0, signal })
}
