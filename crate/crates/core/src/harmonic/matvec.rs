//! Structured products with unfoldings of harmonic tensors.
//!
//! `P_sym(z^{l-2j} (x) I^j)` is the average of the tensors obtained by placing
//! `j` Kronecker pairs and `l - 2j` copies of `z` on the `l` slots in every
//! possible way. For one placement the unfolded matvec factorises: column
//! slots carrying `z` or a column-column pair are summed out of `v`, the
//! remaining row-column pairs are copied across, and row slots carrying `z` or
//! a row-row pair are filled in. Each placement costs `O(d^a + d^b)`.

use crate::error::{invalid, Error, Result};
use crate::tensor_core::{h_coeffs, harmonic_dim, kappa};

/// Largest degree for which placement tables are generated.
pub const MATVEC_MAX_ORDER: usize = 4;

#[derive(Clone, Debug)]
struct Placement {
    coef: f64,
    row_single: Vec<usize>,
    row_pairs: Vec<(usize, usize)>,
    col_single: Vec<usize>,
    col_pairs: Vec<(usize, usize)>,
    /// (row slot, column slot) of pairs straddling the split
    cross: Vec<(usize, usize)>,
}

fn placements(l: usize, j: usize) -> Vec<Vec<Option<usize>>> {
    // slot -> partner slot (None for a z slot)
    fn rec(slot: usize, pairs_left: usize, singles_left: usize, cur: &mut Vec<Option<Option<usize>>>, out: &mut Vec<Vec<Option<usize>>>) {
        let l = cur.len();
        if slot == l {
            out.push(cur.iter().map(|x| x.unwrap()).collect());
            return;
        }
        if cur[slot].is_some() {
            rec(slot + 1, pairs_left, singles_left, cur, out);
            return;
        }
        if singles_left > 0 {
            cur[slot] = Some(None);
            rec(slot + 1, pairs_left, singles_left - 1, cur, out);
            cur[slot] = None;
        }
        if pairs_left > 0 {
            for k in slot + 1..l {
                if cur[k].is_none() {
                    cur[slot] = Some(Some(k));
                    cur[k] = Some(Some(slot));
                    rec(slot + 1, pairs_left - 1, singles_left, cur, out);
                    cur[k] = None;
                    cur[slot] = None;
                }
            }
        }
    }
    let mut out = Vec::new();
    rec(0, j, l - 2 * j, &mut vec![None; l], &mut out);
    out
}

/// Precomputed placement table for `Mat_{a,b}(H_{d,l}(z))`.
#[derive(Clone, Debug)]
pub struct UnfoldedHarmonic {
    d: usize,
    l: usize,
    a: usize,
    b: usize,
    terms: Vec<Placement>,
}

impl UnfoldedHarmonic {
    pub fn new(d: usize, l: usize, a: usize, b: usize) -> Result<Self> {
        if a + b != l {
            return Err(invalid(format!("split ({a},{b}) does not sum to {l}")));
        }
        if l > MATVEC_MAX_ORDER {
            return Err(Error::OrderCap { order: l, cap: MATVEC_MAX_ORDER });
        }
        let scale = kappa(d, l)? * (harmonic_dim(d, l) as f64).sqrt();
        let h = h_coeffs(d, l);
        let mut terms = Vec::new();
        for (j, &hj) in h.iter().enumerate() {
            let pl = placements(l, j);
            let coef = scale * hj / pl.len() as f64;
            for p in pl {
                let mut t = Placement {
                    coef,
                    row_single: vec![],
                    row_pairs: vec![],
                    col_single: vec![],
                    col_pairs: vec![],
                    cross: vec![],
                };
                for (slot, partner) in p.iter().enumerate() {
                    match *partner {
                        None if slot < a => t.row_single.push(slot),
                        None => t.col_single.push(slot - a),
                        Some(k) if k < slot => {}
                        Some(k) if k < a => t.row_pairs.push((slot, k)),
                        Some(k) if slot >= a => t.col_pairs.push((slot - a, k - a)),
                        Some(k) if slot < a => t.cross.push((slot, k - a)),
                        Some(_) => unreachable!(),
                    }
                }
                terms.push(t);
            }
        }
        Ok(UnfoldedHarmonic { d, l, a, b, terms })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> usize {
        self.l
    }

    pub fn split(&self) -> (usize, usize) {
        (self.a, self.b)
    }

    pub fn rows(&self) -> usize {
        self.d.pow(self.a as u32)
    }

    pub fn cols(&self) -> usize {
        self.d.pow(self.b as u32)
    }

    /// Number of placements, the constant in the `O(d^a + d^b)` cost.
    pub fn num_placements(&self) -> usize {
        self.terms.len()
    }

    /// `out += alpha * Mat_{a,b}(H(z)) v`; `scratch` is reused between calls.
    pub fn matvec_acc(&self, z: &[f64], v: &[f64], alpha: f64, out: &mut [f64], scratch: &mut Vec<f64>) {
        let d = self.d;
        debug_assert_eq!(z.len(), d);
        debug_assert_eq!(v.len(), self.cols());
        debug_assert_eq!(out.len(), self.rows());
        let mut digits = vec![0usize; self.l.max(1)];
        for t in &self.terms {
            let c = t.cross.len();
            let wlen = d.pow(c as u32);
            scratch.clear();
            scratch.resize(wlen, 0.0);
            // contract v over column singles and column pairs
            digits.iter_mut().for_each(|x| *x = 0);
            for &vj in v.iter() {
                let ok = t.col_pairs.iter().all(|&(p, q)| digits[p] == digits[q]);
                if ok && vj != 0.0 {
                    let mut prod = vj;
                    for &p in &t.col_single {
                        prod *= z[digits[p]];
                    }
                    let mut idx = 0;
                    for &(_, cs) in &t.cross {
                        idx = idx * d + digits[cs];
                    }
                    scratch[idx] += prod;
                }
                odometer(&mut digits[..self.b], d);
            }
            // scatter into rows
            let coef = alpha * t.coef;
            digits.iter_mut().for_each(|x| *x = 0);
            for o in out.iter_mut() {
                let ok = t.row_pairs.iter().all(|&(p, q)| digits[p] == digits[q]);
                if ok {
                    let mut prod = coef;
                    for &p in &t.row_single {
                        prod *= z[digits[p]];
                    }
                    let mut idx = 0;
                    for &(rs, _) in &t.cross {
                        idx = idx * d + digits[rs];
                    }
                    *o += prod * scratch[idx];
                }
                odometer(&mut digits[..self.a], d);
            }
        }
    }

    /// `Mat_{a,b}(H(z)) v`.
    pub fn matvec(&self, z: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows()];
        let mut scratch = Vec::new();
        self.matvec_acc(z, v, 1.0, &mut out, &mut scratch);
        out
    }
}

fn odometer(digits: &mut [usize], d: usize) {
    for k in (0..digits.len()).rev() {
        digits[k] += 1;
        if digits[k] < d {
            return;
        }
        digits[k] = 0;
    }
}

/// `Mat_{a,b}(H_{d,l}(z)) v` without materialising the matrix.
pub fn unfolded_matvec(z: &[f64], l: usize, a: usize, b: usize, v: &[f64]) -> Result<Vec<f64>> {
    let d = z.len();
    let op = UnfoldedHarmonic::new(d, l, a, b)?;
    if v.len() != op.cols() {
        return Err(crate::error::shape(format!("vector length {} but d^b = {}", v.len(), op.cols())));
    }
    let nrm: f64 = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (nrm - 1.0).abs() > 1e-10 {
        return Err(invalid("z must be a unit vector"));
    }
    Ok(op.matvec(z, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placement_counts() {
        // l! / (2^j j! (l-2j)!)
        assert_eq!(placements(4, 0).len(), 1);
        assert_eq!(placements(4, 1).len(), 6);
        assert_eq!(placements(4, 2).len(), 3);
        assert_eq!(placements(3, 1).len(), 3);
        assert_eq!(placements(2, 1).len(), 1);
    }

    #[test]
    fn degree_two_closed_form() {
        let d = 7;
        let mut z: Vec<f64> = (0..d).map(|i| (i as f64 + 0.5).sin()).collect();
        let n = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        z.iter_mut().for_each(|x| *x /= n);
        let v: Vec<f64> = (0..d).map(|i| (i as f64).cos()).collect();
        let out = unfolded_matvec(&z, 2, 1, 1, &v).unwrap();
        let zv: f64 = z.iter().zip(&v).map(|(a, b)| a * b).sum();
        let c = (((d + 2) * d) as f64 / 2.0).sqrt();
        for i in 0..d {
            let expect = c * (z[i] * zv - v[i] / d as f64);
            assert!((out[i] - expect).abs() < 1e-13);
        }
        let out = unfolded_matvec(&z, 1, 1, 0, &[2.0]).unwrap();
        for i in 0..d {
            assert!((out[i] - (d as f64).sqrt() * 2.0 * z[i]).abs() < 1e-13);
        }
        assert!(unfolded_matvec(&z, 2, 1, 0, &v).is_err());
        assert!(unfolded_matvec(&z, 5, 2, 3, &v).is_err());
    }
}
