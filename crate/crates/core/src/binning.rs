//! Equal-mass product binning of real label vectors.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Interior cut points per label coordinate; a label falls in the product
/// cell given by the number of cut points below each coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub edges: Vec<Vec<f64>>,
}

impl Binning {
    /// Equal-mass cut points from calibration labels (`n x arity`, row-major).
    ///
    /// Each target quantile is moved to the nearest change point of the sorted
    /// values and duplicate cuts are dropped, so tied labels never straddle a
    /// cut and discrete labels get one bin per value.
    pub fn equal_mass(labels: &[f64], arity: usize, n_bins: &[usize]) -> Result<Self> {
        if arity == 0 || labels.len() % arity != 0 || labels.is_empty() {
            return Err(invalid("binning needs a nonempty label matrix"));
        }
        if n_bins.len() != arity || n_bins.iter().any(|&b| b == 0) {
            return Err(invalid("one positive bin count per label coordinate required"));
        }
        let n = labels.len() / arity;
        let mut edges = Vec::with_capacity(arity);
        for (c, &nb) in n_bins.iter().enumerate() {
            let mut v: Vec<f64> = (0..n).map(|i| labels[i * arity + c]).collect();
            v.sort_by(|a, b| a.total_cmp(b));
            let changes: Vec<usize> = (1..n).filter(|&j| v[j - 1] < v[j]).collect();
            let mut cuts = Vec::new();
            if !changes.is_empty() {
                for k in 1..nb {
                    let target = (k * n + nb / 2) / nb;
                    let pos = changes.partition_point(|&j| j < target);
                    let best = match (pos.checked_sub(1).map(|p| changes[p]), changes.get(pos)) {
                        (Some(lo), Some(&hi)) => {
                            if target - lo <= hi - target {
                                lo
                            } else {
                                hi
                            }
                        }
                        (Some(lo), None) => lo,
                        (None, Some(&hi)) => hi,
                        (None, None) => unreachable!(),
                    };
                    cuts.push(0.5 * (v[best - 1] + v[best]));
                }
            }
            cuts.sort_by(|a, b| a.total_cmp(b));
            cuts.dedup();
            edges.push(cuts);
        }
        Ok(Binning { edges })
    }

    pub fn arity(&self) -> usize {
        self.edges.len()
    }

    pub fn n_cells(&self) -> usize {
        self.edges.iter().map(|e| e.len() + 1).product()
    }

    /// Product cell of a label; extra trailing label coordinates are ignored.
    pub fn cell(&self, y: &[f64]) -> usize {
        let mut idx = 0;
        for (c, e) in self.edges.iter().enumerate() {
            let b = e.partition_point(|&cut| cut < y[c]);
            idx = idx * (e.len() + 1) + b;
        }
        idx
    }
}

/// Default bin count `ceil(n^{1/3})`, capped at 64.
pub fn default_bins(n: usize) -> usize {
    ((n as f64).cbrt().ceil() as usize).clamp(1, 64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuous_labels_equal_mass() {
        let labels: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = Binning::equal_mass(&labels, 1, &[10]).unwrap();
        assert_eq!(b.n_cells(), 10);
        let mut counts = vec![0; 10];
        for &y in &labels {
            counts[b.cell(&[y])] += 1;
        }
        assert!(counts.iter().all(|&c| (95..=105).contains(&c)), "{counts:?}");
    }

    #[test]
    fn tied_labels_one_bin_per_value() {
        let labels: Vec<f64> = (0..999).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let b = Binning::equal_mass(&labels, 1, &[8]).unwrap();
        assert_eq!(b.n_cells(), 2);
        assert_ne!(b.cell(&[1.0]), b.cell(&[-1.0]));
        let constant = vec![0.5; 20];
        let b = Binning::equal_mass(&constant, 1, &[4]).unwrap();
        assert_eq!(b.n_cells(), 1);
    }

    #[test]
    fn product_cells() {
        let labels: Vec<f64> = (0..400).flat_map(|i| [(i % 2) as f64, (i / 2) as f64]).collect();
        let b = Binning::equal_mass(&labels, 2, &[2, 4]).unwrap();
        assert_eq!(b.n_cells(), 8);
        assert_eq!(b.cell(&[1.0, 199.0]), 7);
        assert_eq!(b.cell(&[0.0, 0.0, 123.0]), 0);
        assert_eq!(default_bins(200_000), 59);
        assert_eq!(default_bins(10_000_000), 64);
    }
}
