//! Leap plans from prescribed coefficient scalings.
//!
//! Each component is a parity-like block on a support set whose coefficient
//! norm scales as `||xi||^2 ~ d^{-e}`. A component with `m` unrecovered
//! indices is visible at degree `l` when `l >= m` and `l = m (mod 2)`.

use std::collections::BTreeSet;

use serde::Serialize;

use super::plan::Mode;
use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymbolicComponent {
    pub support: Vec<usize>,
    /// `e` in `||xi||^2 ~ d^{-e}`.
    pub exponent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymbolicStep {
    pub degree: usize,
    /// `log_d` of the step cost.
    pub exponent: f64,
    /// Newly recovered indices.
    pub recovered: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymbolicPlan {
    pub mode: Mode,
    pub steps: Vec<SymbolicStep>,
    pub total_exponent: Option<f64>,
    pub log_factor: bool,
    pub stalled: bool,
}

impl SymbolicPlan {
    pub fn degrees(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.degree).collect()
    }
}

/// Two parities: one over `0..k1` with `||xi||^2 ~ p^2 = d^{-2 p_exp}`, one over
/// `k1-k0 .. k1-k0+k2` with weight of order one.
pub fn mixture_components(k0: usize, k1: usize, k2: usize, p_exp: f64) -> Result<Vec<SymbolicComponent>> {
    if !(k0 < k1 && k1 < k2) {
        return Err(invalid("mixture requires k0 < k1 < k2"));
    }
    let start = k1 - k0;
    Ok(vec![
        SymbolicComponent { support: (0..k1).collect(), exponent: 2.0 * p_exp },
        SymbolicComponent { support: (start..start + k2).collect(), exponent: 0.0 },
    ])
}

/// Greedy plan over degrees `1..=max_l`; ties go to the smaller degree.
pub fn symbolic_plan(components: &[SymbolicComponent], max_l: usize, mode: Mode) -> SymbolicPlan {
    let all: BTreeSet<usize> = components.iter().flat_map(|c| c.support.iter().copied()).collect();
    let mut done: BTreeSet<usize> = BTreeSet::new();
    let mut steps = Vec::new();
    let mut stalled = false;
    while done.len() < all.len() {
        let residual = |c: &SymbolicComponent| -> Vec<usize> {
            c.support.iter().copied().filter(|i| !done.contains(i)).collect()
        };
        let mut best: Option<(usize, f64, f64)> = None;
        for l in 1..=max_l {
            let xi = components
                .iter()
                .filter_map(|c| {
                    let m = residual(c).len();
                    (m > 0 && l >= m && (l - m) % 2 == 0).then_some(c.exponent)
                })
                .fold(f64::INFINITY, f64::min);
            if xi.is_infinite() {
                continue;
            }
            let cost = mode.degree_exponent(l) + xi;
            if best.map_or(true, |(_, c, _)| cost < c - 1e-12) {
                best = Some((l, cost, xi));
            }
        }
        let Some((l, cost, xi)) = best else {
            stalled = true;
            break;
        };
        let mut new: BTreeSet<usize> = BTreeSet::new();
        for c in components {
            let r = residual(c);
            let m = r.len();
            if m > 0 && l >= m && (l - m) % 2 == 0 && c.exponent == xi {
                new.extend(r);
            }
        }
        done.extend(new.iter().copied());
        steps.push(SymbolicStep { degree: l, exponent: cost, recovered: new.into_iter().collect() });
    }
    let total_exponent = (!stalled).then(|| steps.iter().map(|s| s.exponent).fold(f64::MIN, f64::max));
    SymbolicPlan { mode, steps, total_exponent, log_factor: mode == Mode::Query, stalled }
}
