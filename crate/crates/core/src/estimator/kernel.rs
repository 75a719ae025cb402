//! Finite-rank label kernels `K(y, y') = sum_r T_r(y) T_r(y')`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::binning::Binning;
use crate::error::{invalid, Error, Result};
use crate::linalg;

/// Features stored per product cell of a label binning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinTable {
    pub binning: Binning,
    pub rank: usize,
    /// `n_cells x rank`, row-major.
    pub features: Vec<f64>,
}

/// How the feature vector `T(y)` is computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureMap {
    Table(BinTable),
    /// Single feature `scale * y[coord]`.
    Linear { coord: usize, scale: f64 },
    /// Concatenated copies of `base` evaluated at `(y, g_j r)`, scaled by
    /// `1/sqrt(n_rot)`, where `r = y[r_offset..r_offset + r_dim]`.
    Symmetrized { base: Box<FeatureMap>, r_offset: usize, r_dim: usize, rotations: Vec<Vec<f64>> },
}

impl FeatureMap {
    fn rank(&self) -> usize {
        match self {
            FeatureMap::Table(t) => t.rank,
            FeatureMap::Linear { .. } => 1,
            FeatureMap::Symmetrized { base, rotations, .. } => base.rank() * rotations.len(),
        }
    }

    fn min_arity(&self) -> usize {
        match self {
            FeatureMap::Table(t) => t.binning.arity(),
            FeatureMap::Linear { coord, .. } => coord + 1,
            FeatureMap::Symmetrized { base, r_offset, r_dim, .. } => base.min_arity().max(r_offset + r_dim),
        }
    }

    fn write(&self, y: &[f64], out: &mut [f64]) {
        match self {
            FeatureMap::Table(t) => {
                let c = t.binning.cell(y);
                out.copy_from_slice(&t.features[c * t.rank..(c + 1) * t.rank]);
            }
            FeatureMap::Linear { coord, scale } => out[0] = scale * y[*coord],
            FeatureMap::Symmetrized { base, r_offset, r_dim, rotations } => {
                let m = base.rank();
                let w = 1.0 / (rotations.len() as f64).sqrt();
                let mut yy = y.to_vec();
                let r = &y[*r_offset..r_offset + r_dim];
                for (g, chunk) in rotations.iter().zip(out.chunks_mut(m)) {
                    for i in 0..*r_dim {
                        yy[r_offset + i] = (0..*r_dim).map(|k| g[i * r_dim + k] * r[k]).sum();
                    }
                    base.write(&yy, chunk);
                    chunk.iter_mut().for_each(|x| *x *= w);
                }
            }
        }
    }
}

/// A finite-rank kernel with a bound `B_K` on `sum_r T_r(y)^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub map: FeatureMap,
    pub bound: f64,
}

impl Kernel {
    pub fn new(map: FeatureMap, bound: f64) -> Result<Self> {
        if !(bound > 0.0) {
            return Err(invalid("kernel bound must be positive"));
        }
        if map.rank() == 0 {
            return Err(invalid("kernel must have rank at least one"));
        }
        Ok(Kernel { map, bound })
    }

    /// `T(y) = scale * y[coord]`.
    pub fn linear(coord: usize, scale: f64, bound: f64) -> Result<Self> {
        Kernel::new(FeatureMap::Linear { coord, scale }, bound)
    }

    pub fn rank(&self) -> usize {
        self.map.rank()
    }

    /// Smallest label arity the kernel can read.
    pub fn min_arity(&self) -> usize {
        self.map.min_arity()
    }

    /// Feature vector, rescaled so that `sum_r T_r^2 <= B_K`.
    pub fn features_into(&self, y: &[f64], out: &mut [f64]) {
        self.map.write(y, out);
        let ss: f64 = out.iter().map(|x| x * x).sum();
        if ss > self.bound {
            let c = (self.bound / ss).sqrt();
            out.iter_mut().for_each(|x| *x *= c);
        }
    }

    pub fn features(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rank()];
        self.features_into(y, &mut out);
        out
    }

    pub fn eval(&self, y: &[f64], y2: &[f64]) -> f64 {
        self.features(y).iter().zip(self.features(y2)).map(|(a, b)| a * b).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("kernel serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let k: Kernel = serde_json::from_str(text).map_err(|e| Error::Format(format!("kernel: {e}")))?;
        Kernel::new(k.map, k.bound)
    }
}

/// Haar-distributed orthogonal matrix of size `n`, row-major.
pub fn haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let q = linalg::orthonormalize(&g);
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for k in 0..n {
            out.push(q[(i, k)]);
        }
    }
    out
}

/// Average `base` over `n_rot` Haar rotations of the last `s_prime` label
/// coordinates; the result has rank `m * n_rot`.
pub fn symmetrize_kernel<R: Rng + ?Sized>(
    base: &Kernel,
    arity: usize,
    s_prime: usize,
    n_rot: usize,
    rng: &mut R,
) -> Result<Kernel> {
    if s_prime == 0 || n_rot == 0 {
        return Err(invalid("symmetrization needs s' >= 1 and n_rot >= 1"));
    }
    if s_prime > arity {
        return Err(invalid("s' exceeds the label arity"));
    }
    let rotations = (0..n_rot).map(|_| haar_orthogonal(s_prime, rng)).collect();
    let map = FeatureMap::Symmetrized {
        base: Box::new(base.map.clone()),
        r_offset: arity - s_prime,
        r_dim: s_prime,
        rotations,
    };
    Kernel::new(map, base.bound)
}
