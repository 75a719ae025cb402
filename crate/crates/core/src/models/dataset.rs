//! Samples, datasets, generation and conditioning on a recovered frame.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::LinkSpec;
use crate::error::{invalid, shape, Error, Result};
use crate::rng::{self, tag};
use crate::tensor_core::Frame;

/// Samples per parallel chunk; fixed so output never depends on thread count.
pub(crate) const CHUNK: usize = 256;

/// Where a dataset came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Provenance {
    pub link_hash: u64,
    pub frame_hash: u64,
    pub seed: u64,
}

/// `n` labelled samples `(y_i, z_i)` stored contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    d: usize,
    arity: usize,
    labels: Vec<f64>,
    inputs: Vec<f64>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(d: usize, arity: usize, labels: Vec<f64>, inputs: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if d == 0 || inputs.len() % d != 0 {
            return Err(shape("inputs are not a whole number of rows"));
        }
        let n = inputs.len() / d;
        if labels.len() != n * arity {
            return Err(shape(format!("expected {} label entries, got {}", n * arity, labels.len())));
        }
        if n == 0 {
            return Err(invalid("dataset must contain at least one sample"));
        }
        Ok(Dataset { d, arity, labels, inputs, provenance })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn label_arity(&self) -> usize {
        self.arity
    }

    pub fn label(&self, i: usize) -> &[f64] {
        &self.labels[i * self.arity..(i + 1) * self.arity]
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.d..(i + 1) * self.d]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    /// Contiguous sub-dataset `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Dataset> {
        if start >= end || end > self.len() {
            return Err(invalid("empty or out-of-range slice"));
        }
        Dataset::new(
            self.d,
            self.arity,
            self.labels[start * self.arity..end * self.arity].to_vec(),
            self.inputs[start * self.d..end * self.d].to_vec(),
            self.provenance,
        )
    }

    /// Split into `parts` consecutive batches of (nearly) equal size.
    pub fn split(&self, parts: usize) -> Result<Vec<Dataset>> {
        if parts == 0 || parts > self.len() {
            return Err(invalid(format!("cannot split {} samples into {parts} batches", self.len())));
        }
        let n = self.len();
        (0..parts).map(|k| self.slice(k * n / parts, (k + 1) * n / parts)).collect()
    }
}

/// Uniform draw on the unit sphere in `R^d`.
pub fn sample_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            return g.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Haar-distributed `s`-frame: QR of a Gaussian `d x s` matrix, positive diagonal.
pub fn random_frame<R: Rng + ?Sized>(d: usize, s: usize, rng: &mut R) -> Result<Frame> {
    if s > d || s == 0 {
        return Err(invalid(format!("need 1 <= s <= d, got s={s}, d={d}")));
    }
    let g = DMatrix::from_fn(d, s, |_, _| rng.sample::<f64, _>(StandardNormal));
    Frame::orthonormalized(&g)
}

/// Input `z_i` of sample `i` under `seed`; independent of the frame and link.
pub fn sample_input(d: usize, seed: u64, i: usize) -> Vec<f64> {
    sample_sphere(d, &mut rng::stream(seed, &[tag::INPUT, i as u64]))
}

/// Label of sample `i` under `seed` given its projection `u = W^T z`.
pub fn sample_label(link: &LinkSpec, u: &[f64], d: usize, seed: u64, i: usize) -> Vec<f64> {
    link.label(u, d, &mut rng::stream(seed, &[tag::LABEL, i as u64]))
}

/// Draw `n` samples of the spherical multi-index model `(link, W)`.
pub fn sample_mim(link: &LinkSpec, w: &Frame, n: usize, seed: u64) -> Result<Dataset> {
    link.validate()?;
    if w.rank() != link.s() {
        return Err(shape(format!("frame rank {} but link index s = {}", w.rank(), link.s())));
    }
    if n == 0 {
        return Err(invalid("n must be >= 1"));
    }
    let d = w.dim();
    let k = link.label_arity();
    let chunks: Vec<(Vec<f64>, Vec<f64>)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n);
            let mut ys = Vec::with_capacity((hi - lo) * k);
            let mut zs = Vec::with_capacity((hi - lo) * d);
            for i in lo..hi {
                let z = sample_input(d, seed, i);
                let u = w.coords(&z);
                ys.extend(sample_label(link, &u, d, seed, i));
                zs.extend(z);
            }
            (ys, zs)
        })
        .collect();
    let mut labels = Vec::with_capacity(n * k);
    let mut inputs = Vec::with_capacity(n * d);
    for (ys, zs) in chunks {
        labels.extend(ys);
        inputs.extend(zs);
    }
    Dataset::new(d, k, labels, inputs, Provenance { link_hash: link.hash(), frame_hash: w.hash(), seed })
}

/// Reduced sample `(y_U, z_U)` after conditioning on `U`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedSample {
    /// `(y, U^T z)`
    pub label: Vec<f64>,
    /// `U_perp^T z / |U_perp^T z|`
    pub input: Vec<f64>,
    /// `sqrt(1 - |U^T z|^2)`
    pub radius: f64,
}

/// Decompose `z = U r + sqrt(1 - |r|^2) U_perp z_U` and augment the label.
pub fn condition(y: &[f64], z: &[f64], u: &Frame, u_perp: &Frame) -> Result<ReducedSample> {
    if u.dim() != z.len() || u_perp.dim() != z.len() || u.rank() + u_perp.rank() != z.len() {
        return Err(shape("condition: frames must split R^d"));
    }
    let r = u.coords(z);
    let rest = u_perp.coords(z);
    let nrm = rest.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nrm < 1e-12 {
        return Err(Error::Degenerate("input lies inside the conditioning span".into()));
    }
    let mut label = y.to_vec();
    label.extend_from_slice(&r);
    Ok(ReducedSample { label, input: rest.into_iter().map(|x| x / nrm).collect(), radius: nrm })
}

/// Condition every sample of a dataset on `U`; degenerate samples are dropped
/// and counted.
pub fn condition_dataset(data: &Dataset, u: &Frame, u_perp: &Frame) -> Result<(Dataset, usize)> {
    if u.rank() == 0 {
        return Ok((data.clone(), 0));
    }
    let n = data.len();
    let parts: Vec<Result<(Vec<f64>, Vec<f64>, usize)>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut ys = Vec::new();
            let mut zs = Vec::new();
            let mut dropped = 0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                match condition(data.label(i), data.input(i), u, u_perp) {
                    Ok(rs) => {
                        ys.extend(rs.label);
                        zs.extend(rs.input);
                    }
                    Err(Error::Degenerate(_)) => dropped += 1,
                    Err(e) => return Err(e),
                }
            }
            Ok((ys, zs, dropped))
        })
        .collect();
    let mut labels = Vec::new();
    let mut inputs = Vec::new();
    let mut dropped = 0;
    for p in parts {
        let (ys, zs, dr) = p?;
        labels.extend(ys);
        inputs.extend(zs);
        dropped += dr;
    }
    if dropped > 0 {
        log::warn!("conditioning dropped {dropped} degenerate samples");
    }
    let ds = Dataset::new(u_perp.rank(), data.label_arity() + u.rank(), labels, inputs, data.provenance)?;
    Ok((ds, dropped))
}
