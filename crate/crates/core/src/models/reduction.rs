//! Sampling the reduced model in frame-adapted coordinates.
//!
//! All statistics of a spherical multi-index model are rotation invariant, so
//! population quantities (harmonic coefficient norms, oracle kernels) are
//! computed with the planted frame equal to the first `s` coordinate vectors.
//! Conditioning on `U = W R` (with `R` an `s x s_U` orthonormal block) then uses
//! the complement `U_perp = diag(C, I)`, `C` spanning the complement of `R` in
//! `R^s`, so the residual signal lives in the first `s - s_U` coordinates of
//! the reduced input.

use nalgebra::DMatrix;

use super::dataset::{sample_input, sample_label};
use super::LinkSpec;
use crate::error::{invalid, Error, Result};
use crate::linalg;

#[derive(Clone, Debug)]
pub struct PlantedReduction {
    link: LinkSpec,
    d: usize,
    r: DMatrix<f64>,
    c: DMatrix<f64>,
}

impl PlantedReduction {
    /// `recovered` is `s x s_U` with orthonormal columns (frame coordinates).
    pub fn new(link: &LinkSpec, d: usize, recovered: &DMatrix<f64>) -> Result<Self> {
        link.validate()?;
        let s = link.s();
        if recovered.nrows() != s {
            return Err(invalid("recovered block must have s rows"));
        }
        if d <= s {
            return Err(invalid(format!("ambient dimension d={d} must exceed s={s}")));
        }
        let k = recovered.ncols();
        if k > 0 {
            let g = recovered.transpose() * recovered;
            if (g - DMatrix::<f64>::identity(k, k)).amax() > 1e-10 {
                return Err(invalid("recovered block is not orthonormal"));
            }
        }
        Ok(PlantedReduction { link: link.clone(), d, r: recovered.clone(), c: linalg::complement(recovered) })
    }

    pub fn link(&self) -> &LinkSpec {
        &self.link
    }

    /// Ambient dimension of the original model.
    pub fn ambient_dim(&self) -> usize {
        self.d
    }

    /// Dimension `d - s_U` of the reduced inputs.
    pub fn reduced_dim(&self) -> usize {
        self.d - self.r.ncols()
    }

    /// Rank `s - s_U` of the residual signal frame.
    pub fn residual_rank(&self) -> usize {
        self.c.ncols()
    }

    pub fn label_arity(&self) -> usize {
        self.link.label_arity() + self.r.ncols()
    }

    pub fn recovered(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn residual_basis(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Sample `i` of the reduced model: augmented label and reduced input.
    pub fn sample(&self, seed: u64, i: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let s = self.link.s();
        let z = sample_input(self.d, seed, i);
        let u = &z[..s];
        let mut y = sample_label(&self.link, u, self.d, seed, i);
        let uv = nalgebra::DVector::from_column_slice(u);
        let r = self.r.transpose() * &uv;
        let rr = r.norm_squared();
        if rr >= 1.0 - 1e-24 {
            return Err(Error::Degenerate("input inside the conditioning span".into()));
        }
        let scale = 1.0 / (1.0 - rr).sqrt();
        y.extend(r.iter());
        let mut zu = Vec::with_capacity(self.reduced_dim());
        let cu = self.c.transpose() * &uv;
        zu.extend(cu.iter().map(|x| x * scale));
        zu.extend(z[s..].iter().map(|x| x * scale));
        Ok((y, zu))
    }
}
