//! Harmonic coefficient norms, leap complexity and degree planning, and the
//! Hermite-to-harmonic toolkit for Gaussian models.

mod hermite;
mod plan;
mod symbolic;
mod xi;

pub use hermite::{beta_coeff, beta_coeff_sum, beta_moments, hermite_tensor, BetaMoments, HERMITE_TENSOR_CAP};
pub use plan::{align_complexity, leap_plan, planted_path, Alignment, LeapPlan, Mode, PathStep, PlanStep, XiSpectrum};
pub use symbolic::{mixture_components, symbolic_plan, SymbolicComponent, SymbolicPlan, SymbolicStep};
pub use xi::{
    estimate_xi_norm_reduced, estimate_xi_spectrum_reduced, gap_rank, XiEntry, XiEstimate, XiOptions,
    JACKKNIFE_GROUPS,
};

use crate::error::{invalid, Result};
use crate::models::{LinkSpec, PlantedReduction};
use crate::tensor_core::Frame;

/// Express `u` in the coordinates of `w`; `u` must lie in the span of `w`.
fn reduction(link: &LinkSpec, w: &Frame, u: &Frame) -> Result<PlantedReduction> {
    if w.rank() != link.s() || u.dim() != w.dim() {
        return Err(invalid("frame shapes do not match the link"));
    }
    let r = w.matrix().transpose() * u.matrix();
    if (w.matrix() * &r - u.matrix()).amax() > 1e-8 {
        return Err(invalid("conditioning frame must lie in the span of the planted frame"));
    }
    PlantedReduction::new(link, w.dim(), &r)
}

/// `||xi_{U,l}||^2` for the model `(link, W)` conditioned on `U` (possibly empty).
///
/// The estimate depends on `W` and `U` only through `W^T U`, so samples are
/// drawn in frame-adapted coordinates.
pub fn estimate_xi_norm(link: &LinkSpec, w: &Frame, u: &Frame, l: usize, opts: &XiOptions, seed: u64) -> Result<XiEstimate> {
    estimate_xi_norm_reduced(&reduction(link, w, u)?, l, opts, seed)
}

/// Spectrum of the frame-coordinate second moment of `E[H_l | y]`.
pub fn estimate_xi_spectrum(link: &LinkSpec, w: &Frame, u: &Frame, l: usize, opts: &XiOptions, seed: u64) -> Result<XiEntry> {
    estimate_xi_spectrum_reduced(&reduction(link, w, u)?, l, opts, seed)
}
