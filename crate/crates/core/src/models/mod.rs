//! Spherical multi-index models: link library, data generation, file formats
//! and conditioning on a recovered subspace.

mod dataset;
pub mod io;
mod link;
mod reduction;

pub use dataset::{
    condition, condition_dataset, random_frame, sample_input, sample_label, sample_mim, sample_sphere, Dataset,
    Provenance, ReducedSample,
};
pub use link::{chi, default_staircase, hermite_normalized, LinkSpec, ScalarLink, VectorLink};
pub use reduction::PlantedReduction;
