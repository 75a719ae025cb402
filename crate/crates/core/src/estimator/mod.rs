//! Kernel-weighted harmonic tensor unfolding, one step and iterated.

mod kernel;
mod mhat;
mod multistep;
mod oracle;
mod power;
mod unfold;

pub use kernel::{haar_orthogonal, symmetrize_kernel, BinTable, FeatureMap, Kernel};
pub use mhat::{mhat_matvec, MhatOperator};
pub use multistep::{multi_step, step_seed, MultiStepOptions, MultiStepOutcome, RecoveryTrace, StepRecord};
pub use oracle::{oracle_kernel, oracle_kernel_reduced, OracleOptions};
pub use power::{subspace_iteration, EigenResult, PowerOptions};
pub use unfold::{
    default_split, mad_count, one_step, one_step_with_init, OneStepDiagnostics, OneStepResult, RankRule, Solver,
    UnfoldConfig, DENSE_SOLVER_MAX,
};

#[cfg(test)]
mod tests;
