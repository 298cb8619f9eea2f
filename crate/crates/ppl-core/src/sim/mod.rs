//! Simulators for the four model families plus independent thinning.
//!
//! Every sampler is a pure function of its parameters and an [`RngSeed`];
//! replicates derive their own sub-seeds, so batches parallelize without
//! shared state.

mod dpp;
mod hardcore;
mod lgcp;
mod poisson;
mod thinning;

pub use dpp::{DppSampler, DppSpec};
pub use hardcore::{simulate_hardcore, HardCoreSpec};
pub use lgcp::{FieldMean, GaussianFieldSpec, LgcpSampler};
pub use poisson::{poisson_count, simulate_poisson, simulate_poisson_fn};
pub use thinning::thin_independent;
