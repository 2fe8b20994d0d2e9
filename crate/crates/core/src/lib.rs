//! Classical and tapered Potts models for multi-category lattice data.
//!
//! The crate covers exact statistics on small lattices, MCMC simulation
//! (single-site Gibbs with a global color swap, Swendsen-Wang), maximum
//! pseudo-likelihood and MCMC maximum-likelihood fitting driven by the
//! partial-stepping algorithm, tapering-parameter selection, lack-of-fit
//! diagnostics and a Gaussian-process benchmark generator.

pub mod error;
pub mod exact;
pub mod inference;
pub mod io;
pub mod lattice;
pub mod sampler;
pub mod scenario;
pub mod stats;
pub mod tapering;

pub use error::{PottsError, Result};
pub use lattice::{
    delta_s, phase_transition_beta, suff_stats, unnormalized_log_prob, Boundary, Grid, Lattice,
    PottsParams, SuffStats, TaperingSpec,
};
