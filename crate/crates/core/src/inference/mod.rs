//! Parameter estimation: pseudo-likelihood and Monte Carlo maximum likelihood.

pub mod approx;
pub mod hull;
pub mod mcmcmle;
pub mod optimize;
pub mod pseudo;
pub mod report;
pub mod stepping;

pub use approx::{cumulant_approx, cumulant_maximizer, naive_loglik_ratio};
pub use hull::{convex_hull_gamma, in_convex_hull, GammaSearch, MarginAnchor};
pub use mcmcmle::{mcmcmle, mcmcmle_full, McmcmleOutcome};
pub use optimize::{maximize, OptimOptions, OptimResult};
pub use pseudo::{fit_pseudolikelihood, fit_pseudolikelihood_with, pseudo_log_likelihood};
pub use report::{Conventions, FitMethod, FitReport, MomentCheck, PolishStatus};
pub use stepping::{
    partial_stepping, Approximation, SteppingConfig, SteppingIteration, SteppingOutcome, SteppingTrace,
    StopReason,
};
