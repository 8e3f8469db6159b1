//! Anomaly directions from the maxima of the cumulant function.
//!
//! For centered data `x_1..x_N` the empirical cumulant function along a unit
//! direction `theta` at radius `r` is `log((1/N) sum_i exp(r theta . x_i))`.
//! Its maxima over the unit sphere coincide with the first principal
//! component for small `r` and follow the heaviest tails as `r` grows.

pub mod cumulant;
pub mod error;
pub mod models;
pub mod optimizer;
pub mod pca;
pub mod tail;
pub mod types;

pub use cumulant::{
    cumulant_gradient, cumulant_profile, effective_sample_size, empirical_cumulant, evaluate, log_mean_exp,
    standard_error, Evaluation, DEFAULT_ESS_MIN,
};
pub use error::{DomainViolation, McfError, Result};
pub use models::{GammaParams, GaussianParams, ModelParams, SkewNormalParams};
pub use optimizer::{auto_radius, maximize_at_radius, mcf, Maximum, McfResult, OptimizerConfig, RadiusChoice};
pub use pca::{first_principal_component, leading_eigenpair, sample_covariance, EigenPair};
pub use tail::{find_tail_crossing, marginal_density, verify_tail_dominance, verify_theorem1, MarginalDensity, TailDominanceReport};
pub use types::{center, normalize, CumulantProfile, DataMatrix, Direction, Radius};
