//! MSE criteria for the mean-differences estimator.
//!
//! Conditional on the unobserved component `z`, the MSE over allocations is the
//! quadratic form `(f + z)ᵀ Σ_w (f + z) / n²`. Everything here is built on that
//! identity: its mean and variance over `z`, the tail criterion, the worst-case
//! (Efron) bound, Monte Carlo quantiles, and the Gaussian-noise mixture form.

mod efron;
mod estimator;
mod mixture;
mod moments;
mod montecarlo;

pub use efron::{efron_worst_case, AdversarialNoise};
pub use estimator::{beta_hat, conditional_mse, squared_error};
pub use mixture::{normal_mixture, MixtureTerm, NormalMixtureRep};
pub use moments::{
    c_constant, mean_mse, tail_q, var_mse, variance_terms, CMode, CriterionReport, VarianceTerms,
};
pub use montecarlo::{
    draw_noise, mc_mse_quantile, mc_samples, per_draw_mse, summarize, McSummary, MseEstimator, MIN_RELIABLE_DRAWS,
};
