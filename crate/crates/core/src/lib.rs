//! Two-arm forced-balance experimental designs.
//!
//! The crate builds allocation distributions (complete randomization with
//! forced balance, perfect balance, pairwise matching), computes their
//! allocation covariance `Σ_w = E[w wᵀ]`, and evaluates the mean-differences
//! estimator under worst-case, mean and tail MSE criteria, both through exact
//! quadratic-form expressions and through Monte Carlo.
//!
//! Module map:
//!
//! - [`model`]: covariates, allocations, design distributions, `Σ_w`.
//! - [`designs`]: enumeration, samplers, matching, imbalance, optimal search.
//! - [`criteria`]: conditional/mean/variance MSE, tail criterion, Efron bound,
//!   Monte Carlo quantiles and the normal-case mixture representation.
//! - [`toy`]: the paired adversarial example with an enumeration oracle.
//! - [`sim`]: the fixed-covariate simulation study and density export.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criteria;
pub mod designs;
pub mod error;
pub mod io;
pub mod model;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod tol;
pub mod toy;

pub use error::{Error, Result};
pub use model::{
    validate_design, Allocation, AllocationCovariance, CovariateMatrix, DesignDistribution,
    DesignKind, PairSet, ResponseSpec, ValidationReport,
};
