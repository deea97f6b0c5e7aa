//! Domain types: covariates, allocations, design distributions and the
//! allocation covariance `Σ_w`.

mod allocation;
mod covariates;
mod design;
mod response;
mod sigma;

pub use allocation::{Allocation, PairSet};
pub use covariates::CovariateMatrix;
pub use design::{validate_design, DesignDistribution, DesignKind, ExplicitSupport, ValidationReport};
pub use response::ResponseSpec;
pub use sigma::{
    sigma_crfb_closed, sigma_exact, sigma_pb, sigma_pm, AllocationCovariance, Spectrum,
};

use crate::error::{Error, Result};

pub(crate) fn check_subject_count(n: usize) -> Result<()> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidSubjectCount(n));
    }
    Ok(())
}

pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            actual,
        });
    }
    Ok(())
}
