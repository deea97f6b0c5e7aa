use super::{enumerate_balanced, match_pairs, perfect_balance, PbSolver, SearchConfig};
use crate::error::{Error, Result};
use crate::model::{CovariateMatrix, DesignDistribution, DesignKind};
use crate::tol;

/// Builds one of the three standard designs for fixed covariates.
///
/// CRFB keeps its full support up to the enumeration cap; PB is `{w*, -w*}`
/// with `w*` from brute force up to the cap and greedy search beyond; PM keeps
/// its `2^(n/2)` support up to 20 pairs.
pub fn build_design(kind: DesignKind, x: &CovariateMatrix, config: &SearchConfig) -> Result<DesignDistribution> {
    let n = x.n();
    match kind {
        DesignKind::Crfb => {
            if n <= config.max_enumeration_n {
                DesignDistribution::uniform(
                    DesignKind::Crfb,
                    enumerate_balanced(n, config.max_enumeration_n)?,
                )
            } else {
                DesignDistribution::crfb_sampled(n)
            }
        }
        DesignKind::Pb => {
            let solver = if n <= config.max_enumeration_n {
                PbSolver::Brute
            } else {
                PbSolver::Greedy {
                    restarts: config.restarts,
                }
            };
            let w = perfect_balance(x, solver, config)?.allocation;
            DesignDistribution::uniform(DesignKind::Pb, vec![w.negated(), w])
        }
        DesignKind::Pm => {
            let pairs = match_pairs(x);
            if pairs.len() <= tol::MAX_EXPLICIT_PAIRS {
                let support = (0..1u64 << pairs.len())
                    .map(|mask| pairs.flip_allocation(mask))
                    .collect();
                DesignDistribution::uniform(DesignKind::Pm, support)?.with_pairs(pairs)
            } else {
                Ok(DesignDistribution::pm_sampled(pairs))
            }
        }
        DesignKind::Explicit => Err(Error::param(
            "design kind",
            "EXPLICIT designs are supplied, not built",
        )),
    }
}
