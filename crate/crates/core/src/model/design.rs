use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_len, check_subject_count, Allocation, AllocationCovariance, PairSet};
use crate::designs;
use crate::error::{Error, Result};
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DesignKind {
    /// Complete randomization with forced balance.
    Crfb,
    /// Perfect balance: `{w*, -w*}`.
    Pb,
    /// Pairwise matching with randomization inside each pair.
    Pm,
    /// Any other explicitly listed distribution.
    Explicit,
}

impl DesignKind {
    pub const ALL: [DesignKind; 3] = [DesignKind::Crfb, DesignKind::Pb, DesignKind::Pm];

    /// Stable numeric tag used to key random streams.
    pub fn tag(self) -> u32 {
        match self {
            DesignKind::Crfb => 0,
            DesignKind::Pb => 1,
            DesignKind::Pm => 2,
            DesignKind::Explicit => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DesignKind::Crfb => "CRFB",
            DesignKind::Pb => "PB",
            DesignKind::Pm => "PM",
            DesignKind::Explicit => "EXPLICIT",
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DesignKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CRFB" => Ok(DesignKind::Crfb),
            "PB" => Ok(DesignKind::Pb),
            "PM" => Ok(DesignKind::Pm),
            "EXPLICIT" => Ok(DesignKind::Explicit),
            _ => Err(Error::param(
                "design kind",
                format!("{s:?} (expected crfb, pb, pm or explicit)"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplicitSupport {
    pub allocations: Vec<Allocation>,
    pub probs: Vec<f64>,
}

/// A distribution over allocations.
///
/// Small designs carry their full support. Complete randomization and
/// pairwise matching at large `n` are represented only by their kind (and
/// pairs), which is enough to sample and to build `Σ_w` in closed form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DesignRecord", into = "DesignRecord")]
pub struct DesignDistribution {
    kind: DesignKind,
    n: usize,
    support: Option<ExplicitSupport>,
    pairs: Option<PairSet>,
}

impl DesignDistribution {
    pub fn explicit(kind: DesignKind, allocations: Vec<Allocation>, probs: Vec<f64>) -> Result<Self> {
        let first = allocations
            .first()
            .ok_or_else(|| Error::InvalidDesign("empty support".into()))?;
        let n = first.len();
        check_len("probabilities", allocations.len(), probs.len())?;
        for w in &allocations {
            check_len("allocation", n, w.len())?;
        }
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("design probabilities"));
        }
        if kind == DesignKind::Crfb || kind == DesignKind::Pm || kind == DesignKind::Pb {
            check_subject_count(n)?;
        }
        Ok(Self {
            kind,
            n,
            support: Some(ExplicitSupport { allocations, probs }),
            pairs: None,
        })
    }

    pub fn uniform(kind: DesignKind, allocations: Vec<Allocation>) -> Result<Self> {
        let p = 1.0 / allocations.len().max(1) as f64;
        let probs = vec![p; allocations.len()];
        Self::explicit(kind, allocations, probs)
    }

    /// Complete randomization without materialized support.
    pub fn crfb_sampled(n: usize) -> Result<Self> {
        check_subject_count(n)?;
        Ok(Self {
            kind: DesignKind::Crfb,
            n,
            support: None,
            pairs: None,
        })
    }

    /// Pairwise matching without materialized support.
    pub fn pm_sampled(pairs: PairSet) -> Self {
        Self {
            kind: DesignKind::Pm,
            n: pairs.n(),
            support: None,
            pairs: Some(pairs),
        }
    }

    pub fn with_pairs(mut self, pairs: PairSet) -> Result<Self> {
        pairs.check_n(self.n)?;
        self.pairs = Some(pairs);
        Ok(self)
    }

    pub fn kind(&self) -> DesignKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> Option<&ExplicitSupport> {
        self.support.as_ref()
    }

    pub fn pairs(&self) -> Option<&PairSet> {
        self.pairs.as_ref()
    }

    pub fn is_explicit(&self) -> bool {
        self.support.is_some()
    }

    /// `Σ_w`: exact over the support when it is listed, closed form otherwise.
    pub fn covariance(&self) -> Result<AllocationCovariance> {
        match (&self.support, self.kind, &self.pairs) {
            (Some(_), _, _) => super::sigma_exact(self),
            (None, DesignKind::Crfb, _) => super::sigma_crfb_closed(self.n),
            (None, DesignKind::Pm, Some(p)) => super::sigma_pm(p),
            _ => Err(Error::InvalidDesign(format!(
                "{} design has neither support nor closed form",
                self.kind
            ))),
        }
    }

    /// One allocation drawn from the design.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Allocation {
        match (self.kind, &self.pairs, &self.support) {
            (DesignKind::Crfb, _, _) => designs::sample_crfb(self.n, rng),
            (DesignKind::Pm, Some(pairs), _) => designs::sample_pm(pairs, rng),
            (_, _, Some(s)) => {
                let total: f64 = s.probs.iter().sum();
                let mut u = rng.random::<f64>() * total;
                for (w, &p) in s.allocations.iter().zip(&s.probs) {
                    if u < p {
                        return w.clone();
                    }
                    u -= p;
                }
                s.allocations
                    .iter()
                    .zip(&s.probs)
                    .rev()
                    .find(|(_, &p)| p > 0.0)
                    .map(|(w, _)| w.clone())
                    .unwrap_or_else(|| s.allocations[0].clone())
            }
            _ => unreachable!("constructors guarantee support or pairs"),
        }
    }
}

/// Outcome of checking a design against the mirror, forced-balance and
/// normalization requirements. Nothing is mutated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub mirror: bool,
    pub forced_balance: bool,
    pub normalized: bool,
    pub nonnegative: bool,
    pub distinct: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.mirror && self.forced_balance && self.normalized && self.nonnegative && self.distinct
    }

    pub(crate) fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (ok, name) in [
            (self.mirror, "mirror property"),
            (self.forced_balance, "forced balance"),
            (self.normalized, "normalization"),
            (self.nonnegative, "nonnegative weights"),
            (self.distinct, "distinct support"),
        ] {
            if !ok {
                out.push(name);
            }
        }
        out
    }
}

pub fn validate_design(d: &DesignDistribution, n: usize) -> Result<ValidationReport> {
    check_len("design", n, d.n())?;
    let Some(s) = d.support() else {
        // Sampled CRFB and PM designs satisfy every requirement by construction.
        return Ok(ValidationReport {
            mirror: true,
            forced_balance: true,
            normalized: true,
            nonnegative: true,
            distinct: true,
        });
    };

    let total: f64 = s.probs.iter().sum();
    let mut by_alloc: HashMap<&[i8], f64> = HashMap::with_capacity(s.allocations.len());
    let mut distinct = true;
    for (w, &p) in s.allocations.iter().zip(&s.probs) {
        if by_alloc.insert(w.as_slice(), p).is_some() {
            distinct = false;
        }
    }
    let mirror = s.allocations.iter().zip(&s.probs).all(|(w, &p)| {
        let neg = w.negated();
        by_alloc
            .get(neg.as_slice())
            .is_some_and(|&q| (p - q).abs() <= tol::MIRROR_PROB)
    });

    Ok(ValidationReport {
        mirror,
        forced_balance: s.allocations.iter().all(Allocation::is_balanced),
        normalized: (total - 1.0).abs() <= tol::PROB_SUM,
        nonnegative: s.probs.iter().all(|&p| p >= 0.0),
        distinct,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct DesignRecord {
    kind: DesignKind,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    allocations: Option<Vec<Allocation>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pairs: Option<PairSet>,
}

impl From<DesignDistribution> for DesignRecord {
    fn from(d: DesignDistribution) -> Self {
        let (allocations, probs) = match d.support {
            Some(s) => (Some(s.allocations), Some(s.probs)),
            None => (None, None),
        };
        Self {
            kind: d.kind,
            n: d.n,
            allocations,
            probs,
            pairs: d.pairs,
        }
    }
}

impl TryFrom<DesignRecord> for DesignDistribution {
    type Error = Error;
    fn try_from(r: DesignRecord) -> Result<Self> {
        let base = match (r.allocations, r.probs) {
            (Some(a), Some(p)) => Self::explicit(r.kind, a, p)?,
            (Some(a), None) => Self::uniform(r.kind, a)?,
            (None, _) => match (r.kind, r.pairs.clone()) {
                (DesignKind::Crfb, _) => Self::crfb_sampled(r.n)?,
                (DesignKind::Pm, Some(p)) => Self::pm_sampled(p),
                _ => {
                    return Err(Error::InvalidDesign(format!(
                        "{} design needs an explicit support",
                        r.kind
                    )))
                }
            },
        };
        check_len("design", r.n, base.n)?;
        match r.pairs {
            Some(p) if base.pairs.is_none() => base.with_pairs(p),
            _ => Ok(base),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alloc(v: &[i8]) -> Allocation {
        Allocation::new(v.to_vec()).unwrap()
    }

    #[test]
    fn symmetric_two_point_design_passes() {
        let d = DesignDistribution::explicit(
            DesignKind::Explicit,
            vec![alloc(&[1, -1]), alloc(&[-1, 1])],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert!(validate_design(&d, 2).unwrap().passed());
    }

    #[test]
    fn missing_reflection_fails_mirror() {
        let d = DesignDistribution::explicit(DesignKind::Explicit, vec![alloc(&[1, -1])], vec![1.0])
            .unwrap();
        let r = validate_design(&d, 2).unwrap();
        assert!(!r.mirror);
        assert!(r.forced_balance && r.normalized);
        assert!(!r.passed());
    }

    #[test]
    fn mirrored_balanced_pair_passes() {
        let d = DesignDistribution::uniform(
            DesignKind::Explicit,
            vec![alloc(&[1, 1, -1, -1]), alloc(&[-1, -1, 1, 1])],
        )
        .unwrap();
        assert!(validate_design(&d, 4).unwrap().passed());
    }

    #[test]
    fn detects_unbalanced_unnormalized_and_unequal_mirror_weights() {
        let d = DesignDistribution::explicit(
            DesignKind::Explicit,
            vec![alloc(&[1, 1]), alloc(&[-1, -1])],
            vec![0.5, 0.5],
        )
        .unwrap();
        let r = validate_design(&d, 2).unwrap();
        assert!(r.mirror && !r.forced_balance);

        let d = DesignDistribution::explicit(
            DesignKind::Explicit,
            vec![alloc(&[1, -1]), alloc(&[-1, 1])],
            vec![0.7, 0.3],
        )
        .unwrap();
        let r = validate_design(&d, 2).unwrap();
        assert!(!r.mirror && r.normalized);

        let d = DesignDistribution::explicit(
            DesignKind::Explicit,
            vec![alloc(&[1, -1]), alloc(&[-1, 1])],
            vec![0.5, 0.6],
        )
        .unwrap();
        assert!(!validate_design(&d, 2).unwrap().normalized);
    }

    #[test]
    fn length_mismatch_is_structural_error() {
        let d = DesignDistribution::uniform(DesignKind::Explicit, vec![alloc(&[1, -1]), alloc(&[-1, 1])])
            .unwrap();
        assert!(matches!(
            validate_design(&d, 4),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(DesignDistribution::uniform(
            DesignKind::Explicit,
            vec![alloc(&[1, -1]), alloc(&[-1, 1, 1, -1])]
        )
        .is_err());
    }

    #[test]
    fn json_round_trip_keeps_kind_and_support() {
        let d = DesignDistribution::uniform(DesignKind::Pb, vec![alloc(&[1, -1]), alloc(&[-1, 1])])
            .unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.contains("\"kind\":\"PB\""));
        assert!(s.contains("\"allocations\":[[1,-1],[-1,1]]"));
        let back: DesignDistribution = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }
}
