use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_len, AllocationCovariance};
use crate::tol;

/// One distinct eigenvalue of `Σ_w` and the part of `(f + z)ᵀΣ_w(f + z)`
/// living in its eigenspace: `λ · σ_z² · χ²_df(ncp)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureTerm {
    pub eigenvalue: f64,
    pub multiplicity: usize,
    /// `fᵀ P f` for the eigenprojection `P`.
    pub projection: f64,
    /// `σ_z² λ`.
    pub scale: f64,
    /// `fᵀ P f / σ_z²`; absent when `σ_z² = 0`.
    pub noncentrality: Option<f64>,
}

/// Distribution of `(f + z)ᵀΣ_w(f + z)` for `z ~ N(0, σ_z² I)` as a weighted
/// sum of independent noncentral chi-squares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalMixtureRep {
    pub sigma2_z: f64,
    pub terms: Vec<MixtureTerm>,
}

impl NormalMixtureRep {
    pub fn total_multiplicity(&self) -> usize {
        self.terms.iter().map(|t| t.multiplicity).sum()
    }

    pub fn mean(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.eigenvalue * (self.sigma2_z * t.multiplicity as f64 + t.projection))
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let s2 = self.sigma2_z;
        self.terms
            .iter()
            .map(|t| {
                t.eigenvalue
                    * t.eigenvalue
                    * (2.0 * s2 * s2 * t.multiplicity as f64 + 4.0 * s2 * t.projection)
            })
            .sum()
    }

    /// One draw. Each group contributes
    /// `λ [(σ_z ξ + sqrt(fᵀPf))² + σ_z² χ²_(df-1)]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let sigma = self.sigma2_z.sqrt();
        self.terms
            .iter()
            .filter(|t| t.eigenvalue > 0.0)
            .map(|t| {
                let xi: f64 = StandardNormal.sample(rng);
                let shifted = sigma * xi + t.projection.sqrt();
                let rest = if t.multiplicity > 1 {
                    ChiSquared::new((t.multiplicity - 1) as f64)
                        .expect("positive degrees of freedom")
                        .sample(rng)
                } else {
                    0.0
                };
                t.eigenvalue * (shifted * shifted + self.sigma2_z * rest)
            })
            .sum()
    }
}

/// Eigendecomposes `Σ_w`, merges eigenvalues closer than `1e-8 · λ_max`, and
/// projects `f` on each group.
pub fn normal_mixture(f: &[f64], sigma2_z: f64, sigma: &AllocationCovariance) -> Result<NormalMixtureRep> {
    let n = sigma.n();
    check_len("f", n, f.len())?;
    if !(sigma2_z >= 0.0) {
        return Err(Error::param("sigma2_z", format!("{sigma2_z} is not >= 0")));
    }
    let spec = sigma.spectrum();
    let gap = tol::EIGEN_GROUP * spec.values[0].abs().max(1.0);
    let mut terms: Vec<MixtureTerm> = Vec::new();
    let mut sum = 0.0;
    let mut start = 0;
    for k in 0..n {
        let coef: f64 = spec.vectors.column(k).iter().zip(f).map(|(a, b)| a * b).sum();
        sum += coef * coef;
        let last = k + 1 == n || (spec.values[start] - spec.values[k + 1]) > gap;
        if last {
            let multiplicity = k + 1 - start;
            let eigenvalue =
                (spec.values[start..=k].iter().sum::<f64>() / multiplicity as f64).max(0.0);
            terms.push(MixtureTerm {
                eigenvalue,
                multiplicity,
                projection: sum,
                scale: sigma2_z * eigenvalue,
                noncentrality: (sigma2_z > 0.0).then(|| sum / sigma2_z),
            });
            sum = 0.0;
            start = k + 1;
        }
    }
    Ok(NormalMixtureRep { sigma2_z, terms })
}
