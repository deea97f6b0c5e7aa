use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{conditional_mse, squared_error};
use crate::error::{Error, Result};
use crate::model::{check_len, AllocationCovariance, DesignDistribution, DesignKind, ResponseSpec};
use crate::rng::{stream, Domain};
use crate::stats;

/// Below this many noise draws the summary is flagged as unreliable.
pub const MIN_RELIABLE_DRAWS: usize = 100;

/// How the conditional MSE is obtained for each noise draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MseEstimator {
    /// The quadratic form with `Σ_w`.
    Exact,
    /// Average of `(β̂_T - β_T)²` over `n_w` sampled allocations. Perfect
    /// balance always averages its two allocations `w*` and `-w*`.
    Sampled { n_w: usize },
}

/// Distribution summary of per-draw MSE values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub draws: usize,
    pub q: f64,
    pub mean: f64,
    pub quantile: f64,
    pub max: f64,
    pub sd: f64,
    /// Standard error of `mean`.
    pub mc_se: f64,
    /// `(quantile - mean) / sd`; absent when the sample has no spread beyond
    /// rounding.
    pub realized_c: Option<f64>,
    pub low_draw_warning: bool,
}

pub fn summarize(samples: &[f64], q: f64) -> McSummary {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = stats::mean(samples);
    let sd = stats::sample_variance(samples).sqrt();
    let quantile = stats::quantile_sorted(&sorted, q);
    let draws = samples.len();
    McSummary {
        draws,
        q,
        mean,
        quantile,
        max: sorted.last().copied().unwrap_or(f64::NAN),
        sd,
        mc_se: sd / (draws as f64).sqrt(),
        realized_c: (sd > 1e-12 * mean.abs() && sd.is_finite()).then(|| (quantile - mean) / sd),
        low_draw_warning: draws < MIN_RELIABLE_DRAWS,
    }
}

/// Gaussian `z` with iid `N(0, σ_z²)` entries.
pub fn draw_noise<R: Rng + ?Sized>(n: usize, sigma_z: f64, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let e: f64 = StandardNormal.sample(rng);
            sigma_z * e
        })
        .collect()
}

/// Conditional MSE of one noise draw `z`, per the chosen estimator.
pub fn per_draw_mse<R: Rng + ?Sized>(
    design: &DesignDistribution,
    sigma: Option<&AllocationCovariance>,
    spec: &ResponseSpec,
    z: &[f64],
    estimator: MseEstimator,
    rng: &mut R,
) -> Result<f64> {
    match estimator {
        MseEstimator::Exact => {
            let sigma = sigma.ok_or_else(|| Error::param("sigma", "exact estimator needs Σ_w"))?;
            conditional_mse(&spec.f, z, sigma)
        }
        MseEstimator::Sampled { n_w } => {
            if let (DesignKind::Pb, Some(s)) = (design.kind(), design.support()) {
                return Ok(s
                    .allocations
                    .iter()
                    .zip(&s.probs)
                    .map(|(w, p)| p * squared_error(w, spec.beta_t, &spec.f, z))
                    .sum());
            }
            let total: f64 = (0..n_w)
                .map(|_| {
                    let w = design.sample(rng);
                    squared_error(&w, spec.beta_t, &spec.f, z)
                })
                .sum();
            Ok(total / n_w as f64)
        }
    }
}

/// Per-draw conditional MSE values over `n_z` Gaussian noise draws, in draw
/// order.
///
/// Draw `i` uses noise stream `(seed, Noise, i)` and allocation stream
/// `(seed, Allocations(kind), i)`, so every design sees the same `z` sequence
/// for a given seed and the output does not depend on the thread count.
pub fn mc_samples(
    spec: &ResponseSpec,
    design: &DesignDistribution,
    n_z: usize,
    estimator: MseEstimator,
    seed: u64,
) -> Result<Vec<f64>> {
    spec.validate()?;
    check_len("f", design.n(), spec.n())?;
    if n_z == 0 {
        return Err(Error::param("n_z", "need at least one draw"));
    }
    if let MseEstimator::Sampled { n_w } = estimator {
        if n_w == 0 {
            return Err(Error::param("n_w", "need at least one allocation draw"));
        }
    }
    let sigma = match estimator {
        MseEstimator::Exact => Some(design.covariance()?),
        MseEstimator::Sampled { .. } => None,
    };
    let n = design.n();
    let sigma_z = spec.sigma_z();
    let tag = design.kind().tag();
    (0..n_z as u64)
        .into_par_iter()
        .map(|i| {
            let z = draw_noise(n, sigma_z, &mut stream(seed, Domain::Noise, i));
            let mut rng = stream(seed, Domain::Allocations(tag), i);
            per_draw_mse(design, sigma.as_ref(), spec, &z, estimator, &mut rng)
        })
        .collect()
}

/// Monte Carlo estimate of the `q`-quantile of the conditional MSE over `z`,
/// together with the samples it was computed from.
pub fn mc_mse_quantile(
    spec: &ResponseSpec,
    design: &DesignDistribution,
    q: f64,
    n_z: usize,
    estimator: MseEstimator,
    seed: u64,
) -> Result<(McSummary, Vec<f64>)> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::param("q", format!("{q} is outside (0, 1)")));
    }
    let samples = mc_samples(spec, design, n_z, estimator, seed)?;
    Ok((summarize(&samples, q), samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::{mean_mse, var_mse};
    use crate::designs::{build_design, SearchConfig};
    use crate::model::CovariateMatrix;

    fn x20(seed: u64) -> CovariateMatrix {
        let mut rng = stream(seed, Domain::Covariates, 0);
        CovariateMatrix::from_column(&draw_noise(20, 1.0, &mut rng)).unwrap()
    }

    #[test]
    fn noiseless_distribution_is_degenerate() {
        let x = x20(1);
        let d = build_design(DesignKind::Pm, &x, &SearchConfig::new(1, 0).unwrap()).unwrap();
        let f = x.column(0);
        let spec = ResponseSpec::gaussian(1.0, f.clone(), 0.0).unwrap();
        let (s, _) = mc_mse_quantile(&spec, &d, 0.95, 200, MseEstimator::Exact, 3).unwrap();
        let expected = d.covariance().unwrap().quad_form(&f) / 400.0;
        assert!((s.quantile - expected).abs() < 1e-15);
        assert!((s.mean - expected).abs() < 1e-15);
        assert_eq!(s.realized_c, None);
    }

    #[test]
    fn pb_sampled_path_averages_both_mirror_allocations() {
        let x = x20(2);
        let d = build_design(DesignKind::Pb, &x, &SearchConfig::new(1, 0).unwrap()).unwrap();
        let spec = ResponseSpec::gaussian(1.0, x.column(0), 1.5).unwrap();
        let sampled = mc_samples(&spec, &d, 50, MseEstimator::Sampled { n_w: 300 }, 4).unwrap();
        let exact = mc_samples(&spec, &d, 50, MseEstimator::Exact, 4).unwrap();
        for (a, b) in sampled.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_of_exact_draws_tracks_mean_mse() {
        let x = x20(3);
        let f = x.column(0);
        for kind in DesignKind::ALL {
            let d = build_design(kind, &x, &SearchConfig::new(1, 0).unwrap()).unwrap();
            let sigma = d.covariance().unwrap();
            let spec = ResponseSpec::gaussian(1.0, f.clone(), 1.5).unwrap();
            let samples = mc_samples(&spec, &d, 100_000, MseEstimator::Exact, 5).unwrap();
            let m = stats::mean(&samples);
            let se = (var_mse(&spec, &sigma).unwrap() / samples.len() as f64).sqrt();
            let target = mean_mse(&f, 2.25, &sigma).unwrap();
            assert!((m - target).abs() < 3.0 * se, "{kind}: {m} vs {target} (se {se})");
        }
    }

    #[test]
    fn realized_c_in_plausible_band_at_baseline() {
        let x = x20(4);
        let f = x.column(0);
        let spec = ResponseSpec::gaussian(1.0, f, 1.5).unwrap();
        for kind in DesignKind::ALL {
            let d = build_design(kind, &x, &SearchConfig::new(1, 0).unwrap()).unwrap();
            let (s, _) = mc_mse_quantile(&spec, &d, 0.95, 2000, MseEstimator::Exact, 6).unwrap();
            let c = s.realized_c.unwrap();
            assert!((1.5..=2.2).contains(&c), "{kind}: c = {c}");
        }
    }

    #[test]
    fn few_draws_are_flagged_and_bad_q_rejected() {
        let x = x20(5);
        let d = build_design(DesignKind::Crfb, &x, &SearchConfig::new(1, 0).unwrap()).unwrap();
        let spec = ResponseSpec::gaussian(1.0, x.column(0), 1.0).unwrap();
        let (s, _) = mc_mse_quantile(&spec, &d, 0.9, 20, MseEstimator::Sampled { n_w: 10 }, 1).unwrap();
        assert!(s.low_draw_warning);
        assert!(mc_mse_quantile(&spec, &d, 1.0, 20, MseEstimator::Exact, 1).is_err());
        assert!(mc_mse_quantile(&spec, &d, 0.5, 0, MseEstimator::Exact, 1).is_err());
    }
}
