use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_len, AllocationCovariance, ResponseSpec};
use crate::tol;

/// `fᵀΣ_w f / n² + σ_z² / n`, the MSE averaged over `z`.
pub fn mean_mse(f: &[f64], sigma2_z: f64, sigma: &AllocationCovariance) -> Result<f64> {
    let n = sigma.n();
    check_len("f", n, f.len())?;
    if !(sigma2_z >= 0.0) {
        return Err(Error::param("sigma2_z", format!("{sigma2_z} is not >= 0")));
    }
    let nf = n as f64;
    Ok(sigma.quad_form(f).max(0.0) / (nf * nf) + sigma2_z / nf)
}

/// The pieces of `n⁴ · Var_z[MSE | z]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceTerms {
    /// `n κ_z`
    pub kurtosis: f64,
    /// `2 σ_z⁴ ‖Σ_w‖_F²`
    pub frobenius: f64,
    /// `4 σ_z² fᵀΣ_w²f`
    pub imbalance: f64,
    /// `γ_z 1ᵀΣ_w f`; zero for forced-balance designs and excluded from the total.
    pub skew: f64,
}

impl VarianceTerms {
    pub fn total(&self) -> f64 {
        self.kurtosis + self.frobenius + self.imbalance
    }
}

pub fn variance_terms(spec: &ResponseSpec, sigma: &AllocationCovariance) -> Result<VarianceTerms> {
    spec.validate()?;
    let n = sigma.n();
    check_len("f", n, spec.f.len())?;
    let residual = sigma.ones_residual();
    if residual > tol::ROW_SUM {
        return Err(Error::InvalidCovariance(format!(
            "max |Σ_w 1| = {residual:e}; the skewness term only vanishes for forced-balance designs"
        )));
    }
    let sf = sigma.apply(&spec.f);
    let b2: f64 = sf.iter().map(|v| v * v).sum();
    let ones_sigma_f: f64 = sf.iter().sum();
    let skew = spec.gamma_z * ones_sigma_f;
    let f_l1: f64 = spec.f.iter().map(|v| v.abs()).sum();
    if skew.abs() > tol::ROW_SUM * (1.0 + spec.gamma_z.abs()) * (1.0 + f_l1) {
        return Err(Error::Invariant(format!(
            "skewness term γ_z 1ᵀΣ_w f = {skew:e} is not zero"
        )));
    }
    let s2 = spec.sigma2_z;
    Ok(VarianceTerms {
        kurtosis: n as f64 * spec.kappa_z,
        frobenius: 2.0 * s2 * s2 * sigma.frobenius_sq(),
        imbalance: 4.0 * s2 * b2,
        skew,
    })
}

/// `Var_z[MSE | z] = (n κ_z + 2σ_z⁴‖Σ_w‖_F² + 4σ_z² fᵀΣ_w²f) / n⁴`.
pub fn var_mse(spec: &ResponseSpec, sigma: &AllocationCovariance) -> Result<f64> {
    let n4 = (sigma.n() as f64).powi(4);
    Ok((variance_terms(spec, sigma)?.total() / n4).max(0.0))
}

/// How many standard deviations above the mean the tail criterion sits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CMode {
    /// `1 / sqrt(1 - q)`, turning the criterion into a quantile bound.
    Chebyshev(f64),
    /// `c = 2`.
    Gaussian,
}

pub fn c_constant(mode: CMode) -> Result<f64> {
    match mode {
        CMode::Chebyshev(q) if q > 0.0 && q < 1.0 => Ok(1.0 / (1.0 - q).sqrt()),
        CMode::Chebyshev(q) => Err(Error::param("q", format!("{q} is outside (0, 1)"))),
        CMode::Gaussian => Ok(2.0),
    }
}

/// Per-design criterion bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub n: usize,
    /// `fᵀΣ_w f`
    #[serde(rename = "B1")]
    pub b1: f64,
    /// `fᵀΣ_w²f`
    #[serde(rename = "B2")]
    pub b2: f64,
    /// `‖Σ_w‖_F²`
    #[serde(rename = "R")]
    pub r: f64,
    pub lambda_max: f64,
    pub mean_mse: f64,
    pub var_mse: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub c_used: f64,
    pub gamma_term: f64,
    pub mc_quantile: Option<f64>,
}

/// `Q = mean_mse + c · sqrt(var_mse)` with its `B1`, `B2`, `R` decomposition.
pub fn tail_q(spec: &ResponseSpec, sigma: &AllocationCovariance, c: f64) -> Result<CriterionReport> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::param("c", format!("{c} is not a finite value >= 0")));
    }
    let terms = variance_terms(spec, sigma)?;
    let n = sigma.n();
    let n4 = (n as f64).powi(4);
    let sf = sigma.apply(&spec.f);
    let b1 = sf.iter().zip(&spec.f).map(|(a, b)| a * b).sum::<f64>().max(0.0);
    let b2 = sf.iter().map(|v| v * v).sum::<f64>();
    let mean = mean_mse(&spec.f, spec.sigma2_z, sigma)?;
    let var = (terms.total() / n4).max(0.0);
    Ok(CriterionReport {
        n,
        b1,
        b2,
        r: sigma.frobenius_sq(),
        lambda_max: sigma.lambda_max(),
        mean_mse: mean,
        var_mse: var,
        q: mean + c * var.sqrt(),
        c_used: c,
        gamma_term: terms.skew,
        mc_quantile: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sigma_crfb_closed, sigma_pb, sigma_pm, Allocation, PairSet};

    #[test]
    fn c_defaults() {
        assert_eq!(c_constant(CMode::Chebyshev(0.75)).unwrap(), 2.0);
        assert!((c_constant(CMode::Chebyshev(0.96)).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(c_constant(CMode::Gaussian).unwrap(), 2.0);
        assert!(c_constant(CMode::Chebyshev(1.0)).is_err());
        assert!(c_constant(CMode::Chebyshev(0.0)).is_err());
    }

    #[test]
    fn zero_f_leaves_only_noise() {
        let s = sigma_pm(&PairSet::new(vec![(0, 1), (2, 3)]).unwrap()).unwrap();
        assert_eq!(mean_mse(&[0.0; 4], 2.0, &s).unwrap(), 0.5);
        let spec = ResponseSpec::gaussian(1.0, vec![0.0; 4], 1.5).unwrap();
        let expected = 2.0 * 1.5f64.powi(4) * s.frobenius_sq() / 256.0;
        assert!((var_mse(&spec, &s).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn noiseless_has_no_variance() {
        let s = sigma_crfb_closed(6).unwrap();
        let spec = ResponseSpec::new(1.0, vec![1.0, -2.0, 0.5, 0.0, 3.0, 1.0], 0.0, 0.0, 0.0).unwrap();
        assert_eq!(var_mse(&spec, &s).unwrap(), 0.0);
        let r = tail_q(&spec, &s, 2.0).unwrap();
        assert_eq!(r.q, r.mean_mse);
    }

    #[test]
    fn pb_terms_are_rank_one() {
        let w = Allocation::new(vec![1, -1, -1, 1, 1, -1]).unwrap();
        let s = sigma_pb(&w).unwrap();
        let f = vec![0.3, -1.2, 2.0, 0.7, -0.4, 1.1];
        let spec = ResponseSpec::gaussian(1.0, f.clone(), 1.0).unwrap();
        let r = tail_q(&spec, &s, 0.0).unwrap();
        let wf = w.dot(&f);
        assert!((r.b1 - wf * wf).abs() < 1e-12);
        assert!((r.b2 - 6.0 * wf * wf).abs() < 1e-11);
        assert_eq!(r.r, 36.0);
        assert_eq!(r.q, r.mean_mse);
    }

    #[test]
    fn crfb_beats_pb_on_tail_without_signal() {
        let w: Vec<i8> = (0..20).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let pb = sigma_pb(&Allocation::new(w).unwrap()).unwrap();
        let crfb = sigma_crfb_closed(20).unwrap();
        let spec = ResponseSpec::gaussian(1.0, vec![0.0; 20], 1.5).unwrap();
        let q_pb = tail_q(&spec, &pb, 2.0).unwrap();
        let q_crfb = tail_q(&spec, &crfb, 2.0).unwrap();
        // identical B terms (zero); R = 20 + 20/19 against 400
        assert_eq!(q_pb.mean_mse, q_crfb.mean_mse);
        assert!((q_crfb.r - (20.0 + 20.0 / 19.0)).abs() < 1e-10);
        assert_eq!(q_pb.r, 400.0);
        let hand_crfb = 0.1125 + 2.0 * (2.0 * 1.5f64.powi(4) * (20.0 + 20.0 / 19.0)).sqrt() / 400.0;
        let hand_pb = 0.1125 + 2.0 * (2.0 * 1.5f64.powi(4) * 400.0).sqrt() / 400.0;
        assert!((q_crfb.q - hand_crfb).abs() < 1e-12);
        assert!((q_pb.q - hand_pb).abs() < 1e-12);
        assert!(q_crfb.q < q_pb.q);
    }

    #[test]
    fn skewness_term_is_computed_and_zero() {
        let s = sigma_crfb_closed(8).unwrap();
        let f: Vec<f64> = (0..8).map(|i| (i as f64).powi(2)).collect();
        let spec = ResponseSpec::new(0.0, f, 1.0, 5.0, 1.0).unwrap();
        let t = variance_terms(&spec, &s).unwrap();
        assert!(t.skew.abs() < 1e-10);
        assert_eq!(t.kurtosis, 8.0);
    }

    #[test]
    fn q_is_monotone_in_c() {
        let s = sigma_crfb_closed(10).unwrap();
        let f: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).cos()).collect();
        let spec = ResponseSpec::gaussian(1.0, f, 0.8).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for c in [0.0, 0.5, 1.0, 1.645, 2.0, 5.0] {
            let q = tail_q(&spec, &s, c).unwrap().q;
            assert!(q > prev);
            prev = q;
        }
        assert!(tail_q(&spec, &s, -1.0).is_err());
    }
}
