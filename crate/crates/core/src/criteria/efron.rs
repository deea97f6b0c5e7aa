use serde::{Deserialize, Serialize};

use super::conditional_mse;
use crate::error::{Error, Result};
use crate::model::{check_len, AllocationCovariance};
use crate::tol;

/// The adversarial unobserved component for a design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarialNoise {
    /// `z_adv = α v_max - f`, so that `f + z_adv = α v_max`.
    pub z: Vec<f64>,
    pub v_max: Vec<f64>,
    pub lambda_max: f64,
    /// `‖f‖² / (1 + 2‖f‖)`.
    pub alpha: f64,
    /// `λ_max ‖f + z_adv‖² / n²`, attained by `z_adv`.
    pub bound: f64,
    /// `‖z_adv‖²`.
    pub realized_norm2: f64,
    /// The top eigenspace has dimension > 1; `v_max` is the unit vector in it
    /// most aligned with `f`.
    pub degenerate: bool,
}

/// Worst-case noise: puts `f + z` on the top eigenvector of `Σ_w`, where the
/// bound `zᵀΣ_w z ≤ λ_max ‖z‖²` is tight.
pub fn efron_worst_case(f: &[f64], sigma: &AllocationCovariance) -> Result<AdversarialNoise> {
    let n = sigma.n();
    check_len("f", n, f.len())?;
    let f_norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    if f_norm == 0.0 {
        return Err(Error::param("f", "must be nonzero"));
    }
    let spectrum = sigma.spectrum();
    let lambda_max = spectrum.values[0];
    let scale = lambda_max.abs().max(1.0);
    let dim = spectrum
        .values
        .iter()
        .take_while(|&&v| (lambda_max - v) <= tol::EIGEN_GROUP * scale)
        .count();

    // Projection of f onto the top eigenspace.
    let mut v = vec![0.0; n];
    for k in 0..dim {
        let col = spectrum.vectors.column(k);
        let coef: f64 = col.iter().zip(f).map(|(a, b)| a * b).sum();
        for (vi, ci) in v.iter_mut().zip(col.iter()) {
            *vi += coef * ci;
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > tol::IDENTITY * f_norm {
        v.iter_mut().for_each(|x| *x /= norm);
    } else {
        // f is orthogonal to the top eigenspace: any unit vector in it is tight.
        v = spectrum.vector(0);
    }
    // orientation: v_maxᵀ f >= 0
    let align: f64 = v.iter().zip(f).map(|(a, b)| a * b).sum();
    if align < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }

    let alpha = f_norm * f_norm / (1.0 + 2.0 * f_norm);
    let z: Vec<f64> = v.iter().zip(f).map(|(vi, fi)| alpha * vi - fi).collect();
    let nf = n as f64;
    let bound = lambda_max * alpha * alpha / (nf * nf);
    let attained = conditional_mse(f, &z, sigma)?;
    if (attained - bound).abs() > tol::IDENTITY * bound.max(1.0) {
        return Err(Error::Invariant(format!(
            "adversarial noise gives conditional MSE {attained:e}, bound is {bound:e}"
        )));
    }
    Ok(AdversarialNoise {
        realized_norm2: z.iter().map(|x| x * x).sum(),
        z,
        v_max: v,
        lambda_max,
        alpha,
        bound,
        degenerate: dim > 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sigma_crfb_closed, sigma_pb, Allocation};

    #[test]
    fn pb_top_eigenvector_is_scaled_w_star() {
        let w = Allocation::new(vec![1, -1, 1, -1]).unwrap();
        let s = sigma_pb(&w).unwrap();
        let f = vec![1.0, 2.0, -1.0, 0.5];
        let adv = efron_worst_case(&f, &s).unwrap();
        assert!(!adv.degenerate);
        assert!((adv.lambda_max - 4.0).abs() < 1e-10);
        // v_max = ±w/2, oriented towards f (wᵀf = -2.5 < 0, so v = -w/2)
        for (v, wi) in adv.v_max.iter().zip(w.to_f64()) {
            assert!((v + wi / 2.0).abs() < 1e-10);
        }
        let exact = conditional_mse(&f, &adv.z, &s).unwrap();
        assert!((exact - 4.0 * adv.alpha * adv.alpha / 16.0).abs() < 1e-12);
    }

    #[test]
    fn crfb_uses_closed_form_eigenvalue_and_aligns_with_f() {
        let s = sigma_crfb_closed(6).unwrap();
        let f = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let adv = efron_worst_case(&f, &s).unwrap();
        assert!(adv.degenerate);
        assert!((adv.lambda_max - 1.2).abs() < 1e-10);
        // projection of e_1 onto 1⊥ is e_1 - 1/6
        let norm = (5.0f64 / 6.0).sqrt();
        assert!((adv.v_max[0] - (5.0 / 6.0) / norm).abs() < 1e-10);
        assert!((adv.v_max[1] + (1.0 / 6.0) / norm).abs() < 1e-10);
    }

    #[test]
    fn zero_f_is_rejected() {
        let s = sigma_crfb_closed(4).unwrap();
        assert!(efron_worst_case(&[0.0; 4], &s).is_err());
    }
}
