use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Response model `y = β_T w + f + z` with iid noise moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseSpec {
    pub beta_t: f64,
    pub f: Vec<f64>,
    /// `σ_z²`.
    pub sigma2_z: f64,
    /// `γ_z = E[z³]`.
    pub gamma_z: f64,
    /// `κ_z = E[z⁴] - 3σ_z⁴`.
    pub kappa_z: f64,
}

impl ResponseSpec {
    pub fn new(beta_t: f64, f: Vec<f64>, sigma2_z: f64, gamma_z: f64, kappa_z: f64) -> Result<Self> {
        let spec = Self {
            beta_t,
            f,
            sigma2_z,
            gamma_z,
            kappa_z,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Gaussian noise with standard deviation `sigma_z`.
    pub fn gaussian(beta_t: f64, f: Vec<f64>, sigma_z: f64) -> Result<Self> {
        Self::new(beta_t, f, sigma_z * sigma_z, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.beta_t.is_finite() || !self.gamma_z.is_finite() || !self.kappa_z.is_finite() {
            return Err(Error::NonFinite("response moments"));
        }
        if self.f.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("f"));
        }
        if !(self.sigma2_z >= 0.0) || !self.sigma2_z.is_finite() {
            return Err(Error::param("sigma2_z", format!("{} is not >= 0", self.sigma2_z)));
        }
        // E[z⁴] >= (E[z²])² forces κ_z >= -2σ_z⁴.
        if self.kappa_z < -2.0 * self.sigma2_z * self.sigma2_z {
            return Err(Error::param(
                "kappa_z",
                format!(
                    "{} is below the feasibility bound -2 sigma_z^4 = {}",
                    self.kappa_z,
                    -2.0 * self.sigma2_z * self.sigma2_z
                ),
            ));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    pub fn sigma_z(&self) -> f64 {
        self.sigma2_z.sqrt()
    }
}
