use crate::error::Result;
use crate::model::{check_len, Allocation, AllocationCovariance};

/// `wᵀy / n`, which equals `(Ȳ_T - Ȳ_C) / 2` under forced balance.
pub fn beta_hat(w: &Allocation, y: &[f64]) -> Result<f64> {
    check_len("response", w.len(), y.len())?;
    Ok(w.dot(y) / w.len() as f64)
}

/// `(β̂_T - β_T)²` for one allocation, computed from the full response
/// `y = β_T w + f + z`.
pub fn squared_error(w: &Allocation, beta_t: f64, f: &[f64], z: &[f64]) -> f64 {
    let n = w.len() as f64;
    let wy: f64 = w
        .as_slice()
        .iter()
        .zip(f.iter().zip(z))
        .map(|(&wi, (&fi, &zi))| {
            let wi = f64::from(wi);
            wi * (beta_t * wi + fi + zi)
        })
        .sum();
    let err = wy / n - beta_t;
    err * err
}

/// `(f + z)ᵀ Σ_w (f + z) / n²`.
pub fn conditional_mse(f: &[f64], z: &[f64], sigma: &AllocationCovariance) -> Result<f64> {
    let n = sigma.n();
    check_len("f", n, f.len())?;
    check_len("z", n, z.len())?;
    let v: Vec<f64> = f.iter().zip(z).map(|(a, b)| a + b).collect();
    Ok((sigma.quad_form(&v) / (n * n) as f64).max(0.0))
}
