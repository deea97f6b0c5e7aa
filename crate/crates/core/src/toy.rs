//! The paired adversarial example.
//!
//! `m` pairs of subjects share an observed covariate value within each pair,
//! `δ(i - (m+1)/2)` for pair `i`, while the unobserved part is `+a` for one
//! member and `-a` for the other. Matching balances `x` perfectly but always
//! splits every `z` pair in the worst possible way for the estimator's
//! variance, so complete randomization wins whenever `η` is small.

use serde::{Deserialize, Serialize};

use crate::designs::for_each_balanced;
use crate::error::{Error, Result};
use crate::model::{Allocation, CovariateMatrix, PairSet};

/// Largest pair count the enumeration oracle accepts.
pub const MAX_TOY_PAIRS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub m: usize,
    pub a: f64,
    pub delta: f64,
}

impl ToyConfig {
    pub fn new(m: usize, a: f64, delta: f64) -> Result<Self> {
        let cfg = Self { m, a, delta };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::param("m", format!("{} pairs; need at least 2", self.m)));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::param("a", format!("{} is not a positive number", self.a)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::param("delta", format!("{} is not >= 0", self.delta)));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        2 * self.m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyData {
    pub x: CovariateMatrix,
    pub z: Vec<f64>,
    pub pairs: PairSet,
}

/// Subjects `2i` and `2i + 1` form pair `i`; the first carries `+a`.
pub fn toy_build(cfg: &ToyConfig) -> Result<ToyData> {
    cfg.validate()?;
    let centre = (cfg.m as f64 + 1.0) / 2.0;
    let mut x = Vec::with_capacity(cfg.n());
    let mut z = Vec::with_capacity(cfg.n());
    for i in 1..=cfg.m {
        let v = cfg.delta * (i as f64 - centre);
        x.extend([v, v]);
        z.extend([cfg.a, -cfg.a]);
    }
    let pairs = PairSet::new((0..cfg.m).map(|i| (2 * i, 2 * i + 1)).collect())?;
    Ok(ToyData {
        x: CovariateMatrix::from_column(&x)?,
        z,
        pairs,
    })
}

/// Ratio of the observed to the unobserved population standard deviation.
pub fn toy_eta(cfg: &ToyConfig) -> Result<f64> {
    cfg.validate()?;
    let m = cfg.m as f64;
    Ok(cfg.delta * (m * m - 1.0).sqrt() / (cfg.a * 12f64.sqrt()))
}

/// Matching loses to complete randomization exactly when `η` is below this.
pub fn toy_threshold(m: usize) -> f64 {
    let m = m as f64;
    ((m - 1.0) / m).sqrt()
}

/// Expected squared mean differences and estimator MSE for one design.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyRow {
    pub observed_imbalance: f64,
    pub unobserved_imbalance: f64,
    pub mse: f64,
}

impl ToyRow {
    fn max_abs_diff(&self, other: &ToyRow) -> f64 {
        [
            self.observed_imbalance - other.observed_imbalance,
            self.unobserved_imbalance - other.unobserved_imbalance,
            self.mse - other.mse,
        ]
        .iter()
        .fold(0.0f64, |acc, d| acc.max(d.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyTable {
    pub crfb: ToyRow,
    pub matching: ToyRow,
}

impl ToyTable {
    /// `(crfb observed, crfb unobserved, crfb mse, matching observed,
    /// matching unobserved, matching mse)`.
    pub fn values(&self) -> [f64; 6] {
        [
            self.crfb.observed_imbalance,
            self.crfb.unobserved_imbalance,
            self.crfb.mse,
            self.matching.observed_imbalance,
            self.matching.unobserved_imbalance,
            self.matching.mse,
        ]
    }

    pub fn max_abs_diff(&self, other: &ToyTable) -> f64 {
        self.crfb
            .max_abs_diff(&other.crfb)
            .max(self.matching.max_abs_diff(&other.matching))
    }

    pub fn randomization_preferred(&self) -> bool {
        self.crfb.mse < self.matching.mse
    }
}

/// Closed forms in terms of `a`, `η` and `m`.
pub fn toy_table1(cfg: &ToyConfig) -> Result<ToyTable> {
    let eta = toy_eta(cfg)?;
    let m = cfg.m as f64;
    let a2 = cfg.a * cfg.a;
    let k = 2.0 * m - 1.0;
    Ok(ToyTable {
        crfb: ToyRow {
            observed_imbalance: 4.0 * a2 * eta * eta / k,
            unobserved_imbalance: 4.0 * a2 / k,
            mse: a2 * (eta * eta + 1.0) / k,
        },
        matching: ToyRow {
            observed_imbalance: 0.0,
            unobserved_imbalance: 4.0 * a2 / m,
            mse: a2 / m,
        },
    })
}

#[derive(Default)]
struct Accumulator {
    count: f64,
    dx2: f64,
    dz2: f64,
    err2: f64,
}

impl Accumulator {
    fn add(&mut self, w: &[i8], x: &[f64], z: &[f64], beta: f64) {
        let half = w.len() as f64 / 2.0;
        let (mut dx, mut dz, mut dy) = (0.0, 0.0, 0.0);
        for ((&wi, &xi), &zi) in w.iter().zip(x).zip(z) {
            let s = f64::from(wi);
            let y = beta * s + xi + zi;
            dx += s * xi;
            dz += s * zi;
            dy += s * y;
        }
        let (dx, dz, dy) = (dx / half, dz / half, dy / half);
        let err = dy / 2.0 - beta;
        self.count += 1.0;
        self.dx2 += dx * dx;
        self.dz2 += dz * dz;
        self.err2 += err * err;
    }

    fn row(&self) -> ToyRow {
        ToyRow {
            observed_imbalance: self.dx2 / self.count,
            unobserved_imbalance: self.dz2 / self.count,
            mse: self.err2 / self.count,
        }
    }
}

fn enumerate_at(data: &ToyData, beta: f64) -> Result<ToyTable> {
    let x = data.x.column(0);
    let mut crfb = Accumulator::default();
    for_each_balanced(x.len(), |w| crfb.add(w, &x, &data.z, beta))?;
    let mut matching = Accumulator::default();
    for mask in 0..1u64 << data.pairs.len() {
        let w: Allocation = data.pairs.flip_allocation(mask);
        matching.add(w.as_slice(), &x, &data.z, beta);
    }
    Ok(ToyTable {
        crfb: crfb.row(),
        matching: matching.row(),
    })
}

/// Exhaustive oracle: averages over all `C(2m, m)` balanced allocations and
/// all `2^m` within-pair flips, with the estimator `(Ȳ_T - Ȳ_C)/2` applied
/// to `y = β w + x + z`. Runs at two values of `β` and requires them to agree.
pub fn toy_enumerate_check(cfg: &ToyConfig) -> Result<ToyTable> {
    cfg.validate()?;
    if cfg.m > MAX_TOY_PAIRS {
        return Err(Error::param(
            "m",
            format!("{} pairs exceeds the enumeration cap of {MAX_TOY_PAIRS}", cfg.m),
        ));
    }
    let data = toy_build(cfg)?;
    let at_one = enumerate_at(&data, 1.0)?;
    let at_other = enumerate_at(&data, -2.5)?;
    let gap = at_one.max_abs_diff(&at_other);
    if gap > 1e-10 {
        return Err(Error::Invariant(format!(
            "toy MSE depends on the treatment effect (gap {gap:e})"
        )));
    }
    Ok(at_one)
}
