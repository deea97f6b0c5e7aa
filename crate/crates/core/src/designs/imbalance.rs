use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{check_len, Allocation, CovariateMatrix};
use crate::tol;

/// Mahalanobis imbalance between treatment and control covariate means.
///
/// The weight matrix is the Moore-Penrose pseudo-inverse of the sample
/// covariance of `X`; eigenvalues below `1e-10 · λ_max` are dropped and the
/// metric is flagged `singular`.
#[derive(Clone, Debug)]
pub struct ImbalanceMetric {
    n: usize,
    p: usize,
    /// Row-major copy of X.
    rows: Vec<f64>,
    weight: DMatrix<f64>,
    singular: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceReport {
    pub value: f64,
    /// The covariate covariance was rank deficient and a pseudo-inverse was used.
    pub singular: bool,
}

impl ImbalanceMetric {
    pub fn new(x: &CovariateMatrix) -> Self {
        let (n, p) = (x.n(), x.p());
        let cov = x.sample_covariance();
        let eig = SymmetricEigen::new(cov);
        let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let cutoff = tol::PINV_RELATIVE * top;
        let mut singular = false;
        let mut weight = DMatrix::zeros(p, p);
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda <= cutoff || lambda <= 0.0 {
                singular = true;
                continue;
            }
            let v = eig.eigenvectors.column(k);
            weight += (v * v.transpose()) / lambda;
        }
        let mut rows = Vec::with_capacity(n * p);
        for i in 0..n {
            for j in 0..p {
                rows.push(x.get(i, j));
            }
        }
        Self {
            n,
            p,
            rows,
            weight,
            singular,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn singular(&self) -> bool {
        self.singular
    }

    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.p..(i + 1) * self.p]
    }

    pub(crate) fn weight(&self) -> &DMatrix<f64> {
        &self.weight
    }

    /// `Σ wᵢ xᵢ`, which equals `(n/2)(x̄_T - x̄_C)` under forced balance.
    pub fn signed_sum(&self, w: &[i8]) -> Vec<f64> {
        let mut d = vec![0.0; self.p];
        for (i, &wi) in w.iter().enumerate() {
            for (dk, &xk) in d.iter_mut().zip(self.row(i)) {
                if wi > 0 {
                    *dk += xk;
                } else {
                    *dk -= xk;
                }
            }
        }
        d
    }

    /// `dᵀ S⁺ d`.
    pub fn score_of_sum(&self, d: &[f64]) -> f64 {
        let mut s = 0.0;
        for a in 0..self.p {
            for b in 0..self.p {
                s += d[a] * self.weight[(a, b)] * d[b];
            }
        }
        s.max(0.0)
    }

    /// Search objective: the squared Mahalanobis imbalance scaled by `(n/2)²`.
    pub fn score(&self, w: &[i8]) -> f64 {
        self.score_of_sum(&self.signed_sum(w))
    }

    /// Converts a search score back to the Mahalanobis imbalance.
    pub fn imbalance_from_score(&self, score: f64) -> f64 {
        score.sqrt() / (self.n as f64 / 2.0)
    }

    pub fn imbalance(&self, w: &[i8]) -> f64 {
        self.imbalance_from_score(self.score(w))
    }
}

/// Mahalanobis distance between the treatment and control covariate means;
/// `|x̄_T - x̄_C| / sd(x)` when there is a single covariate.
pub fn imbalance(x: &CovariateMatrix, w: &Allocation) -> Result<ImbalanceReport> {
    check_len("allocation", x.n(), w.len())?;
    w.require_balanced()?;
    let metric = ImbalanceMetric::new(x);
    Ok(ImbalanceReport {
        value: metric.imbalance(w.as_slice()),
        singular: metric.singular(),
    })
}

/// `x̄_T - x̄_C` per covariate.
pub fn mean_difference(x: &CovariateMatrix, w: &Allocation) -> Result<Vec<f64>> {
    check_len("allocation", x.n(), w.len())?;
    w.require_balanced()?;
    let half = x.n() as f64 / 2.0;
    Ok((0..x.p())
        .map(|j| w.dot(&x.column(j)) / half)
        .collect())
}
