use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::check_subject_count;
use crate::error::{Error, Result};

/// Observed covariates, one row per subject.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CovariateMatrix {
    data: DMatrix<f64>,
}

impl CovariateMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        check_subject_count(n)?;
        let p = rows[0].len();
        if p == 0 {
            return Err(Error::param("covariate count", "need at least one column"));
        }
        for row in &rows {
            super::check_len("covariate row", p, row.len())?;
        }
        let data = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        Self::from_matrix(data)
    }

    /// A single covariate.
    pub fn from_column(x: &[f64]) -> Result<Self> {
        check_subject_count(x.len())?;
        Self::from_matrix(DMatrix::from_column_slice(x.len(), 1, x))
    }

    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        check_subject_count(data.nrows())?;
        if data.ncols() == 0 {
            return Err(Error::param("covariate count", "need at least one column"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariates"));
        }
        Ok(Self { data })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.column(j).iter().copied().collect()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| self.data.row(i).iter().copied().collect())
            .collect()
    }

    /// Sample covariance of the columns (n - 1 denominator).
    pub fn sample_covariance(&self) -> DMatrix<f64> {
        let n = self.n();
        let means = self.data.row_mean();
        let mut centered = self.data.clone();
        for mut row in centered.row_iter_mut() {
            row -= &means;
        }
        (centered.transpose() * &centered) / (n as f64 - 1.0)
    }
}

impl TryFrom<Vec<Vec<f64>>> for CovariateMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<CovariateMatrix> for Vec<Vec<f64>> {
    fn from(x: CovariateMatrix) -> Self {
        x.rows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_ragged_input() {
        assert!(CovariateMatrix::from_column(&[1.0, 2.0, 3.0]).is_err());
        assert!(CovariateMatrix::from_rows(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(CovariateMatrix::from_column(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn covariance_of_single_column_is_sample_variance() {
        let x = CovariateMatrix::from_column(&[0.0, 0.0, 1.0, 1.0]).unwrap();
        let s = x.sample_covariance();
        assert!((s[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);
    }
}
