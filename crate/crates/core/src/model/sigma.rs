use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{check_subject_count, validate_design, Allocation, DesignDistribution, DesignKind, PairSet};
use crate::error::{Error, Result};
use crate::tol;

/// Eigenvalues in descending order with matching unit eigenvectors (columns).
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Spectrum {
    fn of(matrix: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(matrix.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(matrix.nrows(), order.len(), |i, c| {
            eig.eigenvectors[(i, order[c])]
        });
        Self { values, vectors }
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k).iter().copied().collect()
    }
}

/// `Σ_w = E[w wᵀ]` for a forced-balance mirror-symmetric design.
///
/// Always symmetric with unit diagonal, trace `n`, `Σ_w 1 = 0` and positive
/// semidefinite, each within the tolerances in [`crate::tol`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "MatrixRecord", into = "MatrixRecord")]
pub struct AllocationCovariance {
    matrix: DMatrix<f64>,
    known_lambda_max: Option<f64>,
    spectrum: OnceLock<Spectrum>,
}

impl PartialEq for AllocationCovariance {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl AllocationCovariance {
    /// Validates every invariant, including positive semidefiniteness through
    /// a symmetric eigensolver.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let sigma = Self::structural(matrix, None)?;
        let min = sigma.min_eigenvalue();
        if min < tol::PSD_MIN_EIGEN {
            return Err(Error::InvalidCovariance(format!(
                "not positive semidefinite: smallest eigenvalue {min:e}"
            )));
        }
        Ok(sigma)
    }

    /// Checks everything except the spectrum, for matrices that are PSD by
    /// construction.
    fn structural(matrix: DMatrix<f64>, known_lambda_max: Option<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::InvalidCovariance(format!(
                "not square: {}x{}",
                n,
                matrix.ncols()
            )));
        }
        check_subject_count(n)?;
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("allocation covariance"));
        }
        for i in 0..n {
            if (matrix[(i, i)] - 1.0).abs() > tol::DIAGONAL {
                return Err(Error::InvalidCovariance(format!(
                    "diagonal entry {i} is {}",
                    matrix[(i, i)]
                )));
            }
            for j in (i + 1)..n {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > tol::SYMMETRY {
                    return Err(Error::InvalidCovariance(format!(
                        "asymmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let trace = matrix.trace();
        if (trace - n as f64).abs() > tol::DIAGONAL * n as f64 {
            return Err(Error::InvalidCovariance(format!("trace {trace} != {n}")));
        }
        let sigma = Self {
            matrix,
            known_lambda_max,
            spectrum: OnceLock::new(),
        };
        let residual = sigma.ones_residual();
        if residual > tol::ROW_SUM {
            return Err(Error::InvalidCovariance(format!(
                "rows do not sum to zero (max |Σ1| = {residual:e}); design is not forced-balance"
            )));
        }
        Ok(sigma)
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| Spectrum::of(&self.matrix))
    }

    pub fn lambda_max(&self) -> f64 {
        self.known_lambda_max
            .unwrap_or_else(|| self.spectrum().values[0])
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.spectrum().values.last().expect("n >= 2")
    }

    /// `‖Σ_w‖_F²`.
    pub fn frobenius_sq(&self) -> f64 {
        self.matrix.iter().map(|v| v * v).sum()
    }

    /// `Σ_w v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        debug_assert_eq!(v.len(), n);
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `vᵀ Σ_w v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        self.apply(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// `max_i |(Σ_w 1)_i|`.
    pub fn ones_residual(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.sum().abs())
            .fold(0.0, f64::max)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }
}

/// `Σ prob · w wᵀ` over an explicit support.
pub fn sigma_exact(d: &DesignDistribution) -> Result<AllocationCovariance> {
    let n = d.n();
    let report = validate_design(d, n)?;
    if !report.passed() {
        return Err(Error::InvalidDesign(format!(
            "fails {}",
            report.failures().join(", ")
        )));
    }
    let s = d
        .support()
        .ok_or_else(|| Error::InvalidDesign("no explicit support to average over".into()))?;
    if d.kind() == DesignKind::Pb && s.allocations.len() == 2 {
        return sigma_pb(&s.allocations[0]);
    }
    let mut upper = vec![0.0; n * n];
    for (w, &p) in s.allocations.iter().zip(&s.probs) {
        let w = w.as_slice();
        for i in 0..n {
            let row = &mut upper[i * n..(i + 1) * n];
            let (wi, pos) = (w[i], p);
            let neg = -p;
            for j in i..n {
                row[j] += if wi == w[j] { pos } else { neg };
            }
        }
    }
    let m = DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        upper[a * n + b]
    });
    AllocationCovariance::from_matrix(m)
}

/// `n/(n-1) I - 1/(n-1) J`, the complete-randomization covariance.
pub fn sigma_crfb_closed(n: usize) -> Result<AllocationCovariance> {
    check_subject_count(n)?;
    if n > tol::MAX_DENSE_N {
        return Err(Error::DenseCap {
            n,
            cap: tol::MAX_DENSE_N,
        });
    }
    let off = -1.0 / (n as f64 - 1.0);
    let m = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { off });
    AllocationCovariance::structural(m, Some(n as f64 / (n as f64 - 1.0)))
}

/// `w* w*ᵀ`, the perfect-balance covariance.
pub fn sigma_pb(w_star: &Allocation) -> Result<AllocationCovariance> {
    w_star.require_balanced()?;
    let n = w_star.len();
    if n > tol::MAX_DENSE_N {
        return Err(Error::DenseCap {
            n,
            cap: tol::MAX_DENSE_N,
        });
    }
    let w = w_star.as_slice();
    let m = DMatrix::from_fn(n, n, |i, j| f64::from(w[i] * w[j]));
    AllocationCovariance::structural(m, Some(n as f64))
}

/// Identity with `-1` at every matched pair: within-pair sign flips.
pub fn sigma_pm(pairs: &PairSet) -> Result<AllocationCovariance> {
    let n = pairs.n();
    if n > tol::MAX_DENSE_N {
        return Err(Error::DenseCap {
            n,
            cap: tol::MAX_DENSE_N,
        });
    }
    let mut m = DMatrix::identity(n, n);
    for &(i, j) in pairs.pairs() {
        m[(i, j)] = -1.0;
        m[(j, i)] = -1.0;
    }
    AllocationCovariance::structural(m, Some(2.0))
}

#[derive(Clone, Serialize, Deserialize)]
struct MatrixRecord {
    n: usize,
    data: Vec<Vec<f64>>,
}

impl From<AllocationCovariance> for MatrixRecord {
    fn from(s: AllocationCovariance) -> Self {
        Self {
            n: s.n(),
            data: s.rows(),
        }
    }
}

impl TryFrom<MatrixRecord> for AllocationCovariance {
    type Error = Error;
    fn try_from(r: MatrixRecord) -> Result<Self> {
        if r.data.len() != r.n || r.data.iter().any(|row| row.len() != r.n) {
            return Err(Error::Parse(format!("matrix data is not {0}x{0}", r.n)));
        }
        AllocationCovariance::from_matrix(DMatrix::from_fn(r.n, r.n, |i, j| r.data[i][j]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alloc(v: &[i8]) -> Allocation {
        Allocation::new(v.to_vec()).unwrap()
    }

    fn assert_close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= tol, "{x} vs {y}");
        }
    }

    #[test]
    fn two_subject_designs_coincide() {
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let d = DesignDistribution::uniform(DesignKind::Crfb, vec![alloc(&[1, -1]), alloc(&[-1, 1])])
            .unwrap();
        assert_close(sigma_exact(&d).unwrap().matrix(), &expected, 0.0);
        assert_close(sigma_crfb_closed(2).unwrap().matrix(), &expected, 0.0);
        assert_close(sigma_pb(&alloc(&[1, -1])).unwrap().matrix(), &expected, 0.0);
        let pairs = PairSet::new(vec![(0, 1)]).unwrap();
        assert_close(sigma_pm(&pairs).unwrap().matrix(), &expected, 0.0);
    }

    #[test]
    fn pb_exact_is_outer_product() {
        let w = alloc(&[1, 1, -1, -1, 1, -1]);
        let d = DesignDistribution::uniform(DesignKind::Explicit, vec![w.clone(), w.negated()]).unwrap();
        let s = sigma_exact(&d).unwrap();
        assert_close(s.matrix(), sigma_pb(&w).unwrap().matrix(), 0.0);
        assert_eq!(s.frobenius_sq(), 36.0);
        assert!((s.lambda_max() - 6.0).abs() < 1e-10);
    }

    #[test]
    fn crfb_closed_spectrum() {
        for n in [2usize, 4, 6, 10, 20] {
            let s = sigma_crfb_closed(n).unwrap();
            let nf = n as f64;
            let spec = s.spectrum();
            assert!(spec.values.last().unwrap().abs() < 1e-10);
            for v in &spec.values[..n - 1] {
                assert!((v - nf / (nf - 1.0)).abs() < 1e-10);
            }
            assert!((s.lambda_max() - nf / (nf - 1.0)).abs() < 1e-10);
        }
        // n = 20 -> 20 + 20/19
        let r = sigma_crfb_closed(20).unwrap().frobenius_sq();
        assert!((r - (20.0 + 20.0 / 19.0)).abs() < 1e-10);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(sigma_crfb_closed(5).is_err());
        assert!(matches!(sigma_crfb_closed(4098), Err(Error::DenseCap { .. })));
        assert!(matches!(sigma_pb(&alloc(&[1, 1, -1, 1])), Err(Error::Unbalanced(2))));
        let unmirrored =
            DesignDistribution::explicit(DesignKind::Explicit, vec![alloc(&[1, -1])], vec![1.0]).unwrap();
        assert!(sigma_exact(&unmirrored).is_err());
        // identity is not forced-balance
        assert!(AllocationCovariance::from_matrix(DMatrix::identity(4, 4)).is_err());
        // unit diagonal and zero row sums, but (1, 1, -1, -1) has eigenvalue -1
        let not_psd = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, -1.5, 0.25, 0.25, //
                -1.5, 1.0, 0.25, 0.25, //
                0.25, 0.25, 1.0, -1.5, //
                0.25, 0.25, -1.5, 1.0,
            ],
        );
        let err = AllocationCovariance::from_matrix(not_psd).unwrap_err();
        assert!(err.to_string().contains("positive semidefinite"), "{err}");
    }

    #[test]
    fn json_form_has_n_and_data() {
        let s = sigma_crfb_closed(2).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"n":2,"data":[[1.0,-1.0],[-1.0,1.0]]}"#);
        let back: AllocationCovariance = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }
}
