//! Fixed numerical tolerances.

/// Probability weights must sum to one within this.
pub const PROB_SUM: f64 = 1e-12;
/// Mirror weights `P(w)` and `P(-w)` must agree within this.
pub const MIRROR_PROB: f64 = 1e-12;
/// `Σ_w` symmetry.
pub const SYMMETRY: f64 = 1e-10;
/// Smallest eigenvalue accepted as positive semidefinite.
pub const PSD_MIN_EIGEN: f64 = -1e-8;
/// Unit diagonal and trace checks.
pub const DIAGONAL: f64 = 1e-10;
/// `Σ_w 1 = 0` residual.
pub const ROW_SUM: f64 = 1e-8;
/// Relative gap below which eigenvalues are merged into one group.
pub const EIGEN_GROUP: f64 = 1e-8;
/// Singular values below `PINV_RELATIVE * σ_max` are treated as zero.
pub const PINV_RELATIVE: f64 = 1e-10;
/// Exact quadratic-form identities checked at run time.
pub const IDENTITY: f64 = 1e-10;

/// Largest `n` for dense closed-form `Σ_w`.
pub const MAX_DENSE_N: usize = 4096;
/// Default (and maximum) subject count for full enumeration.
pub const MAX_ENUMERATION_N: usize = 24;
/// Largest pair count for which a matched design keeps explicit support.
pub const MAX_EXPLICIT_PAIRS: usize = 20;
