use serde::{Deserialize, Serialize};

use crate::criteria::{draw_noise, mc_samples, summarize, McSummary, MseEstimator};
use crate::designs::{mean_difference, perfect_balance, match_pairs, PbSolver, SearchConfig};
use crate::error::{Error, Result};
use crate::model::{check_subject_count, Allocation, CovariateMatrix, DesignDistribution, DesignKind, ResponseSpec};
use crate::rng::{stream, Domain};
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FMode {
    /// `f = x`.
    Identity,
    /// `f = 0`.
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub n: usize,
    pub beta_t: f64,
    pub f_mode: FMode,
    pub sigma_z: f64,
    pub n_z_draws: usize,
    pub n_w_draws: usize,
    pub q: f64,
    pub seed: u64,
    pub designs: Vec<DesignKind>,
    pub pb_solver: PbSolver,
    /// Largest acceptable squared mean difference of `w*`; exceeding it is
    /// recorded as a warning.
    #[serde(default)]
    pub imbalance_ceiling: Option<f64>,
    /// Use the exact quadratic form per draw instead of sampling allocations.
    #[serde(default)]
    pub exact: bool,
}

pub const PRESET_NAMES: [&str; 4] = ["baseline", "null_f", "strong_x", "large_n"];

fn base(name: &str) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        n: 20,
        beta_t: 1.0,
        f_mode: FMode::Identity,
        sigma_z: 1.5,
        n_z_draws: 2000,
        n_w_draws: 300,
        q: 0.95,
        seed: 0,
        designs: vec![DesignKind::Crfb, DesignKind::Pb, DesignKind::Pm],
        pb_solver: PbSolver::Brute,
        imbalance_ceiling: None,
        exact: false,
    }
}

pub fn presets() -> Vec<ScenarioConfig> {
    let baseline = base("baseline");
    let null_f = ScenarioConfig {
        f_mode: FMode::Zero,
        ..base("null_f")
    };
    let strong_x = ScenarioConfig {
        sigma_z: 0.01,
        ..base("strong_x")
    };
    let large_n = ScenarioConfig {
        n: 200,
        pb_solver: PbSolver::Greedy { restarts: 20_000 },
        imbalance_ceiling: Some(1e-14),
        ..base("large_n")
    };
    vec![baseline, null_f, strong_x, large_n]
}

/// Case-insensitive lookup by preset name.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    presets()
        .into_iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| {
            Error::param(
                "preset",
                format!("unknown preset {name:?}; available: {}", PRESET_NAMES.join(", ")),
            )
        })
}

impl ScenarioConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_subject_count(self.n)?;
        if self.n_z_draws == 0 {
            return Err(Error::param("n_z_draws", "need at least 1"));
        }
        if self.n_w_draws < 2 {
            return Err(Error::param("n_w_draws", "need at least 2"));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::param("q", format!("{} is outside (0, 1)", self.q)));
        }
        if !(self.sigma_z >= 0.0 && self.sigma_z.is_finite()) {
            return Err(Error::param("sigma_z", format!("{} is not >= 0", self.sigma_z)));
        }
        if !self.beta_t.is_finite() {
            return Err(Error::NonFinite("beta_t"));
        }
        if self.designs.is_empty() {
            return Err(Error::param("designs", "need at least one design"));
        }
        if self.designs.contains(&DesignKind::Explicit) {
            return Err(Error::param("designs", "EXPLICIT is not a simulated design"));
        }
        match self.pb_solver {
            PbSolver::Brute if self.n > tol::MAX_ENUMERATION_N => Err(Error::EnumerationCap {
                n: self.n,
                cap: tol::MAX_ENUMERATION_N,
            }),
            PbSolver::Greedy { restarts: 0 } => Err(Error::param("restarts", "must be at least 1")),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    pub design: DesignKind,
    pub summary: McSummary,
    pub samples: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub x: Vec<f64>,
    pub w_star: Allocation,
    /// Mahalanobis imbalance of `w*`.
    pub w_star_imbalance: f64,
    /// `(x̄_T - x̄_C)²` summed over covariates for `w*`.
    pub w_star_mean_diff_sq: f64,
    pub warnings: Vec<String>,
    pub designs: Vec<DesignResult>,
}

impl ScenarioResult {
    pub fn design(&self, kind: DesignKind) -> Option<&DesignResult> {
        self.designs.iter().find(|d| d.design == kind)
    }
}

/// Runs one scenario. The covariate vector comes from stream
/// `(seed, Covariates, 0)`, and every design sees the same `z` draws.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    cfg.validate()?;
    let n = cfg.n;
    let x = draw_noise(n, 1.0, &mut stream(cfg.seed, Domain::Covariates, 0));
    let xm = CovariateMatrix::from_column(&x)?;
    let f = match cfg.f_mode {
        FMode::Identity => x.clone(),
        FMode::Zero => vec![0.0; n],
    };
    let spec = ResponseSpec::gaussian(cfg.beta_t, f, cfg.sigma_z)?;

    let restarts = match cfg.pb_solver {
        PbSolver::Greedy { restarts } => restarts,
        PbSolver::Brute => 1,
    };
    let search = SearchConfig::new(restarts, cfg.seed)?;
    let pb = perfect_balance(&xm, cfg.pb_solver, &search)?;
    let diff = mean_difference(&xm, &pb.allocation)?;
    let mean_diff_sq: f64 = diff.iter().map(|d| d * d).sum();

    let mut warnings = Vec::new();
    if pb.singular {
        warnings.push("covariate covariance is singular; imbalance uses a pseudo-inverse".into());
    }
    if let Some(ceiling) = cfg.imbalance_ceiling {
        if !(mean_diff_sq <= ceiling) {
            warnings.push(format!(
                "w* squared mean difference {mean_diff_sq:e} exceeds the ceiling {ceiling:e}"
            ));
        }
    }

    let estimator = if cfg.exact {
        MseEstimator::Exact
    } else {
        MseEstimator::Sampled {
            n_w: cfg.n_w_draws,
        }
    };
    let mut designs = Vec::with_capacity(cfg.designs.len());
    for &kind in &cfg.designs {
        let design = match kind {
            DesignKind::Crfb => DesignDistribution::crfb_sampled(n)?,
            DesignKind::Pb => DesignDistribution::uniform(
                DesignKind::Pb,
                vec![pb.allocation.negated(), pb.allocation.clone()],
            )?,
            DesignKind::Pm => DesignDistribution::pm_sampled(match_pairs(&xm)),
            DesignKind::Explicit => unreachable!("rejected by validate"),
        };
        let samples = mc_samples(&spec, &design, cfg.n_z_draws, estimator, cfg.seed)?;
        designs.push(DesignResult {
            design: kind,
            summary: summarize(&samples, cfg.q),
            samples,
        });
    }

    Ok(ScenarioResult {
        config: cfg.clone(),
        x,
        w_star: pb.allocation,
        w_star_imbalance: pb.imbalance,
        w_star_mean_diff_sq: mean_diff_sq,
        warnings,
        designs,
    })
}

/// Aligned text table of per-design mean, quantile, max and realized `c`.
pub fn summary_table(result: &ScenarioResult) -> String {
    let q = result.config.q;
    let qlabel = format!("q{}", (q * 100.0).round());
    let mut out = format!(
        "{:<8} {:>12} {:>12} {:>12} {:>10} {:>12}\n",
        "design", "mean", qlabel, "max", "c", "mc_se"
    );
    for d in &result.designs {
        let s = &d.summary;
        let c = s.realized_c.map_or_else(|| "-".to_string(), |c| format!("{c:.3}"));
        out.push_str(&format!(
            "{:<8} {:>12.6} {:>12.6} {:>12.6} {:>10} {:>12.2e}\n",
            d.design.name(),
            s.mean,
            s.quantile,
            s.max,
            c,
            s.mc_se
        ));
    }
    out
}
