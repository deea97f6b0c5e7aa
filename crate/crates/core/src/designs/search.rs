use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{for_each_balanced, sample_crfb, ImbalanceMetric};
use crate::error::{Error, Result};
use crate::model::{check_subject_count, Allocation, CovariateMatrix};
use crate::rng::{stream, Domain};
use crate::tol;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub restarts: usize,
    pub seed: u64,
    pub max_enumeration_n: usize,
}

impl SearchConfig {
    pub fn new(restarts: usize, seed: u64) -> Result<Self> {
        if restarts == 0 {
            return Err(Error::param("restarts", "must be at least 1"));
        }
        Ok(Self {
            restarts,
            seed,
            max_enumeration_n: tol::MAX_ENUMERATION_N,
        })
    }

    /// Lowers the enumeration cap; raising it above the default is rejected.
    pub fn with_enumeration_cap(mut self, cap: usize) -> Result<Self> {
        if cap > tol::MAX_ENUMERATION_N {
            return Err(Error::param(
                "enumeration cap",
                format!("{cap} exceeds the maximum {}", tol::MAX_ENUMERATION_N),
            ));
        }
        self.max_enumeration_n = cap;
        Ok(self)
    }
}

/// How the perfect-balance allocation `w*` is found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PbSolver {
    Brute,
    Greedy { restarts: usize },
}

/// Best allocation found by a search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub allocation: Allocation,
    /// Mahalanobis imbalance of `allocation`.
    pub imbalance: f64,
    /// `(n/2)²` times the squared imbalance, the quantity actually minimized.
    pub score: f64,
    pub singular: bool,
    /// Allocations examined (brute force) or restarts run (greedy).
    pub evaluated: u64,
}

/// Exhaustive minimum of the imbalance; ties go to the lexicographically
/// smallest allocation.
pub fn brute_force_search(x: &CovariateMatrix, cap: usize) -> Result<SearchOutcome> {
    let n = x.n();
    if n > cap {
        return Err(Error::EnumerationCap { n, cap });
    }
    let metric = ImbalanceMetric::new(x);
    let mut best: Option<(f64, Vec<i8>)> = None;
    let mut evaluated = 0u64;
    for_each_balanced(n, |w| {
        evaluated += 1;
        let s = metric.score(w);
        if best.as_ref().is_none_or(|(b, _)| s < *b) {
            best = Some((s, w.to_vec()));
        }
    })?;
    let (score, w) = best.expect("at least one balanced allocation");
    Ok(SearchOutcome {
        allocation: Allocation::from_trusted(w),
        imbalance: metric.imbalance_from_score(score),
        score,
        singular: metric.singular(),
        evaluated,
    })
}

pub fn brute_force_optimal(x: &CovariateMatrix, cap: usize) -> Result<Allocation> {
    brute_force_search(x, cap).map(|o| o.allocation)
}

/// One steepest-descent run.
#[derive(Clone, Debug, PartialEq)]
pub struct Descent {
    pub allocation: Allocation,
    pub start_score: f64,
    pub final_score: f64,
    pub swaps: usize,
}

/// From `start`, repeatedly applies the single treatment/control swap that
/// lowers the imbalance the most, until no swap lowers it.
pub fn greedy_descent(metric: &ImbalanceMetric, start: &Allocation) -> Descent {
    let mut w = start.as_slice().to_vec();
    let mut sum = metric.signed_sum(&w);
    let start_score = metric.score_of_sum(&sum);
    let mut score = start_score;
    let mut swaps = 0;
    let p = metric.p();
    let mut cand = vec![0.0; p];

    loop {
        let treated: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0).collect();
        let control: Vec<usize> = (0..w.len()).filter(|&i| w[i] < 0).collect();
        let mut best: Option<(f64, usize, usize)> = None;
        let mut best_score = score;

        if p == 1 {
            let c = metric.weight()[(0, 0)];
            if c <= 0.0 {
                break;
            }
            let d = sum[0];
            let xt: Vec<f64> = treated.iter().map(|&i| metric.row(i)[0]).collect();
            let xc: Vec<f64> = control.iter().map(|&j| metric.row(j)[0]).collect();
            for (a, &xi) in xt.iter().enumerate() {
                let base = d - 2.0 * xi;
                for (b, &xj) in xc.iter().enumerate() {
                    let e = base + 2.0 * xj;
                    let s = c * e * e;
                    if s < best_score {
                        best_score = s;
                        best = Some((s, treated[a], control[b]));
                    }
                }
            }
        } else {
            for &i in &treated {
                for &j in &control {
                    for k in 0..p {
                        cand[k] = sum[k] + 2.0 * (metric.row(j)[k] - metric.row(i)[k]);
                    }
                    let s = metric.score_of_sum(&cand);
                    if s < best_score {
                        best_score = s;
                        best = Some((s, i, j));
                    }
                }
            }
        }

        let Some((_, i, j)) = best else { break };
        w[i] = -1;
        w[j] = 1;
        let new_sum = metric.signed_sum(&w);
        let new_score = metric.score_of_sum(&new_sum);
        if new_score >= score {
            // rounding made the predicted gain vanish
            w[i] = 1;
            w[j] = -1;
            break;
        }
        sum = new_sum;
        score = new_score;
        swaps += 1;
    }

    Descent {
        allocation: Allocation::from_trusted(w),
        start_score,
        final_score: score,
        swaps,
    }
}

/// Best local optimum over `config.restarts` random starts. Restarts run in
/// parallel on their own streams; the winner is the lowest score, ties by the
/// lexicographically smallest allocation, so the result is independent of
/// scheduling.
pub fn greedy_search(x: &CovariateMatrix, config: &SearchConfig) -> Result<SearchOutcome> {
    let n = x.n();
    check_subject_count(n)?;
    if config.restarts == 0 {
        return Err(Error::param("restarts", "must be at least 1"));
    }
    let metric = ImbalanceMetric::new(x);
    let best = (0..config.restarts as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(config.seed, Domain::GreedyStart, r);
            let start = sample_crfb(n, &mut rng);
            greedy_descent(&metric, &start)
        })
        .min_by(|a, b| {
            a.final_score
                .total_cmp(&b.final_score)
                .then_with(|| a.allocation.cmp(&b.allocation))
        })
        .expect("restarts >= 1");
    Ok(SearchOutcome {
        imbalance: metric.imbalance_from_score(best.final_score),
        score: best.final_score,
        allocation: best.allocation,
        singular: metric.singular(),
        evaluated: config.restarts as u64,
    })
}

pub fn greedy_optimize(x: &CovariateMatrix, config: &SearchConfig) -> Result<Allocation> {
    greedy_search(x, config).map(|o| o.allocation)
}

/// Finds `w*` with the requested solver.
pub fn perfect_balance(x: &CovariateMatrix, solver: PbSolver, config: &SearchConfig) -> Result<SearchOutcome> {
    match solver {
        PbSolver::Brute => brute_force_search(x, config.max_enumeration_n),
        PbSolver::Greedy { restarts } => {
            let cfg = SearchConfig {
                restarts,
                ..config.clone()
            };
            greedy_search(x, &cfg)
        }
    }
}
