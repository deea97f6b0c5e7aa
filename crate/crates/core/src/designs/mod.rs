//! Allocation generators: enumeration, samplers, matching, imbalance and the
//! perfect-balance searches.

mod build;
mod enumerate;
mod imbalance;
mod matching;
mod sampling;
mod search;

pub use build::build_design;
pub use enumerate::{binomial, enumerate_balanced, for_each_balanced};
pub use imbalance::{imbalance, mean_difference, ImbalanceMetric, ImbalanceReport};
pub use matching::match_pairs;
pub use sampling::{sample_crfb, sample_pm};
pub use search::{
    brute_force_optimal, brute_force_search, greedy_descent, greedy_optimize, greedy_search,
    perfect_balance, Descent, PbSolver, SearchConfig, SearchOutcome,
};
