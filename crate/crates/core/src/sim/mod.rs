//! The fixed-covariate simulation study.
//!
//! A scenario draws one covariate vector, builds each design for it, and then
//! estimates the distribution over `z` of each design's conditional MSE.

mod density;
mod scenario;

pub use density::{density_export, DensityRow, DensityTable, DEFAULT_BINS};
pub use scenario::{
    preset, presets, run_scenario, summary_table, DesignResult, FMode, ScenarioConfig,
    ScenarioResult, PRESET_NAMES,
};
