//! Concordance distribution models, Monte Carlo validation and block-size
//! selection.

mod heuristic;
mod models;
mod simulate;

pub use heuristic::{
    approx_variance, critical_value, partition_size_explained, partition_size_heuristic, PartitionSize,
};
pub use models::{
    model_nonoverlapping_cauchy, model_nonoverlapping_f, model_overlapping, Approximation, ConcordanceModel, Family,
};
pub use simulate::{
    fluctuation_ratio, simulate_concordance, Basis, MonteCarloReport, QuantileRow, SimulationConfig, SimulationMode,
    REPORT_PROBABILITIES,
};
