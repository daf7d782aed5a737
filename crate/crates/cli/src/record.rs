//! Output records.

use concordance_core::regression::LogMse;
use serde::{Serialize, Serializer};

/// Log MSE as a JSON/CSV field: a number, or the string `"-inf"` when the
/// estimate equals the reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMseField(pub LogMse);

impl Serialize for LogMseField {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            LogMse::Finite(v) => s.serialize_f64(v),
            LogMse::NegInfinity => s.serialize_str("-inf"),
        }
    }
}

/// One grid point of a sampling experiment. Field names are stable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub experiment: &'static str,
    pub grid_index: usize,
    /// Subset size `i`.
    pub size: usize,
    /// Kept rows in the data set.
    pub n_total: usize,
    pub d: usize,
    pub mode: &'static str,
    pub method: &'static str,
    pub sampling: &'static str,
    pub repetition: usize,
    /// Seed given on the command line or in the config.
    pub seed: u64,
    /// Seed of this record's row sample, derived from `seed`, `size` and
    /// `repetition`.
    pub sample_seed: u64,
    pub concordance: Option<f64>,
    /// Quantiles of the per-coordinate concordance terms.
    pub q05: Option<f64>,
    pub q25: Option<f64>,
    pub q50: Option<f64>,
    pub q75: Option<f64>,
    pub q95: Option<f64>,
    pub log_mse: Option<LogMseField>,
    pub irls_iterations: Option<usize>,
    /// `ok`, or the error kind when this grid point failed.
    pub status: &'static str,
    pub message: Option<String>,
    pub runtime_seconds: f64,
}

impl ExperimentResult {
    pub fn set_quantiles(&mut self, q: &[f64]) {
        [self.q05, self.q25, self.q50, self.q75, self.q95] = [q[0], q[1], q[2], q[3], q[4]].map(Some);
    }
}
