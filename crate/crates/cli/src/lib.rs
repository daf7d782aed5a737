//! Experiment harness behind the `smc` command-line tool.

pub mod config;
pub mod experiments;
pub mod output;
pub mod record;
pub mod source;

pub use experiments::{run_concordance, run_glm, sample_seed, ConcordanceGrid, GlmGrid, Sampling};
pub use record::{ExperimentResult, LogMseField};
pub use source::Source;
