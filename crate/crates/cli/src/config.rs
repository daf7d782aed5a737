//! Configuration file of the `convergence` subcommand.

use std::path::{Path, PathBuf};

use concordance_core::ingest::SchemaSpec;
use concordance_core::synth::{generate, SyntheticSpec};
use concordance_core::{Error, Method, Mode, Result};
use serde::Deserialize;

use crate::experiments::{ConcordanceGrid, Sampling};
use crate::source::{Source, DEFAULT_CHUNK_ROWS};

fn one() -> usize {
    1
}

fn default_modes() -> Vec<Mode> {
    vec![Mode::Overlapping]
}

fn default_sampling() -> Vec<Sampling> {
    vec![Sampling::Random]
}

fn default_method() -> Method {
    Method::Trace
}

fn default_seed() -> u64 {
    42
}

fn default_chunk_rows() -> usize {
    DEFAULT_CHUNK_ROWS
}

/// Either `data` and `schema` name a delimited file, or `synthetic`
/// describes a generated data set. Relative paths are taken relative to the
/// configuration file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default = "one")]
    pub reps: usize,
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
    #[serde(default = "default_sampling")]
    pub sampling: Vec<Sampling>,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_chunk_rows")]
    pub chunk_rows: usize,
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
    /// Seed of the synthetic data; defaults to `seed`.
    pub synthetic_seed: Option<u64>,
}

impl ConvergenceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("convergence config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut config = Self::from_toml_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.data, &mut config.schema].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn grid(&self) -> ConcordanceGrid {
        ConcordanceGrid {
            sizes: self.sizes.clone(),
            reps: self.reps,
            modes: self.modes.clone(),
            samplings: self.sampling.clone(),
            method: self.method,
            seed: self.seed,
        }
    }

    pub fn source(&self) -> Result<Source> {
        match (&self.data, &self.schema, &self.synthetic) {
            (Some(data), Some(schema), None) => Source::file(data, &SchemaSpec::load(schema)?, self.chunk_rows),
            (None, None, Some(spec)) => {
                let generated = generate(spec, self.synthetic_seed.unwrap_or(self.seed))?;
                Ok(Source::memory(generated.design, generated.response))
            }
            _ => Err(Error::InvalidArgument(
                "convergence config needs either `data` and `schema`, or `synthetic`".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ConvergenceConfig::from_toml_str("sizes = [100, 1000]\nreps = 10\n[synthetic]\nn = 2000\nd = 3\n").unwrap();
        assert_eq!(c.modes, vec![Mode::Overlapping]);
        assert_eq!(c.sampling, vec![Sampling::Random]);
        assert_eq!(c.method, Method::Trace);
        assert!(c.source().is_ok());
    }

    #[test]
    fn rejects_ambiguous_sources() {
        let c = ConvergenceConfig::from_toml_str("sizes = [1]").unwrap();
        assert!(c.source().is_err());
        assert!(ConvergenceConfig::from_toml_str("sizes = [1]\nunknown = 2").is_err());
        assert!(ConvergenceConfig::from_toml_str("modes = [\"sideways\"]").is_err());
    }
}
