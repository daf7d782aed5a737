//! Sampling experiments over a grid of subset sizes and repetitions.
//!
//! Grid points are evaluated on the rayon pool and returned in grid order.
//! Ingestion failures abort the run; any other failure at a grid point is
//! recorded in that point's `status` and `message` fields.

use std::time::Instant;

use concordance_core::concordance::concordance_direct_subset;
use concordance_core::distributions::REPORT_PROBABILITIES;
use concordance_core::ingest::SampleMode;
use concordance_core::regression::{coefficient_log_mse, fit_irls_logistic, IrlsOptions};
use concordance_core::rng::derive_seed;
use concordance_core::{concordance_subset, stats, Concordance, Error, Matrix, Method, Mode, Result, Scatter};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::record::{ExperimentResult, LogMseField};
use crate::source::Source;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Uniform sample without replacement.
    Random,
    /// The first rows of the file.
    Head,
}

impl Sampling {
    pub fn as_str(self) -> &'static str {
        match self {
            Sampling::Random => "random",
            Sampling::Head => "head",
        }
    }

    fn mode(self, size: usize, seed: u64) -> SampleMode {
        match self {
            Sampling::Random => SampleMode::Random { size, seed },
            Sampling::Head => SampleMode::Head { size },
        }
    }
}

/// Seed of the row sample for one `(size, repetition)` cell. Modes and
/// sampling schemes share it, so overlapping and non-overlapping values in
/// the same cell describe the same subset.
pub fn sample_seed(seed: u64, size: usize, repetition: usize) -> u64 {
    derive_seed(seed, &[size as u64, repetition as u64])
}

fn is_fatal(e: &Error) -> bool {
    matches!(e, Error::Parse { .. } | Error::Io(_) | Error::Csv(_) | Error::Schema(_))
}

fn validate_sizes(sizes: &[usize], reps: usize) -> Result<()> {
    if sizes.contains(&0) {
        return Err(Error::InvalidArgument("sample sizes must be positive".into()));
    }
    if !sizes.is_empty() && reps == 0 {
        return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcordanceGrid {
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub modes: Vec<Mode>,
    pub samplings: Vec<Sampling>,
    pub method: Method,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
struct Point {
    index: usize,
    size: usize,
    mode: Mode,
    sampling: Sampling,
    repetition: usize,
}

impl ConcordanceGrid {
    /// Grid order: size, then sampling scheme, then mode, then repetition.
    fn points(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for &size in &self.sizes {
            for &sampling in &self.samplings {
                for &mode in &self.modes {
                    for repetition in 0..self.reps {
                        out.push(Point {
                            index: out.len(),
                            size,
                            mode,
                            sampling,
                            repetition,
                        });
                    }
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        validate_sizes(&self.sizes, self.reps)?;
        if self.modes.is_empty() || self.samplings.is_empty() {
            return Err(Error::InvalidArgument("grid needs at least one mode and one sampling scheme".into()));
        }
        Ok(())
    }
}

fn blank(experiment: &'static str, seed: u64, size: usize, repetition: usize, total: &Scatter) -> ExperimentResult {
    ExperimentResult {
        experiment,
        grid_index: 0,
        size,
        n_total: total.n(),
        d: total.d(),
        mode: Mode::Overlapping.as_str(),
        method: Method::Trace.as_str(),
        sampling: Sampling::Random.as_str(),
        repetition,
        seed,
        sample_seed: sample_seed(seed, size, repetition),
        concordance: None,
        q05: None,
        q25: None,
        q50: None,
        q75: None,
        q95: None,
        log_mse: None,
        irls_iterations: None,
        status: "ok",
        message: None,
        runtime_seconds: 0.0,
    }
}

fn fill_concordance(rec: &mut ExperimentResult, c: &Concordance) {
    rec.concordance = Some(c.value);
    if let Some(terms) = &c.terms {
        rec.set_quantiles(&stats::quantiles(terms, &REPORT_PROBABILITIES));
    }
    rec.message = c.warning.clone();
}

fn finish(records: Vec<(ExperimentResult, Option<Error>)>) -> Result<Vec<ExperimentResult>> {
    let mut out = Vec::with_capacity(records.len());
    for (rec, err) in records {
        if let Some(e) = err {
            if is_fatal(&e) {
                return Err(e);
            }
        }
        out.push(rec);
    }
    Ok(out)
}

fn record_error(rec: &mut ExperimentResult, e: &Error) {
    rec.status = e.kind();
    rec.message = Some(e.to_string());
}

/// Concordance of sampled subsets against the whole data set or against
/// the unsampled rows.
pub fn run_concordance(source: &Source, grid: &ConcordanceGrid, experiment: &'static str) -> Result<Vec<ExperimentResult>> {
    grid.validate()?;
    let points = grid.points();
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let total = source.total_scatter()?;
    let data: Option<Matrix> = match grid.method {
        Method::Direct => Some(source.load()?.0),
        Method::Trace => None,
    };

    let results: Vec<(ExperimentResult, Option<Error>)> = points
        .par_iter()
        .map(|p| {
            let start = Instant::now();
            let mut rec = blank(experiment, grid.seed, p.size, p.repetition, &total);
            rec.grid_index = p.index;
            rec.mode = p.mode.as_str();
            rec.method = grid.method.as_str();
            rec.sampling = p.sampling.as_str();
            let outcome = (|| -> Result<Concordance> {
                let sample = source.sample(p.sampling.mode(p.size, rec.sample_seed))?;
                match &data {
                    Some(x) => concordance_direct_subset(x, &sample.rows, p.mode),
                    None => {
                        let sub = Scatter::from_matrix(&sample.design, sample.response.as_deref())?;
                        concordance_subset(&total, &sub, p.mode)
                    }
                }
            })();
            let err = match outcome {
                Ok(c) => {
                    fill_concordance(&mut rec, &c);
                    None
                }
                Err(e) => {
                    record_error(&mut rec, &e);
                    Some(e)
                }
            };
            rec.runtime_seconds = start.elapsed().as_secs_f64();
            (rec, err)
        })
        .collect();
    finish(results)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmGrid {
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    /// Rows of the random sample the reference model is fitted to; `None`
    /// fits it to all rows.
    pub reference_size: Option<usize>,
    pub irls: IrlsOptions,
}

/// Coefficients compared by the log MSE: all but an intercept column.
fn slope_columns(names: &[String]) -> Vec<usize> {
    (0..names.len()).filter(|&j| names[j] != "(Intercept)").collect()
}

/// Logistic fits on random subsets, scored against a reference fit by the
/// log MSE of the slope coefficients, alongside the overlapping concordance
/// of each subset's design.
pub fn run_glm(source: &Source, grid: &GlmGrid) -> Result<Vec<ExperimentResult>> {
    validate_sizes(&grid.sizes, grid.reps)?;
    if !source.has_response() {
        return Err(Error::InvalidArgument("the logistic experiment needs a response column".into()));
    }
    let points: Vec<(usize, usize, usize)> = grid
        .sizes
        .iter()
        .flat_map(|&size| (0..grid.reps).map(move |rep| (size, rep)))
        .enumerate()
        .map(|(k, (size, rep))| (k, size, rep))
        .collect();
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let total = source.total_scatter()?;
    let (x_ref, y_ref) = match grid.reference_size {
        None => source.load()?,
        Some(size) => {
            let s = source.sample(SampleMode::Random {
                size,
                seed: derive_seed(grid.seed, &[u64::MAX]),
            })?;
            (s.design, s.response)
        }
    };
    let y_ref = y_ref.ok_or_else(|| Error::InvalidArgument("reference rows carry no response".into()))?;
    let reference = fit_irls_logistic(&x_ref, &y_ref, &grid.irls)?.coefficients;
    drop(x_ref);
    let slopes = slope_columns(source.column_names());
    let ref_slopes: Vec<f64> = slopes.iter().map(|&j| reference[j]).collect();

    let results: Vec<(ExperimentResult, Option<Error>)> = points
        .par_iter()
        .map(|&(index, size, repetition)| {
            let start = Instant::now();
            let mut rec = blank("glm", grid.seed, size, repetition, &total);
            rec.grid_index = index;
            let mut failure = None;
            match source.sample(SampleMode::Random {
                size,
                seed: rec.sample_seed,
            }) {
                Err(e) => {
                    record_error(&mut rec, &e);
                    failure = Some(e);
                }
                Ok(sample) => {
                    let y = sample.response.as_deref().unwrap_or(&[]);
                    match Scatter::from_matrix(&sample.design, Some(y))
                        .and_then(|sub| concordance_subset(&total, &sub, Mode::Overlapping))
                    {
                        Ok(c) => fill_concordance(&mut rec, &c),
                        Err(e) => record_error(&mut rec, &e),
                    }
                    match fit_irls_logistic(&sample.design, y, &grid.irls) {
                        Ok(fit) => {
                            rec.irls_iterations = fit.diagnostics.iterations;
                            let est: Vec<f64> = slopes.iter().map(|&j| fit.coefficients[j]).collect();
                            match coefficient_log_mse(&est, &ref_slopes) {
                                Ok(v) => rec.log_mse = Some(LogMseField(v)),
                                Err(e) => record_error(&mut rec, &e),
                            }
                        }
                        Err(e) => record_error(&mut rec, &e),
                    }
                }
            }
            rec.runtime_seconds = start.elapsed().as_secs_f64();
            (rec, failure)
        })
        .collect();
    finish(results)
}
