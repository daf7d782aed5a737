use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use concordance_cli::config::ConvergenceConfig;
use concordance_cli::output::Sink;
use concordance_cli::source::DEFAULT_CHUNK_ROWS;
use concordance_cli::{run_concordance, run_glm, ConcordanceGrid, GlmGrid, Sampling, Source};
use concordance_core::distributions::{
    partition_size_explained, simulate_concordance, Basis, MonteCarloReport, SimulationConfig, SimulationMode,
};
use concordance_core::ingest::SchemaSpec;
use concordance_core::regression::{communication_cost, IrlsOptions};
use concordance_core::synth::{generate, matching_schema, write_csv, CovarianceSpec, Drift, ResponseKind, SyntheticSpec};
use concordance_core::{Error, Method, Mode};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "smc", version, about = "Scatter-matrix concordance and divide-and-recombine experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Write records here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit CSV instead of JSON lines.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct DataArgs {
    /// Delimited input file.
    #[arg(long)]
    data: PathBuf,
    /// TOML schema describing the model matrix.
    #[arg(long)]
    schema: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CHUNK_ROWS)]
    chunk_rows: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Overlap,
    Nonoverlap,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Overlap => Mode::Overlapping,
            ModeArg::Nonoverlap => Mode::NonOverlapping,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SimModeArg {
    Overlap,
    Nonoverlap,
    Cauchy,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Direct,
    Trace,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplingArg {
    Random,
    Head,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    Population,
    Estimated,
}

#[derive(Clone, Copy, ValueEnum)]
enum ResponseArg {
    Linear,
    Logistic,
    None,
}

#[derive(Subcommand)]
enum Command {
    /// Concordance of sampled subsets of a data file.
    Concordance {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated subset sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "overlap")]
        mode: Vec<ModeArg>,
        #[arg(long, value_enum, default_value = "trace")]
        method: MethodArg,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "random")]
        sampling: Vec<SamplingArg>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Concordance grid described by a TOML configuration file.
    Convergence {
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Logistic fits on random subsets against a reference fit.
    Glm {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Fit the reference model to a random sample of this many rows
        /// instead of all rows.
        #[arg(long)]
        reference_size: Option<usize>,
        #[arg(long, default_value_t = 25)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo check of a concordance model.
    Simulate {
        #[arg(long, default_value_t = 50)]
        i: usize,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        d: usize,
        /// Equicorrelation of the generating covariance.
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        #[arg(long, value_enum, default_value = "overlap")]
        mode: SimModeArg,
        #[arg(long, value_enum, default_value = "population")]
        basis: BasisArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Smallest block size whose concordance meets a tolerance.
    PartitionSize {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        tolerance: f64,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        #[arg(long, value_enum, default_value = "overlap")]
        mode: ModeArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write a synthetic data set and its schema.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        #[arg(long, default_value_t = 1.0)]
        noise_sd: f64,
        #[arg(long, value_enum, default_value = "linear")]
        response: ResponseArg,
        /// Comma-separated true coefficients (default all ones).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        beta: Vec<f64>,
        #[arg(long, requires = "drift_magnitude")]
        drift_column: Option<usize>,
        #[arg(long, requires = "drift_column", allow_hyphen_values = true)]
        drift_magnitude: Option<f64>,
        /// Add the three-level categorical column `g`.
        #[arg(long)]
        categorical: bool,
        /// Output data file.
        #[arg(long)]
        out: PathBuf,
        /// Output schema file (default: the data path with a `.toml` extension).
        #[arg(long)]
        schema_out: Option<PathBuf>,
        /// Emit the summary record as CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Values sent to the combining node by each fitting scheme.
    Cost {
        #[arg(long)]
        r: u64,
        #[arg(long)]
        d: u64,
        #[arg(long, default_value_t = 8)]
        bytes: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    message: String,
}

struct Failure {
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            kind: "io",
            message: e.to_string(),
        }
    }
}

fn fail(kind: &'static str, message: impl Into<String>) -> Failure {
    Failure {
        kind,
        message: message.into(),
    }
}

fn report(f: &Failure) {
    let record = ErrorRecord {
        error: f.kind,
        message: f.message.replace('\n', " "),
    };
    eprintln!("{}", serde_json::to_string(&record).expect("error record serializes"));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                e.exit();
            }
            let text = e.to_string();
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            report(&fail("usage", first.trim_start_matches("error: ").to_string()));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report(&f);
            ExitCode::FAILURE
        }
    }
}

fn sink(output: &OutputArgs) -> Result<Sink, Failure> {
    Ok(Sink::open(output.out.as_deref(), output.csv)?)
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Concordance {
            data,
            sizes,
            reps,
            seed,
            mode,
            method,
            sampling,
            output,
        } => {
            let source = Source::file(&data.data, &SchemaSpec::load(&data.schema)?, data.chunk_rows)?;
            let grid = ConcordanceGrid {
                sizes,
                reps,
                modes: mode.into_iter().map(Mode::from).collect(),
                samplings: sampling
                    .into_iter()
                    .map(|s| match s {
                        SamplingArg::Random => Sampling::Random,
                        SamplingArg::Head => Sampling::Head,
                    })
                    .collect(),
                method: match method {
                    MethodArg::Direct => Method::Direct,
                    MethodArg::Trace => Method::Trace,
                },
                seed,
            };
            let records = run_concordance(&source, &grid, "concordance")?;
            sink(&output)?.write_all(&records)?;
        }
        Command::Convergence { config, output } => {
            let config = ConvergenceConfig::load(&config)?;
            let grid = config.grid();
            let records = if grid.sizes.is_empty() {
                Vec::new()
            } else {
                run_concordance(&config.source()?, &grid, "convergence")?
            };
            sink(&output)?.write_all(&records)?;
        }
        Command::Glm {
            data,
            sizes,
            reps,
            seed,
            reference_size,
            max_iter,
            tol,
            output,
        } => {
            let source = Source::file(&data.data, &SchemaSpec::load(&data.schema)?, data.chunk_rows)?;
            let grid = GlmGrid {
                sizes,
                reps,
                seed,
                reference_size,
                irls: IrlsOptions {
                    max_iter,
                    tol,
                    ..IrlsOptions::default()
                },
            };
            let records = run_glm(&source, &grid)?;
            sink(&output)?.write_all(&records)?;
        }
        Command::Simulate {
            i,
            n,
            d,
            rho,
            trials,
            mode,
            basis,
            seed,
            output,
        } => {
            let start = Instant::now();
            let sigma = CovarianceSpec::Equicorrelated { rho }.matrix(d)?;
            let mode = match mode {
                SimModeArg::Overlap => SimulationMode::Overlapping,
                SimModeArg::Nonoverlap => SimulationMode::NonOverlapping,
                SimModeArg::Cauchy => SimulationMode::Cauchy,
            };
            let basis = match basis {
                BasisArg::Population => Basis::Population,
                BasisArg::Estimated => Basis::Estimated,
            };
            let report = simulate_concordance(&SimulationConfig::new(i, n, sigma, trials, mode, seed).with_basis(basis))?;
            let runtime_seconds = start.elapsed().as_secs_f64();
            let mut out = sink(&output)?;
            if output.csv {
                out.write(&SimulationRow::new(&report, runtime_seconds))?;
            } else {
                out.write(&SimulationOutput {
                    report: &report,
                    runtime_seconds,
                })?;
            }
            out.flush()?;
        }
        Command::PartitionSize {
            n,
            d,
            tolerance,
            confidence,
            mode,
            output,
        } => {
            let mode = Mode::from(mode);
            let p = partition_size_explained(n, d, tolerance, confidence, mode)?;
            let bound = |v: Option<f64>| v.map(|v| p.z * v.sqrt());
            let explanation = match (p.satisfied, p.variance_below_i) {
                (false, _) => format!(
                    "no block size meets z*sqrt(var) <= {tolerance} at confidence {confidence}; all {n} rows are needed"
                ),
                (true, Some(v)) if p.i > d + 1 => format!(
                    "i = {} gives z*sqrt(var) = {:.6} <= {tolerance}; i - 1 gives {:.6}",
                    p.i,
                    p.z * p.variance_at_i.unwrap_or(f64::NAN).sqrt(),
                    p.z * v.sqrt()
                ),
                (true, _) => format!(
                    "the smallest admissible block, i = d + 1 = {}, already gives z*sqrt(var) = {:.6} <= {tolerance}",
                    p.i,
                    p.z * p.variance_at_i.unwrap_or(f64::NAN).sqrt()
                ),
            };
            let record = PartitionSizeRecord {
                i: p.i,
                n,
                d,
                mode: mode.as_str(),
                tolerance,
                confidence,
                z: p.z,
                satisfied: p.satisfied,
                variance_at_i: p.variance_at_i,
                variance_below_i: p.variance_below_i,
                bound_at_i: bound(p.variance_at_i),
                bound_below_i: bound(p.variance_below_i),
                explanation,
            };
            let mut out = sink(&output)?;
            out.write(&record)?;
            out.flush()?;
        }
        Command::Generate {
            n,
            d,
            seed,
            rho,
            noise_sd,
            response,
            beta,
            drift_column,
            drift_magnitude,
            categorical,
            out,
            schema_out,
            csv,
        } => {
            let spec = SyntheticSpec {
                n,
                d,
                sigma: if rho == 0.0 {
                    CovarianceSpec::Identity
                } else {
                    CovarianceSpec::Equicorrelated { rho }
                },
                beta,
                noise_sd,
                response: match response {
                    ResponseArg::Linear => ResponseKind::Linear,
                    ResponseArg::Logistic => ResponseKind::Logistic,
                    ResponseArg::None => ResponseKind::None,
                },
                drift: drift_column.zip(drift_magnitude).map(|(column, magnitude)| Drift { column, magnitude }),
                categorical,
            };
            let data = generate(&spec, seed)?;
            write_csv(&out, &data)?;
            let schema_path = schema_out.unwrap_or_else(|| out.with_extension("toml"));
            if schema_path == out {
                return Err(fail("invalid_argument", "schema output would overwrite the data file"));
            }
            std::fs::write(&schema_path, matching_schema(&spec).to_toml_string()?)?;
            let record = GenerateRecord {
                data: display(&out),
                schema: display(&schema_path),
                n,
                d,
                seed,
                response: match spec.response {
                    ResponseKind::Linear => "linear",
                    ResponseKind::Logistic => "logistic",
                    ResponseKind::None => "none",
                },
                beta: data.beta.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
                noise_sd,
                rho,
                drift_column,
                drift_magnitude,
                categorical,
            };
            let mut s = Sink::open(None, csv)?;
            s.write(&record)?;
            s.flush()?;
        }
        Command::Cost { r, d, bytes, output } => {
            if r == 0 || d == 0 || bytes == 0 {
                return Err(fail("invalid_argument", "r, d and bytes must be positive"));
            }
            let c = communication_cost(r, d, bytes);
            let record = CostRecord {
                r,
                d,
                bytes_per_value: bytes,
                dnr_values: c.dnr_values,
                pooled_values: c.pooled_values,
                dnr_bytes: c.dnr_bytes,
                pooled_bytes: c.pooled_bytes,
                dnr_human: human_bytes(c.dnr_bytes),
                pooled_human: human_bytes(c.pooled_bytes),
            };
            let mut out = sink(&output)?;
            out.write(&record)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

/// Decimal units, as in "800 MB".
fn human_bytes(bytes: u128) -> String {
    const UNITS: [&str; 6] = ["B", "KB", "MB", "GB", "TB", "PB"];
    let mut v = bytes as f64;
    let mut unit = 0;
    while v >= 1000.0 && unit + 1 < UNITS.len() {
        v /= 1000.0;
        unit += 1;
    }
    format!("{} {}", (v * 1000.0).round() / 1000.0, UNITS[unit])
}

#[derive(Serialize)]
struct SimulationOutput<'a> {
    #[serde(flatten)]
    report: &'a MonteCarloReport,
    runtime_seconds: f64,
}

/// Flat form of the Monte Carlo report for CSV output.
#[derive(Serialize)]
struct SimulationRow {
    trials: usize,
    seed: u64,
    mode: &'static str,
    basis: &'static str,
    i: usize,
    n: usize,
    d: usize,
    model_location: f64,
    model_scale_or_variance: f64,
    model_variance: Option<f64>,
    empirical_mean: Option<f64>,
    empirical_variance: Option<f64>,
    standard_error: Option<f64>,
    median: f64,
    iqr: f64,
    model_iqr: f64,
    q05: f64,
    q25: f64,
    q50: f64,
    q75: f64,
    q95: f64,
    model_q05: f64,
    model_q25: f64,
    model_q50: f64,
    model_q75: f64,
    model_q95: f64,
    runtime_seconds: f64,
}

impl SimulationRow {
    fn new(r: &MonteCarloReport, runtime_seconds: f64) -> Self {
        let e: Vec<f64> = r.quantiles.iter().map(|q| q.empirical).collect();
        let m: Vec<f64> = r.quantiles.iter().map(|q| q.model).collect();
        Self {
            trials: r.trials,
            seed: r.seed,
            mode: r.mode.as_str(),
            basis: match r.basis {
                Basis::Population => "population",
                Basis::Estimated => "estimated",
            },
            i: r.i,
            n: r.n,
            d: r.d,
            model_location: r.model.location,
            model_scale_or_variance: r.model.scale_or_variance,
            model_variance: r.model.approx.variance(),
            empirical_mean: r.empirical_mean,
            empirical_variance: r.empirical_variance,
            standard_error: r.standard_error,
            median: r.median,
            iqr: r.iqr,
            model_iqr: r.model.iqr(),
            q05: e[0],
            q25: e[1],
            q50: e[2],
            q75: e[3],
            q95: e[4],
            model_q05: m[0],
            model_q25: m[1],
            model_q50: m[2],
            model_q75: m[3],
            model_q95: m[4],
            runtime_seconds,
        }
    }
}

#[derive(Serialize)]
struct PartitionSizeRecord {
    i: usize,
    n: usize,
    d: usize,
    mode: &'static str,
    tolerance: f64,
    confidence: f64,
    z: f64,
    satisfied: bool,
    variance_at_i: Option<f64>,
    variance_below_i: Option<f64>,
    bound_at_i: Option<f64>,
    bound_below_i: Option<f64>,
    explanation: String,
}

#[derive(Serialize)]
struct GenerateRecord {
    data: String,
    schema: String,
    n: usize,
    d: usize,
    seed: u64,
    response: &'static str,
    /// Semicolon-separated true coefficients.
    beta: String,
    noise_sd: f64,
    rho: f64,
    drift_column: Option<usize>,
    drift_magnitude: Option<f64>,
    categorical: bool,
}

#[derive(Serialize)]
struct CostRecord {
    r: u64,
    d: u64,
    bytes_per_value: u64,
    dnr_values: u128,
    pooled_values: u128,
    dnr_bytes: u128,
    pooled_bytes: u128,
    dnr_human: String,
    pooled_human: String,
}
