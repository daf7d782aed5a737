//! Seeded synthetic data: multivariate normal designs, linear or logistic
//! responses with known coefficients, and optional row-order drift.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ColumnKind, ColumnSpec, Encoding, Level, ResponseRule, ResponseSpec, SchemaSpec};
use crate::linalg::{Cholesky, DenseMatrix};
use crate::rng::{fill_normal, stream_rng};

/// Rows per independently seeded generation chunk.
const CHUNK_ROWS: usize = 4096;
const DESIGN_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1 << 32;
const CATEGORY_STREAM: u64 = 2 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum CovarianceSpec {
    Identity,
    /// `(1 - rho) I + rho J`, `rho` in `[0, 1)`.
    Equicorrelated { rho: f64 },
    /// Full symmetric positive definite matrix, given by rows.
    Matrix { rows: Vec<Vec<f64>> },
}

impl Default for CovarianceSpec {
    fn default() -> Self {
        CovarianceSpec::Identity
    }
}

impl CovarianceSpec {
    pub fn matrix(&self, d: usize) -> Result<DenseMatrix<f64>> {
        match self {
            CovarianceSpec::Identity => Ok(DenseMatrix::identity(d)),
            CovarianceSpec::Equicorrelated { rho } => {
                if !(0.0..1.0).contains(rho) {
                    return Err(Error::InvalidArgument(format!("rho must lie in [0, 1), got {rho}")));
                }
                Ok(DenseMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { *rho }))
            }
            CovarianceSpec::Matrix { rows } => {
                let m = DenseMatrix::from_rows(rows)?;
                if m.rows() != d || m.cols() != d {
                    return Err(Error::DimensionMismatch(format!(
                        "covariance is {}x{}, expected {d}x{d}",
                        m.rows(),
                        m.cols()
                    )));
                }
                let asym = m.asymmetry();
                if asym > 1e-12 * m.max_abs() {
                    return Err(Error::NotSymmetric(asym));
                }
                Ok(m)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseKind {
    #[default]
    Linear,
    Logistic,
    None,
}

/// Adds `magnitude * row / n` to one design column, so that rows late in
/// the file have a shifted mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub column: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    #[serde(default)]
    pub sigma: CovarianceSpec,
    /// True coefficients; empty means all ones.
    #[serde(default)]
    pub beta: Vec<f64>,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub response: ResponseKind,
    #[serde(default)]
    pub drift: Option<Drift>,
    /// Adds a three-level categorical column `g` by thresholding an extra
    /// standard normal at its tertiles.
    #[serde(default)]
    pub categorical: bool,
}

impl SyntheticSpec {
    pub fn new(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            sigma: CovarianceSpec::Identity,
            beta: Vec::new(),
            noise_sd: 0.0,
            response: ResponseKind::Linear,
            drift: None,
            categorical: false,
        }
    }

    pub fn coefficients(&self) -> Vec<f64> {
        if self.beta.is_empty() {
            vec![1.0; self.d]
        } else {
            self.beta.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidArgument("n and d must be positive".into()));
        }
        if !self.beta.is_empty() && self.beta.len() != self.d {
            return Err(Error::DimensionMismatch(format!("{} coefficients for d = {}", self.beta.len(), self.d)));
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("beta".into()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise_sd must be finite and >= 0, got {}", self.noise_sd)));
        }
        if let Some(drift) = self.drift {
            if drift.column >= self.d {
                return Err(Error::InvalidArgument(format!("drift column {} out of range", drift.column)));
            }
            if !drift.magnitude.is_finite() {
                return Err(Error::NonFinite("drift magnitude".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub design: DenseMatrix<f64>,
    pub response: Option<Vec<f64>>,
    /// Level label of the demo categorical per row.
    pub categorical: Option<Vec<&'static str>>,
    pub beta: Vec<f64>,
    pub seed: u64,
}

pub const CATEGORY_LEVELS: [&str; 3] = ["a", "b", "c"];

fn logistic(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// Generates `spec.n` rows. Design, noise and categorical draws come from
/// separate streams, so changing the noise leaves the design unchanged.
pub fn generate(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticData> {
    spec.validate()?;
    let (n, d) = (spec.n, spec.d);
    let sigma = spec.sigma.matrix(d)?;
    let chol = Cholesky::new(&sigma)?;
    let l = chol.factor();
    let beta = spec.coefficients();
    // tertiles of the standard normal
    let cut = 0.430_727_299_295_457_5;

    let starts: Vec<usize> = (0..n).step_by(CHUNK_ROWS).collect();
    let parts: Vec<(Vec<f64>, Vec<f64>, Vec<&'static str>)> = starts
        .par_iter()
        .enumerate()
        .map(|(k, &start)| {
            let rows = CHUNK_ROWS.min(n - start);
            let mut rng = stream_rng(seed, DESIGN_STREAM + k as u64);
            let mut z = vec![0.0; d];
            let mut x = vec![0.0; rows * d];
            for r in 0..rows {
                fill_normal(&mut rng, &mut z);
                let row = &mut x[r * d..(r + 1) * d];
                for (i, xi) in row.iter_mut().enumerate() {
                    *xi = (0..=i).map(|j| l[(i, j)] * z[j]).sum();
                }
                if let Some(drift) = spec.drift {
                    row[drift.column] += drift.magnitude * (start + r) as f64 / n as f64;
                }
            }
            let mut rng = stream_rng(seed, NOISE_STREAM + k as u64);
            let y: Vec<f64> = match spec.response {
                ResponseKind::None => Vec::new(),
                ResponseKind::Linear => {
                    let mut eps = vec![0.0; rows];
                    fill_normal(&mut rng, &mut eps);
                    (0..rows)
                        .map(|r| {
                            let mean: f64 = x[r * d..(r + 1) * d].iter().zip(&beta).map(|(a, b)| a * b).sum();
                            if spec.noise_sd == 0.0 {
                                mean
                            } else {
                                mean + spec.noise_sd * eps[r]
                            }
                        })
                        .collect()
                }
                ResponseKind::Logistic => (0..rows)
                    .map(|r| {
                        let eta: f64 = x[r * d..(r + 1) * d].iter().zip(&beta).map(|(a, b)| a * b).sum();
                        f64::from(u8::from(rng.gen::<f64>() < logistic(eta)))
                    })
                    .collect(),
            };
            let cats = if spec.categorical {
                let mut rng = stream_rng(seed, CATEGORY_STREAM + k as u64);
                let mut g = vec![0.0; rows];
                fill_normal(&mut rng, &mut g);
                g.iter()
                    .map(|&v| CATEGORY_LEVELS[usize::from(v > -cut) + usize::from(v > cut)])
                    .collect()
            } else {
                Vec::new()
            };
            (x, y, cats)
        })
        .collect();

    let mut data = Vec::with_capacity(n * d);
    let mut y = Vec::new();
    let mut cats = Vec::new();
    for (x, yk, ck) in parts {
        data.extend(x);
        y.extend(yk);
        cats.extend(ck);
    }
    Ok(SyntheticData {
        design: DenseMatrix::new(n, d, data)?,
        response: (spec.response != ResponseKind::None).then_some(y),
        categorical: spec.categorical.then_some(cats),
        beta,
        seed,
    })
}

pub fn column_name(j: usize) -> String {
    format!("x{j}")
}

/// Writes the data as comma-separated text with header `x0..x{d-1}[,g][,y]`.
pub fn write_csv(path: impl AsRef<Path>, data: &SyntheticData) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let d = data.design.cols();
    let mut header: Vec<String> = (0..d).map(column_name).collect();
    if data.categorical.is_some() {
        header.push("g".into());
    }
    if data.response.is_some() {
        header.push("y".into());
    }
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for (i, row) in data.design.row_iter().enumerate() {
        record.clear();
        record.extend(row.iter().map(f64::to_string));
        if let Some(c) = &data.categorical {
            record.push(c[i].to_string());
        }
        if let Some(y) = &data.response {
            record.push(y[i].to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Schema that reads [`write_csv`] output back: numeric `x` columns, the
/// categorical `g` under treatment contrasts, and `y` as the response.
pub fn matching_schema(spec: &SyntheticSpec) -> SchemaSpec {
    let mut columns: Vec<ColumnSpec> = (0..spec.d)
        .map(|j| ColumnSpec {
            name: column_name(j),
            kind: ColumnKind::Numeric,
            levels: None,
        })
        .collect();
    if spec.categorical {
        columns.push(ColumnSpec {
            name: "g".into(),
            kind: ColumnKind::Categorical,
            levels: Some(CATEGORY_LEVELS.iter().map(|l| Level::Text(l.to_string())).collect()),
        });
    }
    SchemaSpec {
        encoding: Encoding::TreatmentContrast,
        intercept: false,
        delimiter: ',',
        missing: vec![String::new(), "NA".into()],
        columns,
        response: (spec.response != ResponseKind::None).then(|| ResponseSpec {
            source: "y".into(),
            rule: ResponseRule::Identity,
            threshold: 30.0,
        }),
    }
}
