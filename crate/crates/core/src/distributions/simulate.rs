//! Monte Carlo check of the concordance models.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::models::{model_nonoverlapping_cauchy, model_nonoverlapping_f, model_overlapping, ConcordanceModel};
use crate::concordance::{concordance_in_basis, concordance_subset, Mode};
use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, Cholesky, DenseMatrix};
use crate::rng::{fill_normal, stream_rng};
use crate::scatter::ScatterSummary;
use crate::stats;

pub const REPORT_PROBABILITIES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimulationMode {
    /// First `i` rows against all `n`; scaled-beta model.
    #[serde(alias = "overlap")]
    Overlapping,
    /// First `i` rows against the other `n - i`; F model.
    #[serde(alias = "nonoverlap")]
    NonOverlapping,
    /// Non-overlapping fluctuation ratio; Cauchy model. Each term is
    /// `1 + (a_j - 1) / (c_j - 1)` where `a_j` and `c_j` are the subset and
    /// complement mean squares along coordinate `j`, relative to the
    /// coordinate's variance.
    Cauchy,
}

impl SimulationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SimulationMode::Overlapping => "overlap",
            SimulationMode::NonOverlapping => "nonoverlap",
            SimulationMode::Cauchy => "cauchy",
        }
    }
}

/// Coordinate system the per-term ratios are taken in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// Eigenvectors of the generating covariance, the setting the models are
    /// derived in.
    #[default]
    Population,
    /// Eigenvectors estimated from each simulated data set, i.e. exactly what
    /// [`concordance_subset`] computes on real data.
    Estimated,
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub i: usize,
    pub n: usize,
    pub d: usize,
    pub sigma: DenseMatrix<f64>,
    pub trials: usize,
    pub mode: SimulationMode,
    pub seed: u64,
    pub basis: Basis,
}

impl SimulationConfig {
    pub fn new(i: usize, n: usize, sigma: DenseMatrix<f64>, trials: usize, mode: SimulationMode, seed: u64) -> Self {
        Self {
            i,
            n,
            d: sigma.rows(),
            sigma,
            trials,
            mode,
            seed,
            basis: Basis::default(),
        }
    }

    pub fn with_basis(mut self, basis: Basis) -> Self {
        self.basis = basis;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantileRow {
    pub p: f64,
    pub empirical: f64,
    pub model: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloReport {
    pub trials: usize,
    pub seed: u64,
    pub mode: SimulationMode,
    pub basis: Basis,
    pub i: usize,
    pub n: usize,
    pub d: usize,
    pub model: ConcordanceModel,
    /// `false` for the Cauchy model; mean and variance are then omitted.
    pub variance_defined: bool,
    pub empirical_mean: Option<f64>,
    pub empirical_variance: Option<f64>,
    /// `sqrt(empirical_variance / trials)`.
    pub standard_error: Option<f64>,
    pub median: f64,
    pub iqr: f64,
    pub quantiles: Vec<QuantileRow>,
    #[serde(skip)]
    pub values: Vec<f64>,
}

fn model_for(cfg: &SimulationConfig) -> Result<ConcordanceModel> {
    match cfg.mode {
        SimulationMode::Overlapping => model_overlapping(cfg.i, cfg.n, cfg.d),
        SimulationMode::NonOverlapping => model_nonoverlapping_f(cfg.i, cfg.n, cfg.d),
        SimulationMode::Cauchy => model_nonoverlapping_cauchy(cfg.i, cfg.n),
    }
}

/// Draws `trials` data sets of `n` rows from `N(0, sigma)` and evaluates the
/// statistic for the first `i` rows of each. Trial `t` uses ChaCha stream `t`
/// of `seed`, so the report does not depend on thread scheduling.
pub fn simulate_concordance(cfg: &SimulationConfig) -> Result<MonteCarloReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if cfg.sigma.rows() != cfg.d || cfg.sigma.cols() != cfg.d {
        return Err(Error::DimensionMismatch(format!(
            "sigma is {}x{} for d = {}",
            cfg.sigma.rows(),
            cfg.sigma.cols(),
            cfg.d
        )));
    }
    let model = model_for(cfg)?;
    let chol = Cholesky::new(&cfg.sigma)?;
    let population = sym_eigen(&cfg.sigma)?;

    let values = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, chol.factor(), &population.vectors, &population.values, t as u64))
        .collect::<Result<Vec<f64>>>()?;

    let sorted = stats::sorted(&values);
    let variance_defined = cfg.mode != SimulationMode::Cauchy;
    let (empirical_mean, empirical_variance, standard_error) = if variance_defined {
        let var = stats::variance(&values);
        (
            Some(stats::mean(&values)),
            Some(var),
            Some((var / cfg.trials as f64).sqrt()),
        )
    } else {
        (None, None, None)
    };
    let quantiles = REPORT_PROBABILITIES
        .iter()
        .map(|&p| QuantileRow {
            p,
            empirical: stats::quantile_sorted(&sorted, p),
            model: model.quantile(p),
        })
        .collect();
    Ok(MonteCarloReport {
        trials: cfg.trials,
        seed: cfg.seed,
        mode: cfg.mode,
        basis: cfg.basis,
        i: cfg.i,
        n: cfg.n,
        d: cfg.d,
        model,
        variance_defined,
        empirical_mean,
        empirical_variance,
        standard_error,
        median: stats::quantile_sorted(&sorted, 0.5),
        iqr: stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25),
        quantiles,
        values,
    })
}

fn run_trial(
    cfg: &SimulationConfig,
    chol: &DenseMatrix<f64>,
    pop_vectors: &DenseMatrix<f64>,
    pop_values: &[f64],
    trial: u64,
) -> Result<f64> {
    let d = cfg.d;
    let mut rng = stream_rng(cfg.seed, trial);
    let mut z = vec![0.0; d];
    let mut x = vec![0.0; d];
    let mut subset = ScatterSummary::new(d);
    let mut total = ScatterSummary::new(d);
    for k in 0..cfg.n {
        fill_normal(&mut rng, &mut z);
        for (r, xr) in x.iter_mut().enumerate() {
            *xr = (0..=r).map(|c| chol[(r, c)] * z[c]).sum();
        }
        if k < cfg.i {
            subset.push_row(&x, None)?;
        }
        total.push_row(&x, None)?;
    }

    match (cfg.mode, cfg.basis) {
        (SimulationMode::Overlapping, Basis::Population) => {
            Ok(concordance_in_basis(&subset, &total, pop_vectors)?.value)
        }
        (SimulationMode::NonOverlapping, Basis::Population) => {
            let rest = total.complement(&subset)?;
            Ok(concordance_in_basis(&subset, &rest, pop_vectors)?.value)
        }
        (SimulationMode::Overlapping, Basis::Estimated) => {
            Ok(concordance_subset(&total, &subset, Mode::Overlapping)?.value)
        }
        (SimulationMode::NonOverlapping, Basis::Estimated) => {
            Ok(concordance_subset(&total, &subset, Mode::NonOverlapping)?.value)
        }
        (SimulationMode::Cauchy, Basis::Population) => {
            let rest = total.complement(&subset)?;
            fluctuation_ratio(&subset, &rest, pop_vectors, pop_values)
        }
        (SimulationMode::Cauchy, Basis::Estimated) => {
            let rest = total.complement(&subset)?;
            let e = sym_eigen(&total.gram().scale(1.0 / cfg.n as f64))?;
            fluctuation_ratio(&subset, &rest, &e.vectors, &e.values)
        }
    }
}

/// Mean over coordinates of `1 + (a_j / s_j - 1) / (c_j / s_j - 1)`, with
/// `a_j`, `c_j` the mean squares of the subset and the rest along basis
/// vector `j` and `s_j` the common variance along it.
pub fn fluctuation_ratio(
    subset: &ScatterSummary<f64>,
    rest: &ScatterSummary<f64>,
    basis: &DenseMatrix<f64>,
    variances: &[f64],
) -> Result<f64> {
    let d = subset.d();
    if rest.d() != d || variances.len() != d || basis.rows() != d || basis.cols() != d {
        return Err(Error::DimensionMismatch("fluctuation ratio inputs".into()));
    }
    if subset.n() == 0 || rest.n() == 0 {
        return Err(Error::InvalidArgument("empty subset or remainder".into()));
    }
    let g_a = subset.gram();
    let g_c = rest.gram();
    let mut total = 0.0;
    for j in 0..d {
        let v = basis.column(j);
        let a = quad(&g_a, &v) / subset.n() as f64 / variances[j];
        let c = quad(&g_c, &v) / rest.n() as f64 / variances[j];
        total += 1.0 + (a - 1.0) / (c - 1.0);
    }
    Ok(total / d as f64)
}

fn quad(m: &DenseMatrix<f64>, v: &[f64]) -> f64 {
    let mv = m.matvec(v).expect("square matrix matching vector");
    mv.iter().zip(v).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whole_set_overlap_is_exactly_one() {
        let cfg = SimulationConfig::new(40, 40, DenseMatrix::identity(3), 20, SimulationMode::Overlapping, 9);
        let r = simulate_concordance(&cfg).unwrap();
        assert!(r.values.iter().all(|&v| v == 1.0));
        assert_eq!(r.empirical_variance, Some(0.0));
    }

    #[test]
    fn single_trial_mean_is_the_value() {
        let cfg = SimulationConfig::new(20, 200, DenseMatrix::identity(4), 1, SimulationMode::Overlapping, 3);
        let r = simulate_concordance(&cfg).unwrap();
        assert_eq!(r.values.len(), 1);
        assert_eq!(r.empirical_mean, Some(r.values[0]));
    }

    #[test]
    fn reproducible() {
        let cfg = SimulationConfig::new(10, 60, DenseMatrix::identity(2), 50, SimulationMode::NonOverlapping, 5);
        let a = simulate_concordance(&cfg).unwrap();
        let b = simulate_concordance(&cfg).unwrap();
        assert_eq!(a.values, b.values);
        let c = simulate_concordance(&SimulationConfig { seed: 6, ..cfg }).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn cauchy_reports_no_variance() {
        let cfg = SimulationConfig::new(10, 60, DenseMatrix::identity(2), 30, SimulationMode::Cauchy, 5);
        let r = simulate_concordance(&cfg).unwrap();
        assert!(!r.variance_defined);
        assert!(r.empirical_mean.is_none() && r.empirical_variance.is_none());
        assert_eq!(r.quantiles.len(), 5);
    }

    #[test]
    fn rejects_bad_input() {
        let not_pd = DenseMatrix::from_f64_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        let cfg = SimulationConfig::new(10, 100, not_pd, 10, SimulationMode::Overlapping, 1);
        assert!(matches!(simulate_concordance(&cfg), Err(Error::Singular { .. })));
        let cfg = SimulationConfig::new(10, 100, DenseMatrix::identity(2), 0, SimulationMode::Overlapping, 1);
        assert!(simulate_concordance(&cfg).is_err());
        let cfg = SimulationConfig::new(98, 100, DenseMatrix::identity(2), 5, SimulationMode::NonOverlapping, 1);
        assert!(simulate_concordance(&cfg).is_err());
    }
}
