//! Sampling models for the concordance of an `i`-row subset of `n` i.i.d.
//! multivariate normal rows in `d` columns.
//!
//! | family       | single term                  | location          | spread (Var or scale)                          | approximation of the d-term mean |
//! |--------------|------------------------------|-------------------|------------------------------------------------|----------------------------------|
//! | scaled beta  | `(n/i) Beta(i/2, (n-i)/2)`   | 1                 | `2(n-i) / (i(n+2))`                            | `N(1, 2(n-i) / (d i (n+2)))`     |
//! | F            | `F(i, n-i)`                  | `(n-i)/(n-i-2)`   | `2(n-i)^2 (n-2) / (i (n-i-2)^2 (n-i-4))`       | `N(1, 2n / (d i (n-i)))`         |
//! | Cauchy       | `Cauchy(1, sqrt((n-i)/i))`   | 1                 | `sqrt((n-i)/i)`                                | same Cauchy                      |

use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF, FisherSnedecor, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    ScaledBeta,
    F,
    Cauchy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Approximation {
    Normal { mean: f64, variance: f64 },
    Cauchy { location: f64, scale: f64 },
}

impl Approximation {
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            Approximation::Normal { mean, variance } => {
                if variance == 0.0 {
                    mean
                } else {
                    Normal::new(mean, variance.sqrt())
                        .expect("positive standard deviation")
                        .inverse_cdf(p)
                }
            }
            Approximation::Cauchy { location, scale } => {
                location + scale * (std::f64::consts::PI * (p - 0.5)).tan()
            }
        }
    }

    /// Variance of the approximating law; `None` for Cauchy.
    pub fn variance(&self) -> Option<f64> {
        match *self {
            Approximation::Normal { variance, .. } => Some(variance),
            Approximation::Cauchy { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcordanceModel {
    pub family: Family,
    pub i: usize,
    pub n: usize,
    /// Column count; `None` for the Cauchy model, which does not depend on it.
    pub d: Option<usize>,
    /// Location of a single ratio term.
    pub location: f64,
    /// Variance of a single term (beta, F) or Cauchy scale.
    pub scale_or_variance: f64,
    pub approx: Approximation,
    /// Alternative normal variance where two forms are in circulation.
    pub alt_normal_variance: Option<f64>,
    pub note: Option<String>,
}

fn check_counts(i: usize, n: usize) -> Result<()> {
    if i == 0 {
        return Err(Error::InvalidArgument("subset size i must be positive".into()));
    }
    if i > n {
        return Err(Error::InvalidArgument(format!("subset size {i} exceeds total {n}")));
    }
    Ok(())
}

fn check_d(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    Ok(())
}

/// Overlapping concordance (subset against the whole set containing it).
pub fn model_overlapping(i: usize, n: usize, d: usize) -> Result<ConcordanceModel> {
    check_counts(i, n)?;
    check_d(d)?;
    let (i_f, n_f, d_f) = (i as f64, n as f64, d as f64);
    let term_var = 2.0 * (n_f - i_f) / (i_f * (n_f + 2.0));
    Ok(ConcordanceModel {
        family: Family::ScaledBeta,
        i,
        n,
        d: Some(d),
        location: 1.0,
        scale_or_variance: term_var,
        approx: Approximation::Normal {
            mean: 1.0,
            variance: term_var / d_f,
        },
        alt_normal_variance: Some(2.0 * (n_f - i_f) / (d_f * i_f * n_f)),
        note: None,
    })
}

/// Non-overlapping concordance (subset against the disjoint remainder),
/// F-distributed terms.
pub fn model_nonoverlapping_f(i: usize, n: usize, d: usize) -> Result<ConcordanceModel> {
    if i == 0 {
        return Err(Error::InvalidArgument("subset size i must be positive".into()));
    }
    check_d(d)?;
    if n <= i + 4 {
        return Err(Error::InvalidArgument(format!(
            "F model variance needs n - i > 4, got n = {n}, i = {i}"
        )));
    }
    let (i_f, n_f, d_f) = (i as f64, n as f64, d as f64);
    let m = n_f - i_f;
    let location = m / (m - 2.0);
    let term_var = 2.0 * m * m * (n_f - 2.0) / (i_f * (m - 2.0).powi(2) * (m - 4.0));
    Ok(ConcordanceModel {
        family: Family::F,
        i,
        n,
        d: Some(d),
        location,
        scale_or_variance: term_var,
        approx: Approximation::Normal {
            mean: 1.0,
            variance: 2.0 * n_f / (d_f * i_f * m),
        },
        alt_normal_variance: Some(2.0 * n_f / i_f),
        note: Some(
            "approximate variance 2n/(d i (n-i)) used; the undivided form 2n/i is reported as alt_normal_variance"
                .into(),
        ),
    })
}

/// Heavy-tailed non-overlapping model.
pub fn model_nonoverlapping_cauchy(i: usize, n: usize) -> Result<ConcordanceModel> {
    if i == 0 {
        return Err(Error::InvalidArgument("subset size i must be positive".into()));
    }
    if i >= n {
        return Err(Error::InvalidArgument(format!(
            "Cauchy model needs i < n, got i = {i}, n = {n}"
        )));
    }
    let scale = ((n - i) as f64 / i as f64).sqrt();
    Ok(ConcordanceModel {
        family: Family::Cauchy,
        i,
        n,
        d: None,
        location: 1.0,
        scale_or_variance: scale,
        approx: Approximation::Cauchy { location: 1.0, scale },
        alt_normal_variance: None,
        note: Some("variance undefined".into()),
    })
}

impl ConcordanceModel {
    /// Quantile of a single ratio term under the exact family law.
    pub fn term_quantile(&self, p: f64) -> f64 {
        let (i, n) = (self.i as f64, self.n as f64);
        match self.family {
            Family::ScaledBeta => {
                if self.i == self.n {
                    1.0
                } else {
                    let beta = Beta::new(i / 2.0, (n - i) / 2.0).expect("positive shapes");
                    n / i * beta.inverse_cdf(p)
                }
            }
            Family::F => FisherSnedecor::new(i, n - i)
                .expect("positive degrees of freedom")
                .inverse_cdf(p),
            Family::Cauchy => self.approx.quantile(p),
        }
    }

    /// Quantile of the approximating law for the d-term mean.
    pub fn quantile(&self, p: f64) -> f64 {
        self.approx.quantile(p)
    }

    /// Interquartile range of the approximating law.
    pub fn iqr(&self) -> f64 {
        self.quantile(0.75) - self.quantile(0.25)
    }
}
