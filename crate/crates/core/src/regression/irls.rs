//! Logistic regression by iteratively reweighted least squares.

use crate::error::{Error, Result};
use crate::linalg::{qr_solve, DenseMatrix};
use crate::regression::{Diagnostics, FitMethod, FitResult};
use crate::scalar::Scalar;

/// Coefficients beyond this magnitude are taken as evidence of separation.
pub const DIVERGENCE_CAP: f64 = 1e6;

const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsOptions {
    pub max_iter: usize,
    /// Convergence threshold on the largest coefficient change.
    pub tol: f64,
    /// Convergence threshold on `|dev - dev_prev| / (|dev| + 0.1)`.
    pub deviance_tol: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        Self {
            max_iter: 25,
            tol: 1e-8,
            deviance_tol: 1e-10,
        }
    }
}

fn softplus<T: Scalar>(eta: T) -> T {
    eta.max(T::zero()) + (-eta.abs()).exp().ln_1p()
}

fn logistic<T: Scalar>(eta: T) -> T {
    if eta >= T::zero() {
        T::one() / (T::one() + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (T::one() + e)
    }
}

/// Binomial deviance `2 sum(log(1 + e^eta) - y eta)`.
pub fn logistic_deviance<T: Scalar>(eta: &[T], y: &[T]) -> T {
    let two = T::lit(2.0);
    eta.iter().zip(y).map(|(&e, &yi)| two * (softplus(e) - yi * e)).sum()
}

/// Fits `P(y = 1) = logistic(x beta)`. Each step solves the weighted least
/// squares problem by QR; a step that raises the deviance is halved until
/// it does not.
pub fn fit_irls_logistic<T: Scalar>(x: &DenseMatrix<T>, y: &[T], options: &IrlsOptions) -> Result<FitResult<T>> {
    let (n, d) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("{} responses for {n} rows", y.len())));
    }
    if let Some(k) = y.iter().position(|&v| v != T::zero() && v != T::one()) {
        return Err(Error::InvalidArgument(format!(
            "logistic response must be 0 or 1, row {k} has {}",
            y[k]
        )));
    }
    if options.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be positive".into()));
    }
    let tol = T::lit(options.tol);
    let dev_tol = T::lit(options.deviance_tol);
    let w_floor = T::epsilon() * T::epsilon();
    let cap = T::lit(DIVERGENCE_CAP);

    let mut beta = vec![T::zero(); d];
    let mut eta = vec![T::zero(); n];
    let mut deviance = logistic_deviance(&eta, y);
    let mut halvings = 0;
    let mut wx = DenseMatrix::zeros(n, d);
    let mut wz = vec![T::zero(); n];

    for iter in 1..=options.max_iter {
        for i in 0..n {
            let mu = logistic(eta[i]);
            let w = (mu * (T::one() - mu)).max(w_floor);
            let sw = w.sqrt();
            wz[i] = sw * eta[i] + (y[i] - mu) / sw;
            for j in 0..d {
                wx[(i, j)] = sw * x[(i, j)];
            }
        }
        let proposal = qr_solve(&wx, &wz)?;
        let mut step: Vec<T> = proposal.iter().zip(&beta).map(|(&p, &b)| p - b).collect();
        let mut candidate = proposal;
        let mut new_eta = x.matvec(&candidate)?;
        let mut new_dev = logistic_deviance(&new_eta, y);
        let mut k = 0;
        while !(new_dev <= deviance) && k < MAX_HALVINGS {
            for s in &mut step {
                *s = *s * T::lit(0.5);
            }
            candidate = beta.iter().zip(&step).map(|(&b, &s)| b + s).collect();
            new_eta = x.matvec(&candidate)?;
            new_dev = logistic_deviance(&new_eta, y);
            k += 1;
        }
        halvings += k;
        if !new_dev.is_finite() {
            return Err(Error::NonFinite(format!("deviance at IRLS iteration {iter}")));
        }
        if new_dev > deviance {
            // no descent direction left at working precision
            return Ok(finish(beta, iter, deviance, halvings));
        }

        let change = step.iter().fold(T::zero(), |m, s| m.max(s.abs()));
        let rel_dev = (deviance - new_dev).abs() / (new_dev.abs() + T::lit(0.1));
        beta = candidate;
        eta = new_eta;
        deviance = new_dev;

        let largest = beta.iter().fold(T::zero(), |m, b| m.max(b.abs()));
        if largest > cap {
            return Err(Error::Separation(largest.as_f64()));
        }
        // a perfect fit only arises when the classes are separable
        if deviance <= T::epsilon() * T::from_count(n) {
            return Err(Error::Separation(largest.as_f64()));
        }
        if change <= tol || rel_dev <= dev_tol {
            return Ok(finish(beta, iter, deviance, halvings));
        }
    }
    Err(Error::IrlsNoConvergence(options.max_iter))
}

fn finish<T: Scalar>(beta: Vec<T>, iterations: usize, deviance: T, step_halvings: usize) -> FitResult<T> {
    FitResult {
        coefficients: beta,
        method: FitMethod::IrlsLogistic,
        r: 1,
        per_block: None,
        diagnostics: Diagnostics {
            iterations: Some(iterations),
            converged: true,
            deviance: Some(deviance.as_f64()),
            step_halvings,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{fill_normal, stream_rng};
    use rand::Rng;

    #[test]
    fn intercept_only_is_logit_of_mean() {
        let n = 200;
        let y: Vec<f64> = (0..n).map(|i| if i % 5 < 2 { 1.0 } else { 0.0 }).collect();
        let x = DenseMatrix::from_fn(n, 1, |_, _| 1.0);
        let fit = fit_irls_logistic(&x, &y, &IrlsOptions::default()).unwrap();
        let p: f64 = 0.4;
        assert!((fit.coefficients[0] - (p / (1.0 - p)).ln()).abs() < 1e-8);
        assert!(fit.diagnostics.converged);
    }

    #[test]
    fn mirrored_data_gives_antisymmetric_slope() {
        let xs = [-2.0, -1.0, -0.5, 0.3, 1.0, 1.5, 2.5, -1.7];
        let ys = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let x = DenseMatrix::from_fn(8, 1, |i, _| xs[i]);
        let y = ys.to_vec();
        let xm = DenseMatrix::from_fn(8, 1, |i, _| -xs[i]);
        let ym: Vec<f64> = ys.iter().map(|v| 1.0 - v).collect();
        let a = fit_irls_logistic(&x, &y, &IrlsOptions::default()).unwrap();
        let b = fit_irls_logistic(&xm, &ym, &IrlsOptions::default()).unwrap();
        assert!((a.coefficients[0] - b.coefficients[0]).abs() < 1e-10);
        let c = fit_irls_logistic(&xm, &y, &IrlsOptions::default()).unwrap();
        assert!((a.coefficients[0] + c.coefficients[0]).abs() < 1e-10);
    }

    #[test]
    fn score_vanishes_at_fit() {
        let (n, d) = (5000, 3);
        let mut rng = stream_rng(11, 0);
        let mut data = vec![0.0; n * d];
        fill_normal(&mut rng, &mut data);
        let x = DenseMatrix::new(n, d, data).unwrap();
        let beta = [0.8, -0.5, 0.3];
        let eta = x.matvec(&beta).unwrap();
        let y: Vec<f64> = eta
            .iter()
            .map(|&e| if rng.gen::<f64>() < logistic(e) { 1.0 } else { 0.0 })
            .collect();
        let fit = fit_irls_logistic(&x, &y, &IrlsOptions::default()).unwrap();
        let mu: Vec<f64> = x.matvec(&fit.coefficients).unwrap().into_iter().map(logistic).collect();
        let resid: Vec<f64> = y.iter().zip(&mu).map(|(a, b)| a - b).collect();
        let score = x.t_matvec(&resid).unwrap();
        assert!(score.iter().all(|s| s.abs() <= 1e-6 * n as f64), "{score:?}");
        for (b, t) in fit.coefficients.iter().zip(beta) {
            assert!((b - t).abs() < 0.15, "{:?}", fit.coefficients);
        }
        assert!(fit.diagnostics.iterations.unwrap() < 15);
    }

    #[test]
    fn separation_is_reported() {
        let xs = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0];
        let ys = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let x = DenseMatrix::from_fn(6, 1, |i, _| xs[i]);
        let err = fit_irls_logistic(&x, &ys, &IrlsOptions::default()).unwrap_err();
        assert!(
            matches!(err, Error::Separation(_) | Error::IrlsNoConvergence(_)),
            "{err}"
        );
    }

    #[test]
    fn deviance_of_zero_predictor() {
        let eta = [0.0; 4];
        let y = [0.0, 1.0, 1.0, 0.0];
        assert!((logistic_deviance(&eta, &y) - 8.0 * 2f64.ln()).abs() < 1e-12);
        assert!(softplus(800.0f64).is_finite());
        assert_eq!(logistic(-800.0f64), 0.0);
    }

    #[test]
    fn rejects_non_binary_response() {
        let x = DenseMatrix::<f64>::identity(2);
        assert!(fit_irls_logistic(&x, &[0.0, 0.5], &IrlsOptions::default()).is_err());
    }
}
