//! Householder QR least squares.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Compact Householder factorization of a tall matrix.
///
/// `qr` holds R in its upper triangle and the essential parts of the
/// Householder vectors below the diagonal; `tau` holds the reflector scales.
#[derive(Debug, Clone)]
pub struct HouseholderQr<T> {
    qr: DenseMatrix<T>,
    tau: Vec<T>,
    r_diag: Vec<T>,
    max_col_norm: T,
}

impl<T: Scalar> HouseholderQr<T> {
    pub fn new(x: &DenseMatrix<T>) -> Result<Self> {
        let (m, n) = (x.rows(), x.cols());
        if m < n {
            return Err(Error::DimensionMismatch(format!(
                "QR least squares needs rows >= cols, got {m}x{n}"
            )));
        }
        let max_col_norm = (0..n)
            .map(|j| (0..m).map(|i| x[(i, j)] * x[(i, j)]).sum::<T>().sqrt())
            .fold(T::zero(), T::max);
        let mut a = x.clone();
        let mut tau = vec![T::zero(); n];
        let mut r_diag = vec![T::zero(); n];
        for k in 0..n {
            let norm = (k..m).map(|i| a[(i, k)] * a[(i, k)]).sum::<T>().sqrt();
            if norm == T::zero() {
                tau[k] = T::zero();
                r_diag[k] = T::zero();
                continue;
            }
            // alpha takes the sign opposite to the pivot to avoid cancellation
            let alpha = if a[(k, k)] > T::zero() { -norm } else { norm };
            let v0 = a[(k, k)] - alpha;
            for i in (k + 1)..m {
                a[(i, k)] = a[(i, k)] / v0;
            }
            a[(k, k)] = alpha;
            // v = (1, a[k+1..m, k]), H = I - tau v v^T
            tau[k] = -v0 / alpha;
            r_diag[k] = alpha;
            for j in (k + 1)..n {
                let mut s = a[(k, j)];
                for i in (k + 1)..m {
                    s += a[(i, k)] * a[(i, j)];
                }
                s *= tau[k];
                a[(k, j)] -= s;
                for i in (k + 1)..m {
                    let vik = a[(i, k)];
                    a[(i, j)] -= s * vik;
                }
            }
        }
        Ok(Self {
            qr: a,
            tau,
            r_diag,
            max_col_norm,
        })
    }

    pub fn r_diagonal(&self) -> &[T] {
        &self.r_diag
    }

    /// Numerical rank tolerance `max(m, d) * eps * max_j ||x_j||`.
    pub fn rank_tolerance(&self) -> T {
        let dim = self.qr.rows().max(self.qr.cols()).max(1);
        T::from_count(dim) * T::epsilon() * self.max_col_norm
    }

    /// Fails on the first R pivot at or below [`Self::rank_tolerance`].
    pub fn rank_check(&self) -> Result<()> {
        let largest = self.r_diag.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let tol = self.rank_tolerance();
        for (j, r) in self.r_diag.iter().enumerate() {
            if r.abs() <= tol || largest == T::zero() {
                return Err(Error::RankDeficient {
                    index: j,
                    value: r.abs().as_f64(),
                    tolerance: tol.as_f64(),
                });
            }
        }
        Ok(())
    }

    /// Overwrites `y` with `Q^T y`.
    fn apply_qt(&self, y: &mut [T]) {
        let (m, n) = (self.qr.rows(), self.qr.cols());
        for k in 0..n {
            if self.tau[k] == T::zero() {
                continue;
            }
            let mut s = y[k];
            for i in (k + 1)..m {
                s += self.qr[(i, k)] * y[i];
            }
            s *= self.tau[k];
            y[k] -= s;
            for i in (k + 1)..m {
                y[i] -= s * self.qr[(i, k)];
            }
        }
    }

    /// Least-squares solution `argmin ||x b - y||`.
    pub fn solve(&self, y: &[T]) -> Result<Vec<T>> {
        let (m, n) = (self.qr.rows(), self.qr.cols());
        if y.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "response of length {} for {m} rows",
                y.len()
            )));
        }
        self.rank_check()?;
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        let mut beta = vec![T::zero(); n];
        for j in (0..n).rev() {
            let mut s = qty[j];
            for k in (j + 1)..n {
                s -= self.qr[(j, k)] * beta[k];
            }
            beta[j] = s / self.qr[(j, j)];
        }
        Ok(beta)
    }
}

/// Least squares through Householder QR of `x`; `x^T x` is never formed.
pub fn qr_solve<T: Scalar>(x: &DenseMatrix<T>, y: &[T]) -> Result<Vec<T>> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("response vector".into()));
    }
    HouseholderQr::new(x)?.solve(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ill_conditioned_two_by_two() {
        let x = DenseMatrix::<f64>::from_f64_rows(&[[1e9, -1.0], [-1.0, 1e-5]]).unwrap();
        let y = x.matvec(&[1.0, 1.0]).unwrap();
        let b = qr_solve(&x, &y).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-6, "{b:?}");
        assert!((b[1] - 1.0).abs() < 1e-6, "{b:?}");
    }

    #[test]
    fn identity_design() {
        let x = DenseMatrix::<f64>::identity(3);
        let y = [1.5, -2.0, 7.0];
        assert_eq!(qr_solve(&x, &y).unwrap(), y.to_vec());
    }

    #[test]
    fn overdetermined_exact_fit() {
        let x = DenseMatrix::<f64>::from_f64_rows(&[[1.0, 2.0], [3.0, -1.0], [0.0, 4.0], [2.0, 2.0]]).unwrap();
        let beta = [3.0, -2.0];
        let y = x.matvec(&beta).unwrap();
        let b = qr_solve(&x, &y).unwrap();
        for (got, want) in b.iter().zip(beta) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn rank_deficient() {
        let x = DenseMatrix::<f64>::from_f64_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        let err = qr_solve(&x, &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { index: 1, .. }), "{err}");
    }

    #[test]
    fn wide_matrix_rejected() {
        let x = DenseMatrix::<f64>::zeros(1, 2);
        assert!(matches!(qr_solve(&x, &[1.0]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn residual_orthogonal_to_columns() {
        let x = DenseMatrix::<f64>::from_f64_rows(&[
            [1.0, 0.3, -2.0],
            [0.5, 1.0, 0.0],
            [2.0, -1.0, 1.0],
            [0.0, 0.7, 0.4],
            [1.2, 1.1, -0.6],
        ])
        .unwrap();
        let y = [1.0, -1.0, 0.5, 2.0, 0.25];
        let b = qr_solve(&x, &y).unwrap();
        let fit = x.matvec(&b).unwrap();
        let resid: Vec<f64> = fit.iter().zip(&y).map(|(f, y)| f - y).collect();
        let score = x.t_matvec(&resid).unwrap();
        assert!(score.iter().all(|s| s.abs() < 1e-12), "{score:?}");
    }
}
