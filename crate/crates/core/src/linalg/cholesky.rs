//! Cholesky factorization and symmetric positive-definite solves.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Lower-triangular factor `L` with `L L^T = A`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: DenseMatrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Fails with [`Error::Singular`] when a pivot falls to
    /// `d * eps * max(diag(A))` or below.
    pub fn new(a: &DenseMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Cholesky of a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let max_diag = a.diag().into_iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let tol = T::from_count(n.max(1)) * T::epsilon() * max_diag;
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut pivot = a[(j, j)];
            for k in 0..j {
                pivot -= l[(j, k)] * l[(j, k)];
            }
            if !(pivot > tol) {
                return Err(Error::Singular {
                    pivot: j,
                    value: pivot.as_f64(),
                    tolerance: tol.as_f64(),
                });
            }
            let ljj = pivot.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &DenseMatrix<T> {
        &self.l
    }

    pub fn solve_vec(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.l.rows();
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side of length {} for order {n}",
                b.len()
            )));
        }
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.l[(i, k)] * z[k];
            }
            z[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * z[k];
            }
            z[i] = s / self.l[(i, i)];
        }
        Ok(z)
    }

    pub fn solve_mat(&self, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        let mut out = DenseMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let col = self.solve_vec(&b.column(j))?;
            for (i, v) in col.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<DenseMatrix<T>> {
        self.solve_mat(&DenseMatrix::identity(self.l.rows()))
    }
}

/// Solves `gram z = rhs` for a symmetric positive-definite `gram`.
pub fn spd_solve<T: Scalar>(gram: &DenseMatrix<T>, rhs: &[T]) -> Result<Vec<T>> {
    Cholesky::new(gram)?.solve_vec(rhs)
}

/// Matrix right-hand-side variant of [`spd_solve`].
pub fn spd_solve_mat<T: Scalar>(gram: &DenseMatrix<T>, rhs: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    Cholesky::new(gram)?.solve_mat(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let z = spd_solve(&DenseMatrix::<f64>::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(z, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn diagonal() {
        let z = spd_solve(&DenseMatrix::from_diag(&[2.0, 4.0]), &[2.0, 4.0]).unwrap();
        assert!(z.iter().all(|v: &f64| (v - 1.0).abs() < 1e-15), "{z:?}");
    }

    #[test]
    fn ill_conditioned_normal_equations_fail() {
        let x = DenseMatrix::<f64>::from_f64_rows(&[[1e9, -1.0], [-1.0, 1e-5]]).unwrap();
        let y = x.matvec(&[1.0, 1.0]).unwrap();
        match spd_solve(&x.gram(), &x.t_matvec(&y).unwrap()) {
            Err(Error::Singular { pivot, .. }) => assert_eq!(pivot, 1),
            Ok(z) => assert!((z[1] - 1.0).abs() > 10.0, "{z:?}"),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn residual_small() {
        let g = DenseMatrix::<f64>::from_f64_rows(&[[4.0, 1.0, 0.5], [1.0, 3.0, -0.2], [0.5, -0.2, 2.0]]).unwrap();
        let rhs = [1.0, -2.0, 0.5];
        let z = spd_solve(&g, &rhs).unwrap();
        let back = g.matvec(&z).unwrap();
        let err: f64 = back.iter().zip(rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1e-8 * 1.5);
        let inv = Cholesky::new(&g).unwrap().inverse().unwrap();
        let eye = g.matmul(&inv).unwrap().sub(&DenseMatrix::identity(3)).unwrap();
        assert!(eye.max_abs() < 1e-14);
    }

    #[test]
    fn indefinite_rejected() {
        let g = DenseMatrix::<f64>::from_f64_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(spd_solve(&g, &[1.0, 1.0]), Err(Error::Singular { pivot: 1, .. })));
    }
}
