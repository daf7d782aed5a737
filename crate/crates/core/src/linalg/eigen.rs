//! Symmetric eigendecomposition by cyclic Jacobi rotations.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Sweep cap for the cyclic Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;

/// Eigenvalues in non-increasing order with matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition<T> {
    pub values: Vec<T>,
    pub vectors: DenseMatrix<T>,
}

impl<T: Scalar> EigenDecomposition<T> {
    /// `V * diag(values) * V^T`.
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        let d = self.values.len();
        DenseMatrix::from_fn(d, d, |i, j| {
            (0..d)
                .map(|k| self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)])
                .sum()
        })
    }

    pub fn vector(&self, k: usize) -> Vec<T> {
        self.vectors.column(k)
    }
}

fn off_diagonal_norm<T: Scalar>(a: &DenseMatrix<T>) -> T {
    let n = a.rows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Eigendecomposition of a symmetric matrix.
///
/// Converged when the off-diagonal Frobenius norm drops to `1e-12 * ||m||_F`
/// (or a few ulps for single precision). Eigenvector signs are fixed so the
/// largest-magnitude component of each vector is positive.
pub fn sym_eigen<T: Scalar>(m: &DenseMatrix<T>) -> Result<EigenDecomposition<T>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let scale = m.max_abs();
    let asym = m.asymmetry();
    if asym > T::lit(1e-12).max(T::epsilon() * T::lit(8.0)) * scale {
        return Err(Error::NotSymmetric(asym.as_f64()));
    }

    let mut a = m.clone();
    let mut v = DenseMatrix::identity(n);
    let norm = crate::linalg::frobenius_sq(m).sqrt();
    let threshold = T::lit(1e-12).max(T::epsilon() * T::lit(4.0)) * norm;

    let mut converged = off_diagonal_norm(&a) <= threshold;
    let mut sweep = 0;
    while !converged {
        if sweep == MAX_SWEEPS {
            return Err(Error::NoConvergence(MAX_SWEEPS));
        }
        sweep += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        converged = off_diagonal_norm(&a) <= threshold;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let values: Vec<T> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = v.column(src);
        let lead = col
            .iter()
            .copied()
            .fold(T::zero(), |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if lead < T::zero() { -T::one() } else { T::one() };
        for (i, x) in col.into_iter().enumerate() {
            vectors[(i, dst)] = sign * x;
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

/// One Jacobi rotation zeroing `a[p][q]`, accumulated into `v`.
fn rotate<T: Scalar>(a: &mut DenseMatrix<T>, v: &mut DenseMatrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == T::zero() {
        return;
    }
    let n = a.rows();
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    let theta = (aqq - app) / (T::lit(2.0) * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = T::zero();
    a[(q, p)] = T::zero();

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius_sq;

    fn orthonormality_error(v: &DenseMatrix<f64>) -> f64 {
        let vtv = v.transpose().matmul(v).unwrap();
        vtv.sub(&DenseMatrix::identity(v.rows())).unwrap().max_abs()
    }

    #[test]
    fn diagonal_input() {
        let m = DenseMatrix::from_diag(&[1.0, 3.0]);
        let e = sym_eigen(&m).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        // sorted descending, so the axis for 3 comes first
        assert_eq!(e.vectors.as_slice(), &[0.0, 1.0, 1.0, 0.0]);

        let e = sym_eigen(&DenseMatrix::from_diag(&[3.0, 1.0])).unwrap();
        assert_eq!(e.vectors, DenseMatrix::identity(2));
    }

    #[test]
    fn two_by_two_characteristic_polynomial() {
        // det([[2-l,1],[1,2-l]]) = (2-l)^2 - 1 -> l = 3, 1
        let m = DenseMatrix::<f64>::from_f64_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let e = sym_eigen(&m).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let r = 0.5f64.sqrt();
        assert!((e.vectors[(0, 0)] - r).abs() < 1e-14);
        assert!((e.vectors[(1, 0)] - r).abs() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DenseMatrix::<f64>::from_f64_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eigen(&m), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn rejects_non_square() {
        assert!(sym_eigen(&DenseMatrix::<f64>::zeros(2, 3)).is_err());
    }

    #[test]
    fn zero_matrix() {
        let e = sym_eigen(&DenseMatrix::<f64>::zeros(3, 3)).unwrap();
        assert_eq!(e.values, vec![0.0; 3]);
        assert!(orthonormality_error(&e.vectors) == 0.0);
    }

    #[test]
    fn five_by_five_reconstruction() {
        let vals = [
            4.0, 1.0, -2.0, 0.5, 3.0, //
            1.0, 6.0, 0.0, 2.0, -1.0, //
            -2.0, 0.0, 5.0, 1.5, 0.25, //
            0.5, 2.0, 1.5, 3.0, 0.0, //
            3.0, -1.0, 0.25, 0.0, 7.0,
        ];
        let m = DenseMatrix::new(5, 5, vals.to_vec()).unwrap();
        let e = sym_eigen(&m).unwrap();
        assert!(orthonormality_error(&e.vectors) <= 1e-10);
        let rel = frobenius_sq(&e.reconstruct().sub(&m).unwrap()).sqrt() / frobenius_sq(&m).sqrt();
        assert!(rel <= 1e-8, "reconstruction error {rel}");
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let tr: f64 = e.values.iter().sum();
        assert!((tr - m.trace()).abs() <= 1e-10 * m.trace().abs());
    }

    #[test]
    fn single_precision() {
        let m = DenseMatrix::<f32>::from_f64_rows(&[[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]]).unwrap();
        let e = sym_eigen(&m).unwrap();
        // eigenvalues 2 + sqrt(2), 2, 2 - sqrt(2)
        let s = 2.0f32.sqrt();
        assert!((e.values[0] - (2.0 + s)).abs() < 1e-5);
        assert!((e.values[1] - 2.0).abs() < 1e-5);
        assert!((e.values[2] - (2.0 - s)).abs() < 1e-5);
    }

    #[test]
    fn sign_convention() {
        let m = DenseMatrix::<f64>::from_f64_rows(&[[1.0, -0.9], [-0.9, 1.0]]).unwrap();
        let e = sym_eigen(&m).unwrap();
        for k in 0..2 {
            let col = e.vector(k);
            let lead = col.iter().copied().fold(0.0f64, |b, x| if x.abs() > b.abs() { x } else { b });
            assert!(lead > 0.0);
        }
    }
}
