//! Dense linear algebra primitives.

mod cholesky;
mod eigen;
mod matrix;
mod qr;

pub use cholesky::{spd_solve, spd_solve_mat, Cholesky};
pub use eigen::{sym_eigen, EigenDecomposition, MAX_SWEEPS};
pub use matrix::DenseMatrix;
pub use qr::{qr_solve, HouseholderQr};

use crate::scalar::Scalar;

/// Sum of squared entries.
pub fn frobenius_sq<T: Scalar>(m: &DenseMatrix<T>) -> T {
    m.as_slice().iter().map(|&v| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius_sq(&DenseMatrix::<f64>::identity(3)), 3.0);
        let m = DenseMatrix::<f64>::from_f64_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(frobenius_sq(&m), 30.0);
        assert_eq!(frobenius_sq(&m), m.transpose().matmul(&m).unwrap().trace());
    }
}
