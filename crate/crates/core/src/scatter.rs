//! Mergeable scatter (Gram) sufficient statistics.
//!
//! A [`ScatterSummary`] holds `X^T X`, optionally `X^T y` and `y^T y`, plus
//! column sums and the row count. Summaries of disjoint row blocks merge by
//! elementwise addition, so they can be built per block (on separate threads
//! or machines) and reduced afterwards.

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, DenseMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterSummary<T> {
    d: usize,
    n: usize,
    /// Upper triangle of `X^T X`, row by row.
    packed: Vec<T>,
    /// `None` for summaries built from a bare Gram matrix.
    col_sums: Option<Vec<T>>,
    xty: Option<Vec<T>>,
    yty: Option<T>,
}

#[inline]
fn packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

#[inline]
fn packed_index(d: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * d - i * (i + 1) / 2 + j
}

impl<T: Scalar> ScatterSummary<T> {
    /// Empty summary for `d` columns; response statistics are enabled by the
    /// first chunk that carries a response.
    pub fn new(d: usize) -> Self {
        Self {
            d,
            n: 0,
            packed: vec![T::zero(); packed_len(d)],
            col_sums: Some(vec![T::zero(); d]),
            xty: None,
            yty: None,
        }
    }

    /// Summary with a given row count and Gram matrix, e.g. a population
    /// scatter `n * Sigma`. Column sums are unknown, so centering is
    /// unavailable.
    pub fn from_gram(n: usize, gram: &DenseMatrix<T>) -> Result<Self> {
        if !gram.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Gram matrix is {}x{}",
                gram.rows(),
                gram.cols()
            )));
        }
        let d = gram.rows();
        let asym = gram.asymmetry();
        if asym > T::lit(1e-12) * gram.max_abs() {
            return Err(Error::NotSymmetric(asym.as_f64()));
        }
        if gram.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Gram matrix".into()));
        }
        let mut packed = Vec::with_capacity(packed_len(d));
        for i in 0..d {
            for j in i..d {
                packed.push(gram[(i, j)]);
            }
        }
        Ok(Self {
            d,
            n,
            packed,
            col_sums: None,
            xty: None,
            yty: None,
        })
    }

    pub fn from_matrix(x: &DenseMatrix<T>, response: Option<&[T]>) -> Result<Self> {
        let mut s = Self::new(x.cols());
        s.accumulate(x, response)?;
        Ok(s)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_response(&self) -> bool {
        self.xty.is_some()
    }

    pub fn xty(&self) -> Option<&[T]> {
        self.xty.as_deref()
    }

    pub fn yty(&self) -> Option<T> {
        self.yty
    }

    pub fn col_sums(&self) -> Option<&[T]> {
        self.col_sums.as_deref()
    }

    pub fn packed_gram(&self) -> &[T] {
        &self.packed
    }

    pub fn gram_entry(&self, i: usize, j: usize) -> T {
        self.packed[packed_index(self.d, i, j)]
    }

    /// Full symmetric `X^T X`.
    pub fn gram(&self) -> DenseMatrix<T> {
        DenseMatrix::from_fn(self.d, self.d, |i, j| self.gram_entry(i, j))
    }

    /// `X^T X - s s^T / n` with `s` the column sums; the zero matrix when empty.
    pub fn centered_gram(&self) -> Result<DenseMatrix<T>> {
        let sums = self.col_sums.as_ref().ok_or_else(|| {
            Error::InvalidArgument("column sums unavailable for a scatter built from a Gram matrix".into())
        })?;
        if self.n == 0 {
            return Ok(DenseMatrix::zeros(self.d, self.d));
        }
        let n = T::from_count(self.n);
        Ok(DenseMatrix::from_fn(self.d, self.d, |i, j| {
            self.gram_entry(i, j) - sums[i] * sums[j] / n
        }))
    }

    /// Adds one row (and its response, if tracked).
    pub fn push_row(&mut self, row: &[T], y: Option<T>) -> Result<()> {
        if row.len() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "row of width {} into a {}-column scatter",
                row.len(),
                self.d
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("row {}", self.n)));
        }
        if let Some(y) = y {
            if !y.is_finite() {
                return Err(Error::NonFinite(format!("response at row {}", self.n)));
            }
        }
        self.enable_response(y.is_some())?;
        self.add_row_unchecked(row, y);
        Ok(())
    }

    fn enable_response(&mut self, with_response: bool) -> Result<()> {
        match (with_response, self.xty.is_some()) {
            (true, false) if self.n == 0 => {
                self.xty = Some(vec![T::zero(); self.d]);
                self.yty = Some(T::zero());
                Ok(())
            }
            (true, false) => Err(Error::DimensionMismatch(
                "response supplied to a scatter accumulated without one".into(),
            )),
            (false, true) => Err(Error::DimensionMismatch(
                "response missing for a scatter that tracks one".into(),
            )),
            _ => Ok(()),
        }
    }

    fn add_row_unchecked(&mut self, row: &[T], y: Option<T>) {
        let d = self.d;
        let mut idx = 0;
        for i in 0..d {
            let a = row[i];
            for &b in &row[i..] {
                self.packed[idx] += a * b;
                idx += 1;
            }
        }
        if let Some(sums) = self.col_sums.as_mut() {
            for (acc, &a) in sums.iter_mut().zip(row) {
                *acc += a;
            }
        }
        if let (Some(y), Some(xty)) = (y, self.xty.as_mut()) {
            for (acc, &a) in xty.iter_mut().zip(row) {
                *acc += a * y;
            }
            if let Some(yty) = self.yty.as_mut() {
                *yty += y * y;
            }
        }
        self.n += 1;
    }

    /// Adds every row of `chunk`, with `response` when given.
    pub fn accumulate(&mut self, chunk: &DenseMatrix<T>, response: Option<&[T]>) -> Result<()> {
        if chunk.cols() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "chunk has {} columns, scatter has {}",
                chunk.cols(),
                self.d
            )));
        }
        if let Some(y) = response {
            if y.len() != chunk.rows() {
                return Err(Error::DimensionMismatch(format!(
                    "response of length {} for {} rows",
                    y.len(),
                    chunk.rows()
                )));
            }
            if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("response at row {}", self.n + pos)));
            }
        }
        if chunk.rows() == 0 {
            return Ok(());
        }
        if chunk.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("chunk".into()));
        }
        self.enable_response(response.is_some())?;
        for (k, row) in chunk.row_iter().enumerate() {
            self.add_row_unchecked(row, response.map(|y| y[k]));
        }
        Ok(())
    }

    /// Elementwise sum of two summaries.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch(format!(
                "merging {}-column and {}-column scatters",
                self.d, other.d
            )));
        }
        let xty = match (&self.xty, &other.xty) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(&x, &y)| x + y).collect()),
            (Some(a), None) if other.n == 0 => Some(a.clone()),
            (None, Some(b)) if self.n == 0 => Some(b.clone()),
            (None, None) => None,
            _ => {
                return Err(Error::DimensionMismatch(
                    "merging scatters with and without response statistics".into(),
                ))
            }
        };
        let yty = match (self.yty, other.yty) {
            (Some(a), Some(b)) => Some(a + b),
            (a, b) => a.or(b),
        };
        Ok(Self {
            d: self.d,
            n: self.n + other.n,
            packed: self.packed.iter().zip(&other.packed).map(|(&a, &b)| a + b).collect(),
            col_sums: zip_option(&self.col_sums, &other.col_sums, |a, b| a + b),
            xty,
            yty,
        })
    }

    /// Summary of the rows in `self` that are not in `subset`, by field
    /// subtraction. `subset` must have been accumulated from rows of `self`.
    pub fn complement(&self, subset: &Self) -> Result<Self> {
        if self.d != subset.d {
            return Err(Error::DimensionMismatch(format!(
                "complement of a {}-column scatter by a {}-column one",
                self.d, subset.d
            )));
        }
        if subset.n > self.n {
            return Err(Error::InvalidArgument(format!(
                "subset has {} rows but total only {}",
                subset.n, self.n
            )));
        }
        let xty = match (&self.xty, &subset.xty) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(&x, &y)| x - y).collect()),
            (Some(a), None) if subset.n == 0 => Some(a.clone()),
            _ => None,
        };
        let yty = match (self.yty, subset.yty) {
            (Some(a), Some(b)) => Some(a - b),
            (a, None) if subset.n == 0 => a,
            _ => None,
        };
        Ok(Self {
            d: self.d,
            n: self.n - subset.n,
            packed: self.packed.iter().zip(&subset.packed).map(|(&a, &b)| a - b).collect(),
            col_sums: zip_option(&self.col_sums, &subset.col_sums, |a, b| a - b),
            xty,
            yty,
        })
    }

    /// Checks positive semidefiniteness: smallest eigenvalue no lower than
    /// `-d * eps * lambda_max`.
    pub fn is_psd(&self) -> Result<bool> {
        if self.d == 0 {
            return Ok(true);
        }
        let e = sym_eigen(&self.gram())?;
        let top = e.values[0].max(T::zero());
        let floor = -(T::from_count(self.d) * T::epsilon() * top);
        Ok(e.values.iter().all(|&v| v >= floor))
    }
}

fn zip_option<T: Copy>(a: &Option<Vec<T>>, b: &Option<Vec<T>>, f: impl Fn(T, T) -> T) -> Option<Vec<T>> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()),
        _ => None,
    }
}

/// Reduces summaries with a left fold in the given order.
pub fn merge_all<'a, T: Scalar>(
    d: usize,
    summaries: impl IntoIterator<Item = &'a ScatterSummary<T>>,
) -> Result<ScatterSummary<T>> {
    summaries
        .into_iter()
        .try_fold(ScatterSummary::new(d), |acc, s| acc.merge(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[[f64; 2]]) -> DenseMatrix<f64> {
        DenseMatrix::from_f64_rows(rows).unwrap()
    }

    #[test]
    fn identity_chunk() {
        let mut s = ScatterSummary::<f64>::new(2);
        s.accumulate(&DenseMatrix::identity(2), None).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.gram(), DenseMatrix::identity(2));
    }

    #[test]
    fn hand_multiplied_gram() {
        let s = ScatterSummary::from_matrix(&m(&[[1.0, 2.0], [3.0, 4.0]]), None).unwrap();
        assert_eq!(s.gram(), m(&[[10.0, 14.0], [14.0, 20.0]]));
        assert_eq!(s.packed_gram(), &[10.0, 14.0, 20.0]);
    }

    #[test]
    fn accumulate_order_independent() {
        let c1 = m(&[[1.0, 2.0], [3.0, 4.0]]);
        let c2 = m(&[[0.5, -1.0]]);
        let mut a = ScatterSummary::new(2);
        a.accumulate(&c1, Some(&[1.0, 2.0])).unwrap();
        a.accumulate(&c2, Some(&[3.0])).unwrap();
        let mut b = ScatterSummary::new(2);
        b.accumulate(&c2, Some(&[3.0])).unwrap();
        b.accumulate(&c1, Some(&[1.0, 2.0])).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.xty().unwrap(), &[8.5, 7.0]);
        assert_eq!(a.yty(), Some(14.0));
    }

    #[test]
    fn merge_two_rows() {
        let a = ScatterSummary::from_matrix(&m(&[[1.0, 0.0]]), None).unwrap();
        let b = ScatterSummary::from_matrix(&m(&[[0.0, 2.0]]), None).unwrap();
        let s = a.merge(&b).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.gram(), DenseMatrix::from_diag(&[1.0, 4.0]));
    }

    #[test]
    fn merge_identity_element() {
        let s = ScatterSummary::from_matrix(&m(&[[1.0, 2.0], [3.0, 4.0]]), Some(&[1.0, -1.0])).unwrap();
        assert_eq!(s.merge(&ScatterSummary::new(2)).unwrap(), s);
        assert_eq!(ScatterSummary::new(2).merge(&s).unwrap(), s);
    }

    #[test]
    fn single_row_merges_equal_whole_accumulation() {
        let x = m(&[[0.1, 2.5], [3.3, -4.0], [1e-3, 7.0], [2.2, 0.9]]);
        let y = [0.3, -1.1, 2.0, 0.7];
        let whole = ScatterSummary::from_matrix(&x, Some(&y)).unwrap();
        let parts: Vec<_> = (0..x.rows())
            .map(|i| ScatterSummary::from_matrix(&x.select_rows(&[i]), Some(&y[i..=i])).unwrap())
            .collect();
        let merged = merge_all(2, &parts).unwrap();
        assert_eq!(merged, whole);
    }

    #[test]
    fn errors() {
        let mut s = ScatterSummary::<f64>::new(2);
        assert!(matches!(
            s.accumulate(&DenseMatrix::identity(3), None),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            s.accumulate(&DenseMatrix::identity(2), Some(&[1.0])),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(s.push_row(&[1.0, f64::INFINITY], None), Err(Error::NonFinite(_))));
        assert!(ScatterSummary::<f64>::new(2).merge(&ScatterSummary::new(3)).is_err());
        s.accumulate(&DenseMatrix::identity(2), None).unwrap();
        assert!(s.push_row(&[1.0, 1.0], Some(1.0)).is_err());
    }

    #[test]
    fn complement_by_subtraction() {
        let x = m(&[[1.0, 0.0], [0.0, 1.0], [2.0, 0.0], [0.0, 2.0]]);
        let total = ScatterSummary::from_matrix(&x, None).unwrap();
        let head = ScatterSummary::from_matrix(&x.select_rows(&[0, 1]), None).unwrap();
        let rest = total.complement(&head).unwrap();
        assert_eq!(rest.n(), 2);
        assert_eq!(rest.gram(), DenseMatrix::from_diag(&[4.0, 4.0]));
        assert!(head.complement(&total).is_err());
    }

    #[test]
    fn centered_gram_of_constant_column_is_zero() {
        let x = m(&[[1.0, 2.0], [1.0, 4.0], [1.0, 6.0]]);
        let s = ScatterSummary::from_matrix(&x, None).unwrap();
        let c = s.centered_gram().unwrap();
        assert_eq!(c[(0, 0)], 0.0);
        assert_eq!(c[(0, 1)], 0.0);
        assert!((c[(1, 1)] - 8.0).abs() < 1e-12);
        assert!(s.is_psd().unwrap());
        let g = ScatterSummary::from_gram(3, &s.gram()).unwrap();
        assert_eq!(g.gram(), s.gram());
        assert!(g.centered_gram().is_err());
    }
}
