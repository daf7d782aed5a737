//! Scatter-matrix concordance between a data subset and a reference.
//!
//! `S(A, B) = rows(B) / (d * rows(A)) * ||A B^+||_F^2` with
//! `B^+ = (B^T B)^{-1} B^T`. The value is 1 when the row-normalized scatter
//! matrices coincide, below 1 when `A` carries less variance than `B`, and
//! above 1 otherwise.
//!
//! Two evaluation routes are provided. [`concordance_direct`] forms the
//! pseudo-inverse from the data matrices. [`concordance_trace`] works from
//! [`ScatterSummary`] values only, using
//! `||A B^+||_F^2 = tr(A^T A (B^T B)^{-1})` evaluated in the eigenbasis of the
//! reference scatter, which also yields the `d` per-coordinate ratio terms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spd_solve_mat, sym_eigen, DenseMatrix};
use crate::scalar::Scalar;
use crate::scatter::ScatterSummary;

/// Whether the subset is compared against the whole data set (which
/// contains it) or against the remaining rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[serde(alias = "overlap")]
    Overlapping,
    #[serde(alias = "nonoverlap")]
    NonOverlapping,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Overlapping => "overlap",
            Mode::NonOverlapping => "nonoverlap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Trace,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Trace => "trace",
        }
    }
}

/// Prefactor applied to `||A B^+||_F^2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `rows(B) / (d * rows(A))`; gives `S(A, A) = 1`.
    #[default]
    RowRatio,
    /// `rows(A) / (d * rows(B))`, the prefactor as originally printed.
    /// Kept for comparison with published numbers.
    Literal,
}

impl Normalization {
    fn factor<T: Scalar>(self, rows_a: usize, rows_b: usize, d: usize) -> T {
        let (num, den) = match self {
            Normalization::RowRatio => (rows_b, rows_a),
            Normalization::Literal => (rows_a, rows_b),
        };
        T::from_count(num) / (T::from_count(d) * T::from_count(den))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConcordanceOptions {
    pub normalization: Normalization,
    /// Use column-centered scatter matrices. Off by default: raw Gram
    /// matrices are compared.
    pub centered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcordanceResult<T> {
    pub value: T,
    /// Per-coordinate ratio terms whose mean is `value`; `None` for the
    /// direct method.
    pub terms: Option<Vec<T>>,
    pub method: Method,
    pub mode: Option<Mode>,
    pub n_subset: usize,
    pub n_reference: usize,
    pub d: usize,
    /// Set when the subset has fewer than `2d` rows.
    pub warning: Option<String>,
}

fn quality_warning(n_subset: usize, d: usize) -> Option<String> {
    if n_subset < d {
        Some(format!(
            "subset has {n_subset} rows for {d} columns; its scatter is singular"
        ))
    } else if n_subset < 2 * d {
        Some(format!(
            "subset has {n_subset} rows for {d} columns; concordance is poorly determined below 2d rows"
        ))
    } else {
        None
    }
}

/// Concordance from the data matrices through an explicit pseudo-inverse.
pub fn concordance_direct<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<ConcordanceResult<T>> {
    concordance_direct_with(a, b, Normalization::default())
}

pub fn concordance_direct_with<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    normalization: Normalization,
) -> Result<ConcordanceResult<T>> {
    let d = a.cols();
    if b.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "subset has {d} columns, reference has {}",
            b.cols()
        )));
    }
    if a.rows() == 0 {
        return Err(Error::InvalidArgument("empty subset".into()));
    }
    if b.rows() < d {
        return Err(Error::InvalidArgument(format!(
            "reference has {} rows for {d} columns",
            b.rows()
        )));
    }
    // B^+ = (B^T B)^{-1} B^T
    let b_pinv = spd_solve_mat(&b.gram(), &b.transpose())?;
    // ||A B^+||_F^2 one row of the product at a time
    let mut product_row = vec![T::zero(); b.rows()];
    let mut sum_sq = T::zero();
    for a_row in a.row_iter() {
        product_row.fill(T::zero());
        for (k, &a_k) in a_row.iter().enumerate() {
            for (p, &v) in product_row.iter_mut().zip(b_pinv.row(k)) {
                *p += a_k * v;
            }
        }
        sum_sq += product_row.iter().map(|&v| v * v).sum::<T>();
    }
    let value = normalization.factor::<T>(a.rows(), b.rows(), d) * sum_sq;
    Ok(ConcordanceResult {
        value,
        terms: None,
        method: Method::Direct,
        mode: None,
        n_subset: a.rows(),
        n_reference: b.rows(),
        d,
        warning: quality_warning(a.rows(), d),
    })
}

fn scatter_matrix<T: Scalar>(s: &ScatterSummary<T>, centered: bool) -> Result<DenseMatrix<T>> {
    if centered {
        s.centered_gram()
    } else {
        Ok(s.gram())
    }
}

fn check_pair<T: Scalar>(a: &ScatterSummary<T>, b: &ScatterSummary<T>) -> Result<()> {
    if a.d() != b.d() {
        return Err(Error::DimensionMismatch(format!(
            "subset scatter has {} columns, reference has {}",
            a.d(),
            b.d()
        )));
    }
    if a.n() == 0 {
        return Err(Error::InvalidArgument("empty subset".into()));
    }
    if b.n() == 0 {
        return Err(Error::InvalidArgument("empty reference".into()));
    }
    Ok(())
}

/// Concordance from scatter summaries, with per-coordinate terms.
pub fn concordance_trace<T: Scalar>(
    subset: &ScatterSummary<T>,
    reference: &ScatterSummary<T>,
) -> Result<ConcordanceResult<T>> {
    concordance_trace_with(subset, reference, &ConcordanceOptions::default())
}

pub fn concordance_trace_with<T: Scalar>(
    subset: &ScatterSummary<T>,
    reference: &ScatterSummary<T>,
    options: &ConcordanceOptions,
) -> Result<ConcordanceResult<T>> {
    check_pair(subset, reference)?;
    let d = subset.d();
    let n_b = T::from_count(reference.n());
    let g_b = scatter_matrix(reference, options.centered)?.scale(T::one() / n_b);
    let eig = sym_eigen(&g_b)?;
    let top = eig.values.first().copied().unwrap_or_else(T::zero);
    let tol = T::from_count(d) * T::epsilon() * top.abs();
    if let Some((j, &v)) = eig.values.iter().enumerate().find(|(_, &v)| !(v > tol)) {
        return Err(Error::Singular {
            pivot: j,
            value: v.as_f64(),
            tolerance: tol.as_f64(),
        });
    }
    let g_a = scatter_matrix(subset, options.centered)?;
    let n_a = T::from_count(subset.n());
    let scale = options.normalization.factor::<T>(subset.n(), reference.n(), d)
        * T::from_count(d)
        * (n_a / n_b);
    let terms: Vec<T> = (0..d)
        .map(|j| {
            let v = eig.vector(j);
            quad_form(&g_a, &v) / n_a / eig.values[j] * scale
        })
        .collect();
    Ok(finish(terms, Method::Trace, subset.n(), reference.n(), d))
}

/// Common-basis concordance: both scatters are projected on the supplied
/// orthonormal columns and the diagonal ratios averaged. With the reference
/// scatter's own eigenvectors this coincides with [`concordance_trace`]; with
/// a known population basis it is the per-coordinate ratio statistic used by
/// the distribution models.
pub fn concordance_in_basis<T: Scalar>(
    subset: &ScatterSummary<T>,
    reference: &ScatterSummary<T>,
    basis: &DenseMatrix<T>,
) -> Result<ConcordanceResult<T>> {
    check_pair(subset, reference)?;
    let d = subset.d();
    if basis.rows() != d || basis.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "basis is {}x{}, expected {d}x{d}",
            basis.rows(),
            basis.cols()
        )));
    }
    let g_a = subset.gram();
    let g_b = reference.gram();
    let n_a = T::from_count(subset.n());
    let n_b = T::from_count(reference.n());
    let mut terms = Vec::with_capacity(d);
    for j in 0..d {
        let v = basis.column(j);
        let den = quad_form(&g_b, &v) / n_b;
        if !(den > T::zero()) {
            return Err(Error::Singular {
                pivot: j,
                value: den.as_f64(),
                tolerance: 0.0,
            });
        }
        terms.push(quad_form(&g_a, &v) / n_a / den);
    }
    Ok(finish(terms, Method::Trace, subset.n(), reference.n(), d))
}

fn finish<T: Scalar>(terms: Vec<T>, method: Method, n_a: usize, n_b: usize, d: usize) -> ConcordanceResult<T> {
    let value = terms.iter().copied().sum::<T>() / T::from_count(d);
    ConcordanceResult {
        value,
        terms: Some(terms),
        method,
        mode: None,
        n_subset: n_a,
        n_reference: n_b,
        d,
        warning: quality_warning(n_a, d),
    }
}

fn quad_form<T: Scalar>(m: &DenseMatrix<T>, v: &[T]) -> T {
    let n = v.len();
    let mut s = T::zero();
    for i in 0..n {
        let mut row = T::zero();
        for j in 0..n {
            row += m[(i, j)] * v[j];
        }
        s += v[i] * row;
    }
    s
}

/// Concordance of a subset against the full data (overlapping) or against
/// the complement (non-overlapping). The complement scatter is obtained by
/// subtracting summaries; the data is not re-read.
pub fn concordance_subset<T: Scalar>(
    total: &ScatterSummary<T>,
    subset: &ScatterSummary<T>,
    mode: Mode,
) -> Result<ConcordanceResult<T>> {
    concordance_subset_with(total, subset, mode, &ConcordanceOptions::default())
}

pub fn concordance_subset_with<T: Scalar>(
    total: &ScatterSummary<T>,
    subset: &ScatterSummary<T>,
    mode: Mode,
    options: &ConcordanceOptions,
) -> Result<ConcordanceResult<T>> {
    if subset.n() > total.n() {
        return Err(Error::InvalidArgument(format!(
            "subset has {} rows but the total only {}",
            subset.n(),
            total.n()
        )));
    }
    let mut result = match mode {
        Mode::Overlapping => concordance_trace_with(subset, total, options)?,
        Mode::NonOverlapping => {
            let rest = total.complement(subset)?;
            concordance_trace_with(subset, &rest, options)?
        }
    };
    result.mode = Some(mode);
    Ok(result)
}

/// Direct-method concordance of the rows `indices` of `data` against all of
/// `data` or against the remaining rows.
pub fn concordance_direct_subset<T: Scalar>(
    data: &DenseMatrix<T>,
    indices: &[usize],
    mode: Mode,
) -> Result<ConcordanceResult<T>> {
    let a = data.select_rows(indices);
    let mut result = match mode {
        Mode::Overlapping => concordance_direct(&a, data)?,
        Mode::NonOverlapping => {
            let mut keep = vec![true; data.rows()];
            for &i in indices {
                keep[i] = false;
            }
            let rest: Vec<usize> = (0..data.rows()).filter(|&i| keep[i]).collect();
            concordance_direct(&a, &data.select_rows(&rest))?
        }
    };
    result.mode = Some(mode);
    Ok(result)
}
