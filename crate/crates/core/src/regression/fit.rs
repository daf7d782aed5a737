//! Linear least-squares fitting paths.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{qr_solve, spd_solve, DenseMatrix};
use crate::regression::PartitionPlan;
use crate::scalar::Scalar;
use crate::scatter::{merge_all, ScatterSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    Dnr,
    PooledNormal,
    ReferenceQr,
    IrlsLogistic,
}

impl FitMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            FitMethod::Dnr => "dnr",
            FitMethod::PooledNormal => "pooled-normal",
            FitMethod::ReferenceQr => "reference-qr",
            FitMethod::IrlsLogistic => "irls-logistic",
        }
    }
}

/// How block estimates are averaged when blocks differ in size.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum BlockWeighting {
    #[default]
    Equal,
    RowCount,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub iterations: Option<usize>,
    pub converged: bool,
    pub deviance: Option<f64>,
    pub step_halvings: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub coefficients: Vec<T>,
    pub method: FitMethod,
    pub r: usize,
    pub per_block: Option<Vec<Vec<T>>>,
    pub diagnostics: Diagnostics,
}

impl<T> FitResult<T> {
    fn direct(coefficients: Vec<T>, method: FitMethod, r: usize) -> Self {
        Self {
            coefficients,
            method,
            r,
            per_block: None,
            diagnostics: Diagnostics {
                converged: true,
                ..Diagnostics::default()
            },
        }
    }
}

/// Least-squares fit to all rows through QR.
pub fn fit_reference<T: Scalar>(x: &DenseMatrix<T>, y: &[T]) -> Result<FitResult<T>> {
    Ok(FitResult::direct(qr_solve(x, y)?, FitMethod::ReferenceQr, 1))
}

/// Divide and recombine: QR fit per block, then the plain mean of the block
/// coefficients.
pub fn fit_dnr<T: Scalar>(blocks: &[(DenseMatrix<T>, Vec<T>)]) -> Result<FitResult<T>> {
    fit_dnr_weighted(blocks, BlockWeighting::Equal)
}

pub fn fit_dnr_weighted<T: Scalar>(
    blocks: &[(DenseMatrix<T>, Vec<T>)],
    weighting: BlockWeighting,
) -> Result<FitResult<T>> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::InvalidArgument("no blocks to fit".into()))?;
    let d = first.0.cols();
    if let Some(k) = blocks.iter().position(|(x, _)| x.cols() != d) {
        return Err(Error::Block {
            block: k,
            source: Box::new(Error::DimensionMismatch(format!(
                "{} columns, expected {d}",
                blocks[k].0.cols()
            ))),
        });
    }
    let fits: Vec<Result<Vec<T>>> = blocks.par_iter().map(|(x, y)| qr_solve(x, y)).collect();
    let mut per_block = Vec::with_capacity(blocks.len());
    for (k, fit) in fits.into_iter().enumerate() {
        per_block.push(fit.map_err(|e| Error::Block {
            block: k,
            source: Box::new(e),
        })?);
    }
    let weights: Vec<T> = match weighting {
        BlockWeighting::Equal => vec![T::one(); blocks.len()],
        BlockWeighting::RowCount => blocks.iter().map(|(x, _)| T::from_count(x.rows())).collect(),
    };
    let total: T = weights.iter().copied().sum();
    let mut coefficients = vec![T::zero(); d];
    for (beta, &w) in per_block.iter().zip(&weights) {
        for (c, &b) in coefficients.iter_mut().zip(beta) {
            *c += w * b;
        }
    }
    for c in &mut coefficients {
        *c /= total;
    }
    Ok(FitResult {
        per_block: Some(per_block),
        ..FitResult::direct(coefficients, FitMethod::Dnr, blocks.len())
    })
}

/// Extracts the blocks of `plan` from `(x, y)`.
pub fn split_blocks<T: Scalar>(
    x: &DenseMatrix<T>,
    y: &[T],
    plan: &PartitionPlan,
) -> Result<Vec<(DenseMatrix<T>, Vec<T>)>> {
    if x.rows() != plan.n() || y.len() != plan.n() {
        return Err(Error::DimensionMismatch(format!(
            "partition over {} rows applied to {} rows and {} responses",
            plan.n(),
            x.rows(),
            y.len()
        )));
    }
    Ok(plan
        .blocks()
        .iter()
        .map(|rows| (x.select_rows(rows), rows.iter().map(|&i| y[i]).collect()))
        .collect())
}

/// Solves the normal equations of the merged block summaries.
pub fn fit_pooled_normal<T: Scalar>(summaries: &[ScatterSummary<T>]) -> Result<FitResult<T>> {
    let first = summaries
        .first()
        .ok_or_else(|| Error::InvalidArgument("no summaries to pool".into()))?;
    let merged = merge_all(first.d(), summaries)?;
    let xty = merged
        .xty()
        .ok_or_else(|| Error::InvalidArgument("summaries carry no response cross-products".into()))?;
    let coefficients = spd_solve(&merged.gram(), xty)?;
    Ok(FitResult::direct(coefficients, FitMethod::PooledNormal, summaries.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::{make_partition, PartitionKind};
    use crate::rng::{fill_normal, stream_rng};

    fn synthetic(n: usize, d: usize, noise: f64, seed: u64) -> (DenseMatrix<f64>, Vec<f64>, Vec<f64>) {
        let mut rng = stream_rng(seed, 0);
        let mut data = vec![0.0; n * d];
        fill_normal(&mut rng, &mut data);
        let x = DenseMatrix::new(n, d, data).unwrap();
        let beta: Vec<f64> = (0..d).map(|j| 1.0 + j as f64 * 0.5).collect();
        let mut eps = vec![0.0; n];
        fill_normal(&mut rng, &mut eps);
        let y = x.matvec(&beta).unwrap().iter().zip(&eps).map(|(m, e)| m + noise * e).collect();
        (x, y, beta)
    }

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn noiseless_blocks_recover_beta() {
        let (x, y, beta) = synthetic(600, 4, 0.0, 1);
        let plan = make_partition(600, 6, PartitionKind::Random, 2).unwrap();
        let fit = fit_dnr(&split_blocks(&x, &y, &plan).unwrap()).unwrap();
        assert_eq!(fit.method, FitMethod::Dnr);
        assert_eq!(fit.per_block.as_ref().unwrap().len(), 6);
        assert!(dist(&fit.coefficients, &beta) < 1e-10);

        let summaries: Vec<_> = split_blocks(&x, &y, &plan)
            .unwrap()
            .iter()
            .map(|(xb, yb)| ScatterSummary::from_matrix(xb, Some(yb)).unwrap())
            .collect();
        assert!(dist(&fit_pooled_normal(&summaries).unwrap().coefficients, &beta) < 1e-10);
        assert!(dist(&fit_reference(&x, &y).unwrap().coefficients, &beta) < 1e-10);
    }

    #[test]
    fn dnr_mean_is_exact_mean_of_blocks() {
        let (x, y, _) = synthetic(500, 3, 1.0, 3);
        let plan = make_partition(500, 7, PartitionKind::Random, 4).unwrap();
        let fit = fit_dnr(&split_blocks(&x, &y, &plan).unwrap()).unwrap();
        let per = fit.per_block.unwrap();
        for j in 0..3 {
            let m = per.iter().map(|b| b[j]).sum::<f64>() / per.len() as f64;
            assert_eq!(m, fit.coefficients[j]);
        }
    }

    #[test]
    fn identical_blocks_match_single_block() {
        let (x, y, _) = synthetic(50, 3, 1.0, 5);
        let single = fit_reference(&x, &y).unwrap().coefficients;
        let blocks = vec![(x.clone(), y.clone()); 4];
        let fit = fit_dnr(&blocks).unwrap();
        assert!(dist(&fit.coefficients, &single) < 1e-14);
    }

    #[test]
    fn single_block_dnr_equals_reference() {
        let (x, y, _) = synthetic(300, 5, 1.0, 6);
        let plan = make_partition(300, 1, PartitionKind::Random, 7).unwrap();
        let fit = fit_dnr(&split_blocks(&x, &y, &plan).unwrap()).unwrap();
        assert_eq!(fit.coefficients, fit_reference(&x, &y).unwrap().coefficients);
    }

    #[test]
    fn weighted_mean_uses_row_counts() {
        let (x, y, _) = synthetic(31, 2, 1.0, 8);
        let plan = make_partition(31, 3, PartitionKind::Contiguous, 0).unwrap();
        let blocks = split_blocks(&x, &y, &plan).unwrap();
        let fit = fit_dnr_weighted(&blocks, BlockWeighting::RowCount).unwrap();
        let per = fit.per_block.unwrap();
        let want = (11.0 * per[0][0] + 10.0 * per[1][0] + 10.0 * per[2][0]) / 31.0;
        assert!((fit.coefficients[0] - want).abs() < 1e-14);
    }

    #[test]
    fn rank_deficient_block_is_named() {
        let (x, y, _) = synthetic(40, 2, 1.0, 9);
        let bad = DenseMatrix::<f64>::from_f64_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        let blocks = vec![(x.clone(), y.clone()), (bad, vec![1.0, 2.0, 3.0])];
        let err = fit_dnr(&blocks).unwrap_err();
        assert!(matches!(err, Error::Block { block: 1, .. }), "{err}");
    }

    #[test]
    fn pooled_matches_qr_and_is_partition_invariant() {
        let (x, y, _) = synthetic(1000, 5, 1.0, 10);
        let reference = fit_reference(&x, &y).unwrap().coefficients;
        let one = fit_pooled_normal(&[ScatterSummary::from_matrix(&x, Some(&y)).unwrap()]).unwrap();
        for (p, q) in one.coefficients.iter().zip(&reference) {
            assert!((p - q).abs() <= 1e-8 * q.abs().max(1.0));
        }
        let plan = make_partition(1000, 10, PartitionKind::Contiguous, 0).unwrap();
        let ten: Vec<_> = split_blocks(&x, &y, &plan)
            .unwrap()
            .iter()
            .map(|(xb, yb)| ScatterSummary::from_matrix(xb, Some(yb)).unwrap())
            .collect();
        let ten = fit_pooled_normal(&ten).unwrap();
        assert_eq!(ten.r, 10);
        for (a, b) in ten.coefficients.iter().zip(&one.coefficients) {
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn ill_conditioned_example() {
        let x = DenseMatrix::<f64>::from_f64_rows(&[[1e9, -1.0], [-1.0, 1e-5]]).unwrap();
        let y = x.matvec(&[1.0, 1.0]).unwrap();
        let reference = fit_reference(&x, &y).unwrap().coefficients;
        assert!((reference[0] - 1.0).abs() < 1e-6 && (reference[1] - 1.0).abs() < 1e-6);
        match fit_pooled_normal(&[ScatterSummary::from_matrix(&x, Some(&y)).unwrap()]) {
            Err(Error::Singular { .. }) => {}
            Ok(fit) => assert!((fit.coefficients[1] - 1.0).abs() > 10.0, "{:?}", fit.coefficients),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn pooled_requires_response() {
        let x = DenseMatrix::<f64>::identity(2);
        let s = ScatterSummary::from_matrix(&x, None).unwrap();
        assert!(matches!(fit_pooled_normal(&[s]), Err(Error::InvalidArgument(_))));
        assert!(fit_pooled_normal::<f64>(&[]).is_err());
    }

    #[test]
    fn f32_path() {
        let x = DenseMatrix::<f32>::from_f64_rows(&[[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]]).unwrap();
        let y = x.matvec(&[2.0, -1.0]).unwrap();
        let fit = fit_reference(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-5);
        assert!((fit.coefficients[1] + 1.0).abs() < 1e-5);
    }
}
