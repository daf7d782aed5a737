//! Block-size selection from the normal approximations of the concordance
//! models: the smallest block whose concordance is within `tolerance` of 1
//! with the requested two-sided confidence.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::concordance::Mode;
use crate::error::{Error, Result};

/// Normal-approximation variance of the concordance of an `i`-row block.
pub fn approx_variance(i: usize, n: usize, d: usize, mode: Mode) -> f64 {
    let (i, n, d) = (i as f64, n as f64, d as f64);
    match mode {
        Mode::Overlapping => 2.0 * (n - i) / (d * i * (n + 2.0)),
        Mode::NonOverlapping => 2.0 * n / (d * i * (n - i)),
    }
}

/// Two-sided standard-normal critical value for `confidence`.
pub fn critical_value(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }
    Ok(Normal::standard().inverse_cdf((1.0 + confidence) / 2.0))
}

fn satisfies(i: usize, n: usize, d: usize, mode: Mode, z: f64, tolerance: f64) -> bool {
    if mode == Mode::NonOverlapping && i >= n {
        return false;
    }
    z * approx_variance(i, n, d, mode).sqrt() <= tolerance
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionSize {
    pub i: usize,
    pub n: usize,
    pub d: usize,
    pub mode: Mode,
    pub tolerance: f64,
    pub confidence: f64,
    pub z: f64,
    /// Whether some `i` met the bound; when `false`, `i = n`.
    pub satisfied: bool,
    pub variance_at_i: Option<f64>,
    pub variance_below_i: Option<f64>,
}

/// Smallest `i >= d + 1` with `z * sqrt(var(i)) <= tolerance`, or `n` when
/// no block size meets the bound.
pub fn partition_size_heuristic(n: usize, d: usize, tolerance: f64, confidence: f64, mode: Mode) -> Result<usize> {
    Ok(partition_size_explained(n, d, tolerance, confidence, mode)?.i)
}

pub fn partition_size_explained(
    n: usize,
    d: usize,
    tolerance: f64,
    confidence: f64,
    mode: Mode,
) -> Result<PartitionSize> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tolerance}")));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    if n <= d {
        return Err(Error::InvalidArgument(format!("need n > d, got n = {n}, d = {d}")));
    }
    let z = critical_value(confidence)?;
    let ok = |i: usize| satisfies(i, n, d, mode, z, tolerance);

    // The bound is monotone in i up to `hi`: the variance decreases on
    // [d+1, n] when overlapping and on [d+1, n/2] when not.
    let lo = d + 1;
    let hi = match mode {
        Mode::Overlapping => n,
        Mode::NonOverlapping => {
            let half = n / 2;
            // i(n - i) peaks at floor(n/2) or ceil(n/2)
            if half >= lo && ok(half) {
                half
            } else if half + 1 < n && half + 1 >= lo && ok(half + 1) {
                half + 1
            } else {
                half.max(lo)
            }
        }
    };
    let found = if lo <= hi && ok(hi) {
        let (mut a, mut b) = (lo, hi);
        while a < b {
            let mid = a + (b - a) / 2;
            if ok(mid) {
                b = mid;
            } else {
                a = mid + 1;
            }
        }
        Some(a)
    } else {
        None
    };
    let i = found.unwrap_or(n);
    let var_at = |k: usize| {
        (k >= 1 && (mode == Mode::Overlapping || k < n)).then(|| approx_variance(k, n, d, mode))
    };
    Ok(PartitionSize {
        i,
        n,
        d,
        mode,
        tolerance,
        confidence,
        z,
        satisfied: found.is_some(),
        variance_at_i: var_at(i),
        variance_below_i: var_at(i - 1),
    })
}
