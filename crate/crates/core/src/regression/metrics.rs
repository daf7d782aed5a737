//! Coefficient error and communication cost.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Natural log of a mean squared error; identical vectors give
/// [`LogMse::NegInfinity`] instead of a float infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogMse {
    Finite(f64),
    NegInfinity,
}

impl LogMse {
    pub fn value(self) -> f64 {
        match self {
            LogMse::Finite(v) => v,
            LogMse::NegInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, LogMse::Finite(_))
    }
}

pub fn coefficient_log_mse<T: Scalar>(estimate: &[T], reference: &[T]) -> Result<LogMse> {
    if estimate.is_empty() {
        return Err(Error::InvalidArgument("log MSE of empty vectors".into()));
    }
    if estimate.len() != reference.len() {
        return Err(Error::DimensionMismatch(format!(
            "estimate has {} coefficients, reference {}",
            estimate.len(),
            reference.len()
        )));
    }
    let mse = estimate
        .iter()
        .zip(reference)
        .map(|(&a, &b)| {
            let e = (a - b).as_f64();
            e * e
        })
        .sum::<f64>()
        / estimate.len() as f64;
    if !mse.is_finite() {
        return Err(Error::NonFinite("coefficient difference".into()));
    }
    Ok(if mse == 0.0 { LogMse::NegInfinity } else { LogMse::Finite(mse.ln()) })
}

/// Bytes each scheme sends to the combining node: one coefficient vector per
/// block for D&R, a scatter matrix plus cross-product vector per block for
/// pooled normal equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CommunicationCost {
    pub r: u64,
    pub d: u64,
    pub bytes_per_value: u64,
    pub dnr_values: u128,
    pub pooled_values: u128,
    pub dnr_bytes: u128,
    pub pooled_bytes: u128,
}

pub fn communication_cost(r: u64, d: u64, bytes_per_value: u64) -> CommunicationCost {
    let (r128, d128, b128) = (u128::from(r), u128::from(d), u128::from(bytes_per_value));
    let dnr_values = r128 * d128;
    let pooled_values = r128 * d128 * d128 + r128 * d128;
    CommunicationCost {
        r,
        d,
        bytes_per_value,
        dnr_values,
        pooled_values,
        dnr_bytes: dnr_values * b128,
        pooled_bytes: pooled_values * b128,
    }
}
