//! Scatter-matrix concordance and divide-and-recombine regression.
//!
//! The numeric core ([`linalg`], [`scatter`], [`concordance`],
//! [`regression`]) is generic over the [`Scalar`] element type (`f32` or
//! `f64`). The aliases at the crate root fix it to `f64`, which is what the
//! ingestion, simulation and experiment code uses.

pub mod concordance;
pub mod distributions;
pub mod error;
pub mod ingest;
pub mod linalg;
pub mod regression;
pub mod rng;
mod scalar;
pub mod scatter;
pub mod stats;
pub mod synth;

pub use concordance::{
    concordance_direct, concordance_in_basis, concordance_subset, concordance_trace, ConcordanceOptions, ConcordanceResult, Method, Mode,
    Normalization,
};
pub use error::{Error, Result};
pub use linalg::{frobenius_sq, qr_solve, spd_solve, sym_eigen};
pub use scalar::Scalar;
pub use scatter::ScatterSummary;

pub type Matrix = linalg::DenseMatrix<f64>;
pub type Scatter = ScatterSummary<f64>;
pub type Eigen = linalg::EigenDecomposition<f64>;
pub type Concordance = ConcordanceResult<f64>;

pub type Matrix32 = linalg::DenseMatrix<f32>;
pub type Scatter32 = ScatterSummary<f32>;
