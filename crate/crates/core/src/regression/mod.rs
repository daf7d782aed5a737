//! Row-partitioned regression: divide and recombine, pooled normal
//! equations, a QR reference fit and IRLS logistic regression.

mod fit;
mod irls;
mod metrics;
mod partition;

pub use fit::{
    fit_dnr, fit_dnr_weighted, fit_pooled_normal, fit_reference, split_blocks, BlockWeighting, Diagnostics, FitMethod,
    FitResult,
};
pub use irls::{fit_irls_logistic, logistic_deviance, IrlsOptions, DIVERGENCE_CAP};
pub use metrics::{coefficient_log_mse, communication_cost, CommunicationCost, LogMse};
pub use partition::{make_partition, PartitionKind, PartitionPlan};
