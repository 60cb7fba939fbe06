//! Random streams, distribution samplers, special functions and the small
//! dense linear-algebra kernel the estimators are built on.

mod dist;
mod linalg;
mod rng;
mod special;
mod stats;

pub use dist::{sample_chisq, sample_normal, sample_scaled_inv_chisq, sample_uniform};
pub use linalg::{
    column_space_basis, numeric_rank, project_constrained, solve_linear, RANK_TOLERANCE,
};
pub use rng::RngStream;
pub use special::{f_upper_tail, ln_beta, regularized_incomplete_beta};
pub use stats::{mean, quantile_sorted, sample_variance, QuantileSummary};

use thiserror::Error;

/// Failures raised by the numeric primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("matrix is singular beyond tolerance")]
    SingularMatrix,
    #[error("constraint matrix is rank deficient")]
    RankDeficientConstraints,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}
