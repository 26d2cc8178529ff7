//! Block vectors, linear maps, metrics and spectral estimates.

mod block;
mod map;
mod metric;
pub mod mtx;
mod spectral;

pub use block::{dot, norm, BlockPoint, Layout};
pub use map::{FnMap, IdentityMap, LinearMap, ScaledMap};
pub use metric::{
    metric_to_dense, weighted_norm_sq, BlockDiagonalMetric, DenseMetric, Metric, ScalarMetric,
};
pub use spectral::{
    adjoint_check, gaussian_vec, spectral_upper_bound, spectral_upper_bound_with, AdjointReport,
    ADJOINT_FLAG, DEFAULT_INFLATION, DEFAULT_POWER_ITERS,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinopError {
    #[error("layout mismatch: {left} vs {right}")]
    Layout { left: String, right: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("bad shape: {0}")]
    Shape(String),
    #[error("not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("MatrixMarket: {0}")]
    Mtx(String),
}
