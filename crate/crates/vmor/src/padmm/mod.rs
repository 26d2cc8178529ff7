//! Multi-block proximal ADMM with a Gauss-Seidel sweep, an over-relaxed
//! extra-gradient correction and blockwise Barzilai-Borwein metrics, run as an
//! oracle of the HPE kernel.

mod bb;
mod certificates;
mod problem;
mod solver;
mod sweep;
mod theta;

pub use bb::{bb_metric_update, bb_scalar, ScalarBounds};
pub use certificates::{ergodic_kkt_certificates, ErgodicKkt};
pub use problem::{pkkt_residual, MultiBlockProblem, PrimalBlock};
pub use solver::{run_padmm, BetaSchedule, PadmmConfig, PadmmIterate, PadmmOracle, PadmmResult, ThetaPolicy};
pub use sweep::{apply_u, block_sweep, constraint_norms_sq, resolve_eta, ProximalPolicy, Sweep};
pub use theta::{gamma_matrix, theta_bar, theta_range, DirectionForms};

use crate::hpe::HpeError;
use crate::prox::ProxError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PadmmError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Prox(#[from] ProxError),
    #[error(transparent)]
    Hpe(#[from] HpeError),
}
