//! Proximal maps, smooth terms and instance builders.

mod fns;
mod graph;
mod lrr;
mod manifest;
mod qp;
mod smooth;

pub use fns::{
    prox_l1, prox_nuclear, proj_nonneg, proj_spectral_ball, AffineSet, BoxIndicator, Conjugate, HalfSquaredNorm, L1Norm,
    LinfBall, NonNeg, NuclearNorm, PointIndicator, ProxFn, SpectralBall, Zero,
};
pub use graph::{build_graph_laplacian, knn_heat_affinity};
pub use lrr::{build_lrr, build_lrr_oriented, data_laplacians, random_lrr, GraphOrientation, LrrInstance, LrrSmooth};
pub use manifest::{load_manifest, write_lrr_manifest, write_qp_manifest, Manifest, ManifestInstance, QpBlockFiles};
pub use qp::{gen_qp, BlockQuadratic, QpInstance, KKT_TOL};
pub use smooth::{Quadratic, SmoothFn, ZeroSmooth};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProxError {
    #[error("step must be positive and finite, got {0}")]
    Step(f64),
    #[error("bad shape: {0}")]
    Shape(String),
    #[error("SVD did not converge")]
    Svd,
    #[error("graph: {0}")]
    Graph(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("manifest: {0}")]
    Manifest(String),
}
