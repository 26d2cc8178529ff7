use std::sync::Arc;

use nalgebra::{DMatrix, DMatrixView, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::fns::{L1Norm, NonNeg, NuclearNorm};
use super::graph::{build_graph_laplacian, knn_heat_affinity};
use super::smooth::SmoothFn;
use super::ProxError;
use crate::linops::{FnMap, LinearMap};
use crate::padmm::{MultiBlockProblem, PrimalBlock};
use crate::rng::seeded;

/// How `||Z||_L^2` is read: `tr(Z L Z')` smooths along rows, `tr(Z' L Z)` along columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphOrientation {
    #[default]
    Rows,
    Columns,
}

/// `(mu/2) ||Z||_{L_Z}^2 + (gamma/2) ||G||_{L_G}^2` on the stacked
/// `(Z, G, E, H, F)` primal vector; the last three blocks carry no smooth term.
#[derive(Debug, Clone)]
pub struct LrrSmooth {
    pub lz: DMatrix<f64>,
    pub lg: DMatrix<f64>,
    pub mu: f64,
    pub gamma: f64,
    pub orientation: GraphOrientation,
    n: usize,
    d: usize,
}

impl LrrSmooth {
    fn apply_l(&self, l: &DMatrix<f64>, x: DMatrixView<f64>) -> DMatrix<f64> {
        match self.orientation {
            GraphOrientation::Rows => x * l,
            GraphOrientation::Columns => l * x,
        }
    }
}

impl SmoothFn for LrrSmooth {
    fn dim(&self) -> usize {
        2 * self.n * self.n + 2 * self.d * self.d + self.d * self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (n, d) = (self.n, self.d);
        let z = DMatrixView::from_slice(&x[..n * n], n, n);
        let g = DMatrixView::from_slice(&x[n * n..n * n + d * d], d, d);
        let zl = self.apply_l(&self.lz, z);
        let gl = self.apply_l(&self.lg, g);
        0.5 * self.mu * z.dot(&zl) + 0.5 * self.gamma * g.dot(&gl)
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        let (n, d) = (self.n, self.d);
        out.iter_mut().for_each(|o| *o = 0.0);
        let z = DMatrixView::from_slice(&x[..n * n], n, n);
        let g = DMatrixView::from_slice(&x[n * n..n * n + d * d], d, d);
        let gz = self.apply_l(&self.lz, z) * self.mu;
        let gg = self.apply_l(&self.lg, g) * self.gamma;
        out[..n * n].copy_from_slice(gz.as_slice());
        out[n * n..n * n + d * d].copy_from_slice(gg.as_slice());
    }

    fn lipschitz(&self) -> f64 {
        let (lz, lg) = self.block_lipschitz();
        lz.max(lg)
    }
}

impl LrrSmooth {
    pub fn block_lipschitz(&self) -> (f64, f64) {
        let top = |l: &DMatrix<f64>| SymmetricEigen::new(l.clone()).eigenvalues.max().max(0.0);
        (self.mu * top(&self.lz), self.gamma * top(&self.lg))
    }
}

/// Low-rank representation with graph regularization in slack form:
/// `min ||H||_* + ||F||_* + lambda ||E||_1 + f(Z, G)`
/// `s.t. X = XZ + GX + E, Z = H, G = F, Z >= 0, G >= 0`.
#[derive(Clone)]
pub struct LrrInstance {
    pub x: DMatrix<f64>,
    pub lz: DMatrix<f64>,
    pub lg: DMatrix<f64>,
    pub lambda: f64,
    pub mu: f64,
    pub gamma: f64,
    pub orientation: GraphOrientation,
    pub problem: MultiBlockProblem,
}

fn check_laplacian(name: &str, l: &DMatrix<f64>, size: usize) -> Result<(), ProxError> {
    if l.shape() != (size, size) {
        return Err(ProxError::Shape(format!("{name} must be {size}x{size}, got {:?}", l.shape())));
    }
    let scale = l.amax().max(1.0);
    if (l - l.transpose()).amax() > 1e-10 * scale {
        return Err(ProxError::Graph(format!("{name} is not symmetric")));
    }
    let lo = SymmetricEigen::new(l.clone()).eigenvalues.min();
    if lo < -1e-10 * scale {
        return Err(ProxError::Graph(format!("{name} is not PSD (smallest eigenvalue {lo:.3e})")));
    }
    Ok(())
}

pub fn build_lrr(
    x: DMatrix<f64>,
    lz: DMatrix<f64>,
    lg: DMatrix<f64>,
    lambda: f64,
    mu: f64,
    gamma: f64,
) -> Result<LrrInstance, ProxError> {
    build_lrr_oriented(x, lz, lg, lambda, mu, gamma, GraphOrientation::Rows)
}

pub fn build_lrr_oriented(
    x: DMatrix<f64>,
    lz: DMatrix<f64>,
    lg: DMatrix<f64>,
    lambda: f64,
    mu: f64,
    gamma: f64,
    orientation: GraphOrientation,
) -> Result<LrrInstance, ProxError> {
    let (d, n) = x.shape();
    check_laplacian("L_Z", &lz, n)?;
    check_laplacian("L_G", &lg, d)?;
    for (name, v) in [("lambda", lambda), ("mu", mu), ("gamma", gamma)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(ProxError::Shape(format!("{name} must be nonnegative, got {v}")));
        }
    }
    let smooth = LrrSmooth { lz: lz.clone(), lg: lg.clone(), mu, gamma, orientation, n, d };
    let (lip_z, lip_g) = smooth.block_lipschitz();

    // dual space: (d x n) for X = XZ + GX + E, (n x n) for Z = H, (d x d) for G = F
    let (s1, s2, s3) = (d * n, n * n, d * d);
    let m = s1 + s2 + s3;
    let xa = Arc::new(x.clone());

    let kz = {
        let (xf, xa2) = (xa.clone(), xa.clone());
        FnMap::new(
            m,
            s2,
            move |z, out| {
                let zm = DMatrixView::from_slice(z, n, n);
                out[..s1].copy_from_slice((&*xf * zm).as_slice());
                out[s1..s1 + s2].copy_from_slice(z);
                out[s1 + s2..].iter_mut().for_each(|o| *o = 0.0);
            },
            move |y, out| {
                let m1 = DMatrixView::from_slice(&y[..s1], d, n);
                let r = xa2.transpose() * m1;
                for ((o, a), b) in out.iter_mut().zip(r.iter()).zip(&y[s1..s1 + s2]) {
                    *o = a + b;
                }
            },
        )
    };
    let kg = {
        let (xf, xa2) = (xa.clone(), xa.clone());
        FnMap::new(
            m,
            s3,
            move |g, out| {
                let gm = DMatrixView::from_slice(g, d, d);
                out[..s1].copy_from_slice((gm * &*xf).as_slice());
                out[s1..s1 + s2].iter_mut().for_each(|o| *o = 0.0);
                out[s1 + s2..].copy_from_slice(g);
            },
            move |y, out| {
                let m1 = DMatrixView::from_slice(&y[..s1], d, n);
                let r = m1 * xa2.transpose();
                for ((o, a), b) in out.iter_mut().zip(r.iter()).zip(&y[s1 + s2..]) {
                    *o = a + b;
                }
            },
        )
    };
    let ke = FnMap::new(
        m,
        s1,
        move |e, out| {
            out[..s1].copy_from_slice(e);
            out[s1..].iter_mut().for_each(|o| *o = 0.0);
        },
        move |y, out| out.copy_from_slice(&y[..s1]),
    );
    let kh = FnMap::new(
        m,
        s2,
        move |h, out| {
            out.iter_mut().for_each(|o| *o = 0.0);
            out[s1..s1 + s2].iter_mut().zip(h).for_each(|(o, v)| *o = -v);
        },
        move |y, out| out.iter_mut().zip(&y[s1..s1 + s2]).for_each(|(o, v)| *o = -v),
    );
    let kf = FnMap::new(
        m,
        s3,
        move |f, out| {
            out.iter_mut().for_each(|o| *o = 0.0);
            out[s1 + s2..].iter_mut().zip(f).for_each(|(o, v)| *o = -v);
        },
        move |y, out| out.iter_mut().zip(&y[s1 + s2..]).for_each(|(o, v)| *o = -v),
    );

    let block = |name: &str, rows: usize, cols: usize, g: Arc<dyn crate::prox::ProxFn>, k: FnMap, lip: f64| {
        PrimalBlock {
            name: name.to_string(),
            dim: rows * cols,
            shape: Some((rows, cols)),
            g,
            k: Arc::new(k) as Arc<dyn LinearMap>,
            lipschitz: lip,
        }
    };
    let blocks = vec![
        block("Z", n, n, Arc::new(NonNeg), kz, lip_z),
        block("G", d, d, Arc::new(NonNeg), kg, lip_g),
        block("E", d, n, Arc::new(L1Norm { lambda }), ke, 0.0),
        block("H", n, n, Arc::new(NuclearNorm::new(n, n)), kh, 0.0),
        block("F", d, d, Arc::new(NuclearNorm::new(d, d)), kf, 0.0),
    ];
    let mut b = vec![0.0; m];
    b[..s1].copy_from_slice(x.as_slice());
    let problem = MultiBlockProblem::new(blocks, Arc::new(smooth), b)
        .map_err(|e| ProxError::Shape(e.to_string()))?;
    Ok(LrrInstance { x, lz, lg, lambda, mu, gamma, orientation, problem })
}

impl LrrInstance {
    /// `||X - XZ - GX - E||_F` on a primal vector.
    pub fn data_residual(&self, primal: &[f64]) -> f64 {
        let (d, n) = self.x.shape();
        let z = DMatrixView::from_slice(&primal[..n * n], n, n);
        let g = DMatrixView::from_slice(&primal[n * n..n * n + d * d], d, d);
        let e = DMatrixView::from_slice(&primal[n * n + d * d..n * n + d * d + d * n], d, n);
        (&self.x - &self.x * z - g * &self.x - e).norm()
    }
}

/// Laplacians from kNN heat-kernel affinities over samples (columns of `x`)
/// and over features (rows of `x`).
pub fn data_laplacians(x: &DMatrix<f64>, k: usize) -> Result<(DMatrix<f64>, DMatrix<f64>), ProxError> {
    let lz = build_graph_laplacian(&knn_heat_affinity(x, k))?;
    let lg = build_graph_laplacian(&knn_heat_affinity(&x.transpose(), k))?;
    Ok((lz, lg))
}

/// `X = randn(d, n)` from `seed`, Laplacians from 5-NN heat kernels.
pub fn random_lrr(seed: u64, d: usize, n: usize, lambda: f64, mu: f64, gamma: f64) -> Result<LrrInstance, ProxError> {
    let mut rng = seeded(seed, 0);
    let x = DMatrix::from_fn(d, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let (lz, lg) = data_laplacians(&x, 5)?;
    build_lrr(x, lz, lg, lambda, mu, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::adjoint_check;
    use crate::padmm::pkkt_residual;

    #[test]
    fn null_data_has_zero_residual_at_origin() {
        let x = DMatrix::zeros(3, 4);
        let inst = build_lrr(x, DMatrix::zeros(4, 4), DMatrix::zeros(3, 3), 1.0, 0.0, 0.0).unwrap();
        let z = inst.problem.zero_point();
        let (_, r) = pkkt_residual(&z, &inst.problem).unwrap();
        assert!(r <= 1e-12);
    }

    #[test]
    fn constraint_maps_are_adjoint_pairs() {
        let inst = random_lrr(3, 4, 6, 1e3, 1e4, 1e4).unwrap();
        for blk in &inst.problem.blocks {
            let rep = adjoint_check(blk.k.as_ref(), 20, 11);
            assert!(rep.max_residual <= 1e-10, "{}: {rep:?}", blk.name);
        }
    }

    #[test]
    fn rejects_bad_laplacian() {
        let x = DMatrix::zeros(2, 2);
        let bad = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert!(build_lrr(x.clone(), bad, DMatrix::zeros(2, 2), 1.0, 1.0, 1.0).is_err());
        assert!(build_lrr(x, DMatrix::zeros(3, 3), DMatrix::zeros(2, 2), 1.0, 1.0, 1.0).is_err());
    }
}
