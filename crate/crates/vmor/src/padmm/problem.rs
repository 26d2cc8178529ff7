use std::sync::Arc;

use crate::linops::{norm, BlockPoint, Layout, LinearMap};
use crate::prox::{ProxError, ProxFn, SmoothFn};

use super::PadmmError;

/// One primal block `x_i` of `min f(x) + sum g_i(x_i)  s.t.  sum K_i x_i = b`.
#[derive(Clone)]
pub struct PrimalBlock {
    pub name: String,
    pub dim: usize,
    /// `(rows, cols)` when the block stores a column-major matrix.
    pub shape: Option<(usize, usize)>,
    pub g: Arc<dyn ProxFn>,
    /// Constraint map `K_i: R^dim -> R^m`.
    pub k: Arc<dyn LinearMap>,
    /// Blockwise Lipschitz constant of `grad_i f`.
    pub lipschitz: f64,
}

/// Linearly constrained multi-block composite program. `f` acts on the
/// concatenated primal vector and must satisfy the blockwise majorization
/// `f(u) <= f(x) + <grad f(x), u - x> + sum L_i ||u_i - x_i||^2 / 2`.
///
/// Points `z = (x_1, ..., x_p, y)` live on [`MultiBlockProblem::layout`].
#[derive(Clone)]
pub struct MultiBlockProblem {
    pub blocks: Vec<PrimalBlock>,
    pub f: Arc<dyn SmoothFn>,
    pub b: Vec<f64>,
    /// Scalars `s_i` of the majorization `Sigma_i = s_i I` (default `L_i`).
    pub sigma_hat: Vec<f64>,
}

impl MultiBlockProblem {
    pub fn new(blocks: Vec<PrimalBlock>, f: Arc<dyn SmoothFn>, b: Vec<f64>) -> Result<Self, PadmmError> {
        let sigma_hat = blocks.iter().map(|b| b.lipschitz).collect();
        let p = Self { blocks, f, b, sigma_hat };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PadmmError> {
        if self.blocks.is_empty() {
            return Err(PadmmError::Config("no primal blocks".into()));
        }
        let m = self.b.len();
        let mut total = 0;
        for blk in &self.blocks {
            if blk.k.ncols() != blk.dim || blk.k.nrows() != m {
                return Err(PadmmError::Config(format!(
                    "block {}: map is {}x{}, expected {}x{}",
                    blk.name,
                    blk.k.nrows(),
                    blk.k.ncols(),
                    m,
                    blk.dim
                )));
            }
            if let Some((r, c)) = blk.shape {
                if r * c != blk.dim {
                    return Err(PadmmError::Config(format!("block {}: shape {r}x{c} vs dim {}", blk.name, blk.dim)));
                }
            }
            if !(blk.lipschitz >= 0.0 && blk.lipschitz.is_finite()) {
                return Err(PadmmError::Config(format!("block {}: Lipschitz constant {}", blk.name, blk.lipschitz)));
            }
            total += blk.dim;
        }
        if self.f.dim() != total {
            return Err(PadmmError::Config(format!("f acts on {} entries, blocks hold {total}", self.f.dim())));
        }
        if self.sigma_hat.len() != self.blocks.len() || self.sigma_hat.iter().any(|s| !(*s >= 0.0)) {
            return Err(PadmmError::Config("majorization scalars must be nonnegative, one per block".into()));
        }
        Ok(())
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dual_dim(&self) -> usize {
        self.b.len()
    }

    pub fn primal_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    pub fn layout(&self) -> Arc<Layout> {
        let mut sizes: Vec<usize> = self.blocks.iter().map(|b| b.dim).collect();
        let mut shapes: Vec<Option<(usize, usize)>> = self.blocks.iter().map(|b| b.shape).collect();
        sizes.push(self.b.len());
        shapes.push(None);
        Arc::new(Layout::with_shapes(sizes, shapes).expect("shapes validated"))
    }

    pub fn zero_point(&self) -> BlockPoint {
        BlockPoint::zeros(self.layout())
    }

    /// Primal part of `z` as one contiguous slice.
    pub fn primal<'a>(&self, z: &'a BlockPoint) -> &'a [f64] {
        &z.as_slice()[..self.primal_dim()]
    }

    pub fn dual<'a>(&self, z: &'a BlockPoint) -> &'a [f64] {
        &z.as_slice()[self.primal_dim()..]
    }

    /// `sum K_i x_i` over the primal part of `z`.
    pub fn constraint_image(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.b.len()];
        let mut tmp = vec![0.0; self.b.len()];
        let mut off = 0;
        for blk in &self.blocks {
            blk.k.forward_into(&x[off..off + blk.dim], &mut tmp);
            acc.iter_mut().zip(&tmp).for_each(|(a, t)| *a += t);
            off += blk.dim;
        }
        acc
    }

    /// `b - sum K_i x_i`
    pub fn feasibility_residual(&self, x: &[f64]) -> Vec<f64> {
        let img = self.constraint_image(x);
        self.b.iter().zip(&img).map(|(b, a)| b - a).collect()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut v = self.f.value(x);
        let mut off = 0;
        for blk in &self.blocks {
            v += blk.g.value(&x[off..off + blk.dim]);
            off += blk.dim;
        }
        v
    }
}

/// Proximal KKT residual: primal parts `x_i - prox_{g_i}(x_i - grad_i f(x) - K_i* y)`
/// and dual part `b - sum K_i x_i`. Returns the stacked residual and its norm.
pub fn pkkt_residual(z: &BlockPoint, problem: &MultiBlockProblem) -> Result<(BlockPoint, f64), ProxError> {
    let x = problem.primal(z);
    let y = problem.dual(z);
    let grad = problem.f.grad(x);
    let mut r = z.zeros_like();
    for (i, blk) in problem.blocks.iter().enumerate() {
        let range = z.layout().range(i);
        let kty = blk.k.adj(y);
        let xi = &x[range.clone()];
        let pt: Vec<f64> = xi
            .iter()
            .zip(&grad[range.clone()])
            .zip(&kty)
            .map(|((a, g), k)| a - g - k)
            .collect();
        let p = blk.g.prox(1.0, &pt)?;
        for ((o, a), q) in r.block_mut(i).iter_mut().zip(xi).zip(&p) {
            *o = a - q;
        }
    }
    let feas = problem.feasibility_residual(x);
    let p = problem.num_blocks();
    r.block_mut(p).copy_from_slice(&feas);
    let n = norm(r.as_slice());
    Ok((r, n))
}
