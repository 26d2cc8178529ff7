use crate::hpe::Weighting;
use crate::linops::BlockPoint;

use super::{MultiBlockProblem, PadmmError, PadmmIterate};

/// Weighted averages of the iterates `w = (x~, y~)` and certificates `v`, with
/// the enlargement split per block.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicKkt {
    pub w_bar: BlockPoint,
    pub v_bar: BlockPoint,
    /// One entry per primal block followed by the dual block.
    pub eps_blocks: Vec<f64>,
    pub eps_total: f64,
}

/// `S(w) = (K_1* y, ..., K_p* y, b - sum K_i x_i)`, the affine part of the KKT operator.
fn affine_part(problem: &MultiBlockProblem, w: &BlockPoint) -> BlockPoint {
    let p = problem.num_blocks();
    let y = problem.dual(w);
    let mut out = w.zeros_like();
    for (i, blk) in problem.blocks.iter().enumerate() {
        blk.k.adj_into(y, out.block_mut(i));
    }
    out.block_mut(p).copy_from_slice(&problem.feasibility_residual(problem.primal(w)));
    out
}

/// Ergodic certificates with weights `(1 + theta_i) alpha_i`. Block `j` gets
/// `sum tau alpha (eps_j + <w_j - w_bar_j, u_j - u_bar_j>) / sum tau alpha` with
/// `u = v - S(w)`. The skew part of `S` drops out of the total, so the blocks sum
/// to the kernel's aggregate enlargement.
pub fn ergodic_kkt_certificates(problem: &MultiBlockProblem, history: &[PadmmIterate], weighting: Weighting) -> Result<ErgodicKkt, PadmmError> {
    let first = history.first().ok_or_else(|| PadmmError::Config("empty history".into()))?;
    let p = problem.num_blocks();
    let weights: Vec<f64> = history.iter().enumerate().map(|(i, it)| (1.0 + it.theta) * weighting.alpha(i + 1)).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(PadmmError::Config("aggregate weights sum to zero".into()));
    }
    let mut w_bar = first.w.zeros_like();
    let mut v_bar = first.w.zeros_like();
    let mut u_bar = first.w.zeros_like();
    let us: Vec<BlockPoint> = history.iter().map(|it| it.v.sub(&affine_part(problem, &it.w))).collect();
    for ((it, u), wt) in history.iter().zip(&us).zip(&weights) {
        w_bar.axpy(wt / total, &it.w);
        v_bar.axpy(wt / total, &it.v);
        u_bar.axpy(wt / total, u);
    }
    let mut eps_blocks = vec![0.0; p + 1];
    for ((it, u), wt) in history.iter().zip(&us).zip(&weights) {
        for (j, e) in eps_blocks.iter_mut().enumerate() {
            let own = if j < p { it.eps_blocks[j] } else { 0.0 };
            let cross: f64 = it
                .w
                .block(j)
                .iter()
                .zip(w_bar.block(j))
                .zip(u.block(j).iter().zip(u_bar.block(j)))
                .map(|((a, b), (c, d))| (a - b) * (c - d))
                .sum();
            *e += wt * (own + cross);
        }
    }
    eps_blocks.iter_mut().for_each(|e| *e /= total);
    let eps_total = eps_blocks.iter().sum();
    Ok(ErgodicKkt { w_bar, v_bar, eps_blocks, eps_total })
}
