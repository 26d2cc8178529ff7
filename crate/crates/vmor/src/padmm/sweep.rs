use serde::{Deserialize, Serialize};

use crate::linops::{spectral_upper_bound, BlockPoint, DEFAULT_POWER_ITERS};

use super::{MultiBlockProblem, PadmmError};

/// How the proximal terms `P_i` are chosen. Both variants make `P_i` a
/// scalar shift so that every subproblem is one prox of `g_i` with step `1/eta_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProximalPolicy {
    /// `eta_i = L_i + margin * beta ||K_i||^2 + 1e-8`
    ScalarMajorant { margin: f64 },
    /// User supplied `eta_i`, checked against the positivity margins.
    Custom { eta: Vec<f64> },
}

impl Default for ProximalPolicy {
    fn default() -> Self {
        ProximalPolicy::ScalarMajorant { margin: 1.05 }
    }
}

/// Squared operator norm bounds `||K_i||^2`, one per block.
pub fn constraint_norms_sq(problem: &MultiBlockProblem, seed: u64) -> Vec<f64> {
    problem
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| spectral_upper_bound(b.k.as_ref(), DEFAULT_POWER_ITERS, seed.wrapping_add(i as u64)).powi(2))
        .collect()
}

/// Resolves the policy into `eta_i`. The sweep operator needs
/// `eta_1 > beta ||K_1||^2 + L_1/4` and `eta_i > beta ||K_i||^2 / 2 + L_i/4`
/// for `i >= 2`, which keeps `U + U* - D/2` positive definite.
pub fn resolve_eta(problem: &MultiBlockProblem, policy: &ProximalPolicy, beta: f64, knorm_sq: &[f64]) -> Result<Vec<f64>, PadmmError> {
    let eta: Vec<f64> = match policy {
        ProximalPolicy::ScalarMajorant { margin } => {
            if !(*margin > 1.0) {
                return Err(PadmmError::Config(format!("proximal margin {margin} must exceed 1")));
            }
            problem
                .blocks
                .iter()
                .zip(knorm_sq)
                .map(|(b, k2)| b.lipschitz + margin * beta * k2 + 1e-8)
                .collect()
        }
        ProximalPolicy::Custom { eta } => eta.clone(),
    };
    if eta.len() != problem.num_blocks() {
        return Err(PadmmError::Config(format!("{} proximal scalars for {} blocks", eta.len(), problem.num_blocks())));
    }
    for (i, ((e, b), k2)) in eta.iter().zip(&problem.blocks).zip(knorm_sq).enumerate() {
        let need = if i == 0 { beta * k2 + b.lipschitz / 4.0 } else { beta * k2 / 2.0 + b.lipschitz / 4.0 };
        if !(*e > need) {
            return Err(PadmmError::Config(format!("eta for block {} is {e}, needs to exceed {need}", b.name)));
        }
    }
    Ok(eta)
}

/// Output of one Gauss-Seidel pass.
#[derive(Debug, Clone)]
pub struct Sweep {
    /// `w = (x_tilde, y_tilde)`
    pub w: BlockPoint,
    /// `grad f(x^k)` on the primal part.
    pub grad_x: Vec<f64>,
}

/// One pass of the linearized Gauss-Seidel sweep:
/// `x~_i = prox_{g_i / eta_i}(x_i - (grad_i f(x) + K_i*(y + beta r_i)) / eta_i)` with
/// `r_i = sum_{j<i} K_j x~_j + sum_{j>=i} K_j x_j - b`, then
/// `y~ = y + beta (K_1 x~_1 + sum_{j>=2} K_j x_j - b)`.
pub fn block_sweep(problem: &MultiBlockProblem, z: &BlockPoint, beta: f64, eta: &[f64]) -> Result<Sweep, PadmmError> {
    let p = problem.num_blocks();
    let x = problem.primal(z);
    let y = problem.dual(z);
    let grad_x = problem.f.grad(x);
    let mut r = problem.constraint_image(x);
    r.iter_mut().zip(&problem.b).for_each(|(a, b)| *a -= b);
    let mut w = z.clone();
    let mut y_tilde = Vec::new();
    let mut q = vec![0.0; r.len()];
    for (i, blk) in problem.blocks.iter().enumerate() {
        let range = z.layout().range(i);
        q.iter_mut().zip(y.iter().zip(&r)).for_each(|(o, (a, b))| *o = a + beta * b);
        let kq = blk.k.adj(&q);
        let xi = &x[range.clone()];
        let pt: Vec<f64> = xi
            .iter()
            .zip(&grad_x[range.clone()])
            .zip(&kq)
            .map(|((a, g), k)| a - (g + k) / eta[i])
            .collect();
        blk.g.prox_into(1.0 / eta[i], &pt, w.block_mut(i))?;
        let dx: Vec<f64> = w.block(i).iter().zip(xi).map(|(a, b)| a - b).collect();
        let kd = blk.k.forward(&dx);
        r.iter_mut().zip(&kd).for_each(|(a, b)| *a += b);
        if i == 0 {
            y_tilde = y.iter().zip(&r).map(|(a, b)| a + beta * b).collect();
        }
    }
    w.block_mut(p).copy_from_slice(&y_tilde);
    Ok(Sweep { w, grad_x })
}

/// `U d` for the block lower-triangular operator tied to [`block_sweep`]:
/// block 1 is `eta_1 I - beta K_1* K_1`, block `i >= 2` is
/// `eta_i d_i + beta K_i* sum_{2<=j<i} K_j d_j`, and the dual row is
/// `sum_{j>=2} K_j d_j + d_y / beta`.
pub fn apply_u(problem: &MultiBlockProblem, beta: f64, eta: &[f64], d: &BlockPoint) -> BlockPoint {
    let p = problem.num_blocks();
    let mut out = d.zeros_like();
    let m = problem.dual_dim();
    let mut acc = vec![0.0; m];
    for (i, blk) in problem.blocks.iter().enumerate() {
        let di = d.block(i);
        let o = out.block_mut(i);
        if i == 0 {
            let kd = blk.k.forward(di);
            let kk = blk.k.adj(&kd);
            o.iter_mut().zip(di.iter().zip(&kk)).for_each(|(o, (a, b))| *o = eta[0] * a - beta * b);
        } else {
            let ka = blk.k.adj(&acc);
            o.iter_mut().zip(di.iter().zip(&ka)).for_each(|(o, (a, b))| *o = eta[i] * a + beta * b);
            let kd = blk.k.forward(di);
            acc.iter_mut().zip(&kd).for_each(|(a, b)| *a += b);
        }
    }
    let dy = d.block(p);
    out.block_mut(p).iter_mut().zip(acc.iter().zip(dy)).for_each(|(o, (a, b))| *o = a + b / beta);
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::{DMatrix, DVector};

    use super::*;
    use crate::linops::LinearMap;
    use crate::padmm::PrimalBlock;
    use crate::prox::{Quadratic, Zero, ZeroSmooth};

    fn single(q: DMatrix<f64>, c: DVector<f64>, b: Vec<f64>) -> MultiBlockProblem {
        let n = q.nrows();
        let f = Quadratic::new(q, c);
        let l = crate::prox::SmoothFn::lipschitz(&f);
        let blk = PrimalBlock { name: "x".into(), dim: n, shape: None, g: Arc::new(Zero), k: Arc::new(DMatrix::<f64>::identity(n, n)), lipschitz: l };
        MultiBlockProblem::new(vec![blk], Arc::new(f), b).unwrap()
    }

    #[test]
    fn unconstrained_block_matches_dense_solve() {
        // the subproblem with P = eta I - L I - beta A'A is the linear system
        // (L I + beta A'A + P) u = (L I + P) x - grad f(x) - A' y + beta A' b
        let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.2, 0.0, 0.2, 1.5]);
        let c = DVector::from_vec(vec![0.3, -1.0, 0.7]);
        let pb = single(q.clone(), c.clone(), vec![0.0; 3]);
        let beta = 0.8;
        let eta = resolve_eta(&pb, &ProximalPolicy::default(), beta, &[1.0]).unwrap();
        let z = BlockPoint::new(pb.layout(), vec![1.0, -2.0, 0.5, 0.1, 0.2, -0.3]).unwrap();
        let s = block_sweep(&pb, &z, beta, &eta).unwrap();

        let l = pb.blocks[0].lipschitz;
        let id = DMatrix::<f64>::identity(3, 3);
        let pmat = &id * eta[0] - &id * l - &id * beta;
        let lhs = &id * l + &id * beta + &pmat;
        let x = DVector::from_column_slice(z.block(0));
        let y = DVector::from_column_slice(z.block(1));
        let rhs = (&id * l + &pmat) * &x - (&q * &x + &c) - &y;
        let u = lhs.lu().solve(&rhs).unwrap();
        for (a, b) in s.w.block(0).iter().zip(u.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
        let yt: Vec<f64> = y.iter().zip(u.iter()).map(|(y, u)| y + beta * u).collect();
        for (a, b) in s.w.block(1).iter().zip(&yt) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn free_blocks_give_linearized_updates() {
        // f = 0, g = 0, two 1-dim blocks with K = 1, b = 1, hand evaluation
        let blocks = (0..2)
            .map(|i| PrimalBlock {
                name: format!("x{i}"),
                dim: 1,
                shape: None,
                g: Arc::new(Zero),
                k: Arc::new(DMatrix::from_element(1, 1, 1.0)) as Arc<dyn LinearMap>,
                lipschitz: 0.0,
            })
            .collect();
        let pb = MultiBlockProblem::new(blocks, Arc::new(ZeroSmooth(2)), vec![1.0]).unwrap();
        let eta = [2.0, 2.0];
        let z = BlockPoint::new(pb.layout(), vec![0.0, 0.0, 0.0]).unwrap();
        let s = block_sweep(&pb, &z, 1.0, &eta).unwrap();
        // x1 = 0 - (0 + 1 * (0 + (0 - 1))) / 2 = 0.5
        // x2 = 0 - (0 + (0 + (0.5 - 1))) / 2 = 0.25
        // y = 0 + (0.5 + 0 - 1) = -0.5
        assert_eq!(s.w.as_slice(), &[0.5, 0.25, -0.5]);
    }

    #[test]
    fn optimal_point_is_fixed() {
        let q = DMatrix::<f64>::identity(2, 2);
        let c = DVector::zeros(2);
        let pb = single(q, c, vec![1.0, 0.0]);
        // x* = b, y* = -x*
        let z = BlockPoint::new(pb.layout(), vec![1.0, 0.0, -1.0, 0.0]).unwrap();
        let eta = resolve_eta(&pb, &ProximalPolicy::default(), 1.0, &[1.0]).unwrap();
        let s = block_sweep(&pb, &z, 1.0, &eta).unwrap();
        assert!(s.w.sub(&z).norm() < 1e-15);
    }

    #[test]
    fn single_block_operator_is_block_diagonal() {
        let pb = single(DMatrix::identity(2, 2), DVector::zeros(2), vec![0.0; 2]);
        let d = BlockPoint::new(pb.layout(), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let u = apply_u(&pb, 2.0, &[5.0], &d);
        // eta - beta on the primal block (K = I), 1/beta on the dual block
        assert_eq!(u.as_slice(), &[3.0, 6.0, 1.5, 2.0]);
    }

    #[test]
    fn custom_eta_margins_are_enforced() {
        let pb = single(DMatrix::identity(2, 2), DVector::zeros(2), vec![0.0; 2]);
        assert!(resolve_eta(&pb, &ProximalPolicy::Custom { eta: vec![1.2] }, 1.0, &[1.0]).is_err());
        assert!(resolve_eta(&pb, &ProximalPolicy::Custom { eta: vec![1.3] }, 1.0, &[1.0]).is_ok());
        assert!(resolve_eta(&pb, &ProximalPolicy::ScalarMajorant { margin: 1.0 }, 1.0, &[1.0]).is_err());
    }
}
