use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::fns::Zero;
use super::smooth::{Quadratic, SmoothFn};
use super::ProxError;
use crate::linops::{norm, BlockPoint, LinearMap};
use crate::padmm::{MultiBlockProblem, PrimalBlock};
use crate::rng::seeded;

/// `sum_i q_i(x_i)` for per-block quadratics `q_i`.
#[derive(Debug, Clone)]
pub struct BlockQuadratic {
    pub parts: Vec<Quadratic>,
}

impl BlockQuadratic {
    fn ranges(&self) -> impl Iterator<Item = (usize, &Quadratic)> {
        self.parts.iter().scan(0, |off, q| {
            let start = *off;
            *off += q.dim();
            Some((start, q))
        })
    }
}

impl SmoothFn for BlockQuadratic {
    fn dim(&self) -> usize {
        self.parts.iter().map(|q| q.dim()).sum()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.ranges().map(|(o, q)| q.value(&x[o..o + q.dim()])).sum()
    }
    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, q) in self.ranges() {
            let n = q.dim();
            q.grad_into(&x[o..o + n], &mut out[o..o + n]);
        }
    }
    fn lipschitz(&self) -> f64 {
        self.parts.iter().map(|q| q.lipschitz()).fold(0.0, f64::max)
    }
}

/// `min sum_i (x_i' Q_i x_i / 2 + c_i' x_i)  s.t.  sum_i A_i x_i = b`, with the
/// primal-dual solution of `Q x + c + A' y = 0, A x = b` stored alongside.
#[derive(Debug, Clone)]
pub struct QpInstance {
    pub q: Vec<DMatrix<f64>>,
    pub c: Vec<DVector<f64>>,
    pub a: Vec<DMatrix<f64>>,
    pub b: DVector<f64>,
    pub x_star: Vec<f64>,
    pub y_star: Vec<f64>,
}

pub const KKT_TOL: f64 = 1e-10;

impl QpInstance {
    pub fn from_parts(
        q: Vec<DMatrix<f64>>,
        c: Vec<DVector<f64>>,
        a: Vec<DMatrix<f64>>,
        b: DVector<f64>,
    ) -> Result<Self, ProxError> {
        if q.len() != c.len() || q.len() != a.len() || q.is_empty() {
            return Err(ProxError::Shape("need one (Q, c, A) triple per block".into()));
        }
        for (i, ((qi, ci), ai)) in q.iter().zip(&c).zip(&a).enumerate() {
            let n = qi.nrows();
            if !qi.is_square() || ci.len() != n || ai.ncols() != n || ai.nrows() != b.len() {
                return Err(ProxError::Shape(format!("block {i} has inconsistent sizes")));
            }
        }
        let mut inst = Self { q, c, a, b, x_star: vec![], y_star: vec![] };
        let (x, y) = inst.solve_kkt()?;
        inst.x_star = x;
        inst.y_star = y;
        let r = inst.kkt_residual(&inst.x_star, &inst.y_star);
        if !(r <= KKT_TOL) {
            return Err(ProxError::Singular(format!("KKT residual {r:.3e} of reference solution")));
        }
        Ok(inst)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.q.iter().map(|q| q.nrows()).collect()
    }

    pub fn primal_dim(&self) -> usize {
        self.sizes().iter().sum()
    }

    pub fn dual_dim(&self) -> usize {
        self.b.len()
    }

    /// `[A_1 ... A_p]`
    pub fn stacked_a(&self) -> DMatrix<f64> {
        let n = self.primal_dim();
        let mut out = DMatrix::zeros(self.b.len(), n);
        let mut off = 0;
        for a in &self.a {
            out.view_mut((0, off), a.shape()).copy_from(a);
            off += a.ncols();
        }
        out
    }

    pub fn block_q(&self) -> DMatrix<f64> {
        let n = self.primal_dim();
        let mut out = DMatrix::zeros(n, n);
        let mut off = 0;
        for q in &self.q {
            out.view_mut((off, off), q.shape()).copy_from(q);
            off += q.nrows();
        }
        out
    }

    pub fn stacked_c(&self) -> DVector<f64> {
        let v: Vec<f64> = self.c.iter().flat_map(|c| c.iter().copied()).collect();
        DVector::from_vec(v)
    }

    pub fn kkt_matrix(&self) -> DMatrix<f64> {
        let n = self.primal_dim();
        let m = self.dual_dim();
        let a = self.stacked_a();
        let mut k = DMatrix::zeros(n + m, n + m);
        k.view_mut((0, 0), (n, n)).copy_from(&self.block_q());
        k.view_mut((0, n), (n, m)).copy_from(&a.transpose());
        k.view_mut((n, 0), (m, n)).copy_from(&a);
        k
    }

    fn solve_kkt(&self) -> Result<(Vec<f64>, Vec<f64>), ProxError> {
        let n = self.primal_dim();
        let k = self.kkt_matrix();
        let mut rhs = DVector::zeros(k.nrows());
        rhs.rows_mut(0, n).copy_from(&(-self.stacked_c()));
        rhs.rows_mut(n, self.dual_dim()).copy_from(&self.b);
        let lu = k.clone().lu();
        let mut sol = lu.solve(&rhs).ok_or_else(|| ProxError::Singular("KKT matrix".into()))?;
        // two refinement sweeps
        for _ in 0..2 {
            let r = &rhs - &k * &sol;
            if let Some(d) = lu.solve(&r) {
                sol += d;
            }
        }
        Ok((sol.rows(0, n).iter().copied().collect(), sol.rows(n, self.dual_dim()).iter().copied().collect()))
    }

    /// Norm of `(Qx + c + A'y, Ax - b)`.
    pub fn kkt_residual(&self, x: &[f64], y: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        let yv = DVector::from_column_slice(y);
        let a = self.stacked_a();
        let r1 = self.block_q() * &xv + self.stacked_c() + a.transpose() * &yv;
        let r2 = a * xv - &self.b;
        (r1.norm_squared() + r2.norm_squared()).sqrt()
    }

    pub fn smooth(&self) -> BlockQuadratic {
        BlockQuadratic {
            parts: self.q.iter().zip(&self.c).map(|(q, c)| Quadratic::new(q.clone(), c.clone())).collect(),
        }
    }

    /// The instance as a multi-block program with `g_i = 0`.
    pub fn problem(&self) -> MultiBlockProblem {
        let smooth = self.smooth();
        let blocks = smooth
            .parts
            .iter()
            .zip(&self.a)
            .enumerate()
            .map(|(i, (q, a))| PrimalBlock {
                name: format!("x{}", i + 1),
                dim: q.dim(),
                shape: None,
                g: Arc::new(Zero),
                k: Arc::new(a.clone()) as Arc<dyn LinearMap>,
                lipschitz: q.lipschitz(),
            })
            .collect();
        MultiBlockProblem::new(blocks, Arc::new(smooth), self.b.as_slice().to_vec()).expect("consistent QP")
    }

    /// `(x*, y*)` on the layout of [`QpInstance::problem`].
    pub fn z_star(&self) -> BlockPoint {
        let mut blocks = Vec::new();
        let mut off = 0;
        for n in self.sizes() {
            blocks.push(self.x_star[off..off + n].to_vec());
            off += n;
        }
        blocks.push(self.y_star.clone());
        let pb = self.problem();
        BlockPoint::new(pb.layout(), blocks.concat()).expect("layout")
    }
}

/// Seeded strongly convex block QP with a full-row-rank constraint.
pub fn gen_qp(seed: u64, p: usize, n_i: usize, m: usize) -> Result<QpInstance, ProxError> {
    if p == 0 || n_i == 0 {
        return Err(ProxError::Shape("need at least one block of positive size".into()));
    }
    if m > p * n_i {
        return Err(ProxError::Shape(format!("m = {m} exceeds total primal size {}", p * n_i)));
    }
    let total = (p * n_i) as f64;
    for attempt in 0..64u64 {
        let mut rng = seeded(seed, attempt);
        let mut normal = |r: usize, c: usize, s: f64| DMatrix::from_fn(r, c, |_, _| s * rng.sample::<f64, _>(StandardNormal));
        let mut q = Vec::with_capacity(p);
        let mut c = Vec::with_capacity(p);
        let mut a = Vec::with_capacity(p);
        for _ in 0..p {
            let g = normal(n_i, n_i, 1.0 / (n_i as f64).sqrt());
            q.push(&g * g.transpose() + DMatrix::identity(n_i, n_i) * 0.5);
            c.push(DVector::from_column_slice(normal(n_i, 1, 1.0).as_slice()));
            a.push(normal(m, n_i, 1.0 / total.sqrt()));
        }
        let b = DVector::from_column_slice(normal(m, 1, 1.0).as_slice());
        let inst = QpInstance { q, c, a, b, x_star: vec![], y_star: vec![] };
        if m > 0 {
            let smin = inst.stacked_a().singular_values().min();
            if smin < 1e-3 {
                continue;
            }
        }
        match QpInstance::from_parts(inst.q, inst.c, inst.a, inst.b) {
            Ok(i) => return Ok(i),
            Err(_) if attempt < 63 => continue,
            Err(e) => return Err(e),
        }
    }
    Err(ProxError::Singular("could not draw a full-rank constraint".into()))
}

impl QpInstance {
    pub fn primal_norm_gap(&self, x: &[f64]) -> f64 {
        let d: Vec<f64> = x.iter().zip(&self.x_star).map(|(a, b)| a - b).collect();
        norm(&d)
    }
}
