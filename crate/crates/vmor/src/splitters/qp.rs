//! The block QP `min sum_i q_i(x_i) s.t. A x = b` in the form each splitter expects.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{AffineOperator, AfbasParams, AfbasPd, AlphaForm, CondatVu, CondatVuProblem, Fbhf, FbhfProblem, Operator, Ppg, PpgProblem, Splitter, SplitterError};
use crate::linops::{spectral_upper_bound, BlockPoint, Layout, LinearMap};
use crate::prox::{AffineSet, PointIndicator, ProxFn, QpInstance, Quadratic, SmoothFn, Zero};

/// A configured splitter and the zero of its operator.
pub type QpSplitter = (Box<dyn Splitter>, BlockPoint);

fn primal_dual_star(inst: &QpInstance) -> BlockPoint {
    let layout = Arc::new(Layout::new(vec![inst.primal_dim(), inst.dual_dim()]));
    BlockPoint::new(layout, [inst.x_star.clone(), inst.y_star.clone()].concat()).expect("layout")
}

fn a_norm(inst: &QpInstance) -> f64 {
    spectral_upper_bound(&inst.stacked_a(), 100, 0)
}

fn lipschitz(inst: &QpInstance) -> f64 {
    inst.smooth().lipschitz()
}

/// Optional overrides of the step parameters each QP mapping picks by default.
/// `theta` is the over-relaxation for FBHF, PPG and Condat-Vu (largest
/// admissible value when absent) and the method parameter `theta` for AFBAS-PD.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QpSplitterParams {
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub r: Option<f64>,
    pub s: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
}

pub const QP_SPLITTERS: [&str; 4] = ["fbhf", "ppg", "condat-vu", "afbas-pd"];

/// Builds the named splitter on `inst`.
pub fn qp_splitter(name: &str, inst: &QpInstance, sigma: f64, params: &QpSplitterParams) -> Result<QpSplitter, SplitterError> {
    match name {
        "fbhf" => fbhf_qp_with(inst, sigma, params),
        "ppg" => ppg_qp_with(inst, sigma, params),
        "condat-vu" => condat_vu_qp_with(inst, sigma, params),
        "afbas-pd" => afbas_qp_with(inst, sigma, params),
        other => Err(SplitterError::Condition(format!("unknown splitter {other}"))),
    }
}

/// On the KKT operator `(x, y) -> (Qx + c + A'y, b - Ax)`: `A = 0`,
/// `B1 = (Qx + c, 0)` and `B2` the affine skew part. `gamma` puts the
/// step bound at `sigma / 2`; `theta` is the largest admissible value.
pub fn fbhf_qp(inst: &QpInstance, sigma: f64) -> Result<QpSplitter, SplitterError> {
    fbhf_qp_with(inst, sigma, &QpSplitterParams::default())
}

pub fn fbhf_qp_with(inst: &QpInstance, sigma: f64, params: &QpSplitterParams) -> Result<QpSplitter, SplitterError> {
    let (n, m) = (inst.primal_dim(), inst.dual_dim());
    let mut q = DMatrix::zeros(n + m, n + m);
    q.view_mut((0, 0), (n, n)).copy_from(&inst.block_q());
    let mut shift = vec![0.0; n + m];
    shift[..n].copy_from_slice(inst.stacked_c().as_slice());
    let b1: Arc<dyn Operator> = Arc::new(AffineOperator { map: Arc::new(q), shift });
    let a = inst.stacked_a();
    let mut k = DMatrix::zeros(n + m, n + m);
    k.view_mut((0, n), (n, m)).copy_from(&a.transpose());
    k.view_mut((n, 0), (m, n)).copy_from(&(-&a));
    let mut shift = vec![0.0; n + m];
    shift[n..].copy_from_slice(inst.b.as_slice());
    let l = a_norm(inst);
    let inv_beta = lipschitz(inst);
    let b2: Arc<dyn Operator> = Arc::new(AffineOperator { map: Arc::new(k), shift });
    let problem = FbhfProblem { a: Arc::new(Zero), b1: Some((b1, 1.0 / inv_beta)), b2, lipschitz: l };
    // gamma^2 L^2 + gamma / (2 beta) = sigma / 2
    let gamma = params.gamma.unwrap_or(if l > 0.0 {
        (-0.5 * inv_beta + (0.25 * inv_beta * inv_beta + 2.0 * sigma * l * l).sqrt()) / (2.0 * l * l)
    } else {
        sigma / inv_beta
    });
    let star = primal_dual_star(inst);
    let mut s = Fbhf::new(problem, star.layout().clone(), gamma, params.theta.unwrap_or(0.0).min(0.0), sigma)?;
    s.theta = s.theta_max();
    if let Some(t) = params.theta {
        s = Fbhf::new(s.problem, star.layout().clone(), gamma, t, sigma)?;
    }
    Ok((Box::new(s), star))
}

/// `p q_i` acting on block `i` of the stacked variable.
struct BlockTerm {
    q: Quadratic,
    offset: usize,
    total: usize,
    scale: f64,
}

impl SmoothFn for BlockTerm {
    fn dim(&self) -> usize {
        self.total
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.scale * self.q.value(&x[self.offset..self.offset + self.q.dim()])
    }
    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let r = self.offset..self.offset + self.q.dim();
        self.q.grad_into(&x[r.clone()], &mut out[r.clone()]);
        out[r].iter_mut().for_each(|o| *o *= self.scale);
    }
    fn lipschitz(&self) -> f64 {
        self.scale * self.q.lipschitz()
    }
}

/// `p` summands `f_i(x) = p q_i(x_i)`, `g_i = 0`, `r` the indicator of `A x = b`;
/// `alpha = sigma / L` and `theta = sigma / 2`, so `theta + L alpha / 2 = sigma`.
pub fn ppg_qp(inst: &QpInstance, sigma: f64) -> Result<QpSplitter, SplitterError> {
    ppg_qp_with(inst, sigma, &QpSplitterParams::default())
}

pub fn ppg_qp_with(inst: &QpInstance, sigma: f64, params: &QpSplitterParams) -> Result<QpSplitter, SplitterError> {
    let n = inst.primal_dim();
    let p = inst.q.len();
    let smooth = inst.smooth();
    let mut f: Vec<Arc<dyn SmoothFn>> = Vec::with_capacity(p);
    let mut off = 0;
    for q in smooth.parts {
        let d = q.dim();
        f.push(Arc::new(BlockTerm { q, offset: off, total: n, scale: p as f64 }));
        off += d;
    }
    let l = f.iter().map(|f| f.lipschitz()).fold(0.0, f64::max);
    let r: Arc<dyn ProxFn> = Arc::new(AffineSet::new(inst.stacked_a(), inst.b.clone())?);
    let problem = PpgProblem { r, g: vec![Arc::new(Zero); p], f, lipschitz: l, dim: n };
    let alpha = params.alpha.unwrap_or(sigma / l);
    let theta = params.theta.unwrap_or(sigma - 0.5 * l * alpha);
    let s = Ppg::new(problem, alpha, theta, sigma)?;
    let star = s.fixed_point_smooth(&inst.x_star);
    Ok((Box::new(s), star))
}

fn primal_dual_problem(inst: &QpInstance) -> CondatVuProblem {
    CondatVuProblem {
        f: Arc::new(inst.smooth()),
        g: Arc::new(Zero),
        h: Arc::new(PointIndicator { target: inst.b.as_slice().to_vec() }),
        b: Arc::new(inst.stacked_a()) as Arc<dyn LinearMap>,
    }
}

/// `f = sum_i q_i`, `g = 0`, `h` the indicator of `{b}`, `B = A`;
/// `s = ||A||`, `r = ||A||^2 / s + L / sigma`, `theta = sigma / 2`.
pub fn condat_vu_qp(inst: &QpInstance, sigma: f64) -> Result<QpSplitter, SplitterError> {
    condat_vu_qp_with(inst, sigma, &QpSplitterParams::default())
}

pub fn condat_vu_qp_with(inst: &QpInstance, sigma: f64, params: &QpSplitterParams) -> Result<QpSplitter, SplitterError> {
    let bn = a_norm(inst);
    let s = params.s.unwrap_or(if bn > 0.0 { bn } else { 1.0 });
    let r = params.r.unwrap_or(bn * bn / s + lipschitz(inst) / sigma);
    let cv = match params.theta {
        Some(t) => CondatVu::with_norm(primal_dual_problem(inst), r, s, t, sigma, bn)?,
        None => {
            let mut cv = CondatVu::with_norm(primal_dual_problem(inst), r, s, -0.99, sigma, bn)?;
            cv.theta = cv.theta_max();
            cv
        }
    };
    Ok((Box::new(cv), primal_dual_star(inst)))
}

/// `theta = 1`, `mu = 1/2`, `lambda = 1`, `gamma2 = 1/||A||`,
/// `1/gamma1 = L + ||A|| / 4`. `sigma` is raised to the method's floor when needed.
pub fn afbas_qp(inst: &QpInstance, sigma: f64) -> Result<QpSplitter, SplitterError> {
    afbas_qp_with(inst, sigma, &QpSplitterParams::default())
}

pub fn afbas_qp_with(inst: &QpInstance, sigma: f64, params: &QpSplitterParams) -> Result<QpSplitter, SplitterError> {
    let bn = a_norm(inst);
    let l = lipschitz(inst);
    let gamma2 = params.gamma2.unwrap_or(if bn > 0.0 { 1.0 / bn } else { 1.0 });
    let gamma1 = params.gamma1.unwrap_or(1.0 / (l + gamma2 * bn * bn / 4.0));
    let mut p = AfbasParams {
        gamma1,
        gamma2,
        theta: params.theta.unwrap_or(1.0),
        mu: params.mu.unwrap_or(0.5),
        lambda: params.lambda.unwrap_or(1.0),
        sigma: 0.999_999,
        alpha_form: AlphaForm::V,
    };
    let probe = AfbasPd::with_norm(primal_dual_problem(inst), p, bn)?;
    p.sigma = sigma.max(probe.sigma_floor);
    let s = AfbasPd::with_norm(primal_dual_problem(inst), p, bn)?;
    Ok((Box::new(s), primal_dual_star(inst)))
}
