use std::sync::Arc;

use nalgebra::DMatrix;

use super::{condition, SplitStep, Splitter, SplitterError};
use crate::hpe::HpeCertificate;
use crate::linops::{spectral_upper_bound, BlockPoint, DenseMetric, Layout, LinearMap, Metric};
use crate::prox::{Conjugate, ProxFn, SmoothFn};

/// `min f(x) + g(x) + h(B x)`.
#[derive(Clone)]
pub struct CondatVuProblem {
    pub f: Arc<dyn SmoothFn>,
    pub g: Arc<dyn ProxFn>,
    pub h: Arc<dyn ProxFn>,
    pub b: Arc<dyn LinearMap>,
}

/// Over-relaxed Condat-Vu primal-dual splitting with steps `1/r`, `1/s`.
#[derive(Clone)]
pub struct CondatVu {
    pub problem: CondatVuProblem,
    pub r: f64,
    pub s: f64,
    pub theta: f64,
    pub sigma: f64,
    /// Upper bound on `||B||` used in the step condition.
    pub b_norm: f64,
    metric: DenseMetric,
    h_conj: Conjugate,
    layout: Arc<Layout>,
}

impl CondatVu {
    /// Bounds `||B||` by power iteration.
    pub fn new(problem: CondatVuProblem, r: f64, s: f64, theta: f64, sigma: f64) -> Result<Self, SplitterError> {
        let b_norm = spectral_upper_bound(problem.b.as_ref(), 100, 0);
        Self::with_norm(problem, r, s, theta, sigma, b_norm)
    }

    /// Requires `r s > ||B||^2` and `theta + L / (2 (r - ||B||^2 / s)) <= sigma`.
    pub fn with_norm(problem: CondatVuProblem, r: f64, s: f64, theta: f64, sigma: f64, b_norm: f64) -> Result<Self, SplitterError> {
        let (m, n) = (problem.b.nrows(), problem.b.ncols());
        condition(problem.f.dim() == n, || format!("f acts on {} entries, B on {n}", problem.f.dim()))?;
        condition(r > 0.0 && s > 0.0, || format!("r = {r} and s = {s} must be positive"))?;
        condition((0.0..1.0).contains(&sigma), || format!("sigma = {sigma} must lie in [0, 1)"))?;
        condition(theta > -1.0, || format!("theta = {theta} must exceed -1"))?;
        let schur = r - b_norm * b_norm / s;
        condition(schur > 0.0, || format!("r - ||B||^2 / s = {schur:.6e} must be positive"))?;
        let need = theta + problem.f.lipschitz() / (2.0 * schur);
        condition(need <= sigma * (1.0 + 1e-12), || format!("theta + L / (2 (r - ||B||^2 / s)) = {need:.6e} exceeds sigma = {sigma}"))?;
        let bd = problem.b.to_dense();
        let mut mat = DMatrix::zeros(n + m, n + m);
        mat.view_mut((0, 0), (n, n)).fill_with_identity();
        mat.view_mut((0, 0), (n, n)).scale_mut(r);
        mat.view_mut((n, n), (m, m)).fill_with_identity();
        mat.view_mut((n, n), (m, m)).scale_mut(s);
        mat.view_mut((n, 0), (m, n)).copy_from(&(-&bd));
        mat.view_mut((0, n), (n, m)).copy_from(&(-bd.transpose()));
        let metric = DenseMetric::new(mat)?;
        let h_conj = Conjugate(problem.h.clone());
        Ok(Self { problem, r, s, theta, sigma, b_norm, metric, h_conj, layout: Arc::new(Layout::new(vec![n, m])) })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    /// `sigma - L / (2 (r - ||B||^2 / s))`
    pub fn theta_max(&self) -> f64 {
        self.sigma - self.problem.f.lipschitz() / (2.0 * (self.r - self.b_norm * self.b_norm / self.s))
    }

    /// `(x~, y~)` from `(x, y)`.
    pub fn forward(&self, z: &BlockPoint) -> Result<BlockPoint, SplitterError> {
        let (x, y) = (z.block(0), z.block(1));
        let grad = self.problem.f.grad(x);
        let bty = self.problem.b.adj(y);
        let arg: Vec<f64> = (0..x.len()).map(|i| x[i] - (grad[i] + bty[i]) / self.r).collect();
        let xt = self.problem.g.prox(1.0 / self.r, &arg)?;
        let ext: Vec<f64> = xt.iter().zip(x).map(|(a, b)| 2.0 * a - b).collect();
        let bx = self.problem.b.forward(&ext);
        let arg: Vec<f64> = y.iter().zip(&bx).map(|(a, b)| a + b / self.s).collect();
        let yt = self.h_conj.prox(1.0 / self.s, &arg)?;
        Ok(BlockPoint::new(self.layout.clone(), [xt, yt].concat())?)
    }
}

impl Splitter for CondatVu {
    fn step(&self, z: &BlockPoint) -> Result<SplitStep, SplitterError> {
        let w = self.forward(z)?;
        let d = z.sub(&w);
        let v = z.with_data(self.metric.apply(d.as_slice()));
        let dx = d.block(0);
        let eps = 0.25 * self.problem.f.lipschitz() * dx.iter().map(|t| t * t).sum::<f64>();
        let mut next = z.clone();
        next.axpy(-(1.0 + self.theta), &d);
        Ok(SplitStep { cert: HpeCertificate { y: w, v, eps, c: 1.0, theta: self.theta }, next })
    }

    fn metric(&self) -> Box<dyn Metric> {
        Box::new(self.metric.clone())
    }

    fn sigma(&self) -> f64 {
        self.sigma
    }

    fn name(&self) -> &'static str {
        "condat-vu"
    }
}
