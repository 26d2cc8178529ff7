use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{condition, CondatVuProblem, SplitStep, Splitter, SplitterError};
use crate::hpe::HpeCertificate;
use crate::linops::{dot, metric_to_dense, spectral_upper_bound, BlockPoint, Layout, LinopError, Metric};
use crate::prox::{Conjugate, ProxFn};

/// Same data as Condat-Vu: `min f(x) + g(x) + h(B x)`.
pub type AfbasPdProblem = CondatVuProblem;

/// How the relaxation `alpha_k` is normalized. Both give `||R d||^2_{M^{-1}}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaForm {
    /// Closed-form quadratic `V(d) = <S d, R d>`.
    #[default]
    V,
    /// `<R d, M^{-1} R d>` through the metric's solve.
    MetricInverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfbasParams {
    pub gamma1: f64,
    pub gamma2: f64,
    /// Mixing weight of `x` and `x_bar` in the dual step.
    pub theta: f64,
    pub mu: f64,
    pub lambda: f64,
    pub sigma: f64,
    #[serde(default)]
    pub alpha_form: AlphaForm,
}

/// `M = R S^{-1}` with
/// `R = [I/g1, -B'; (1 - theta) B, I/g2]` and `S = [I, -a B'; b B, I]`,
/// `a = mu g1 (2 - theta)`, `b = g2 (1 - mu) (2 - theta)`.
/// Applied as `R (S^{-1} x)` and inverted as `S (R^{-1} x)`.
#[derive(Clone)]
pub struct AfbasMetric {
    bmat: DMatrix<f64>,
    g1: f64,
    g2: f64,
    theta: f64,
    a: f64,
    b: f64,
    s_schur: Cholesky<f64, Dyn>,
    r_schur: Cholesky<f64, Dyn>,
    lower: f64,
    upper: f64,
}

impl fmt::Debug for AfbasMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AfbasMetric")
            .field("shape", &self.bmat.shape())
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish()
    }
}

impl AfbasMetric {
    pub fn new(bmat: DMatrix<f64>, p: &AfbasParams) -> Result<Self, SplitterError> {
        let n = bmat.ncols();
        let a = p.mu * p.gamma1 * (2.0 - p.theta);
        let b = p.gamma2 * (1.0 - p.mu) * (2.0 - p.theta);
        let btb = bmat.transpose() * &bmat;
        let eye = DMatrix::<f64>::identity(n, n);
        let s_schur = Cholesky::new(&eye + &btb * (a * b))
            .ok_or_else(|| SplitterError::Condition("I + a b B'B is not positive definite".into()))?;
        let xi = &eye / (p.gamma1 * p.gamma2) + &btb * (1.0 - p.theta);
        let r_schur = Cholesky::new(xi)
            .ok_or_else(|| SplitterError::Condition("I/(g1 g2) + (1 - theta) B'B is not positive definite".into()))?;
        let mut m = Self { bmat, g1: p.gamma1, g2: p.gamma2, theta: p.theta, a, b, s_schur, r_schur, lower: 0.0, upper: 0.0 };
        let dense = metric_to_dense(&m);
        let scale = dense.amax().max(1.0);
        let asym = (&dense - dense.transpose()).amax();
        if asym > 1e-9 * scale {
            return Err(LinopError::NotPositiveDefinite(format!("R S^-1 asymmetric by {asym:.3e}")).into());
        }
        let eig = SymmetricEigen::new((&dense + dense.transpose()) * 0.5).eigenvalues;
        m.lower = eig.min();
        m.upper = eig.max();
        if !(m.lower > 0.0) {
            return Err(LinopError::NotPositiveDefinite(format!("R S^-1 has eigenvalue {:.3e}", m.lower)).into());
        }
        Ok(m)
    }

    fn split(&self, v: &[f64]) -> (DVector<f64>, DVector<f64>) {
        let n = self.bmat.ncols();
        (DVector::from_column_slice(&v[..n]), DVector::from_column_slice(&v[n..]))
    }

    fn write(x: DVector<f64>, y: DVector<f64>, out: &mut [f64]) {
        let n = x.len();
        out[..n].copy_from_slice(x.as_slice());
        out[n..].copy_from_slice(y.as_slice());
    }

    pub fn apply_r(&self, v: &[f64]) -> Vec<f64> {
        let (x, y) = self.split(v);
        let bt = self.bmat.transpose();
        let mut out = vec![0.0; v.len()];
        Self::write(&x / self.g1 - bt * &y, &self.bmat * &x * (1.0 - self.theta) + &y / self.g2, &mut out);
        out
    }

    pub fn apply_s(&self, v: &[f64]) -> Vec<f64> {
        let (x, y) = self.split(v);
        let mut out = vec![0.0; v.len()];
        Self::write(&x - self.bmat.transpose() * &y * self.a, &self.bmat * &x * self.b + &y, &mut out);
        out
    }

    fn solve_s(&self, v: &[f64]) -> (DVector<f64>, DVector<f64>) {
        let (rx, ry) = self.split(v);
        let ux = self.s_schur.solve(&(rx + self.bmat.transpose() * &ry * self.a));
        let uy = ry - &self.bmat * &ux * self.b;
        (ux, uy)
    }

    fn solve_r(&self, v: &[f64]) -> (DVector<f64>, DVector<f64>) {
        let (rx, ry) = self.split(v);
        let ux = self.r_schur.solve(&(rx / self.g2 + self.bmat.transpose() * &ry));
        let uy = (ry - &self.bmat * &ux * (1.0 - self.theta)) * self.g2;
        (ux, uy)
    }
}

impl Metric for AfbasMetric {
    fn dim(&self) -> usize {
        self.bmat.nrows() + self.bmat.ncols()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let (ux, uy) = self.solve_s(x);
        let mut u = vec![0.0; x.len()];
        Self::write(ux, uy, &mut u);
        out.copy_from_slice(&self.apply_r(&u));
    }
    fn solve_into(&self, x: &[f64], out: &mut [f64]) {
        let (ux, uy) = self.solve_r(x);
        let mut u = vec![0.0; x.len()];
        Self::write(ux, uy, &mut u);
        out.copy_from_slice(&self.apply_s(&u));
    }
    fn lower(&self) -> f64 {
        self.lower
    }
    fn upper(&self) -> f64 {
        self.upper
    }
    fn clone_box(&self) -> Box<dyn Metric> {
        Box::new(self.clone())
    }
}

/// Asymmetric forward-backward-adjoint primal-dual splitting with the adaptive
/// relaxation `alpha_k = lambda ||d||_P^2 / V(d)`.
#[derive(Clone)]
pub struct AfbasPd {
    pub problem: AfbasPdProblem,
    pub params: AfbasParams,
    pub b_norm: f64,
    /// `2 - L / (2 (1/g1 - g2 theta^2 ||B||^2 / 4))`
    pub delta: f64,
    /// Smallest `sigma` for which every step meets the relative error criterion.
    pub sigma_floor: f64,
    metric: AfbasMetric,
    h_conj: Conjugate,
    layout: Arc<Layout>,
}

impl AfbasPd {
    pub fn new(problem: AfbasPdProblem, params: AfbasParams) -> Result<Self, SplitterError> {
        let b_norm = spectral_upper_bound(problem.b.as_ref(), 100, 0);
        Self::with_norm(problem, params, b_norm)
    }

    /// Requires `1/g1 - g2 theta^2 ||B||^2 / 4 > L / 4`, `lambda` in `(0, delta)`,
    /// and `sigma >= 1 - (delta - lambda) lambda_min(P, M)` where
    /// `P = [I/g1, -theta B'/2; -theta B/2, I/g2]`.
    pub fn with_norm(problem: AfbasPdProblem, params: AfbasParams, b_norm: f64) -> Result<Self, SplitterError> {
        let p = params;
        let (m, n) = (problem.b.nrows(), problem.b.ncols());
        condition(problem.f.dim() == n, || format!("f acts on {} entries, B on {n}", problem.f.dim()))?;
        condition(p.gamma1 > 0.0 && p.gamma2 > 0.0, || format!("gamma1 = {} and gamma2 = {} must be positive", p.gamma1, p.gamma2))?;
        condition((0.0..=1.0).contains(&p.mu), || format!("mu = {} must lie in [0, 1]", p.mu))?;
        condition(p.theta >= 0.0, || format!("theta = {} must be nonnegative", p.theta))?;
        condition((0.0..1.0).contains(&p.sigma), || format!("sigma = {} must lie in [0, 1)", p.sigma))?;
        let l = problem.f.lipschitz();
        let kappa = 1.0 / p.gamma1 - p.gamma2 * p.theta * p.theta * b_norm * b_norm / 4.0;
        condition(kappa > l / 4.0, || format!("1/gamma1 - gamma2 theta^2 ||B||^2 / 4 = {kappa:.6e} must exceed L/4 = {:.6e}", l / 4.0))?;
        let delta = 2.0 - l / (2.0 * kappa);
        condition(p.lambda > 0.0 && p.lambda < delta, || format!("lambda = {} must lie in (0, delta = {delta:.6e})", p.lambda))?;
        let bmat = problem.b.to_dense();
        let metric = AfbasMetric::new(bmat.clone(), &p)?;
        let sigma_floor = 1.0 - (delta - p.lambda) * pencil_min(&p_matrix(&bmat, &p), &metric_to_dense(&metric))?;
        condition(p.sigma >= sigma_floor, || format!("sigma = {} below 1 - (delta - lambda) lambda_min(P, M) = {sigma_floor:.6e}", p.sigma))?;
        let h_conj = Conjugate(problem.h.clone());
        Ok(Self { problem, params, b_norm, delta, sigma_floor, metric, h_conj, layout: Arc::new(Layout::new(vec![n, m])) })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn afbas_metric(&self) -> &AfbasMetric {
        &self.metric
    }

    /// `(x_bar, y_bar)` from `(x, y)`.
    pub fn forward(&self, z: &BlockPoint) -> Result<BlockPoint, SplitterError> {
        let p = &self.params;
        let (x, y) = (z.block(0), z.block(1));
        let grad = self.problem.f.grad(x);
        let bty = self.problem.b.adj(y);
        let arg: Vec<f64> = (0..x.len()).map(|i| x[i] - p.gamma1 * (bty[i] + grad[i])).collect();
        let xb = self.problem.g.prox(p.gamma1, &arg)?;
        let mix: Vec<f64> = x.iter().zip(&xb).map(|(a, b)| (1.0 - p.theta) * a + p.theta * b).collect();
        let bm = self.problem.b.forward(&mix);
        let arg: Vec<f64> = y.iter().zip(&bm).map(|(a, b)| a + p.gamma2 * b).collect();
        let yb = self.h_conj.prox(p.gamma2, &arg)?;
        Ok(BlockPoint::new(self.layout.clone(), [xb, yb].concat())?)
    }

    /// `||d||_P^2 = |dx|^2 / g1 + |dy|^2 / g2 - theta <dx, B' dy>`
    pub fn p_norm_sq(&self, d: &BlockPoint) -> f64 {
        let p = &self.params;
        let (dx, dy) = (d.block(0), d.block(1));
        dot(dx, dx) / p.gamma1 + dot(dy, dy) / p.gamma2 - p.theta * dot(dx, &self.problem.b.adj(dy))
    }

    pub fn v_form(&self, d: &BlockPoint) -> f64 {
        let p = &self.params;
        let (dx, dy) = (d.block(0), d.block(1));
        let bx = self.problem.b.forward(dx);
        let bty = self.problem.b.adj(dy);
        dot(dx, dx) / p.gamma1
            + dot(dy, dy) / p.gamma2
            + (1.0 - p.mu) * p.gamma2 * (1.0 - p.theta) * (2.0 - p.theta) * dot(&bx, &bx)
            + p.mu * p.gamma1 * (2.0 - p.theta) * dot(&bty, &bty)
            + 2.0 * ((1.0 - p.mu) * (1.0 - p.theta) - p.mu) * dot(dx, &bty)
    }

    pub fn metric_inverse_form(&self, d: &BlockPoint) -> f64 {
        let rd = self.metric.apply_r(d.as_slice());
        dot(&rd, &self.metric.solve(&rd))
    }

    pub fn alpha(&self, d: &BlockPoint) -> f64 {
        let den = match self.params.alpha_form {
            AlphaForm::V => self.v_form(d),
            AlphaForm::MetricInverse => self.metric_inverse_form(d),
        };
        if den > 0.0 {
            self.params.lambda * self.p_norm_sq(d) / den
        } else {
            self.params.lambda
        }
    }
}

fn p_matrix(b: &DMatrix<f64>, p: &AfbasParams) -> DMatrix<f64> {
    let (m, n) = b.shape();
    let mut mat = DMatrix::zeros(n + m, n + m);
    for i in 0..n {
        mat[(i, i)] = 1.0 / p.gamma1;
    }
    for i in 0..m {
        mat[(n + i, n + i)] = 1.0 / p.gamma2;
    }
    mat.view_mut((n, 0), (m, n)).copy_from(&(b * (-0.5 * p.theta)));
    mat.view_mut((0, n), (n, m)).copy_from(&(b.transpose() * (-0.5 * p.theta)));
    mat
}

/// Smallest `lambda` with `P v = lambda M v`.
fn pencil_min(p: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<f64, SplitterError> {
    let sym = (m + m.transpose()) * 0.5;
    let l = Cholesky::new(sym).ok_or_else(|| LinopError::NotPositiveDefinite("metric".into()))?.l();
    let linv = l.try_inverse().ok_or_else(|| LinopError::NotPositiveDefinite("metric factor".into()))?;
    let c = &linv * p * linv.transpose();
    Ok(SymmetricEigen::new((&c + c.transpose()) * 0.5).eigenvalues.min())
}

impl Splitter for AfbasPd {
    fn step(&self, z: &BlockPoint) -> Result<SplitStep, SplitterError> {
        let p = &self.params;
        let w = self.forward(z)?;
        let d = z.sub(&w);
        let alpha = self.alpha(&d);
        let v = z.with_data(self.metric.apply_r(d.as_slice()));
        let dx = d.block(0);
        let eps = 0.25 * self.problem.f.lipschitz() * dot(dx, dx);
        // native update along (x_bar - x, y_bar - y) = -d
        let (ex, ey) = (w.block(0).to_vec(), w.block(1).to_vec());
        let ex: Vec<f64> = ex.iter().zip(z.block(0)).map(|(a, b)| a - b).collect();
        let ey: Vec<f64> = ey.iter().zip(z.block(1)).map(|(a, b)| a - b).collect();
        let a = p.mu * p.gamma1 * (2.0 - p.theta);
        let b = p.gamma2 * (1.0 - p.mu) * (2.0 - p.theta);
        let bte = self.problem.b.adj(&ey);
        let be = self.problem.b.forward(&ex);
        let mut next = z.clone();
        for (i, o) in next.block_mut(0).iter_mut().enumerate() {
            *o += alpha * (ex[i] - a * bte[i]);
        }
        for (i, o) in next.block_mut(1).iter_mut().enumerate() {
            *o += alpha * (b * be[i] + ey[i]);
        }
        Ok(SplitStep { cert: HpeCertificate { y: w, v, eps, c: 1.0, theta: alpha - 1.0 }, next })
    }

    fn metric(&self) -> Box<dyn Metric> {
        Box::new(self.metric.clone())
    }

    fn sigma(&self) -> f64 {
        self.params.sigma
    }

    fn name(&self) -> &'static str {
        "afbas-pd"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hpe::{check_criterion, StopRule};
    use crate::prox::{gen_qp, L1Norm, PointIndicator, Quadratic, SmoothFn, Zero};
    use crate::rng::seeded;
    use crate::splitters::{afbas_qp, run_splitter, CondatVu};
    use rand::Rng;

    fn params(gamma1: f64, gamma2: f64, theta: f64, mu: f64, lambda: f64, sigma: f64) -> AfbasParams {
        AfbasParams { gamma1, gamma2, theta, mu, lambda, sigma, alpha_form: AlphaForm::V }
    }

    fn random_problem(seed: u64, n: usize, m: usize) -> AfbasPdProblem {
        let mut rng = seeded(seed, 0);
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let f = Quadratic::new(&g * g.transpose() * 0.5 + DMatrix::identity(n, n) * 0.1, DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)));
        CondatVuProblem {
            f: Arc::new(f),
            g: Arc::new(L1Norm { lambda: 0.1 }),
            h: Arc::new(L1Norm { lambda: 0.5 }),
            b: Arc::new(DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))),
        }
    }

    #[test]
    fn metric_is_r_times_s_inverse() {
        let mut rng = seeded(1, 0);
        let b = DMatrix::from_fn(2, 3, |_, _| rng.random_range(-1.0..1.0));
        for (theta, mu) in [(0.0, 0.5), (1.0, 1.0), (0.5, 0.3), (1.5, 0.0)] {
            let p = params(0.4, 0.3, theta, mu, 1.0, 0.9);
            let m = AfbasMetric::new(b.clone(), &p).unwrap();
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let back = m.apply(&m.solve(&x));
            assert!(x.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-12));
            // M S = R
            let ms = m.apply(&m.apply_s(&x));
            let r = m.apply_r(&x);
            assert!(ms.iter().zip(&r).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn alpha_forms_agree() {
        let pb = random_problem(3, 4, 2);
        let bn = spectral_upper_bound(pb.b.as_ref(), 100, 0);
        let s = AfbasPd::new(pb, params(0.3, 0.5 / bn, 0.7, 0.4, 0.8, 0.95)).unwrap();
        let mut rng = seeded(3, 1);
        for _ in 0..20 {
            let d = BlockPoint::new(s.layout().clone(), (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let (a, b) = (s.v_form(&d), s.metric_inverse_form(&d));
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn theta_two_moves_along_condat_vu_direction() {
        let pb = random_problem(5, 4, 3);
        let bn = spectral_upper_bound(pb.b.as_ref(), 100, 0);
        let (g1, g2) = (0.2, 0.5 / (bn * bn * 0.2 + 1.0));
        let af = AfbasPd::new(pb.clone(), params(g1, g2, 2.0, 0.5, 0.5, 0.99)).unwrap();
        let cv = CondatVu::with_norm(pb, 1.0 / g1, 1.0 / g2, 0.0, 0.99, bn).unwrap();
        let mut rng = seeded(5, 1);
        for _ in 0..10 {
            let z = BlockPoint::new(af.layout().clone(), (0..7).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
            let da = af.step(&z).unwrap().next.sub(&z);
            let dc = cv.step(&z).unwrap().next.sub(&z);
            // |<da, dc>| = |da| |dc|
            let cos = da.dot(&dc) / (da.norm() * dc.norm());
            assert!((cos - 1.0).abs() <= 1e-10, "{cos}");
        }
    }

    #[test]
    fn decoupled_case_is_proximal_gradient() {
        let mut rng = seeded(6, 0);
        let n = 3;
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let q = Quadratic::new(&g * g.transpose(), DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)));
        let l = q.lipschitz();
        let pb = CondatVuProblem {
            f: Arc::new(q.clone()),
            g: Arc::new(L1Norm { lambda: 0.2 }),
            h: Arc::new(Zero),
            b: Arc::new(DMatrix::<f64>::zeros(1, n)),
        };
        let s = AfbasPd::new(pb, params(1.0 / l, 1.0, 0.0, 0.5, 1.0, 0.6)).unwrap();
        let mut z = BlockPoint::new(s.layout().clone(), vec![1.0, -2.0, 0.5, 0.0]).unwrap();
        for _ in 0..20 {
            let x = z.block(0).to_vec();
            let grad = q.grad(&x);
            let arg: Vec<f64> = x.iter().zip(&grad).map(|(a, b)| a - b / l).collect();
            let want = L1Norm { lambda: 0.2 }.prox(1.0 / l, &arg).unwrap();
            z = s.step(&z).unwrap().next;
            assert!(z.block(0).iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-14));
            assert_eq!(z.block(1), &[0.0]);
        }
    }

    #[test]
    fn tight_at_sigma_floor() {
        // f = L |x|^2 / 2, g1 = 1/L, B = 0: d = (x, 0), P = M, and the bound is an equality
        let mut rng = seeded(7, 0);
        for _ in 0..10 {
            let l: f64 = rng.random_range(0.5..3.0);
            let lambda = 1.2;
            let pb = CondatVuProblem {
                f: Arc::new(Quadratic::new(DMatrix::identity(2, 2) * l, DVector::zeros(2))),
                g: Arc::new(Zero),
                h: Arc::new(PointIndicator { target: vec![0.0] }),
                b: Arc::new(DMatrix::<f64>::zeros(1, 2)),
            };
            let probe = AfbasPd::new(pb.clone(), params(1.0 / l, 1.0, 0.0, 0.5, lambda, 0.99)).unwrap();
            assert!((probe.sigma_floor - 0.7).abs() < 1e-12);
            let sigma = probe.sigma_floor;
            let s = AfbasPd::new(pb, params(1.0 / l, 1.0, 0.0, 0.5, lambda, sigma)).unwrap();
            let z = BlockPoint::new(s.layout().clone(), vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0]).unwrap();
            let m = s.metric();
            let mut cert = s.step(&z).unwrap().cert;
            assert!((cert.theta - 0.2).abs() < 1e-12);
            let rep = check_criterion(&z, &cert, m.as_ref(), sigma).unwrap();
            assert!(rep.ok && rep.rel_slack.abs() < 1e-10, "{rep:?}");
            cert.theta *= 1.1;
            assert!(!check_criterion(&z, &cert, m.as_ref(), sigma).unwrap().ok);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let pb = random_problem(9, 3, 2);
        let l = pb.f.lipschitz();
        // 1/g1 must exceed L/4
        assert!(AfbasPd::new(pb.clone(), params(8.0 / l, 0.1, 0.0, 0.5, 1.0, 0.99)).is_err());
        // lambda beyond delta
        assert!(AfbasPd::new(pb.clone(), params(0.5 / l, 0.1, 0.0, 0.5, 1.9, 0.99)).is_err());
        // sigma below its floor
        assert!(AfbasPd::new(pb, params(0.5 / l, 0.1, 0.0, 0.5, 1.0, 0.0)).is_err());
    }

    #[test]
    fn six_dimensional_qp_reaches_kkt_point() {
        let inst = gen_qp(2, 2, 2, 2).unwrap();
        let (s, z_star) = afbas_qp(&inst, 0.5).unwrap();
        let z0 = BlockPoint::zeros(z_star.layout().clone());
        let res = run_splitter(s.as_ref(), z0, 50_000, 1e-12, StopRule::Certificate, Some(z_star.clone())).unwrap();
        assert!(res.x.sub(&z_star).max_abs() < 1e-6, "{:e}", res.x.sub(&z_star).max_abs());
        for r in &res.trace.records {
            assert!(r.criterion_slack >= -1e-10);
            assert!(r.native_gap.is_some_and(|g| g <= 1e-12), "{:?}", r.native_gap);
        }
    }
}
