use std::sync::Arc;

use super::{condition, SplitStep, Splitter, SplitterError};
use crate::hpe::HpeCertificate;
use crate::linops::{BlockDiagonalMetric, BlockPoint, Layout, Metric};
use crate::prox::{ProxFn, SmoothFn};

/// `min r(x) + (1/n) sum_i (f_i(x) + g_i(x))` with every `grad f_i` `L`-Lipschitz.
#[derive(Clone)]
pub struct PpgProblem {
    pub r: Arc<dyn ProxFn>,
    pub g: Vec<Arc<dyn ProxFn>>,
    pub f: Vec<Arc<dyn SmoothFn>>,
    pub lipschitz: f64,
    pub dim: usize,
}

impl PpgProblem {
    pub fn n(&self) -> usize {
        self.f.len()
    }
}

/// Over-relaxed proximal-proximal-gradient on `n` copies of the variable.
#[derive(Clone)]
pub struct Ppg {
    pub problem: PpgProblem,
    pub alpha: f64,
    pub theta: f64,
    pub sigma: f64,
    layout: Arc<Layout>,
}

impl Ppg {
    /// Rejects `theta + L alpha / 2 > sigma`.
    pub fn new(problem: PpgProblem, alpha: f64, theta: f64, sigma: f64) -> Result<Self, SplitterError> {
        let n = problem.n();
        condition(n > 0 && problem.g.len() == n, || format!("{} smooth and {} nonsmooth summands", n, problem.g.len()))?;
        condition(problem.f.iter().all(|f| f.dim() == problem.dim), || "summand dimensions differ".into())?;
        condition(alpha > 0.0 && alpha.is_finite(), || format!("alpha = {alpha} must be positive"))?;
        condition((0.0..1.0).contains(&sigma), || format!("sigma = {sigma} must lie in [0, 1)"))?;
        condition(theta > -1.0, || format!("theta = {theta} must exceed -1"))?;
        let need = theta + 0.5 * problem.lipschitz * alpha;
        condition(need <= sigma * (1.0 + 1e-12), || format!("theta + L alpha / 2 = {need:.6e} exceeds sigma = {sigma}"))?;
        let layout = Arc::new(Layout::new(vec![problem.dim; n]));
        Ok(Self { problem, alpha, theta, sigma, layout })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    /// `sigma - L alpha / 2`
    pub fn theta_max(&self) -> f64 {
        self.sigma - 0.5 * self.problem.lipschitz * self.alpha
    }

    /// `prox_{alpha r}` of the average copy, the current estimate of the minimizer.
    pub fn consensus(&self, z: &BlockPoint) -> Result<Vec<f64>, SplitterError> {
        let n = self.problem.n();
        let d = self.problem.dim;
        let mut mean = vec![0.0; d];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(z.block(i)) {
                *m += v / n as f64;
            }
        }
        Ok(self.problem.r.prox(self.alpha, &mean)?)
    }

    /// The fixed point `z_i = x* - alpha grad f_i(x*)`, valid when every `g_i` is zero.
    pub fn fixed_point_smooth(&self, x_star: &[f64]) -> BlockPoint {
        let blocks = self
            .problem
            .f
            .iter()
            .map(|f| x_star.iter().zip(f.grad(x_star)).map(|(x, g)| x - self.alpha * g).collect())
            .collect::<Vec<Vec<f64>>>();
        BlockPoint::new(self.layout.clone(), blocks.concat()).expect("layout")
    }
}

impl Splitter for Ppg {
    fn step(&self, z: &BlockPoint) -> Result<SplitStep, SplitterError> {
        let n = self.problem.n();
        let a = self.alpha;
        let half = self.consensus(z)?;
        let mut y = z.clone();
        let mut v = z.zeros_like();
        let mut next = z.clone();
        let mut spread = 0.0;
        for i in 0..n {
            let grad = self.problem.f[i].grad(&half);
            let arg: Vec<f64> = (0..half.len()).map(|j| 2.0 * half[j] - z.block(i)[j] - a * grad[j]).collect();
            let xi = self.problem.g[i].prox(a, &arg)?;
            for j in 0..half.len() {
                let d = xi[j] - half[j];
                spread += d * d;
                y.block_mut(i)[j] += d;
                v.block_mut(i)[j] = -d;
                next.block_mut(i)[j] += (1.0 + self.theta) * d;
            }
        }
        // the enlargement carries the step alpha
        let eps = a * 0.25 * self.problem.lipschitz * spread;
        Ok(SplitStep { cert: HpeCertificate { y, v, eps, c: 1.0, theta: self.theta }, next })
    }

    fn metric(&self) -> Box<dyn Metric> {
        Box::new(BlockDiagonalMetric::from_metric_scalars(self.layout.sizes().to_vec(), vec![1.0; self.layout.num_blocks()]).expect("unit scalars"))
    }

    fn sigma(&self) -> f64 {
        self.sigma
    }

    fn name(&self) -> &'static str {
        "ppg"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hpe::{check_criterion, StopRule};
    use crate::prox::{prox_l1, L1Norm, PointIndicator, Quadratic, Zero, ZeroSmooth};
    use crate::rng::seeded;
    use crate::splitters::{run_native, run_splitter};
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;

    #[test]
    fn single_summand_indicator_of_origin() {
        let p = PpgProblem {
            r: Arc::new(PointIndicator { target: vec![0.0, 0.0] }),
            g: vec![Arc::new(Zero)],
            f: vec![Arc::new(ZeroSmooth(2))],
            lipschitz: 0.0,
            dim: 2,
        };
        let s = Ppg::new(p, 1.0, 0.3, 0.5).unwrap();
        let z = BlockPoint::new(s.layout().clone(), vec![1.0, -2.0]).unwrap();
        let st = s.step(&z).unwrap();
        // x_half = 0, x_1 = -z, so z_next = z + 1.3 (-z)
        assert!(st.next.sub(&z.scaled(-0.3)).norm() < 1e-15);
        assert_eq!(s.consensus(&st.next).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn consensus_fixed_point_has_zero_residual() {
        let q = Quadratic::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]), DVector::from_vec(vec![1.0, -1.0]));
        let l = q.lipschitz();
        let x_star = q.q.clone().lu().solve(&(-&q.c)).unwrap();
        let f: Arc<dyn SmoothFn> = Arc::new(q);
        let p = PpgProblem { r: Arc::new(Zero), g: vec![Arc::new(Zero); 3], f: vec![f; 3], lipschitz: l, dim: 2 };
        let s = Ppg::new(p, 0.5 / l, 0.0, 0.5).unwrap();
        let z = s.fixed_point_smooth(x_star.as_slice());
        let st = s.step(&z).unwrap();
        assert!(st.cert.v.norm() < 1e-14);
        assert!(st.next.sub(&z).norm() < 1e-14);
    }

    #[test]
    fn tight_at_largest_theta() {
        let mut rng = seeded(2, 0);
        for _ in 0..10 {
            let d = 3;
            let g = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
            let q = Quadratic::new(&g * g.transpose() + DMatrix::identity(d, d) * 0.1, DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0)));
            let l = q.lipschitz();
            let f: Arc<dyn SmoothFn> = Arc::new(q);
            let p = PpgProblem { r: Arc::new(L1Norm { lambda: 0.1 }), g: vec![Arc::new(Zero); 2], f: vec![f; 2], lipschitz: l, dim: d };
            let sigma = 0.7;
            let alpha = 0.8 / l;
            let s = Ppg::new(p.clone(), alpha, sigma - 0.4, sigma).unwrap();
            assert!((s.theta_max() - s.theta).abs() < 1e-15);
            let z = BlockPoint::new(s.layout().clone(), (0..2 * d).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
            let m = s.metric();
            let mut cert = s.step(&z).unwrap().cert;
            let rep = check_criterion(&z, &cert, m.as_ref(), sigma).unwrap();
            assert!(rep.ok && rep.rel_slack.abs() < 1e-12, "{rep:?}");
            cert.theta *= 1.1;
            assert!(!check_criterion(&z, &cert, m.as_ref(), sigma).unwrap().ok);
            assert!(Ppg::new(p, alpha, (sigma - 0.4) * 1.1, sigma).is_err());
        }
    }

    /// Proximal gradient on `(1/n) sum ||A_i x - b_i||^2 / 2 + lambda ||x||_1`.
    fn lasso_reference(parts: &[(DMatrix<f64>, DVector<f64>)], lambda: f64) -> Vec<f64> {
        let n = parts.len() as f64;
        let h: DMatrix<f64> = parts.iter().map(|(a, _)| a.transpose() * a).fold(DMatrix::zeros(parts[0].0.ncols(), parts[0].0.ncols()), |s, m| s + m) / n;
        let l = h.clone().symmetric_eigen().eigenvalues.max();
        let rhs: DVector<f64> = parts.iter().map(|(a, b)| a.transpose() * b).fold(DVector::zeros(h.nrows()), |s, v| s + v) / n;
        let mut x = DVector::zeros(h.nrows());
        for _ in 0..200_000 {
            let grad = &h * &x - &rhs;
            x = DVector::from_vec(prox_l1(1.0 / l, lambda, (&x - grad / l).as_slice()));
        }
        x.as_slice().to_vec()
    }

    #[test]
    fn lasso_consensus_matches_proximal_gradient() {
        let mut rng = seeded(9, 0);
        let d = 4;
        let lambda = 0.2;
        let parts: Vec<(DMatrix<f64>, DVector<f64>)> = (0..3)
            .map(|_| {
                let a = DMatrix::from_fn(6, d, |_, _| rng.random_range(-1.0..1.0));
                let b = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
                (a, b)
            })
            .collect();
        let f: Vec<Arc<dyn SmoothFn>> = parts
            .iter()
            .map(|(a, b)| Arc::new(Quadratic::new(a.transpose() * a, -(a.transpose() * b))) as Arc<dyn SmoothFn>)
            .collect();
        let l = f.iter().map(|f| f.lipschitz()).fold(0.0, f64::max);
        let g: Vec<Arc<dyn ProxFn>> = vec![Arc::new(L1Norm { lambda }); 3];
        let p = PpgProblem { r: Arc::new(Zero), g, f, lipschitz: l, dim: d };
        let s = Ppg::new(p, 1.0 / l, 0.3, 0.9).unwrap();
        let z0 = BlockPoint::zeros(s.layout().clone());
        let res = run_splitter(&s, z0.clone(), 50_000, 1e-13, StopRule::Certificate, None).unwrap();
        let got = s.consensus(&res.x).unwrap();
        let want = lasso_reference(&parts, lambda);
        let err = got.iter().zip(&want).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err:e}");
        assert!(res.trace.records.iter().all(|r| r.native_gap.is_some_and(|g| g <= 1e-12)));

        let native = run_native(&s, z0, 20).unwrap();
        let kernel = run_splitter(&s, native[0].clone(), 20, 0.0, StopRule::Never, None).unwrap();
        assert!(kernel.x.sub(&native[20]).norm() <= 1e-12);
    }
}
