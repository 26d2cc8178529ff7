use std::sync::Arc;

use super::{condition, Operator, SplitStep, Splitter, SplitterError};
use crate::hpe::HpeCertificate;
use crate::linops::{BlockDiagonalMetric, BlockPoint, Layout, Metric};
use crate::prox::ProxFn;

/// `0 in A x + B1 x + B2 x` with `A` given through its resolvent
/// `J_{gamma A} = prox_{gamma g}`, `B1` `beta`-cocoercive and `B2` monotone and
/// `L`-Lipschitz.
#[derive(Clone)]
pub struct FbhfProblem {
    pub a: Arc<dyn ProxFn>,
    /// `B1` and its cocoercivity constant; `None` means `B1 = 0`.
    pub b1: Option<(Arc<dyn Operator>, f64)>,
    pub b2: Arc<dyn Operator>,
    pub lipschitz: f64,
}

/// Over-relaxed forward-backward-half-forward step with fixed `gamma`, `theta`.
#[derive(Clone)]
pub struct Fbhf {
    pub problem: FbhfProblem,
    pub gamma: f64,
    pub theta: f64,
    pub sigma: f64,
    layout: Arc<Layout>,
}

impl Fbhf {
    /// Rejects `theta > (sigma - gamma^2 L^2 - gamma/(2 beta)) / (1 + gamma^2 L^2)`
    /// and step sizes for which that bound is negative.
    pub fn new(problem: FbhfProblem, layout: Arc<Layout>, gamma: f64, theta: f64, sigma: f64) -> Result<Self, SplitterError> {
        condition(gamma > 0.0 && gamma.is_finite(), || format!("gamma = {gamma} must be positive"))?;
        condition((0.0..1.0).contains(&sigma), || format!("sigma = {sigma} must lie in [0, 1)"))?;
        condition(theta > -1.0, || format!("theta = {theta} must exceed -1"))?;
        if let Some((op, beta)) = &problem.b1 {
            condition(*beta > 0.0, || format!("cocoercivity constant beta = {beta} must be positive"))?;
            condition(op.dim() == layout.dim(), || "B1 dimension differs from the layout".into())?;
        }
        condition(problem.b2.dim() == layout.dim(), || "B2 dimension differs from the layout".into())?;
        condition(problem.lipschitz >= 0.0, || "Lipschitz constant must be nonnegative".into())?;
        let s = Self { problem, gamma, theta, sigma, layout };
        let max = s.theta_max();
        condition(max >= 0.0, || {
            format!("gamma^2 L^2 + gamma/(2 beta) = {:.6e} exceeds sigma = {sigma}", sigma - max * (1.0 + s.gl2()))
        })?;
        condition(theta <= max, || {
            format!("theta = {theta} exceeds (sigma - gamma^2 L^2 - gamma/(2 beta)) / (1 + gamma^2 L^2) = {max:.6e}")
        })?;
        Ok(s)
    }

    fn gl2(&self) -> f64 {
        (self.gamma * self.problem.lipschitz).powi(2)
    }

    fn inv_beta(&self) -> f64 {
        self.problem.b1.as_ref().map_or(0.0, |(_, b)| 1.0 / b)
    }

    /// Largest admissible `theta` for the current `gamma` and `sigma`.
    pub fn theta_max(&self) -> f64 {
        (self.sigma - self.gl2() - 0.5 * self.gamma * self.inv_beta()) / (1.0 + self.gl2())
    }
}

impl Splitter for Fbhf {
    fn step(&self, z: &BlockPoint) -> Result<SplitStep, SplitterError> {
        let x = z.as_slice();
        let n = x.len();
        let g = self.gamma;
        let b2x = self.problem.b2.eval(x);
        let b1x = match &self.problem.b1 {
            Some((op, _)) => op.eval(x),
            None => vec![0.0; n],
        };
        let arg: Vec<f64> = (0..n).map(|i| x[i] - g * (b1x[i] + b2x[i])).collect();
        let y = self.problem.a.prox(g, &arg)?;
        let b2y = self.problem.b2.eval(&y);
        let v: Vec<f64> = (0..n).map(|i| (x[i] - y[i]) / g - b2x[i] + b2y[i]).collect();
        let dsq: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        let eps = if self.problem.b1.is_some() { 0.25 * dsq * self.inv_beta() } else { 0.0 };
        let next: Vec<f64> = (0..n).map(|i| x[i] + (1.0 + self.theta) * (y[i] - x[i] + g * b2x[i] - g * b2y[i])).collect();
        let mk = |d: Vec<f64>| BlockPoint::new(self.layout.clone(), d);
        Ok(SplitStep {
            cert: HpeCertificate { y: mk(y)?, v: mk(v)?, eps, c: g, theta: self.theta },
            next: mk(next)?,
        })
    }

    fn metric(&self) -> Box<dyn Metric> {
        Box::new(BlockDiagonalMetric::from_metric_scalars(self.layout.sizes().to_vec(), vec![1.0; self.layout.num_blocks()]).expect("unit scalars"))
    }

    fn sigma(&self) -> f64 {
        self.sigma
    }

    fn c_min(&self) -> f64 {
        self.gamma
    }

    fn name(&self) -> &'static str {
        "fbhf"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hpe::{check_criterion, StopRule};
    use crate::linops::{dot, LinearMap};
    use crate::prox::{BoxIndicator, HalfSquaredNorm, Quadratic, SmoothFn, Zero};
    use crate::rng::seeded;
    use crate::splitters::{run_splitter, AffineOperator, GradientOperator, ZeroOperator};
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;

    fn flat(n: usize) -> Arc<Layout> {
        Arc::new(Layout::new(vec![n]))
    }

    fn rotation(l: f64) -> Arc<dyn LinearMap> {
        Arc::new(DMatrix::from_row_slice(2, 2, &[0.0, l, -l, 0.0]))
    }

    #[test]
    fn quadratic_resolvent_closed_form() {
        let p = FbhfProblem { a: Arc::new(HalfSquaredNorm), b1: None, b2: Arc::new(ZeroOperator(2)), lipschitz: 0.0 };
        let s = Fbhf::new(p, flat(2), 0.5, 0.0, 0.5).unwrap();
        let x = BlockPoint::from_vec(vec![3.0, -1.5]);
        let st = s.step(&x).unwrap();
        let y = x.scaled(1.0 / 1.5);
        assert!(st.cert.y.sub(&y).norm() < 1e-15);
        assert!(st.cert.v.sub(&x.sub(&y).scaled(2.0)).norm() < 1e-14);
        assert_eq!(st.cert.eps, 0.0);
    }

    #[test]
    fn zero_is_a_fixed_point() {
        // A = 0, B1 = grad ||x - a||^2/2, B2 = 0: the zero is a
        let a = vec![0.3, -0.2];
        let b1: Arc<dyn Operator> = Arc::new(GradientOperator(Arc::new(Quadratic::distance_to(&a))));
        let p = FbhfProblem { a: Arc::new(Zero), b1: Some((b1, 1.0)), b2: Arc::new(ZeroOperator(2)), lipschitz: 0.0 };
        let s = Fbhf::new(p, flat(2), 0.5, 0.0, 0.5).unwrap();
        let st = s.step(&BlockPoint::from_vec(a.clone())).unwrap();
        assert_eq!(st.cert.y.as_slice(), a.as_slice());
        assert_eq!(st.cert.v.norm(), 0.0);
        assert_eq!(st.cert.eps, 0.0);
    }

    #[test]
    fn tight_at_largest_theta() {
        // A = 0, B1 = 0, B2 a scaled rotation: every inequality in the bound is an equality
        let mut rng = seeded(11, 0);
        for _ in 0..10 {
            let l: f64 = rng.random_range(0.1..2.0);
            let sigma: f64 = rng.random_range(0.3..0.9);
            let gamma = 0.5 * sigma.sqrt() / l;
            let p = FbhfProblem { a: Arc::new(Zero), b1: None, b2: Arc::new(AffineOperator::linear(rotation(l))), lipschitz: l };
            let mut s = Fbhf::new(p, flat(2), gamma, 0.0, sigma).unwrap();
            s.theta = s.theta_max();
            assert!(s.theta > 0.0);
            let x = BlockPoint::from_vec(vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
            let metric = s.metric();
            let mut cert = s.step(&x).unwrap().cert;
            let rep = check_criterion(&x, &cert, metric.as_ref(), sigma).unwrap();
            assert!(rep.ok && rep.rel_slack >= -1e-10, "{rep:?}");
            assert!(rep.rel_slack.abs() < 1e-12);
            cert.theta *= 1.1;
            assert!(!check_criterion(&x, &cert, metric.as_ref(), sigma).unwrap().ok);
        }
    }

    #[test]
    fn rejects_violated_step_condition() {
        let p = FbhfProblem { a: Arc::new(Zero), b1: None, b2: Arc::new(AffineOperator::linear(rotation(1.0))), lipschitz: 1.0 };
        let e = Fbhf::new(p.clone(), flat(2), 0.9, 0.0, 0.5).err().unwrap();
        assert!(matches!(e, SplitterError::Condition(_)));
        let ok = Fbhf::new(p.clone(), flat(2), 0.5, 0.0, 0.5).unwrap();
        assert!(Fbhf::new(p, flat(2), 0.5, ok.theta_max() * 1.01, 0.5).is_err());
    }

    fn box_instance(seed: u64) -> (FbhfProblem, Vec<f64>, DMatrix<f64>) {
        let mut rng = seeded(seed, 0);
        let n = 5;
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let k = (&g - g.transpose()) * 0.5;
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..1.5)).collect();
        let l = k.clone().singular_values().max();
        let b1: Arc<dyn Operator> = Arc::new(GradientOperator(Arc::new(Quadratic::distance_to(&a))));
        let p = FbhfProblem {
            a: Arc::new(BoxIndicator { lo: 0.0, hi: 1.0 }),
            b1: Some((b1, 1.0)),
            b2: Arc::new(AffineOperator::linear(Arc::new(k.clone()))),
            lipschitz: l,
        };
        (p, a, k)
    }

    /// Projected forward-backward on the strongly monotone `N + (I + K) - a`.
    fn box_reference(a: &[f64], k: &DMatrix<f64>) -> Vec<f64> {
        let n = a.len();
        let l2 = 1.0 + k.clone().singular_values().max().powi(2);
        let tau = 0.5 / l2;
        let av = DVector::from_column_slice(a);
        let mut x = DVector::zeros(n);
        for _ in 0..100_000 {
            let t = &x - &av + k * &x;
            x = (&x - t * tau).map(|v| v.clamp(0.0, 1.0));
        }
        x.as_slice().to_vec()
    }

    #[test]
    fn box_instance_matches_projected_reference() {
        for seed in 0..3 {
            let (p, a, k) = box_instance(seed);
            let l = p.lipschitz;
            // gamma^2 L^2 + gamma/2 = sigma / 2
            let sigma = 0.8;
            let gamma = (-0.5 + (0.25 + 2.0 * sigma * l * l).sqrt()) / (2.0 * l * l);
            let mut s = Fbhf::new(p, flat(5), gamma, 0.0, sigma).unwrap();
            s.theta = s.theta_max();
            let res = run_splitter(&s, BlockPoint::from_vec(vec![0.5; 5]), 20_000, 1e-13, StopRule::Certificate, None).unwrap();
            let want = box_reference(&a, &k);
            let got = res.x.as_slice();
            let err = got.iter().zip(&want).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            assert!(err < 1e-6, "seed {seed}: {err:e}");
            for r in &res.trace.records {
                assert!(r.criterion_slack >= -1e-10);
                assert!(r.native_gap.is_none_or(|g| g <= 1e-12), "{:?}", r.native_gap);
            }
        }
    }

    #[test]
    fn cocoercive_part_lies_in_its_enlargement() {
        // B1(x) belongs to B1^[eps](y) with eps = ||x - y||^2 / (4 beta)
        let mut rng = seeded(5, 1);
        let n = 4;
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let q = Quadratic::new(&g * g.transpose(), DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)));
        let beta = 1.0 / q.lipschitz();
        let b1 = GradientOperator(Arc::new(q));
        for _ in 0..5 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let dxy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let eps = dot(&dxy, &dxy) / (4.0 * beta);
            let bx = b1.eval(&x);
            for _ in 0..50 {
                let z: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
                let bz = b1.eval(&z);
                let lhs: f64 = (0..n).map(|i| (bx[i] - bz[i]) * (y[i] - z[i])).sum();
                assert!(lhs >= -eps - 1e-12, "{lhs} < -{eps}");
            }
        }
    }
}
