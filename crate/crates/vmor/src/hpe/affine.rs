use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{HpeCertificate, HpeConfig, HpeError, StepOracle, StepOutcome};
use crate::linops::{BlockPoint, Metric, ScalarMetric};
use crate::rng::seeded;

/// Exact resolvent steps for `T(x) = S x + q` with `S + S'` positive
/// semidefinite, in a scalar metric `d_k I`.
///
/// With `wobble` on, `d_k` alternately grows by `1 + xi_k` (capped at
/// `omega_upper`) and shrinks by 10% (floored at `omega_lower`), so the
/// kernel sees a genuinely variable metric.
#[derive(Debug, Clone)]
pub struct AffineResolvent {
    pub s: DMatrix<f64>,
    pub q: DVector<f64>,
    pub c: f64,
    pub theta: f64,
    pub wobble: bool,
}

impl AffineResolvent {
    /// `S = G G' / n + mu I + (K - K')` with Gaussian `G`, `K`; strongly monotone with modulus `mu`.
    pub fn random(seed: u64, n: usize, mu: f64) -> Self {
        let mut rng = seeded(seed, 0x6166);
        let mut gauss = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal));
        let g = gauss(n, n);
        let k = gauss(n, n) * 0.5;
        let s = &g * g.transpose() / n as f64 + DMatrix::identity(n, n) * mu + (&k - k.transpose());
        let q = DVector::from_column_slice(gauss(n, 1).as_slice());
        Self { s, q, c: 1.0, theta: 0.0, wobble: false }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// The unique zero `-S^{-1} q`, when `S` is invertible.
    pub fn zero(&self) -> Option<BlockPoint> {
        let x = self.s.clone().lu().solve(&(-&self.q))?;
        Some(BlockPoint::from_vec(x.as_slice().to_vec()))
    }

    /// `1 / sigma_min(S)`: `||x - x*|| <= kappa ||T(x)||`.
    pub fn subregularity_modulus(&self) -> f64 {
        1.0 / self.s.singular_values().min()
    }
}

fn scalar_of(m: &dyn Metric) -> Result<f64, HpeError> {
    match m.block_scalars() {
        Some((_, d)) if d.len() == 1 => Ok(d[0]),
        _ => Err(HpeError::Oracle("affine resolvent needs a scalar metric".into())),
    }
}

impl StepOracle for AffineResolvent {
    fn step(&mut self, k: usize, x: &BlockPoint, metric: &dyn Metric, cfg: &HpeConfig) -> Result<StepOutcome, HpeError> {
        let n = self.dim();
        let d = scalar_of(metric)?;
        // (d I + c S) y = d x - c q, v = d (x - y) / c = S y + q
        let lhs = DMatrix::identity(n, n) * d + &self.s * self.c;
        let rhs = DVector::from_column_slice(x.as_slice()) * d - &self.q * self.c;
        let y = lhs.lu().solve(&rhs).ok_or_else(|| HpeError::Oracle("singular resolvent system".into()))?;
        let y = x.with_data(y.as_slice().to_vec());
        let v = x.sub(&y).scaled(d / self.c);
        let mut out = StepOutcome::new(HpeCertificate { y, v, eps: 0.0, c: self.c, theta: self.theta });
        if self.wobble {
            let next = if k.is_multiple_of(2) { (d * (1.0 + cfg.xi.xi(k))).min(cfg.omega_upper) } else { (0.9 * d).max(cfg.omega_lower) };
            out.next_metric = Some(Box::new(ScalarMetric { dim: n, d: next }));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hpe::{run, RunOptions, StopRule, XiSchedule};

    #[test]
    fn certificates_are_exact_and_runs_converge() {
        let mut op = AffineResolvent::random(3, 6, 0.2);
        op.theta = 0.4;
        op.wobble = true;
        let star = op.zero().unwrap();
        let cfg = HpeConfig {
            sigma: 0.5,
            theta_min: 0.4,
            c_min: 1.0,
            xi: XiSchedule::InverseSquare { xi0: 0.5 },
            omega_lower: 0.5,
            omega_upper: 2.0,
            max_iters: 500,
            tol: 1e-11,
        };
        let opts = RunOptions { stop: StopRule::Certificate, reference: Some(star.clone()), ..Default::default() };
        let res = run(&mut op, BlockPoint::zeros(star.layout().clone()), Box::new(ScalarMetric::identity(6)), &cfg, &opts).unwrap();
        assert!(res.x.sub(&star).norm() < 1e-9);
        let r0 = &res.trace.records[0];
        // T(y) = v exactly
        assert!(r0.eps == 0.0);
        assert!(res.trace.records.iter().any(|r| r.metric_min != 1.0));
    }
}
