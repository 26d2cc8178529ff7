//! The variable-metric over-relaxed HPE kernel and its instrumentation.

mod affine;
mod bounds;
mod ergodic;
mod kernel;
mod trace;

pub use affine::AffineResolvent;
pub use bounds::{linear_rate_factor, pointwise_bound, XiSchedule};
pub use ergodic::{ergodic_aggregate, Ergodic, ErgodicAccumulator, ErgodicItem, Weighting};
pub use kernel::{run, RunOptions, RunResult, StepOracle, StepOutcome, StopRule, Termination};
pub use trace::{fejer_slack, loglog_slope, ErgodicColumns, IterRecord, IterTrace, PadmmColumns, CSV_HEADER, PADMM_HEADER};

use serde::{Deserialize, Serialize};

use crate::linops::{dot, BlockPoint, LinopError, Metric};
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HpeError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("negative enlargement eps = {0:e}")]
    NegativeEps(f64),
    #[error(transparent)]
    Linop(#[from] LinopError),
    #[error("iteration {iter}: relative error criterion violated: lhs {lhs:.6e} > rhs {rhs:.6e} (slack {slack:.3e})")]
    Criterion { iter: usize, lhs: f64, rhs: f64, slack: f64 },
    #[error("iteration {iter}: theta = {theta} below theta_min = {min}")]
    Theta { iter: usize, theta: f64, min: f64 },
    #[error("iteration {iter}: c = {c} below c_min = {min}")]
    StepSize { iter: usize, c: f64, min: f64 },
    #[error("iteration {iter}: metric schedule violated: {msg}")]
    MetricSchedule { iter: usize, msg: String },
    #[error("oracle failure: {0}")]
    Oracle(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpeConfig {
    /// Relative error tolerance `sigma` in `[0, 1)`.
    pub sigma: f64,
    /// Lower bound on the over-relaxation `theta_k`, greater than -1.
    pub theta_min: f64,
    /// Lower bound on the proximal steps `c_k`.
    pub c_min: f64,
    pub xi: XiSchedule,
    pub omega_lower: f64,
    pub omega_upper: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for HpeConfig {
    fn default() -> Self {
        Self {
            sigma: 0.5,
            theta_min: -0.5,
            c_min: 1e-8,
            xi: XiSchedule::default(),
            omega_lower: 1e-8,
            omega_upper: 1e8,
            max_iters: 1000,
            tol: 1e-8,
        }
    }
}

impl HpeConfig {
    pub fn validate(&self) -> Result<(), HpeError> {
        let bad = |m: String| Err(HpeError::Config(m));
        if !(0.0..1.0).contains(&self.sigma) {
            return bad(format!("sigma = {} must lie in [0, 1)", self.sigma));
        }
        if !(self.theta_min > -1.0) {
            return bad(format!("theta_min = {} must exceed -1", self.theta_min));
        }
        if !(self.c_min > 0.0) {
            return bad(format!("c_min = {} must be positive", self.c_min));
        }
        if !(self.omega_lower > 0.0 && self.omega_upper >= self.omega_lower) {
            return bad(format!("need 0 < omega_lower <= omega_upper, got {} and {}", self.omega_lower, self.omega_upper));
        }
        if !(self.tol >= 0.0) {
            return bad(format!("tol = {} must be nonnegative", self.tol));
        }
        self.xi.validate()
    }
}

/// `(y, v, eps)` with `v` in the `eps`-enlargement of `T` at `y`, plus the
/// step `c` and over-relaxation `theta` to use with it.
#[derive(Debug, Clone, PartialEq)]
pub struct HpeCertificate {
    pub y: BlockPoint,
    pub v: BlockPoint,
    pub eps: f64,
    pub c: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`
    pub slack: f64,
    /// `(rhs - lhs) / (1 + rhs)`
    pub rel_slack: f64,
    pub ok: bool,
    /// `||y - x||_M^2`
    pub step_sq: f64,
    /// `||c M^{-1} v||_M^2`
    pub corr_sq: f64,
    /// `c * eps`
    pub c_eps: f64,
}

pub const CRITERION_TOL: f64 = 1e-10;

/// Evaluates `theta ||cM^{-1}v||_M^2 + ||cM^{-1}v + y - x||_M^2 + 2 c eps <= sigma ||y - x||_M^2`.
pub fn check_criterion(x: &BlockPoint, cert: &HpeCertificate, m: &dyn Metric, sigma: f64) -> Result<CriterionReport, HpeError> {
    check_criterion_with_tol(x, cert, m, sigma, CRITERION_TOL)
}

pub fn check_criterion_with_tol(
    x: &BlockPoint,
    cert: &HpeCertificate,
    m: &dyn Metric,
    sigma: f64,
    tol: f64,
) -> Result<CriterionReport, HpeError> {
    if !(cert.eps >= 0.0) {
        return Err(HpeError::NegativeEps(cert.eps));
    }
    x.check_layout(&cert.y)?;
    x.check_layout(&cert.v)?;
    if m.dim() != x.len() {
        return Err(LinopError::Dimension { expected: m.dim(), got: x.len() }.into());
    }
    let c = cert.c;
    // u = c M^{-1} v, so M u = c v
    let u: Vec<f64> = m.solve(cert.v.as_slice()).into_iter().map(|t| c * t).collect();
    let corr_sq = c * dot(&u, cert.v.as_slice());
    let d: Vec<f64> = cert.y.as_slice().iter().zip(x.as_slice()).map(|(y, x)| y - x).collect();
    let md = m.apply(&d);
    let step_sq = dot(&d, &md);
    let e: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + b).collect();
    let mixed = m.quad(&e);
    let c_eps = c * cert.eps;
    let lhs = cert.theta * corr_sq + mixed.max(0.0) + 2.0 * c_eps;
    let rhs = sigma * step_sq;
    let slack = rhs - lhs;
    Ok(CriterionReport {
        lhs,
        rhs,
        slack,
        rel_slack: slack / (1.0 + rhs),
        ok: lhs <= rhs + tol * (1.0 + rhs),
        step_sq,
        corr_sq,
        c_eps,
    })
}

/// `x - (1 + theta) c M^{-1} v`
pub fn extragradient_step(x: &BlockPoint, cert: &HpeCertificate, m: &dyn Metric) -> BlockPoint {
    let s = m.solve(cert.v.as_slice());
    let a = (1.0 + cert.theta) * cert.c;
    x.with_data(x.as_slice().iter().zip(&s).map(|(xi, si)| xi - a * si).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricCheck {
    pub ok: bool,
    pub diagnostic: Option<String>,
}

impl MetricCheck {
    fn pass() -> Self {
        Self { ok: true, diagnostic: None }
    }
    fn fail(msg: String) -> Self {
        Self { ok: false, diagnostic: Some(msg) }
    }
}

/// Scalar comparisons allow this relative slack for the rounding of a reciprocal.
const SCALAR_ROUNDING: f64 = 4.0 * f64::EPSILON;

/// Checks `omega_lower I <= M_next <= (1 + xi) M_k`. Block-diagonal pairs are
/// compared scalar by scalar; anything else on random Rayleigh quotients.
pub fn validate_metric_update(
    mk: &dyn Metric,
    mnext: &dyn Metric,
    xi: f64,
    omega_lower: f64,
    probes: usize,
    seed: u64,
) -> MetricCheck {
    if mk.dim() != mnext.dim() {
        return MetricCheck::fail(format!("dimension {} vs {}", mk.dim(), mnext.dim()));
    }
    if let (Some((s1, d1)), Some((s2, d2))) = (mk.block_scalars(), mnext.block_scalars()) {
        if s1 == s2 {
            for (i, (a, b)) in d1.iter().zip(&d2).enumerate() {
                if *b < omega_lower * (1.0 - SCALAR_ROUNDING) {
                    return MetricCheck::fail(format!("block {i}: scalar {b:e} below omega_lower {omega_lower:e}"));
                }
                if *b > (1.0 + xi) * a * (1.0 + SCALAR_ROUNDING) {
                    return MetricCheck::fail(format!(
                        "block {i}: scalar {b:e} exceeds (1 + xi) * {a:e} = {:e}",
                        (1.0 + xi) * a
                    ));
                }
            }
            return MetricCheck::pass();
        }
    }
    if mnext.lower() < omega_lower * (1.0 - SCALAR_ROUNDING) {
        return MetricCheck::fail(format!("lower bound {:e} below omega_lower {omega_lower:e}", mnext.lower()));
    }
    let mut rng = seeded(seed, 0x6d65);
    for p in 0..probes {
        let v = crate::linops::gaussian_vec(&mut rng, mk.dim());
        let nv = dot(&v, &v);
        let qn = mnext.quad(&v);
        let qk = mk.quad(&v);
        if qn < omega_lower * nv * (1.0 - 1e-12) {
            return MetricCheck::fail(format!("probe {p}: <v, M_next v> = {qn:e} < omega_lower ||v||^2 = {:e}", omega_lower * nv));
        }
        if qn > (1.0 + xi) * qk * (1.0 + 1e-12) {
            return MetricCheck::fail(format!("probe {p}: <v, M_next v> = {qn:e} > (1 + xi) <v, M_k v> = {:e}", (1.0 + xi) * qk));
        }
    }
    MetricCheck::pass()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{BlockDiagonalMetric, ScalarMetric};

    fn cert(y: Vec<f64>, v: Vec<f64>, eps: f64, c: f64, theta: f64) -> HpeCertificate {
        HpeCertificate { y: BlockPoint::from_vec(y), v: BlockPoint::from_vec(v), eps, c, theta }
    }

    #[test]
    fn exact_fixed_point_passes() {
        let x = BlockPoint::from_vec(vec![1.0, 2.0]);
        let r = check_criterion(&x, &cert(vec![1.0, 2.0], vec![0.0, 0.0], 0.0, 1.0, 3.0), &ScalarMetric::identity(2), 0.3).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.ok);
    }

    #[test]
    fn exact_proximal_step_passes_for_any_sigma() {
        let x = BlockPoint::from_vec(vec![1.0, -2.0, 0.5]);
        let y = vec![0.2, 0.3, -0.1];
        let v: Vec<f64> = x.as_slice().iter().zip(&y).map(|(a, b)| a - b).collect();
        for sigma in [0.0, 0.1, 0.9] {
            let r = check_criterion(&x, &cert(y.clone(), v.clone(), 0.0, 1.0, 0.0), &ScalarMetric::identity(3), sigma).unwrap();
            assert!(r.lhs.abs() < 1e-15 && r.ok);
        }
    }

    #[test]
    fn overshooting_direction_fails() {
        let x = BlockPoint::from_vec(vec![1.0, 1.0]);
        let y = vec![0.0, 3.0];
        let v: Vec<f64> = x.as_slice().iter().zip(&y).map(|(a, b)| 1.2 * (a - b)).collect();
        let r = check_criterion(&x, &cert(y, v, 0.0, 1.0, 0.0), &ScalarMetric::identity(2), 0.01).unwrap();
        assert!((r.lhs - 0.04 * r.step_sq).abs() < 1e-12);
        assert!(!r.ok);
    }

    #[test]
    fn negative_eps_rejected() {
        let x = BlockPoint::from_vec(vec![0.0]);
        let e = check_criterion(&x, &cert(vec![0.0], vec![0.0], -1e-3, 1.0, 0.0), &ScalarMetric::identity(1), 0.5);
        assert!(matches!(e, Err(HpeError::NegativeEps(_))));
    }

    #[test]
    fn extragradient_examples() {
        let x = BlockPoint::from_vec(vec![5.0]);
        let m = ScalarMetric { dim: 1, d: 2.0 };
        let next = extragradient_step(&x, &cert(vec![0.0], vec![1.0], 0.0, 2.0, 1.0), &m);
        assert_eq!(next.as_slice(), &[3.0]);
        let same = extragradient_step(&x, &cert(vec![0.0], vec![0.0], 0.0, 2.0, 1.0), &m);
        assert_eq!(same, x);
        let plain = extragradient_step(&x, &cert(vec![0.0], vec![1.5], 0.0, 1.0, 0.0), &ScalarMetric::identity(1));
        assert_eq!(plain.as_slice(), &[3.5]);
    }

    #[test]
    fn metric_update_examples() {
        let mk = BlockDiagonalMetric::from_metric_scalars(vec![2, 1], vec![1.0, 4.0]).unwrap();
        assert!(validate_metric_update(&mk, &mk, 0.0, 0.1, 10, 0).ok);
        let half = BlockDiagonalMetric::from_metric_scalars(vec![2, 1], vec![0.5, 2.0]).unwrap();
        assert!(validate_metric_update(&mk, &half, 0.01, 0.1, 10, 0).ok);
        let xi = 0.01;
        let grow = BlockDiagonalMetric::from_metric_scalars(vec![2, 1], vec![1.0 + 2.0 * xi, 4.0]).unwrap();
        let chk = validate_metric_update(&mk, &grow, xi, 0.1, 10, 0);
        assert!(!chk.ok && chk.diagnostic.is_some());
        let below = BlockDiagonalMetric::from_metric_scalars(vec![2, 1], vec![0.05, 4.0]).unwrap();
        assert!(!validate_metric_update(&mk, &below, xi, 0.1, 10, 0).ok);
    }

    #[test]
    fn config_validation() {
        assert!(HpeConfig::default().validate().is_ok());
        assert!(HpeConfig { sigma: 1.0, ..Default::default() }.validate().is_err());
        assert!(HpeConfig { theta_min: -1.0, ..Default::default() }.validate().is_err());
        assert!(HpeConfig { c_min: 0.0, ..Default::default() }.validate().is_err());
    }
}
