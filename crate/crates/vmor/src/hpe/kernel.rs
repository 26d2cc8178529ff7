use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::ergodic::{ErgodicAccumulator, ErgodicItem, Weighting};
use super::trace::{ErgodicColumns, IterRecord, IterTrace, PadmmColumns};
use super::{check_criterion, extragradient_step, validate_metric_update, HpeCertificate, HpeConfig, HpeError};
use crate::linops::{weighted_norm_sq, BlockPoint, Metric};

/// What an oracle hands back for the current point `x^k`.
pub struct StepOutcome {
    pub cert: HpeCertificate,
    /// Replacement for `M_k` used in this step; must satisfy `M' <= M_k`.
    pub metric_override: Option<Box<dyn Metric>>,
    /// Proposed `M_{k+1}`; the current metric is kept when absent.
    pub next_metric: Option<Box<dyn Metric>>,
    /// The oracle's own next iterate, compared against the kernel update.
    pub native_next: Option<BlockPoint>,
    /// Stopping residual at `x^k` for [`StopRule::OracleResidual`].
    pub residual: Option<f64>,
    pub padmm: Option<PadmmColumns>,
}

impl StepOutcome {
    pub fn new(cert: HpeCertificate) -> Self {
        Self { cert, metric_override: None, next_metric: None, native_next: None, residual: None, padmm: None }
    }
}

/// Produces a certificate satisfying the relative error criterion at `x^k`.
pub trait StepOracle {
    fn step(&mut self, k: usize, x: &BlockPoint, metric: &dyn Metric, cfg: &HpeConfig) -> Result<StepOutcome, HpeError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// `max(||v^k||, eps_k) <= tol`
    #[default]
    Certificate,
    /// Oracle-reported residual at `x^k` below `tol`.
    OracleResidual,
    /// Run all `max_iters` iterations.
    Never,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub stop: StopRule,
    /// A known zero, for distance and Fejer instrumentation.
    pub reference: Option<BlockPoint>,
    /// Track ergodic aggregates with uniform and linear weights.
    pub ergodic: bool,
    /// Random probes for metric checks that are not blockwise.
    pub metric_probes: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIters,
}

pub struct RunResult {
    /// Last iterate; `x^{k+1}` after the final update, or `x^k` when an
    /// oracle residual stopped the run before updating.
    pub x: BlockPoint,
    pub last_y: Option<BlockPoint>,
    pub trace: IterTrace,
    pub termination: Termination,
    pub metric: Box<dyn Metric>,
}

impl RunResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

fn dist(m: &dyn Metric, x: &BlockPoint, r: &Option<BlockPoint>) -> Result<Option<f64>, HpeError> {
    match r {
        Some(r) => Ok(Some(weighted_norm_sq(m, &x.sub(r))?.sqrt())),
        None => Ok(None),
    }
}

/// Runs the over-relaxed HPE iteration. Every certificate is checked against
/// the relative error criterion and every metric change against the schedule
/// `omega_lower I <= M_{k+1} <= (1 + xi_k) M_k`; violations abort the run.
pub fn run(
    oracle: &mut dyn StepOracle,
    x0: BlockPoint,
    m0: Box<dyn Metric>,
    cfg: &HpeConfig,
    opts: &RunOptions,
) -> Result<RunResult, HpeError> {
    cfg.validate()?;
    if m0.dim() != x0.len() {
        return Err(HpeError::Config(format!("metric dimension {} vs point dimension {}", m0.dim(), x0.len())));
    }
    let slack = 1e-12;
    if m0.lower() < cfg.omega_lower * (1.0 - slack) || m0.upper() > cfg.omega_upper * (1.0 + slack) {
        return Err(HpeError::Config(format!(
            "initial metric spectrum [{:e}, {:e}] outside [{:e}, {:e}]",
            m0.lower(),
            m0.upper(),
            cfg.omega_lower,
            cfg.omega_upper
        )));
    }
    if let Some(r) = &opts.reference {
        x0.check_layout(r)?;
    }
    let probes = opts.metric_probes.max(1);
    let start = Instant::now();
    let mut x = x0;
    let mut metric = m0;
    let mut trace = IterTrace::default();
    let mut last_y = None;
    let mut erg = [ErgodicAccumulator::new(), ErgodicAccumulator::new()];

    for k in 0..cfg.max_iters {
        let iter = k + 1;
        let out = oracle.step(k, &x, metric.as_ref(), cfg)?;
        if let Some(m) = out.metric_override {
            let chk = validate_metric_update(metric.as_ref(), m.as_ref(), 0.0, cfg.omega_lower, probes, opts.seed ^ k as u64);
            if !chk.ok {
                return Err(HpeError::MetricSchedule { iter, msg: format!("step metric: {}", chk.diagnostic.unwrap_or_default()) });
            }
            metric = m;
        }
        let cert = out.cert;
        if !(cert.theta >= cfg.theta_min) {
            return Err(HpeError::Theta { iter, theta: cert.theta, min: cfg.theta_min });
        }
        if !(cert.c >= cfg.c_min) {
            return Err(HpeError::StepSize { iter, c: cert.c, min: cfg.c_min });
        }
        let rep = check_criterion(&x, &cert, metric.as_ref(), cfg.sigma)?;
        if !rep.ok {
            return Err(HpeError::Criterion { iter, lhs: rep.lhs, rhs: rep.rhs, slack: rep.slack });
        }
        let v_norm = cert.v.norm();
        let dist_to_ref = dist(metric.as_ref(), &x, &opts.reference)?;
        let mut record = IterRecord {
            iter,
            time_s: 0.0,
            v_norm,
            eps: cert.eps,
            theta: cert.theta,
            c: cert.c,
            xi: cfg.xi.xi(k),
            criterion_slack: rep.rel_slack,
            lhs: rep.lhs,
            rhs: rep.rhs,
            step_norm: rep.step_sq.max(0.0).sqrt(),
            corr_sq: rep.corr_sq,
            c_eps: rep.c_eps,
            metric_min: metric.lower(),
            metric_max: metric.upper(),
            dist_to_ref,
            dist_next: None,
            native_gap: None,
            residual: out.residual,
            ergodic: None,
            padmm: out.padmm,
        };

        if opts.ergodic {
            let item = ErgodicItem { y: &cert.y, v: &cert.v, eps: cert.eps, theta: cert.theta, c: cert.c };
            erg[0].push(item, Weighting::Uniform.alpha(iter));
            erg[1].push(item, Weighting::Linear.alpha(iter));
            if let (Some((uv, ue)), Some((lv, le))) = (erg[0].summary(), erg[1].summary()) {
                record.ergodic = Some(ErgodicColumns { uniform_v: uv, uniform_eps: ue, linear_v: lv, linear_eps: le });
            }
        }

        if opts.stop == StopRule::OracleResidual && out.residual.is_some_and(|r| r <= cfg.tol) {
            record.time_s = start.elapsed().as_secs_f64();
            trace.push(record);
            return Ok(RunResult { x, last_y: Some(cert.y), trace, termination: Termination::Converged, metric });
        }

        let x_next = extragradient_step(&x, &cert, metric.as_ref());
        if let Some(native) = &out.native_next {
            x_next.check_layout(native)?;
            record.native_gap = Some(x_next.sub(native).norm());
        }
        if let Some(next) = out.next_metric {
            let chk = validate_metric_update(metric.as_ref(), next.as_ref(), cfg.xi.xi(k), cfg.omega_lower, probes, opts.seed ^ (k as u64) << 1);
            if !chk.ok {
                return Err(HpeError::MetricSchedule { iter, msg: chk.diagnostic.unwrap_or_default() });
            }
            metric = next;
        }
        record.dist_next = dist(metric.as_ref(), &x_next, &opts.reference)?;
        record.time_s = start.elapsed().as_secs_f64();
        trace.push(record);
        x = x_next;
        let done = opts.stop == StopRule::Certificate && v_norm.max(cert.eps) <= cfg.tol;
        last_y = Some(cert.y);
        if done {
            return Ok(RunResult { x, last_y, trace, termination: Termination::Converged, metric });
        }
    }
    Ok(RunResult { x, last_y, trace, termination: Termination::MaxIters, metric })
}
