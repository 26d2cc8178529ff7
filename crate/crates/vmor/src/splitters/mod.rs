//! Step oracles for forward-backward-half-forward, parallel proximal gradient,
//! Condat-Vu and asymmetric forward-backward-adjoint primal-dual splitting.

mod afbas;
mod condat_vu;
mod fbhf;
mod ops;
mod ppg;
mod qp;

pub use afbas::{AfbasMetric, AfbasParams, AfbasPd, AfbasPdProblem, AlphaForm};
pub use condat_vu::{CondatVu, CondatVuProblem};
pub use fbhf::{Fbhf, FbhfProblem};
pub use ops::{AffineOperator, GradientOperator, Operator, ZeroOperator};
pub use ppg::{Ppg, PpgProblem};
pub use qp::{
    afbas_qp, afbas_qp_with, condat_vu_qp, condat_vu_qp_with, fbhf_qp, fbhf_qp_with, ppg_qp, ppg_qp_with, qp_splitter, QpSplitter,
    QpSplitterParams, QP_SPLITTERS,
};

use crate::hpe::{self, HpeCertificate, HpeConfig, HpeError, RunOptions, RunResult, StepOracle, StepOutcome, StopRule, XiSchedule};
use crate::linops::{BlockPoint, LinopError, Metric};
use crate::prox::ProxError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitterError {
    #[error("step condition violated: {0}")]
    Condition(String),
    #[error(transparent)]
    Prox(#[from] ProxError),
    #[error(transparent)]
    Linop(#[from] LinopError),
    #[error(transparent)]
    Hpe(#[from] HpeError),
}

/// One step of a splitting method: the certificate handed to the kernel and the
/// method's own next iterate.
#[derive(Debug, Clone)]
pub struct SplitStep {
    pub cert: HpeCertificate,
    pub next: BlockPoint,
}

/// A splitting method seen as a fixed-metric step oracle.
pub trait Splitter {
    fn step(&self, z: &BlockPoint) -> Result<SplitStep, SplitterError>;
    fn metric(&self) -> Box<dyn Metric>;
    fn sigma(&self) -> f64;
    /// Smallest `c_k` the method produces.
    fn c_min(&self) -> f64 {
        1.0
    }
    fn name(&self) -> &'static str;
}

/// Kernel settings matching a splitter: its `sigma`, constant metric and step.
pub fn splitter_config(s: &dyn Splitter, max_iters: usize, tol: f64) -> HpeConfig {
    let m = s.metric();
    HpeConfig {
        sigma: s.sigma(),
        theta_min: -0.99,
        c_min: s.c_min(),
        xi: XiSchedule::Zero,
        omega_lower: m.lower(),
        omega_upper: m.upper(),
        max_iters,
        tol,
    }
}

struct Adapter<'a>(&'a dyn Splitter);

impl StepOracle for Adapter<'_> {
    fn step(&mut self, _: usize, x: &BlockPoint, _: &dyn Metric, _: &HpeConfig) -> Result<StepOutcome, HpeError> {
        let st = self.0.step(x).map_err(|e| match e {
            SplitterError::Hpe(h) => h,
            other => HpeError::Oracle(other.to_string()),
        })?;
        let mut out = StepOutcome::new(st.cert);
        out.native_next = Some(st.next);
        Ok(out)
    }
}

/// Runs a splitter through the kernel, which checks every certificate and
/// records the gap to the method's native iterate.
pub fn run_splitter(
    s: &dyn Splitter,
    z0: BlockPoint,
    max_iters: usize,
    tol: f64,
    stop: StopRule,
    reference: Option<BlockPoint>,
) -> Result<RunResult, SplitterError> {
    let opts = RunOptions { stop, reference, ergodic: false, metric_probes: 4, seed: 0 };
    run_splitter_with(s, z0, max_iters, tol, &opts)
}

/// [`run_splitter`] with full control over the run options, e.g. ergodic tracking.
pub fn run_splitter_with(s: &dyn Splitter, z0: BlockPoint, max_iters: usize, tol: f64, opts: &RunOptions) -> Result<RunResult, SplitterError> {
    let cfg = splitter_config(s, max_iters, tol);
    Ok(hpe::run(&mut Adapter(s), z0, s.metric(), &cfg, opts)?)
}

/// `iters` native iterations from `z0`, returning every iterate including `z0`.
pub fn run_native(s: &dyn Splitter, z0: BlockPoint, iters: usize) -> Result<Vec<BlockPoint>, SplitterError> {
    let mut out = Vec::with_capacity(iters + 1);
    out.push(z0);
    for _ in 0..iters {
        let next = s.step(out.last().expect("nonempty"))?.next;
        out.push(next);
    }
    Ok(out)
}

pub(crate) fn condition(ok: bool, msg: impl FnOnce() -> String) -> Result<(), SplitterError> {
    if ok {
        Ok(())
    } else {
        Err(SplitterError::Condition(msg()))
    }
}
