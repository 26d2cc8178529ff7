use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::hpe::{self, HpeCertificate, HpeConfig, HpeError, PadmmColumns, RunOptions, StepOracle, StepOutcome, StopRule, Termination, XiSchedule};
use crate::linops::{norm, BlockDiagonalMetric, BlockPoint, Metric};

use super::bb::{bb_metric_update, ScalarBounds};
use super::sweep::{apply_u, block_sweep, constraint_norms_sq, resolve_eta, ProximalPolicy};
use super::theta::{gamma_matrix, theta_bar, DirectionForms};
use super::{pkkt_residual, MultiBlockProblem, PadmmError};

/// Penalty parameter sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BetaSchedule {
    Constant { beta: f64 },
    /// `beta_k = min(beta0 rho^k, beta_max)`
    Geometric { beta0: f64, rho: f64, beta_max: f64 },
}

impl Default for BetaSchedule {
    fn default() -> Self {
        BetaSchedule::Constant { beta: 1.0 }
    }
}

impl BetaSchedule {
    pub fn beta(&self, k: usize) -> f64 {
        match *self {
            BetaSchedule::Constant { beta } => beta,
            BetaSchedule::Geometric { beta0, rho, beta_max } => (beta0 * rho.powi(k.min(i32::MAX as usize) as i32)).min(beta_max),
        }
    }

    fn validate(&self) -> Result<(), PadmmError> {
        let ok = match *self {
            BetaSchedule::Constant { beta } => beta > 0.0 && beta.is_finite(),
            BetaSchedule::Geometric { beta0, rho, beta_max } => beta0 > 0.0 && rho >= 1.0 && beta_max >= beta0 && beta_max.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(PadmmError::Config(format!("invalid penalty schedule {self:?}")))
        }
    }
}

/// Choice of `theta_k` inside the admissible range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ThetaPolicy {
    /// `min(theta_adap, theta_cap)`
    Adaptive,
    /// `min(theta, theta_adap)`, the fixed value whenever it is admissible.
    Fixed { theta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PadmmConfig {
    pub beta: BetaSchedule,
    pub sigma: f64,
    pub theta_min: f64,
    pub theta_cap: f64,
    pub theta: ThetaPolicy,
    pub xi: XiSchedule,
    pub proximal: ProximalPolicy,
    /// Barzilai-Borwein metric updates; off keeps the initial metric.
    pub bb: bool,
    /// Lower bound on inverse-metric scalars.
    pub m_floor: f64,
    /// Upper bound on inverse-metric scalars.
    pub m_ceiling: f64,
    /// Each inverse-metric scalar stays below `bb_growth` times its initial value.
    pub bb_growth: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub stop: StopRule,
    /// `theta_bar` is computed densely up to this many unknowns, NaN above.
    pub theta_bar_max_dim: usize,
    pub theta_bar_inflation: f64,
    pub seed: u64,
    /// Keep `(w, v, eps, theta)` of every iteration for ergodic certificates.
    pub keep_history: bool,
}

impl Default for PadmmConfig {
    fn default() -> Self {
        Self {
            beta: BetaSchedule::default(),
            sigma: 0.5,
            theta_min: -0.8,
            theta_cap: 5.0,
            theta: ThetaPolicy::Adaptive,
            xi: XiSchedule::default(),
            proximal: ProximalPolicy::default(),
            bb: true,
            m_floor: 1e-8,
            m_ceiling: 1e8,
            bb_growth: 4.0,
            max_iters: 5000,
            tol: 1e-8,
            stop: StopRule::OracleResidual,
            theta_bar_max_dim: 600,
            theta_bar_inflation: 1.01,
            seed: 0,
            keep_history: false,
        }
    }
}

impl PadmmConfig {
    pub fn validate(&self) -> Result<(), PadmmError> {
        self.beta.validate()?;
        if !(self.theta_min > -1.0 && self.theta_min < 0.0) {
            return Err(PadmmError::Config(format!("theta_min = {} must lie in (-1, 0)", self.theta_min)));
        }
        if !(self.theta_cap >= 0.0) {
            return Err(PadmmError::Config(format!("theta_cap = {} must be nonnegative", self.theta_cap)));
        }
        if let ThetaPolicy::Fixed { theta } = self.theta {
            if !(theta >= self.theta_min) {
                return Err(PadmmError::Config(format!("fixed theta {theta} below theta_min {}", self.theta_min)));
            }
        }
        if !(self.m_floor > 0.0 && self.m_ceiling >= self.m_floor && self.m_ceiling.is_finite()) {
            return Err(PadmmError::Config(format!("need 0 < m_floor <= m_ceiling, got {} and {}", self.m_floor, self.m_ceiling)));
        }
        if !(self.bb_growth >= 1.0) {
            return Err(PadmmError::Config(format!("bb_growth = {} must be at least 1", self.bb_growth)));
        }
        if !(self.theta_bar_inflation >= 1.0) {
            return Err(PadmmError::Config("theta_bar_inflation must be at least 1".into()));
        }
        self.hpe_config().validate()?;
        Ok(())
    }

    /// The kernel configuration this solver runs under.
    pub fn hpe_config(&self) -> HpeConfig {
        HpeConfig {
            sigma: self.sigma,
            theta_min: self.theta_min,
            c_min: 1.0,
            xi: self.xi,
            omega_lower: 1.0 / self.m_ceiling,
            omega_upper: 1.0 / self.m_floor,
            max_iters: self.max_iters,
            tol: self.tol,
        }
    }
}

/// What one iteration leaves behind for ergodic certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct PadmmIterate {
    pub w: BlockPoint,
    pub v: BlockPoint,
    /// `L_i ||x_i - x~_i||^2 / 4` per primal block.
    pub eps_blocks: Vec<f64>,
    pub theta: f64,
}

/// The step oracle: one sweep, the certificate `v = U(z - w)`, the choice of
/// `theta`, and the next Barzilai-Borwein metric.
pub struct PadmmOracle<'a> {
    problem: &'a MultiBlockProblem,
    cfg: PadmmConfig,
    knorm_sq: Vec<f64>,
    eta_cache: Option<(f64, Vec<f64>)>,
    /// Inverse-metric scalars of the current metric.
    m: Vec<f64>,
    bounds: Vec<ScalarBounds>,
    prev: Option<(BlockPoint, BlockPoint)>,
    lips_entry: Vec<f64>,
    pub history: Vec<PadmmIterate>,
}

impl<'a> PadmmOracle<'a> {
    pub fn new(problem: &'a MultiBlockProblem, cfg: &PadmmConfig) -> Result<Self, PadmmError> {
        cfg.validate()?;
        problem.validate()?;
        let knorm_sq = constraint_norms_sq(problem, cfg.seed);
        let beta0 = cfg.beta.beta(0);
        let eta = resolve_eta(problem, &cfg.proximal, beta0, &knorm_sq)?;
        let clamp = |x: f64| x.clamp(cfg.m_floor, cfg.m_ceiling);
        let mut m: Vec<f64> = eta.iter().map(|e| clamp(1.0 / e)).collect();
        m.push(clamp(beta0));
        let bounds = m
            .iter()
            .map(|m0| ScalarBounds { floor: cfg.m_floor, ceiling: (cfg.bb_growth * m0).min(cfg.m_ceiling) })
            .collect();
        let layout = problem.layout();
        let mut lips_entry = vec![0.0; layout.dim()];
        for (i, b) in problem.blocks.iter().enumerate() {
            lips_entry[layout.range(i)].iter_mut().for_each(|l| *l = b.lipschitz);
        }
        Ok(Self { problem, cfg: cfg.clone(), knorm_sq, eta_cache: None, m, bounds, prev: None, lips_entry, history: Vec::new() })
    }

    pub fn initial_metric(&self) -> BlockDiagonalMetric {
        BlockDiagonalMetric::from_inverse_scalars(self.problem.layout().sizes().to_vec(), self.m.clone()).expect("positive scalars")
    }

    pub fn inverse_scalars(&self) -> &[f64] {
        &self.m
    }

    fn eta(&mut self, beta: f64) -> Result<Vec<f64>, PadmmError> {
        if let Some((b, e)) = &self.eta_cache {
            if *b == beta {
                return Ok(e.clone());
            }
        }
        let e = resolve_eta(self.problem, &self.cfg.proximal, beta, &self.knorm_sq)?;
        self.eta_cache = Some((beta, e.clone()));
        Ok(e)
    }

    fn entry_scalars(&self, m: &[f64]) -> Vec<f64> {
        let layout = self.problem.layout();
        let mut out = vec![0.0; layout.dim()];
        for (i, mi) in m.iter().enumerate() {
            out[layout.range(i)].iter_mut().for_each(|o| *o = *mi);
        }
        out
    }

    fn pick_theta(&self, adap: f64) -> f64 {
        match self.cfg.theta {
            ThetaPolicy::Adaptive => adap.min(self.cfg.theta_cap),
            ThetaPolicy::Fixed { theta } => theta.min(adap),
        }
    }

    fn dense_theta_bar(&self, beta: f64, eta: &[f64], m_entry: &[f64]) -> f64 {
        let n = m_entry.len();
        if n > self.cfg.theta_bar_max_dim || n == 0 {
            return f64::NAN;
        }
        let layout = self.problem.layout();
        let mut u = DMatrix::zeros(n, n);
        let mut e = BlockPoint::zeros(layout);
        for j in 0..n {
            e.as_mut_slice()[j] = 1.0;
            let col = apply_u(self.problem, beta, eta, &e);
            u.column_mut(j).copy_from_slice(col.as_slice());
            e.as_mut_slice()[j] = 0.0;
        }
        let mdiag = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, m_entry.iter().map(|x| 1.0 / x)));
        let minv = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(m_entry));
        let a = u.transpose() * minv * &u;
        let gamma = gamma_matrix(&u, &mdiag, &self.lips_entry, self.cfg.sigma);
        theta_bar(&a, &gamma, self.cfg.theta_bar_inflation)
    }
}

fn oracle_err(e: impl std::fmt::Display) -> HpeError {
    HpeError::Oracle(e.to_string())
}

impl StepOracle for PadmmOracle<'_> {
    fn step(&mut self, k: usize, z: &BlockPoint, _metric: &dyn Metric, _cfg: &HpeConfig) -> Result<StepOutcome, HpeError> {
        let pb = self.problem;
        let p = pb.num_blocks();
        let beta = self.cfg.beta.beta(k);
        let eta = self.eta(beta).map_err(oracle_err)?;
        let sweep = block_sweep(pb, z, beta, &eta).map_err(oracle_err)?;
        let w = sweep.w;
        let d = z.sub(&w);
        let ud = apply_u(pb, beta, &eta, &d);

        let mut m_entry = self.entry_scalars(&self.m);
        let mut forms = DirectionForms::new(d.as_slice(), ud.as_slice(), &m_entry, &self.lips_entry);
        let adap = forms.theta_adap(self.cfg.sigma);
        let mut theta_adap = adap.unwrap_or(f64::NAN);
        let mut theta = adap.map_or(0.0, |a| self.pick_theta(a));
        let mut metric_override = None;
        if theta < self.cfg.theta_min {
            let ceiling_ok = |t: f64| self.m.iter().all(|m| m * t <= self.cfg.m_ceiling);
            match forms.best_shrink(self.cfg.sigma) {
                Some((t, th)) if th >= self.cfg.theta_min && ceiling_ok(t) => {
                    self.m.iter_mut().for_each(|m| *m *= t);
                    m_entry = self.entry_scalars(&self.m);
                    forms = DirectionForms::new(d.as_slice(), ud.as_slice(), &m_entry, &self.lips_entry);
                    theta_adap = forms.theta_adap(self.cfg.sigma).unwrap_or(th);
                    theta = self.pick_theta(theta_adap);
                    metric_override = Some(Box::new(
                        BlockDiagonalMetric::from_inverse_scalars(pb.layout().sizes().to_vec(), self.m.clone()).map_err(HpeError::from)?,
                    ) as Box<dyn Metric>);
                }
                _ => return Err(HpeError::Theta { iter: k + 1, theta, min: self.cfg.theta_min }),
            }
        }

        let eps_blocks: Vec<f64> = (0..p).map(|i| 0.25 * pb.blocks[i].lipschitz * d.block(i).iter().map(|x| x * x).sum::<f64>()).collect();
        let eps: f64 = eps_blocks.iter().sum();

        let native_next = z.with_data(z.as_slice().iter().zip(ud.as_slice().iter().zip(&m_entry)).map(|(z, (u, m))| z - (1.0 + theta) * m * u).collect());

        // s = U d + grad f(x~) - grad f(x) on the primal part; the dual part is U d itself
        let wx = pb.primal(&w);
        let grad_w = pb.f.grad(wx);
        let mut s = ud.clone();
        let np = pb.primal_dim();
        s.as_mut_slice()[..np].iter_mut().zip(grad_w.iter().zip(&sweep.grad_x)).for_each(|(s, (a, b))| *s += a - b);

        let next_metric = if self.cfg.bb {
            let next = match &self.prev {
                Some((wp, sp)) => {
                    let dx: Vec<Vec<f64>> = (0..=p).map(|i| w.block(i).iter().zip(wp.block(i)).map(|(a, b)| a - b).collect()).collect();
                    let ds: Vec<Vec<f64>> = (0..=p).map(|i| s.block(i).iter().zip(sp.block(i)).map(|(a, b)| a - b).collect()).collect();
                    bb_metric_update(&dx, &ds, &self.m, self.cfg.xi.xi(k), &self.bounds)
                }
                None => self.m.clone(),
            };
            self.m = next;
            Some(Box::new(BlockDiagonalMetric::from_inverse_scalars(pb.layout().sizes().to_vec(), self.m.clone()).map_err(HpeError::from)?) as Box<dyn Metric>)
        } else {
            None
        };

        let (_, pkkt) = pkkt_residual(z, pb).map_err(oracle_err)?;
        let feas_norm = norm(&pb.feasibility_residual(pb.primal(z)));
        let objective = pb.objective(wx);
        let theta_bar = self.dense_theta_bar(beta, &eta, &m_entry);

        if self.cfg.keep_history {
            self.history.push(PadmmIterate { w: w.clone(), v: ud.clone(), eps_blocks, theta });
        }
        self.prev = Some((w.clone(), s));

        let mut out = StepOutcome::new(HpeCertificate { y: w, v: ud, eps, c: 1.0, theta });
        out.metric_override = metric_override;
        out.next_metric = next_metric;
        out.native_next = Some(native_next);
        out.residual = Some(pkkt);
        out.padmm = Some(PadmmColumns { pkkt, feas_norm, objective, theta_adap, theta_bar, beta });
        Ok(out)
    }
}

pub struct PadmmResult {
    pub z: BlockPoint,
    pub trace: hpe::IterTrace,
    pub termination: Termination,
    /// `||R(z)||` at the returned point.
    pub pkkt: f64,
    pub inverse_scalars: Vec<f64>,
    pub history: Vec<PadmmIterate>,
}

impl PadmmResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Runs the multi-block proximal ADMM through the HPE kernel from `z0`
/// (zero when `None`). Every iteration's certificate is verified by the kernel.
pub fn run_padmm(
    problem: &MultiBlockProblem,
    cfg: &PadmmConfig,
    z0: Option<BlockPoint>,
    reference: Option<BlockPoint>,
) -> Result<PadmmResult, PadmmError> {
    let mut oracle = PadmmOracle::new(problem, cfg)?;
    let z0 = z0.unwrap_or_else(|| problem.zero_point());
    let m0 = Box::new(oracle.initial_metric());
    let opts = RunOptions { stop: cfg.stop, reference, ergodic: true, metric_probes: 8, seed: cfg.seed };
    let res = hpe::run(&mut oracle, z0, m0, &cfg.hpe_config(), &opts)?;
    let pkkt = match (res.termination, res.trace.last().and_then(|r| r.residual)) {
        (Termination::Converged, Some(r)) if cfg.stop == StopRule::OracleResidual => r,
        _ => pkkt_residual(&res.x, problem)?.1,
    };
    Ok(PadmmResult {
        z: res.x,
        trace: res.trace,
        termination: res.termination,
        pkkt,
        inverse_scalars: oracle.m.clone(),
        history: std::mem::take(&mut oracle.history),
    })
}
