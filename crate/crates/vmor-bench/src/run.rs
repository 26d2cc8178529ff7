use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use vmor::hpe::{HpeError, IterTrace, RunOptions, StopRule, Termination, XiSchedule};
use vmor::linops::BlockPoint;
use vmor::padmm::{run_padmm, BetaSchedule, PadmmConfig, PadmmError, PadmmOracle, ThetaPolicy};
use vmor::prox::{AffineSet, ProxFn, QpInstance};
use vmor::splitters::{qp_splitter, run_splitter_with, SplitterError};

use crate::config::{Algorithm, ExperimentConfig};
use crate::problem::{build_problem, Problem};

/// Exit code 2 for `Config`, 3 for `Abort`.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Abort(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "configuration error: {m}"),
            RunError::Abort(m) => write!(f, "solver aborted: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<crate::config::ConfigError> for RunError {
    fn from(e: crate::config::ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

fn hpe_error(e: HpeError) -> RunError {
    match e {
        HpeError::Config(m) => RunError::Config(m),
        other => RunError::Abort(other.to_string()),
    }
}

fn splitter_error(e: SplitterError) -> RunError {
    match e {
        SplitterError::Hpe(h) => hpe_error(h),
        other => RunError::Config(other.to_string()),
    }
}

fn padmm_error(e: PadmmError) -> RunError {
    match e {
        PadmmError::Hpe(h) => hpe_error(h),
        PadmmError::Config(m) => RunError::Config(m),
        PadmmError::Prox(p) => RunError::Abort(p.to_string()),
    }
}

pub struct RunOutput {
    pub trace: IterTrace,
    pub termination: Termination,
    pub wall_time_s: f64,
    pub z: BlockPoint,
    /// `||R(z)||` for the ADMM, the KKT residual of the primal-dual estimate for splitters on a QP.
    pub final_residual: Option<f64>,
    /// `||x - x*||` when the problem has a reference solution.
    pub error_to_reference: Option<f64>,
    /// `||X - XZ - GX - E||_F` on LRR instances.
    pub lrr_feasibility: Option<f64>,
}

impl RunOutput {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

pub fn padmm_config(cfg: &ExperimentConfig) -> PadmmConfig {
    PadmmConfig {
        beta: BetaSchedule::Constant { beta: cfg.beta },
        sigma: cfg.sigma,
        theta: match cfg.theta {
            Some(theta) => ThetaPolicy::Fixed { theta },
            None => ThetaPolicy::Adaptive,
        },
        xi: if cfg.xi0 > 0.0 { XiSchedule::InverseSquare { xi0: cfg.xi0 } } else { XiSchedule::Zero },
        max_iters: cfg.max_iters,
        tol: cfg.tol,
        stop: StopRule::OracleResidual,
        seed: cfg.seed,
        ..Default::default()
    }
}

/// `min_y ||(Qx + c + A'y, Ax - b)||` with the least-squares multiplier.
fn primal_kkt_residual(inst: &QpInstance, x: &[f64]) -> f64 {
    let a = inst.stacked_a();
    let xv = DVector::from_column_slice(x);
    let g = inst.block_q() * &xv + inst.stacked_c();
    let gram = &a * a.transpose();
    let y = gram.cholesky().map(|c| c.solve(&(-(&a * &g)))).unwrap_or_else(|| DVector::zeros(inst.dual_dim()));
    inst.kkt_residual(x, y.as_slice())
}

fn splitter_residual(alg: Algorithm, inst: &QpInstance, z: &BlockPoint) -> Option<f64> {
    match alg {
        Algorithm::Ppg => {
            let n = inst.primal_dim();
            let p = z.num_blocks();
            let mut mean = vec![0.0; n];
            for i in 0..p {
                mean.iter_mut().zip(z.block(i)).for_each(|(m, v)| *m += v / p as f64);
            }
            let proj = AffineSet::new(inst.stacked_a(), inst.b.clone()).ok()?.prox(1.0, &mean).ok()?;
            Some(primal_kkt_residual(inst, &proj))
        }
        _ => Some(inst.kkt_residual(z.block(0), z.block(1))),
    }
}

fn primal_error(alg: Algorithm, inst: &QpInstance, z: &BlockPoint) -> f64 {
    let x: Vec<f64> = match alg {
        Algorithm::PadmmEbb => z.as_slice()[..inst.primal_dim()].to_vec(),
        Algorithm::Ppg => {
            let p = z.num_blocks();
            let mut mean = vec![0.0; inst.primal_dim()];
            for i in 0..p {
                mean.iter_mut().zip(z.block(i)).for_each(|(m, v)| *m += v / p as f64);
            }
            AffineSet::new(inst.stacked_a(), inst.b.clone()).and_then(|s| s.prox(1.0, &mean)).unwrap_or(mean)
        }
        _ => z.block(0).to_vec(),
    };
    inst.primal_norm_gap(&x)
}

pub fn run_problem(cfg: &ExperimentConfig, problem: &Problem) -> Result<RunOutput, RunError> {
    cfg.validate()?;
    let start = Instant::now();
    match (cfg.algorithm, problem) {
        (Algorithm::PadmmEbb, Problem::Qp(inst)) => {
            let mb = inst.problem();
            let pc = padmm_config(cfg);
            PadmmOracle::new(&mb, &pc).map_err(padmm_error)?;
            let res = run_padmm(&mb, &pc, None, Some(inst.z_star())).map_err(padmm_error)?;
            let error = primal_error(cfg.algorithm, inst, &res.z);
            Ok(RunOutput {
                wall_time_s: start.elapsed().as_secs_f64(),
                final_residual: Some(res.pkkt),
                error_to_reference: Some(error),
                lrr_feasibility: None,
                termination: res.termination,
                trace: res.trace,
                z: res.z,
            })
        }
        (Algorithm::PadmmEbb, Problem::Lrr(inst)) => {
            let pc = padmm_config(cfg);
            PadmmOracle::new(&inst.problem, &pc).map_err(padmm_error)?;
            let res = run_padmm(&inst.problem, &pc, None, None).map_err(padmm_error)?;
            let feas = inst.data_residual(inst.problem.primal(&res.z));
            Ok(RunOutput {
                wall_time_s: start.elapsed().as_secs_f64(),
                final_residual: Some(res.pkkt),
                error_to_reference: None,
                lrr_feasibility: Some(feas),
                termination: res.termination,
                trace: res.trace,
                z: res.z,
            })
        }
        (alg, Problem::Qp(inst)) => {
            let mut params = cfg.splitter.clone();
            if cfg.theta.is_some() {
                params.theta = cfg.theta;
            }
            let (s, star) = qp_splitter(alg.as_str(), inst, cfg.sigma, &params).map_err(splitter_error)?;
            let z0 = BlockPoint::zeros(star.layout().clone());
            let opts = RunOptions { stop: StopRule::Certificate, reference: Some(star), ergodic: true, metric_probes: 4, seed: cfg.seed };
            let res = run_splitter_with(s.as_ref(), z0, cfg.max_iters, cfg.tol, &opts).map_err(splitter_error)?;
            Ok(RunOutput {
                wall_time_s: start.elapsed().as_secs_f64(),
                final_residual: splitter_residual(alg, inst, &res.x),
                error_to_reference: Some(primal_error(alg, inst, &res.x)),
                lrr_feasibility: None,
                termination: res.termination,
                trace: res.trace,
                z: res.x,
            })
        }
        (alg, p) => Err(RunError::Config(format!("{alg} is not available for {} problems; use padmm-ebb", p.kind()))),
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Problem, RunOutput), RunError> {
    cfg.validate()?;
    let problem = build_problem(&cfg.problem, cfg.seed)?;
    let out = run_problem(cfg, &problem)?;
    Ok((problem, out))
}

/// Reference `(x*, y*)` of a QP with its KKT residual.
pub fn qp_reference(inst: &QpInstance) -> (Vec<f64>, Vec<f64>, f64) {
    let r = inst.kkt_residual(&inst.x_star, &inst.y_star);
    (inst.x_star.clone(), inst.y_star.clone(), r)
}

/// `1 / sigma_min` of the monotone KKT operator `(x, y) -> (Qx + A'y, -Ax)`.
pub fn kkt_subregularity_modulus(inst: &QpInstance) -> f64 {
    let (n, m) = (inst.primal_dim(), inst.dual_dim());
    let a = inst.stacked_a();
    let mut k = DMatrix::zeros(n + m, n + m);
    k.view_mut((0, 0), (n, n)).copy_from(&inst.block_q());
    k.view_mut((0, n), (n, m)).copy_from(&a.transpose());
    k.view_mut((n, 0), (m, n)).copy_from(&(-a));
    1.0 / k.singular_values().min()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_algorithm_solves_a_small_qp() {
        for alg in Algorithm::ALL {
            let cfg = ExperimentConfig { algorithm: alg, tol: 1e-9, max_iters: 20_000, ..Default::default() };
            let (_, out) = run_experiment(&cfg).unwrap();
            assert_eq!(out.termination, Termination::Converged, "{alg}");
            assert!(out.error_to_reference.unwrap() < 1e-5, "{alg}: {:?}", out.error_to_reference);
            assert!(out.final_residual.unwrap() < 1e-5, "{alg}: {:?}", out.final_residual);
        }
    }

    #[test]
    fn lrr_needs_the_admm() {
        let cfg = ExperimentConfig { algorithm: Algorithm::CondatVu, problem: "lrr:d=3,n=4".into(), ..Default::default() };
        assert!(matches!(run_experiment(&cfg), Err(RunError::Config(_))));
    }

    #[test]
    fn violated_step_condition_is_a_config_error() {
        let mut cfg = ExperimentConfig { algorithm: Algorithm::CondatVu, ..Default::default() };
        cfg.splitter.r = Some(1e-3);
        cfg.splitter.s = Some(1e-3);
        let Err(RunError::Config(m)) = run_experiment(&cfg) else { panic!("expected a config error") };
        assert!(m.contains("r - ||B||^2 / s"), "{m}");
    }
}
