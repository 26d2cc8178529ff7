use serde::Serialize;
use vmor::hpe::{loglog_slope, IterTrace, Termination};

use crate::config::ExperimentConfig;
use crate::run::RunOutput;

pub const SCHEMA: u32 = 1;

/// Fewer iterations than this leave every slope `null`.
pub const MIN_SLOPE_ITERS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalValues {
    pub v_norm: f64,
    pub eps: f64,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slopes {
    /// Running minimum of `||v^k||`.
    pub pointwise_v: Option<f64>,
    pub ergodic_uniform_v: Option<f64>,
    pub ergodic_linear_v: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub problem_kind: String,
    pub iterations: usize,
    pub termination: Termination,
    pub wall_time_s: f64,
    #[serde(rename = "final")]
    pub final_values: FinalValues,
    /// Smallest per-iteration residual: the oracle's when it reports one, else `max(||v||, eps)`.
    pub min_residual: Option<f64>,
    pub error_to_reference: Option<f64>,
    pub lrr_feasibility: Option<f64>,
    pub slopes: Slopes,
}

fn residual(r: &vmor::hpe::IterRecord) -> f64 {
    r.residual.unwrap_or(r.v_norm.max(r.eps))
}

/// Log-log slopes over `k` in `[ceil(N/10), N]`.
pub fn slopes(trace: &IterTrace) -> Slopes {
    let n = trace.len();
    if n < MIN_SLOPE_ITERS {
        return Slopes { pointwise_v: None, ergodic_uniform_v: None, ergodic_linear_v: None };
    }
    let lo = n.div_ceil(10).max(1);
    let minima = trace.running_minima();
    let pick = |f: &dyn Fn(usize) -> Option<f64>| -> Option<f64> {
        let pts: Vec<(f64, f64)> = (lo..=n).filter_map(|k| f(k - 1).map(|v| (k as f64, v))).collect();
        loglog_slope(&pts)
    };
    let rec = &trace.records;
    Slopes {
        pointwise_v: pick(&|i| Some(minima[i].0)),
        ergodic_uniform_v: pick(&|i| rec[i].ergodic.map(|e| e.uniform_v)),
        ergodic_linear_v: pick(&|i| rec[i].ergodic.map(|e| e.linear_v)),
    }
}

pub fn summarize(cfg: &ExperimentConfig, kind: &str, out: &RunOutput) -> RunSummary {
    let last = out.trace.last();
    RunSummary {
        schema: SCHEMA,
        config: cfg.clone(),
        problem_kind: kind.to_string(),
        iterations: out.iterations(),
        termination: out.termination,
        wall_time_s: out.wall_time_s,
        final_values: FinalValues {
            v_norm: last.map_or(f64::NAN, |r| r.v_norm),
            eps: last.map_or(f64::NAN, |r| r.eps),
            residual: out.final_residual,
        },
        min_residual: out.trace.records.iter().map(residual).filter(|r| r.is_finite()).reduce(f64::min),
        error_to_reference: out.error_to_reference,
        lrr_feasibility: out.lrr_feasibility,
        slopes: slopes(&out.trace),
    }
}

impl RunSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::run::run_experiment;

    #[test]
    fn single_iteration_has_no_slopes() {
        let mut t = IterTrace::default();
        let (_, out) = run_experiment(&ExperimentConfig { max_iters: 1, ..Default::default() }).unwrap();
        t.records = out.trace.records.clone();
        assert_eq!(t.len(), 1);
        let s = slopes(&t);
        assert!(s.pointwise_v.is_none() && s.ergodic_uniform_v.is_none() && s.ergodic_linear_v.is_none());
        let json: serde_json::Value = serde_json::from_str(&summarize(&ExperimentConfig::default(), "qp", &out).to_json()).unwrap();
        assert!(json["slopes"]["pointwise_v"].is_null());
        assert_eq!(json["schema"], 1);
    }
}
