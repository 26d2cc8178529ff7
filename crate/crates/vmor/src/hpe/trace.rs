use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str = "iter,time_s,v_norm,eps,theta,criterion_slack,step_norm,metric_min,metric_max,dist_to_ref";
pub const PADMM_HEADER: &str = "pkkt,feas_norm,objective,theta_adap,theta_bar,beta";

/// Extra per-iteration quantities reported by the multi-block ADMM oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PadmmColumns {
    pub pkkt: f64,
    pub feas_norm: f64,
    pub objective: f64,
    pub theta_adap: f64,
    pub theta_bar: f64,
    pub beta: f64,
}

/// `(||v_bar||, eps_bar)` for the uniform and the linear weight sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgodicColumns {
    pub uniform_v: f64,
    pub uniform_eps: f64,
    pub linear_v: f64,
    pub linear_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    /// 1-based iteration counter.
    pub iter: usize,
    pub time_s: f64,
    pub v_norm: f64,
    pub eps: f64,
    pub theta: f64,
    pub c: f64,
    pub xi: f64,
    /// `(rhs - lhs) / (1 + rhs)` of the relative error criterion.
    pub criterion_slack: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `||x - y||_{M_k}`
    pub step_norm: f64,
    /// `||c M^{-1} v||_{M_k}^2`
    pub corr_sq: f64,
    pub c_eps: f64,
    pub metric_min: f64,
    pub metric_max: f64,
    /// `||x^k - x*||_{M_k}`
    pub dist_to_ref: Option<f64>,
    /// `||x^{k+1} - x*||_{M_{k+1}}`
    pub dist_next: Option<f64>,
    /// `||x^{k+1} (kernel) - x^{k+1} (native update)||`
    pub native_gap: Option<f64>,
    /// Oracle-defined stopping residual at `x^k`.
    pub residual: Option<f64>,
    pub ergodic: Option<ErgodicColumns>,
    pub padmm: Option<PadmmColumns>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterTrace {
    pub records: Vec<IterRecord>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl IterTrace {
    pub fn push(&mut self, r: IterRecord) {
        self.records.push(r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterRecord> {
        self.records.last()
    }

    pub fn has_padmm(&self) -> bool {
        self.records.iter().any(|r| r.padmm.is_some())
    }

    pub fn to_csv(&self) -> String {
        let padmm = self.has_padmm();
        let mut s = String::from(CSV_HEADER);
        if padmm {
            s.push(',');
            s.push_str(PADMM_HEADER);
        }
        s.push('\n');
        for r in &self.records {
            let _ = write!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                r.iter,
                r.time_s,
                r.v_norm,
                r.eps,
                r.theta,
                r.criterion_slack,
                r.step_norm,
                r.metric_min,
                r.metric_max,
                opt(r.dist_to_ref)
            );
            if padmm {
                match r.padmm {
                    Some(p) => {
                        let _ = write!(s, ",{},{},{},{},{},{}", p.pkkt, p.feas_norm, p.objective, p.theta_adap, p.theta_bar, p.beta);
                    }
                    None => s.push_str(",,,,,,"),
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }

    /// Running minima of `||v||` and `eps`.
    pub fn running_minima(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.records.len());
        let (mut mv, mut me) = (f64::INFINITY, f64::INFINITY);
        for r in &self.records {
            mv = mv.min(r.v_norm);
            me = me.min(r.eps);
            out.push((mv, me));
        }
        out
    }
}

/// Relative slack of the Fejer-type inequality
/// `||x^{k+1} - x*||^2_{M_{k+1}} <= (1 + xi)||x^k - x*||^2_{M_k} - (1 - sigma)(1 + xi)(1 + theta)||x^k - y^k||^2_{M_k}`,
/// divided by `1 + ||x^k - x*||^2`. `None` without a reference point.
pub fn fejer_slack(r: &IterRecord, sigma: f64) -> Option<f64> {
    let d = r.dist_to_ref?;
    let dn = r.dist_next?;
    let g = 1.0 + r.xi;
    let rhs = g * d * d - (1.0 - sigma) * g * (1.0 + r.theta) * r.step_norm * r.step_norm;
    Some((rhs - dn * dn) / (1.0 + d * d))
}

/// Least-squares slope of `ln value` against `ln k`; nonpositive values are skipped.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(k, v)| *k > 0.0 && *v > 0.0 && v.is_finite())
        .map(|(k, v)| (k.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = (1..50).map(|k| (k as f64, 3.0 / k as f64)).collect();
        assert!((loglog_slope(&pts).unwrap() + 1.0).abs() < 1e-12);
        assert!(loglog_slope(&pts[..1]).is_none());
    }
}
