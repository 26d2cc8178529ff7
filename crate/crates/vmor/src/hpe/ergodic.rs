use serde::{Deserialize, Serialize};

use super::HpeError;
use crate::linops::{dot, BlockPoint};

/// Weight sequences `alpha_i`, with `i` counted from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    Uniform,
    Linear,
}

impl Weighting {
    pub fn alpha(self, i: usize) -> f64 {
        match self {
            Weighting::Uniform => 1.0,
            Weighting::Linear => i as f64,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ErgodicItem<'a> {
    pub y: &'a BlockPoint,
    pub v: &'a BlockPoint,
    pub eps: f64,
    pub theta: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ergodic {
    pub y_bar: BlockPoint,
    pub v_bar: BlockPoint,
    pub eps_bar: f64,
}

/// Weighted aggregates with weights `tau_i alpha_i`, `tau_i = (1 + theta_i) c_i`:
/// the means of `y` and `v`, and
/// `eps_bar = sum tau alpha (eps_i + <y_i - y_bar, v_i - v_bar>) / sum tau alpha`.
pub fn ergodic_aggregate(items: &[ErgodicItem<'_>], alpha: &[f64]) -> Result<Ergodic, HpeError> {
    if items.is_empty() || items.len() != alpha.len() {
        return Err(HpeError::Config(format!("{} items with {} weights", items.len(), alpha.len())));
    }
    let w: Vec<f64> = items.iter().zip(alpha).map(|(it, a)| (1.0 + it.theta) * it.c * a).collect();
    if w.iter().any(|x| *x < 0.0) {
        return Err(HpeError::Config("negative aggregate weight".into()));
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(HpeError::Config("all aggregate weights are zero".into()));
    }
    let mut y_bar = items[0].y.zeros_like();
    let mut v_bar = items[0].v.zeros_like();
    for (it, wi) in items.iter().zip(&w) {
        y_bar.axpy(wi / total, it.y);
        v_bar.axpy(wi / total, it.v);
    }
    let mut acc = 0.0;
    for (it, wi) in items.iter().zip(&w) {
        let dy = it.y.sub(&y_bar);
        let dv = it.v.sub(&v_bar);
        acc += wi * (it.eps + dy.dot(&dv));
    }
    Ok(Ergodic { y_bar, v_bar, eps_bar: acc / total })
}

/// Streaming form of [`ergodic_aggregate`], exact up to rounding, O(n) memory.
#[derive(Debug, Clone)]
pub struct ErgodicAccumulator {
    total: f64,
    sum_y: Vec<f64>,
    sum_v: Vec<f64>,
    sum_eps: f64,
    // sum w <y_i - shift, v_i>, with shift = first y to limit cancellation
    sum_cross: f64,
    shift: Option<Vec<f64>>,
}

impl Default for ErgodicAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl ErgodicAccumulator {
    pub fn new() -> Self {
        Self { total: 0.0, sum_y: vec![], sum_v: vec![], sum_eps: 0.0, sum_cross: 0.0, shift: None }
    }

    pub fn push(&mut self, item: ErgodicItem<'_>, alpha: f64) {
        let w = (1.0 + item.theta) * item.c * alpha;
        let y = item.y.as_slice();
        let v = item.v.as_slice();
        let shift = self.shift.get_or_insert_with(|| y.to_vec());
        if self.sum_y.is_empty() {
            self.sum_y = vec![0.0; y.len()];
            self.sum_v = vec![0.0; v.len()];
        }
        for (s, (a, b)) in self.sum_y.iter_mut().zip(y.iter().zip(shift.iter())) {
            *s += w * (a - b);
        }
        for (s, a) in self.sum_v.iter_mut().zip(v) {
            *s += w * a;
        }
        let cross: f64 = y.iter().zip(shift.iter()).zip(v).map(|((a, b), c)| (a - b) * c).sum();
        self.sum_cross += w * cross;
        self.sum_eps += w * item.eps;
        self.total += w;
    }

    pub fn total_weight(&self) -> f64 {
        self.total
    }

    /// `(||v_bar||, eps_bar)`, or `None` before any positive weight.
    pub fn summary(&self) -> Option<(f64, f64)> {
        if !(self.total > 0.0) {
            return None;
        }
        let w = self.total;
        let vbar: Vec<f64> = self.sum_v.iter().map(|s| s / w).collect();
        let ybar_shifted: Vec<f64> = self.sum_y.iter().map(|s| s / w).collect();
        let eps = (self.sum_eps + self.sum_cross - w * dot(&ybar_shifted, &vbar)) / w;
        Some((dot(&vbar, &vbar).sqrt(), eps))
    }

    pub fn current(&self, like: &BlockPoint) -> Option<Ergodic> {
        let (_, eps_bar) = self.summary()?;
        let w = self.total;
        let shift = self.shift.as_ref()?;
        let y: Vec<f64> = self.sum_y.iter().zip(shift).map(|(s, b)| s / w + b).collect();
        let v: Vec<f64> = self.sum_v.iter().map(|s| s / w).collect();
        Some(Ergodic { y_bar: like.with_data(y), v_bar: like.with_data(v), eps_bar })
    }
}
