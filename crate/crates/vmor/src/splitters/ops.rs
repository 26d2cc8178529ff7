use std::sync::Arc;

use crate::linops::LinearMap;
use crate::prox::SmoothFn;

/// A single-valued operator on `R^n`.
pub trait Operator: Send + Sync {
    fn dim(&self) -> usize;
    fn eval_into(&self, x: &[f64], out: &mut [f64]);

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ZeroOperator(pub usize);

impl Operator for ZeroOperator {
    fn dim(&self) -> usize {
        self.0
    }
    fn eval_into(&self, _: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
}

/// `x -> A x + shift` for a square map `A`.
#[derive(Clone)]
pub struct AffineOperator {
    pub map: Arc<dyn LinearMap>,
    pub shift: Vec<f64>,
}

impl AffineOperator {
    pub fn linear(map: Arc<dyn LinearMap>) -> Self {
        let n = map.nrows();
        Self { map, shift: vec![0.0; n] }
    }
}

impl Operator for AffineOperator {
    fn dim(&self) -> usize {
        self.map.nrows()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.map.forward_into(x, out);
        for (o, s) in out.iter_mut().zip(&self.shift) {
            *o += s;
        }
    }
}

/// The gradient of a smooth function.
#[derive(Clone)]
pub struct GradientOperator(pub Arc<dyn SmoothFn>);

impl Operator for GradientOperator {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.0.grad_into(x, out)
    }
}
