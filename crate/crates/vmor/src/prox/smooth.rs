use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::linops::{dot, LinearMap};

/// A convex differentiable function with an `L`-Lipschitz gradient.
pub trait SmoothFn: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn grad_into(&self, x: &[f64], out: &mut [f64]);
    fn lipschitz(&self) -> f64;

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.grad_into(x, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ZeroSmooth(pub usize);

impl SmoothFn for ZeroSmooth {
    fn dim(&self) -> usize {
        self.0
    }
    fn value(&self, _: &[f64]) -> f64 {
        0.0
    }
    fn grad_into(&self, _: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }
    fn lipschitz(&self) -> f64 {
        0.0
    }
}

/// `x' Q x / 2 + c' x` with `Q` symmetric positive semidefinite.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
    lip: f64,
}

impl Quadratic {
    pub fn new(q: DMatrix<f64>, c: DVector<f64>) -> Self {
        let sym = (&q + q.transpose()) * 0.5;
        let lip = SymmetricEigen::new(sym.clone()).eigenvalues.max().max(0.0);
        Self { q: sym, c, lip }
    }

    /// `||x - a||^2 / 2`
    pub fn distance_to(a: &[f64]) -> Self {
        let n = a.len();
        Self::new(DMatrix::identity(n, n), -DVector::from_column_slice(a))
    }
}

impl SmoothFn for Quadratic {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let qx = self.q.forward(x);
        0.5 * dot(x, &qx) + dot(self.c.as_slice(), x)
    }
    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        self.q.forward_into(x, out);
        for (o, c) in out.iter_mut().zip(self.c.iter()) {
            *o += c;
        }
    }
    fn lipschitz(&self) -> f64 {
        self.lip
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_and_constant() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 5.0]);
        let f = Quadratic::new(q, DVector::from_vec(vec![1.0, -1.0]));
        assert_eq!(f.grad(&[1.0, 1.0]), vec![3.0, 4.0]);
        assert!((f.lipschitz() - 5.0).abs() < 1e-12);
        assert!((f.value(&[1.0, 1.0]) - 3.5).abs() < 1e-12);
    }
}
