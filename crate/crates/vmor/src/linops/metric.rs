use std::fmt::Debug;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use super::block::{dot, BlockPoint};
use super::LinopError;

/// A self-adjoint positive-definite operator with a solve and known spectral
/// bounds `lower() * I <= M <= upper() * I`.
pub trait Metric: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[f64], out: &mut [f64]);
    fn solve_into(&self, x: &[f64], out: &mut [f64]);
    fn lower(&self) -> f64;
    fn upper(&self) -> f64;

    /// Block sizes and per-block scalars `d_i` when the metric is `Diag(d_i I)`.
    fn block_scalars(&self) -> Option<(Vec<usize>, Vec<f64>)> {
        None
    }

    fn clone_box(&self) -> Box<dyn Metric>;

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        out
    }

    fn solve(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.solve_into(x, &mut out);
        out
    }

    /// `<x, Mx>`
    fn quad(&self, x: &[f64]) -> f64 {
        dot(x, &self.apply(x))
    }
}

impl Clone for Box<dyn Metric> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// `<v, Mv>` with a layout check.
pub fn weighted_norm_sq(m: &dyn Metric, v: &BlockPoint) -> Result<f64, LinopError> {
    if m.dim() != v.len() {
        return Err(LinopError::Dimension { expected: m.dim(), got: v.len() });
    }
    if let Some((sizes, _)) = m.block_scalars() {
        if sizes != v.layout().sizes() {
            return Err(LinopError::Layout {
                left: format!("{sizes:?}"),
                right: v.layout().to_string(),
            });
        }
    }
    Ok(m.quad(v.as_slice()).max(0.0))
}

/// `d * I`.
#[derive(Debug, Clone)]
pub struct ScalarMetric {
    pub dim: usize,
    pub d: f64,
}

impl ScalarMetric {
    pub fn identity(dim: usize) -> Self {
        Self { dim, d: 1.0 }
    }
}

impl Metric for ScalarMetric {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, xi) in out.iter_mut().zip(x) {
            *o = self.d * xi;
        }
    }
    fn solve_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, xi) in out.iter_mut().zip(x) {
            *o = xi / self.d;
        }
    }
    fn lower(&self) -> f64 {
        self.d
    }
    fn upper(&self) -> f64 {
        self.d
    }
    fn block_scalars(&self) -> Option<(Vec<usize>, Vec<f64>)> {
        Some((vec![self.dim], vec![self.d]))
    }
    fn clone_box(&self) -> Box<dyn Metric> {
        Box::new(self.clone())
    }
}

/// `Diag(I / m_1, ..., I / m_q)` parameterized by its inverse scalars `m_i`.
///
/// `solve` multiplies by `m_i` and `apply` divides by it, so the stored numbers
/// are exactly the inverse-metric entries an adaptive rule produces.
#[derive(Debug, Clone)]
pub struct BlockDiagonalMetric {
    sizes: Vec<usize>,
    inverse: Vec<f64>,
}

impl BlockDiagonalMetric {
    pub fn from_inverse_scalars(sizes: Vec<usize>, inverse: Vec<f64>) -> Result<Self, LinopError> {
        if sizes.len() != inverse.len() {
            return Err(LinopError::Dimension { expected: sizes.len(), got: inverse.len() });
        }
        if let Some(bad) = inverse.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(LinopError::NotPositiveDefinite(format!("inverse scalar {bad}")));
        }
        Ok(Self { sizes, inverse })
    }

    pub fn from_metric_scalars(sizes: Vec<usize>, d: Vec<f64>) -> Result<Self, LinopError> {
        let inverse = d.iter().map(|x| 1.0 / x).collect();
        Self::from_inverse_scalars(sizes, inverse)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn inverse_scalars(&self) -> &[f64] {
        &self.inverse
    }

    fn for_blocks(&self, x: &[f64], out: &mut [f64], f: impl Fn(f64, f64) -> f64) {
        let mut off = 0;
        for (&n, &m) in self.sizes.iter().zip(&self.inverse) {
            for j in off..off + n {
                out[j] = f(x[j], m);
            }
            off += n;
        }
    }
}

impl Metric for BlockDiagonalMetric {
    fn dim(&self) -> usize {
        self.sizes.iter().sum()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.for_blocks(x, out, |v, m| v / m);
    }
    fn solve_into(&self, x: &[f64], out: &mut [f64]) {
        self.for_blocks(x, out, |v, m| v * m);
    }
    fn lower(&self) -> f64 {
        1.0 / self.inverse.iter().cloned().fold(f64::MIN_POSITIVE, f64::max)
    }
    fn upper(&self) -> f64 {
        1.0 / self.inverse.iter().cloned().fold(f64::INFINITY, f64::min)
    }
    fn block_scalars(&self) -> Option<(Vec<usize>, Vec<f64>)> {
        Some((self.sizes.clone(), self.inverse.iter().map(|m| 1.0 / m).collect()))
    }
    fn clone_box(&self) -> Box<dyn Metric> {
        Box::new(self.clone())
    }
}

/// A dense SPD metric with a Cholesky solve.
#[derive(Debug, Clone)]
pub struct DenseMetric {
    mat: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    lower: f64,
    upper: f64,
}

impl DenseMetric {
    /// Rejects matrices that are not symmetric to 1e-10 relative or not positive definite.
    pub fn new(mat: DMatrix<f64>) -> Result<Self, LinopError> {
        if !mat.is_square() {
            return Err(LinopError::Shape(format!("metric must be square, got {:?}", mat.shape())));
        }
        let scale = mat.amax().max(1.0);
        let asym = (&mat - mat.transpose()).amax();
        if asym > 1e-10 * scale {
            return Err(LinopError::NotPositiveDefinite(format!("asymmetry {asym:.3e}")));
        }
        let sym = (&mat + mat.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym.clone());
        let lower = eig.eigenvalues.min();
        let upper = eig.eigenvalues.max();
        if !(lower > 0.0) {
            return Err(LinopError::NotPositiveDefinite(format!("smallest eigenvalue {lower:.3e}")));
        }
        let chol = Cholesky::new(sym.clone())
            .ok_or_else(|| LinopError::NotPositiveDefinite("Cholesky failed".into()))?;
        Ok(Self { mat: sym, chol, lower, upper })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }
}

impl Metric for DenseMetric {
    fn dim(&self) -> usize {
        self.mat.nrows()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let y = &self.mat * DVector::from_column_slice(x);
        out.copy_from_slice(y.as_slice());
    }
    fn solve_into(&self, x: &[f64], out: &mut [f64]) {
        let y = self.chol.solve(&DVector::from_column_slice(x));
        out.copy_from_slice(y.as_slice());
    }
    fn lower(&self) -> f64 {
        self.lower
    }
    fn upper(&self) -> f64 {
        self.upper
    }
    fn clone_box(&self) -> Box<dyn Metric> {
        Box::new(self.clone())
    }
}

/// Dense matrix of any metric, built column by column.
pub fn metric_to_dense(m: &dyn Metric) -> DMatrix<f64> {
    let n = m.dim();
    let mut a = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        m.apply_into(&e, &mut col);
        a.column_mut(j).copy_from_slice(&col);
        e[j] = 0.0;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_and_scaled_norms() {
        let v = BlockPoint::from_vec(vec![3.0, 4.0]);
        assert_eq!(weighted_norm_sq(&ScalarMetric::identity(2), &v).unwrap(), 25.0);
        let m = BlockDiagonalMetric::from_metric_scalars(vec![2], vec![2.0]).unwrap();
        let w = BlockPoint::from_vec(vec![1.0, 1.0]);
        assert_eq!(weighted_norm_sq(&m, &w).unwrap(), 4.0);
    }

    #[test]
    fn dimension_and_layout_mismatch() {
        let v = BlockPoint::from_vec(vec![1.0; 3]);
        assert!(weighted_norm_sq(&ScalarMetric::identity(2), &v).is_err());
        let m = BlockDiagonalMetric::from_metric_scalars(vec![1, 2], vec![1.0, 2.0]).unwrap();
        let w = BlockPoint::from_blocks(vec![vec![1.0, 2.0], vec![3.0]]);
        assert!(weighted_norm_sq(&m, &w).is_err());
    }

    #[test]
    fn dense_metric_rejects_indefinite_and_asymmetric() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(DenseMetric::new(bad).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(DenseMetric::new(asym).is_err());
        let ok = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let m = DenseMetric::new(ok).unwrap();
        assert!((m.lower() - 1.0).abs() < 1e-12 && (m.upper() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn block_diagonal_bounds() {
        let m = BlockDiagonalMetric::from_inverse_scalars(vec![2, 1], vec![0.5, 4.0]).unwrap();
        assert_eq!(m.lower(), 0.25);
        assert_eq!(m.upper(), 2.0);
        assert_eq!(m.apply(&[1.0, 1.0, 1.0]), vec![2.0, 2.0, 0.25]);
        assert!(BlockDiagonalMetric::from_inverse_scalars(vec![1], vec![0.0]).is_err());
    }
}
