use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SVD};

use super::ProxError;

/// A closed convex function with an accessible proximal map
/// `prox_{t g}(v) = argmin_u g(u) + ||u - v||^2 / (2t)`.
pub trait ProxFn: Send + Sync {
    fn prox_into(&self, t: f64, v: &[f64], out: &mut [f64]) -> Result<(), ProxError>;

    /// `g(x)`, possibly `+inf`. NaN when the value is not available.
    fn value(&self, x: &[f64]) -> f64;

    fn prox(&self, t: f64, v: &[f64]) -> Result<Vec<f64>, ProxError> {
        let mut out = vec![0.0; v.len()];
        self.prox_into(t, v, &mut out)?;
        Ok(out)
    }
}

impl<T: ProxFn + ?Sized> ProxFn for Arc<T> {
    fn prox_into(&self, t: f64, v: &[f64], out: &mut [f64]) -> Result<(), ProxError> {
        (**self).prox_into(t, v, out)
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
}

fn check_step(t: f64) -> Result<(), ProxError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(ProxError::Step(t))
    }
}

/// Soft threshold at `t * lambda`.
pub fn prox_l1(t: f64, lambda: f64, v: &[f64]) -> Vec<f64> {
    let k = t * lambda;
    v.iter().map(|&x| soft(x, k)).collect()
}

#[inline]
fn soft(x: f64, k: f64) -> f64 {
    if x > k {
        x - k
    } else if x < -k {
        x + k
    } else {
        0.0
    }
}

pub fn proj_nonneg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

fn svd_of(rows: usize, cols: usize, v: &[f64]) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>, ProxError> {
    if rows * cols != v.len() {
        return Err(ProxError::Shape(format!("{rows}x{cols} matrix from {} entries", v.len())));
    }
    let m = DMatrix::from_column_slice(rows, cols, v);
    SVD::try_new(m, true, true, f64::EPSILON, 0).ok_or(ProxError::Svd)
}

fn rebuild(svd: SVD<f64, nalgebra::Dyn, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> Result<Vec<f64>, ProxError> {
    let mut svd = svd;
    svd.singular_values.iter_mut().for_each(|s| *s = f(*s));
    let m = svd.recompose().map_err(|_| ProxError::Svd)?;
    Ok(m.as_slice().to_vec())
}

/// Singular-value soft threshold of a column-major `rows x cols` matrix.
pub fn prox_nuclear(t: f64, rows: usize, cols: usize, v: &[f64]) -> Result<Vec<f64>, ProxError> {
    let svd = svd_of(rows, cols, v)?;
    rebuild(svd, |s| (s - t).max(0.0))
}

/// Projection onto `{ V : ||V||_2 <= radius }` by clipping singular values.
pub fn proj_spectral_ball(radius: f64, rows: usize, cols: usize, v: &[f64]) -> Result<Vec<f64>, ProxError> {
    let svd = svd_of(rows, cols, v)?;
    rebuild(svd, |s| s.min(radius))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl ProxFn for Zero {
    fn prox_into(&self, t: f64, v: &[f64], out: &mut [f64]) -> Result<(), ProxError> {
        check_step(t)?;
        out.copy_from_slice(v);
        Ok(())
    }
    fn value(&self, _: &[f64]) -> f64 {
        0.0
    }
}

/// `lambda * ||x||_1`
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    pub lambda: f64,
}

impl ProxFn for L1Norm {
    fn prox_into(&self, t: f64, v: &[f64], out: &mut [f64]) -> Result<(), ProxError> {
        check_step(t)?;
        let k = t * self.lambda;
        for (o, &x) in out.iter_mut().zip(v) {
            *o = soft(x, k);
        }
        Ok(())
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }
}

/// Indicator of the nonnegative orthant.
#[derive(Debug, Clone, Copy, Default)]
pub struct NonNeg;

impl ProxFn for NonNeg {
    fn prox_into(&self, t: f64, v: &[f64], out: &mut [f64]) -> Result<(), ProxError> {
        check_step(t)?;
        for (o, &x) in out.iter_mut().zip(v) {
            *o = x.max(0.0);
        }
        Ok(())
    }
    fn value(&self, x: &[f64]) -> f64 {
        if x.iter().all(|&v| v >= 0.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Indicator of the box `[lo, hi]^n`.
#[derive(Debug, Clone, Copy)]
pub struct BoxIndicator {
    pub lo: f64,
    pub hi: f64,
}

impl ProxFn for BoxIndicator {
    fn prox_into(&self, t: f64, v: &[f64], out: &mut [f64]) -> Result<(), ProxError> {
        check_step(t)?;
        for (o, &x) in out.iter_mut().zip(v) {
            *o = x.clamp(self.lo, self.hi);
        }
        Ok(())
    }
    fn value(&self, x: &[f64]) -> f64 {
        if x.iter().all(|&v| v >= self.lo && v <= self.hi) {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Indicator of the ball `{ ||x||_inf <= radius }`, the conjugate of `radius * ||.||_1`.
#[derive(Debug, Clone, Copy)]
pub struct LinfBall {
    pub radius: f64,
}

impl ProxFn for LinfBall {
    fn prox_into(&self, t: f64, v: &[f64], out: &mut [f64]) -> Result<(), ProxError> {
        check_step(t)?;
        for (o, &x) in out.iter_mut().zip(v) {
            *o = x.clamp(-self.radius, self.radius);
        }
        Ok(())
    }
    fn value(&self, x: &[f64]) -> f64 {
        if x.iter().all(|v| v.abs() <= self.radius) {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// `scale * ||X||_*` on a column-major `rows x cols` block.
#[derive(Debug, Clone, Copy)]
pub struct NuclearNorm {
    pub rows: usize,
    pub cols: usize,
    pub scale: f64,
}

impl NuclearNorm {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, scale: 1.0 }
    }
}

impl ProxFn for NuclearNorm {
    fn prox_into(&self, t: f64, v: &[f64], out: &mut [f64]) -> Result<(), ProxError> {
        check_step(t)?;
        let r = prox_nuclear(t * self.scale, self.rows, self.cols, v)?;
        out.copy_from_slice(&r);
        Ok(())
    }
    fn value(&self, x: &[f64]) -> f64 {
        match svd_of(self.rows, self.cols, x) {
            Ok(s) => self.scale * s.singular_values.sum(),
            Err(_) => f64::NAN,
        }
    }
}

/// Indicator of the spectral-norm ball, the conjugate of `radius * ||.||_*`.
#[derive(Debug, Clone, Copy)]
pub struct SpectralBall {
    pub rows: usize,
    pub cols: usize,
    pub radius: f64,
}

impl ProxFn for SpectralBall {
    fn prox_into(&self, t: f64, v: &[f64], out: &mut [f64]) -> Result<(), ProxError> {
        check_step(t)?;
        let r = proj_spectral_ball(self.radius, self.rows, self.cols, v)?;
        out.copy_from_slice(&r);
        Ok(())
    }
    fn value(&self, x: &[f64]) -> f64 {
        match svd_of(self.rows, self.cols, x) {
            Ok(s) if s.singular_values.max() <= self.radius * (1.0 + 1e-12) => 0.0,
            Ok(_) => f64::INFINITY,
            Err(_) => f64::NAN,
        }
    }
}

/// `||x||^2 / 2`
#[derive(Debug, Clone, Copy, Default)]
pub struct HalfSquaredNorm;

impl ProxFn for HalfSquaredNorm {
    fn prox_into(&self, t: f64, v: &[f64], out: &mut [f64]) -> Result<(), ProxError> {
        check_step(t)?;
        for (o, &x) in out.iter_mut().zip(v) {
            *o = x / (1.0 + t);
        }
        Ok(())
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }
}

/// Indicator of the single point `target`.
#[derive(Debug, Clone)]
pub struct PointIndicator {
    pub target: Vec<f64>,
}

impl ProxFn for PointIndicator {
    fn prox_into(&self, t: f64, v: &[f64], out: &mut [f64]) -> Result<(), ProxError> {
        check_step(t)?;
        if v.len() != self.target.len() {
            return Err(ProxError::Shape(format!("{} entries, expected {}", v.len(), self.target.len())));
        }
        out.copy_from_slice(&self.target);
        Ok(())
    }
    fn value(&self, x: &[f64]) -> f64 {
        if x == self.target.as_slice() {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Indicator of the affine set `{x : A x = b}` for `A` of full row rank.
#[derive(Debug, Clone)]
pub struct AffineSet {
    a: DMatrix<f64>,
    b: DVector<f64>,
    gram: Cholesky<f64, Dyn>,
}

impl AffineSet {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self, ProxError> {
        if a.nrows() != b.len() {
            return Err(ProxError::Shape(format!("A has {} rows, b has {}", a.nrows(), b.len())));
        }
        let gram = Cholesky::new(&a * a.transpose()).ok_or_else(|| ProxError::Singular("A A' is not positive definite".into()))?;
        Ok(Self { a, b, gram })
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        (&self.a * DVector::from_column_slice(x) - &self.b).norm()
    }
}

impl ProxFn for AffineSet {
    fn prox_into(&self, t: f64, v: &[f64], out: &mut [f64]) -> Result<(), ProxError> {
        check_step(t)?;
        if v.len() != self.a.ncols() {
            return Err(ProxError::Shape(format!("{} entries, expected {}", v.len(), self.a.ncols())));
        }
        let x = DVector::from_column_slice(v);
        let r = &self.a * &x - &self.b;
        let p = x - self.a.transpose() * self.gram.solve(&r);
        out.copy_from_slice(p.as_slice());
        Ok(())
    }
    fn value(&self, x: &[f64]) -> f64 {
        if self.residual(x) <= 1e-9 * (1.0 + self.b.norm()) {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// `g*` through the Moreau identity `prox_{t g*}(u) = u - t prox_{g/t}(u/t)`.
/// The conjugate's value is not available and reports NaN.
#[derive(Clone)]
pub struct Conjugate(pub Arc<dyn ProxFn>);

impl ProxFn for Conjugate {
    fn prox_into(&self, t: f64, v: &[f64], out: &mut [f64]) -> Result<(), ProxError> {
        check_step(t)?;
        let scaled: Vec<f64> = v.iter().map(|x| x / t).collect();
        self.0.prox_into(1.0 / t, &scaled, out)?;
        for (o, &x) in out.iter_mut().zip(v) {
            *o = x - t * *o;
        }
        Ok(())
    }
    fn value(&self, _: &[f64]) -> f64 {
        f64::NAN
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(prox_l1(1.0, 1.0, &[2.0, -0.5, 0.0]), vec![1.0, 0.0, 0.0]);
        assert_eq!(prox_l1(1.0, 0.0, &[2.0, -0.5, 0.3]), vec![2.0, -0.5, 0.3]);
    }

    #[test]
    fn nonneg_examples() {
        assert_eq!(proj_nonneg(&[-1.0, 2.0]), vec![0.0, 2.0]);
        assert_eq!(proj_nonneg(&[-1.0, -2.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn nuclear_examples() {
        // diag(3, 1) column-major
        let r = prox_nuclear(1.0, 2, 2, &[3.0, 0.0, 0.0, 1.0]).unwrap();
        let want = [2.0, 0.0, 0.0, 0.0];
        for (a, b) in r.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
        let z = prox_nuclear(10.0, 2, 2, &[3.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-14));
        assert!(prox_nuclear(1.0, 2, 3, &[1.0; 5]).is_err());
    }

    #[test]
    fn step_must_be_positive() {
        assert!(L1Norm { lambda: 1.0 }.prox(0.0, &[1.0]).is_err());
        assert!(NonNeg.prox(-1.0, &[1.0]).is_err());
    }

    #[test]
    fn conjugate_of_l1_is_linf_projection() {
        let c = Conjugate(Arc::new(L1Norm { lambda: 2.0 }));
        let got = c.prox(0.7, &[3.0, -1.0, -5.0]).unwrap();
        for (a, b) in got.iter().zip([2.0, -1.0, -2.0]) {
            assert!((a - b).abs() < 1e-14, "{got:?}");
        }
    }

    #[test]
    fn values() {
        assert_eq!(L1Norm { lambda: 2.0 }.value(&[1.0, -2.0]), 6.0);
        assert_eq!(NonNeg.value(&[1.0, -2.0]), f64::INFINITY);
        assert!((NuclearNorm::new(2, 2).value(&[3.0, 0.0, 0.0, -1.0]) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn affine_projection_is_orthogonal() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let set = AffineSet::new(a, DVector::from_element(1, 2.0)).unwrap();
        let p = set.prox(3.0, &[3.0, 0.0]).unwrap();
        assert!((p[0] - 2.5).abs() < 1e-14 && (p[1] + 0.5).abs() < 1e-14);
        assert_eq!(set.value(&p), 0.0);
        assert_eq!(set.value(&[0.0, 0.0]), f64::INFINITY);
    }
}
