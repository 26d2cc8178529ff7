use std::sync::Arc;

use nalgebra::{DMatrix, DVectorView, DVectorViewMut};

/// A linear map `A: R^ncols -> R^nrows` together with its adjoint.
pub trait LinearMap: Send + Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn forward_into(&self, x: &[f64], out: &mut [f64]);
    fn adj_into(&self, y: &[f64], out: &mut [f64]);

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows()];
        self.forward_into(x, &mut out);
        out
    }

    fn adj(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols()];
        self.adj_into(y, &mut out);
        out
    }

    /// Dense matrix of the map, one column per unit vector.
    fn to_dense(&self) -> DMatrix<f64> {
        let (m, n) = (self.nrows(), self.ncols());
        let mut a = DMatrix::zeros(m, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; m];
        for j in 0..n {
            e[j] = 1.0;
            self.forward_into(&e, &mut col);
            a.column_mut(j).copy_from_slice(&col);
            e[j] = 0.0;
        }
        a
    }
}

impl LinearMap for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.shape().0
    }

    fn ncols(&self) -> usize {
        self.shape().1
    }

    fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        let xv = DVectorView::from_slice(x, x.len());
        let mut ov = DVectorViewMut::from_slice(out, self.shape().0);
        ov.gemv(1.0, self, &xv, 0.0);
    }

    fn adj_into(&self, y: &[f64], out: &mut [f64]) {
        let yv = DVectorView::from_slice(y, y.len());
        let mut ov = DVectorViewMut::from_slice(out, self.shape().1);
        ov.gemv_tr(1.0, self, &yv, 0.0);
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

impl<T: LinearMap + ?Sized> LinearMap for Arc<T> {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).forward_into(x, out)
    }
    fn adj_into(&self, y: &[f64], out: &mut [f64]) {
        (**self).adj_into(y, out)
    }
    fn to_dense(&self) -> DMatrix<f64> {
        (**self).to_dense()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityMap(pub usize);

impl LinearMap for IdentityMap {
    fn nrows(&self) -> usize {
        self.0
    }
    fn ncols(&self) -> usize {
        self.0
    }
    fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn adj_into(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
    }
}

/// `alpha * A`.
pub struct ScaledMap {
    pub alpha: f64,
    pub inner: Arc<dyn LinearMap>,
}

impl LinearMap for ScaledMap {
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }
    fn ncols(&self) -> usize {
        self.inner.ncols()
    }
    fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.forward_into(x, out);
        out.iter_mut().for_each(|o| *o *= self.alpha);
    }
    fn adj_into(&self, y: &[f64], out: &mut [f64]) {
        self.inner.adj_into(y, out);
        out.iter_mut().for_each(|o| *o *= self.alpha);
    }
}

type MapFn = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A map given by a pair of closures. Nothing ties the two together; run
/// [`adjoint_check`](super::adjoint_check) when in doubt.
pub struct FnMap {
    nrows: usize,
    ncols: usize,
    apply: MapFn,
    adjoint: MapFn,
}

impl FnMap {
    pub fn new<F, G>(nrows: usize, ncols: usize, apply: F, adjoint: G) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self { nrows, ncols, apply: Box::new(apply), adjoint: Box::new(adjoint) }
    }
}

impl LinearMap for FnMap {
    fn nrows(&self) -> usize {
        self.nrows
    }
    fn ncols(&self) -> usize {
        self.ncols
    }
    fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        (self.apply)(x, out)
    }
    fn adj_into(&self, y: &[f64], out: &mut [f64]) {
        (self.adjoint)(y, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_apply_and_adjoint() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(a.forward(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
        assert_eq!(a.adj(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn to_dense_round_trips() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.5, 3.0]);
        let f = FnMap::new(
            2,
            2,
            {
                let a = a.clone();
                move |x, o| a.forward_into(x, o)
            },
            {
                let a = a.clone();
                move |y, o| a.adj_into(y, o)
            },
        );
        assert_eq!(f.to_dense(), a);
        let s = ScaledMap { alpha: 2.0, inner: Arc::new(a.clone()) };
        assert_eq!(s.to_dense(), a * 2.0);
    }
}
