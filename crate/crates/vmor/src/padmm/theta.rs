use nalgebra::{DMatrix, DVector};

use crate::linops::dot;

/// The scalar pieces of the over-relaxation choice along `d = z - w`:
/// `a = 2<d, U d> - ||d||_D^2 / 2`, `s = ||d||_M^2`, `q = ||U d||_{M^{-1}}^2`.
/// With them `Gamma(d) = a - (1 - sigma) s` and `theta_adap = Gamma / q - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionForms {
    pub a: f64,
    pub s: f64,
    pub q: f64,
}

impl DirectionForms {
    /// `d`, `ud` are flat; `m_inv` holds the inverse-metric scalar of each
    /// entry; `lips` holds the entry's `D` weight (`L_i` on primal, 0 on dual).
    pub fn new(d: &[f64], ud: &[f64], m_inv: &[f64], lips: &[f64]) -> Self {
        let mut a = 2.0 * dot(d, ud);
        let mut s = 0.0;
        let mut q = 0.0;
        for i in 0..d.len() {
            a -= 0.5 * lips[i] * d[i] * d[i];
            s += d[i] * d[i] / m_inv[i];
            q += m_inv[i] * ud[i] * ud[i];
        }
        Self { a, s, q }
    }

    pub fn gamma(&self, sigma: f64) -> f64 {
        self.a - (1.0 - sigma) * self.s
    }

    /// `-1 + Gamma / q`; `None` when the direction carries no information.
    pub fn theta_adap(&self, sigma: f64) -> Option<f64> {
        if self.q > 0.0 && self.q.is_finite() {
            Some(self.gamma(sigma) / self.q - 1.0)
        } else {
            None
        }
    }

    /// Scaling `t >= 1` of every inverse-metric scalar that maximizes
    /// `theta_adap` (the metric becomes `M / t`), and the resulting value.
    /// Under `m -> t m`: `s -> s / t`, `q -> t q`.
    pub fn best_shrink(&self, sigma: f64) -> Option<(f64, f64)> {
        if !(self.a > 0.0 && self.q > 0.0 && self.s > 0.0) {
            return None;
        }
        let t = 2.0 * (1.0 - sigma) * self.s / self.a;
        if t <= 1.0 {
            return None;
        }
        let theta = (self.a - (1.0 - sigma) * self.s / t) / (t * self.q) - 1.0;
        Some((t, theta))
    }
}

/// `(theta_bar, theta_adap)` for dense `U`, `M`, diagonal `D` and direction `d`.
/// `theta_bar = -1 + 1/lambda` where `lambda` is an inflated power-iteration
/// estimate of the top eigenvalue of `U* M^{-1} U v = lambda Gamma v`,
/// `Gamma = U + U* - (1 - sigma) M - D/2`. `theta_bar` is NaN if `Gamma` is not
/// positive definite.
pub fn theta_range(
    u: &DMatrix<f64>,
    m: &DMatrix<f64>,
    dvec: &[f64],
    sigma: f64,
    d: &[f64],
    inflation: f64,
) -> (f64, f64) {
    let n = u.nrows();
    let gamma = gamma_matrix(u, m, dvec, sigma);
    let minv = m.clone().try_inverse().unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN));
    let a = u.transpose() * &minv * u;
    let dv = DVector::from_column_slice(d);
    let g = (dv.transpose() * &gamma * &dv)[(0, 0)];
    let q = (dv.transpose() * &a * &dv)[(0, 0)];
    let theta_adap = if q > 0.0 { g / q - 1.0 } else { f64::NAN };
    (theta_bar(&a, &gamma, inflation), theta_adap)
}

pub fn gamma_matrix(u: &DMatrix<f64>, m: &DMatrix<f64>, dvec: &[f64], sigma: f64) -> DMatrix<f64> {
    let mut gamma = u + u.transpose() - m * (1.0 - sigma);
    for (i, l) in dvec.iter().enumerate() {
        gamma[(i, i)] -= 0.5 * l;
    }
    gamma
}

/// `-1 + 1 / (inflation * lambda_max)` of the pencil `(a, gamma)`.
pub fn theta_bar(a: &DMatrix<f64>, gamma: &DMatrix<f64>, inflation: f64) -> f64 {
    let g = (gamma + gamma.transpose()) * 0.5;
    let Some(chol) = g.cholesky() else {
        return f64::NAN;
    };
    let n = a.nrows();
    if n == 0 {
        return f64::NAN;
    }
    let l = chol.l();
    let Some(linv) = l.clone().try_inverse() else {
        return f64::NAN;
    };
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i * 7919) % 13) as f64);
    v /= v.norm();
    let mut lambda: f64 = 0.0;
    for _ in 0..500 {
        let w = &c * &v;
        let nw = w.norm();
        if nw == 0.0 {
            break;
        }
        let rq = v.dot(&w);
        lambda = lambda.max(rq);
        v = w / nw;
    }
    if !(lambda > 0.0) {
        return f64::NAN;
    }
    -1.0 + 1.0 / (inflation * lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn identity_cases() {
        let i = DMatrix::<f64>::identity(3, 3);
        let d = [1.0, -2.0, 0.5];
        let (bar, adap) = theta_range(&i, &i, &[0.0; 3], 0.0, &d, 1.0);
        assert!(bar.abs() < 1e-12 && adap.abs() < 1e-12);
        let (bar, adap) = theta_range(&i, &i, &[0.0; 3], 0.5, &d, 1.0);
        assert!((bar - 0.5).abs() < 1e-12 && (adap - 0.5).abs() < 1e-12);
    }

    #[test]
    fn random_pencil_against_dense_eigen() {
        let mut rng = seeded(3, 0);
        let n = 6;
        let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
        let mut u = DMatrix::from_fn(n, n, |_, _| 0.1 * g());
        for i in 0..n {
            u[(i, i)] += 3.0;
        }
        let m = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| 1.0 + 0.2 * i as f64));
        let dvec = vec![0.5; n];
        let d: Vec<f64> = (0..n).map(|_| g()).collect();
        let sigma = 0.3;
        let (bar, adap) = theta_range(&u, &m, &dvec, sigma, &d, 1.01);

        let gamma = gamma_matrix(&u, &m, &dvec, sigma);
        let minv = m.clone().try_inverse().unwrap();
        let a = u.transpose() * &minv * &u;
        // dense generalized eigenvalues via gamma^{-1/2}
        let eg = gamma.clone().symmetric_eigen();
        let ih = &eg.eigenvectors * DMatrix::from_diagonal(&eg.eigenvalues.map(|x| 1.0 / x.sqrt())) * eg.eigenvectors.transpose();
        let lmax = (&ih * &a * &ih).symmetric_eigen().eigenvalues.max();
        let exact_bar = -1.0 + 1.0 / lmax;
        assert!(((1.0 + bar) / (1.0 + exact_bar) - 1.0).abs() <= 0.02, "{bar} vs {exact_bar}");
        assert!(bar <= adap + 1e-10);

        // direct ratio of quadratic forms, entrywise
        let ud: Vec<f64> = (&u * DVector::from_column_slice(&d)).iter().copied().collect();
        let minv_diag: Vec<f64> = (0..n).map(|i| 1.0 / m[(i, i)]).collect();
        let f = DirectionForms::new(&d, &ud, &minv_diag, &dvec);
        assert!((f.theta_adap(sigma).unwrap() - adap).abs() < 1e-12);
    }

    #[test]
    fn shrink_improves_theta() {
        let f = DirectionForms { a: 1.0, s: 2.0, q: 1.0 };
        // Gamma = 1 - 0.5 * 2 = 0, theta = -1
        assert_eq!(f.theta_adap(0.5), Some(-1.0));
        let (t, th) = f.best_shrink(0.5).unwrap();
        assert!((t - 2.0).abs() < 1e-15);
        assert!((th - (-0.75)).abs() < 1e-15);
        assert!(DirectionForms { a: 1.0, s: 0.1, q: 1.0 }.best_shrink(0.5).is_none());
    }
}
