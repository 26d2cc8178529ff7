use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{HpeConfig, HpeError};

/// Summable metric-growth allowances `xi_k >= 0`, indexed from `k = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum XiSchedule {
    Zero,
    /// `xi_k = xi0 / (k + 1)^2`
    InverseSquare { xi0: f64 },
    /// `xi_k = xi0 * ratio^k` with `ratio < 1`
    Geometric { xi0: f64, ratio: f64 },
}

impl Default for XiSchedule {
    fn default() -> Self {
        XiSchedule::InverseSquare { xi0: 0.01 }
    }
}

impl XiSchedule {
    pub fn validate(&self) -> Result<(), HpeError> {
        match *self {
            XiSchedule::Zero => Ok(()),
            XiSchedule::InverseSquare { xi0 } if xi0 >= 0.0 && xi0.is_finite() => Ok(()),
            XiSchedule::Geometric { xi0, ratio } if xi0 >= 0.0 && xi0.is_finite() && (0.0..1.0).contains(&ratio) => Ok(()),
            s => Err(HpeError::Config(format!("xi schedule {s:?} is not summable"))),
        }
    }

    pub fn xi(&self, k: usize) -> f64 {
        match *self {
            XiSchedule::Zero => 0.0,
            XiSchedule::InverseSquare { xi0 } => xi0 / ((k + 1) as f64).powi(2),
            XiSchedule::Geometric { xi0, ratio } => xi0 * ratio.powi(k as i32),
        }
    }

    /// Sum of the first `k` terms.
    pub fn partial_sum(&self, k: usize) -> f64 {
        match *self {
            XiSchedule::Zero => 0.0,
            XiSchedule::Geometric { xi0, ratio } => xi0 * (1.0 - ratio.powi(k as i32)) / (1.0 - ratio),
            XiSchedule::InverseSquare { .. } => (0..k).map(|i| self.xi(i)).sum(),
        }
    }

    pub fn total_sum(&self) -> f64 {
        match *self {
            XiSchedule::Zero => 0.0,
            XiSchedule::InverseSquare { xi0 } => xi0 * PI * PI / 6.0,
            XiSchedule::Geometric { xi0, ratio } => xi0 / (1.0 - ratio),
        }
    }

    /// Product of `(1 + xi_i)` over the first `k` terms.
    pub fn partial_product(&self, k: usize) -> f64 {
        (0..k).map(|i| 1.0 + self.xi(i)).product()
    }

    /// `Xi = prod_{k >= 0} (1 + xi_k)`. The inverse-square schedule has the
    /// closed form `sinh(pi sqrt(xi0)) / (pi sqrt(xi0))`.
    pub fn product_bound(&self) -> f64 {
        match *self {
            XiSchedule::Zero => 1.0,
            XiSchedule::InverseSquare { xi0 } => {
                let a = PI * xi0.sqrt();
                if a < 1e-8 {
                    1.0 + a * a / 6.0
                } else {
                    a.sinh() / a
                }
            }
            XiSchedule::Geometric { xi0, ratio } => {
                // terms decay geometrically; stop once they no longer move the product
                let mut p = 1.0;
                let mut t = xi0;
                while t > f64::EPSILON * 1e-3 {
                    p *= 1.0 + t;
                    t *= ratio;
                }
                p * (t / (1.0 - ratio)).exp()
            }
        }
    }
}

/// Right-hand sides of the pointwise complexity bounds on `min ||v||` and
/// `min eps` after `k` iterations, with `d0 = ||x0 - x*||_{M_0}`.
pub fn pointwise_bound(k: usize, cfg: &HpeConfig, d0: f64) -> (f64, f64) {
    let k = k.max(1) as f64;
    let s = 1.0 + cfg.xi.partial_sum(k as usize);
    let big_xi = cfg.xi.product_bound();
    let a = (1.0 - cfg.sigma) * k;
    let t1 = 1.0 + cfg.theta_min;
    let bound_v = (4.0 * s * big_xi * big_xi * cfg.omega_upper / (a * t1.powi(3) * cfg.c_min * cfg.c_min)).sqrt() * d0;
    let bound_eps = s * big_xi / (a * t1 * t1 * cfg.c_min) * d0 * d0;
    (bound_v, bound_eps)
}

/// Local linear contraction factor under metric subregularity with modulus `kappa`.
pub fn linear_rate_factor(
    kappa: f64,
    sigma: f64,
    theta: f64,
    c_min: f64,
    big_xi: f64,
    omega_upper: f64,
    omega_lower: f64,
) -> Result<f64, HpeError> {
    if !(kappa > 0.0 && (0.0..1.0).contains(&sigma) && theta > -1.0 && c_min > 0.0 && big_xi >= 1.0 && omega_lower > 0.0 && omega_upper >= omega_lower) {
        return Err(HpeError::Config(format!(
            "rate factor needs kappa > 0, sigma in [0,1), theta > -1, c > 0, Xi >= 1, 0 < omega_lower <= omega_upper; got kappa={kappa}, sigma={sigma}, theta={theta}, c={c_min}, Xi={big_xi}, omega=({omega_lower}, {omega_upper})"
        )));
    }
    let g = 1.0 + kappa / c_min * (big_xi * omega_upper / omega_lower).sqrt();
    let h = 1.0 + (sigma + 4.0 * (-theta).max(0.0) / (1.0 + theta).powi(2)).sqrt();
    let rho = (1.0 - sigma) * (1.0 + theta) / (g * g * h * h);
    if rho > 0.0 && rho < 1.0 {
        Ok(rho)
    } else {
        Err(HpeError::Config(format!("rate factor {rho} outside (0, 1)")))
    }
}
