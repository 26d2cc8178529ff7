use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::block::{dot, norm};
use super::map::LinearMap;
use crate::par;
use crate::rng::seeded;

pub const DEFAULT_POWER_ITERS: usize = 100;
pub const DEFAULT_INFLATION: f64 = 1.05;

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Upper estimate of the largest singular value: power iteration on `A*A`
/// followed by a 5% inflation.
pub fn spectral_upper_bound(a: &dyn LinearMap, iters: usize, seed: u64) -> f64 {
    spectral_upper_bound_with(a, iters, seed, DEFAULT_INFLATION)
}

pub fn spectral_upper_bound_with(a: &dyn LinearMap, iters: usize, seed: u64, inflation: f64) -> f64 {
    power_estimate(a, iters.max(1), seed) * inflation
}

/// Largest `||Ax||` seen over the power iterates, each with `||x|| = 1`.
fn power_estimate(a: &dyn LinearMap, iters: usize, seed: u64) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let mut rng = seeded(seed, 0);
    let mut x = gaussian_vec(&mut rng, n);
    let mut ax = vec![0.0; a.nrows()];
    let mut best: f64 = 0.0;
    for _ in 0..iters {
        let nx = norm(&x);
        if nx == 0.0 || !nx.is_finite() {
            break;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        a.forward_into(&x, &mut ax);
        let s = norm(&ax);
        best = best.max(s);
        if s == 0.0 {
            break;
        }
        a.adj_into(&ax, &mut x);
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointReport {
    pub max_residual: f64,
    pub probes: usize,
    pub flagged: bool,
}

pub const ADJOINT_FLAG: f64 = 1e-8;

/// Max over random probes of `|<Av,u> - <v,A*u>| / (1 + ||Av|| ||u||)`.
pub fn adjoint_check(a: &dyn LinearMap, probes: usize, seed: u64) -> AdjointReport {
    let residuals = par::map_range(probes, |i| {
        let mut rng = seeded(seed, i as u64 + 1);
        let v = gaussian_vec(&mut rng, a.ncols());
        let u = gaussian_vec(&mut rng, a.nrows());
        let av = a.forward(&v);
        let atu = a.adj(&u);
        (dot(&av, &u) - dot(&v, &atu)).abs() / (1.0 + norm(&av) * norm(&u))
    });
    let max_residual = residuals.into_iter().fold(0.0, f64::max);
    AdjointReport { max_residual, probes, flagged: max_residual > ADJOINT_FLAG }
}
