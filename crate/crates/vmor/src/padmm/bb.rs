use crate::linops::norm;

/// Bounds on a block's inverse-metric scalar `m` (the metric block is `I / m`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarBounds {
    /// Keeps the metric below `1 / floor`.
    pub floor: f64,
    /// Keeps the metric above `1 / ceiling`.
    pub ceiling: f64,
}

/// Blockwise Barzilai-Borwein update of one inverse-metric scalar.
///
/// The candidate is `||dx|| / ||ds||`. It is clamped to
/// `[max(prev / (1 + xi), floor), ceiling]`, which is exactly the blockwise form of
/// `M_{k+1} <= (1 + xi) M_k`. A denominator at or below `1e-14 ||dx||`, or a
/// zero `dx`, keeps `prev`.
pub fn bb_scalar(dx: &[f64], ds: &[f64], prev: f64, xi: f64, bounds: ScalarBounds) -> f64 {
    let num = norm(dx);
    let den = norm(ds);
    let lo = (prev / (1.0 + xi)).max(bounds.floor);
    let hi = bounds.ceiling.max(lo);
    if !(num > 0.0) || !(den > 1e-14 * num) || !num.is_finite() || !den.is_finite() {
        return prev.clamp(lo, hi);
    }
    (num / den).clamp(lo, hi)
}

/// Applies [`bb_scalar`] to every block. `dx[i]` and `ds[i]` are the block
/// differences `x~^{k+1}_i - x~^k_i` and `s^{k+1}_i - s^k_i`, the last block being
/// the dual pair `(y~, r)`.
pub fn bb_metric_update(dx: &[Vec<f64>], ds: &[Vec<f64>], prev: &[f64], xi: f64, bounds: &[ScalarBounds]) -> Vec<f64> {
    (0..prev.len()).map(|i| bb_scalar(&dx[i], &ds[i], prev[i], xi, bounds[i])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const WIDE: ScalarBounds = ScalarBounds { floor: 1e-8, ceiling: 1e8 };

    #[test]
    fn unit_curvature() {
        let m = bb_scalar(&[1.0, 2.0], &[1.0, 2.0], 0.5, 0.1, WIDE);
        assert_eq!(m, 1.0);
        // the candidate may not drop below prev / (1 + xi)
        let m = bb_scalar(&[1.0, 2.0], &[1.0, 2.0], 4.0, 0.1, WIDE);
        assert_eq!(m, 4.0 / 1.1);
    }

    #[test]
    fn flat_curvature_keeps_previous() {
        assert_eq!(bb_scalar(&[1.0], &[0.0], 0.7, 0.1, WIDE), 0.7);
        assert_eq!(bb_scalar(&[0.0], &[0.0], 0.7, 0.1, WIDE), 0.7);
    }

    #[test]
    fn difference_quotient_of_diagonal_quadratic() {
        // grad = h x, so ds = h dx blockwise
        let h = [2.0, 5.0];
        let dx = [vec![0.3, -0.1], vec![1.0]];
        let ds: Vec<Vec<f64>> = dx.iter().zip(h).map(|(d, h)| d.iter().map(|x| h * x).collect()).collect();
        let m = bb_metric_update(&dx, &ds, &[0.01, 0.01], 0.0, &[WIDE, WIDE]);
        assert!((m[0] - 0.5).abs() < 1e-12 && (m[1] - 0.2).abs() < 1e-12);
        let capped = bb_metric_update(&dx, &ds, &[0.01, 0.01], 0.0, &[ScalarBounds { floor: 1e-8, ceiling: 0.4 }, ScalarBounds { floor: 0.3, ceiling: 1.0 }]);
        assert_eq!(capped, vec![0.4, 0.3]);
    }
}
