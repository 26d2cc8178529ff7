use nalgebra::DMatrix;

use super::ProxError;

/// Unnormalized Laplacian `L = D - W` of a symmetric nonnegative affinity
/// with zero diagonal.
pub fn build_graph_laplacian(w: &DMatrix<f64>) -> Result<DMatrix<f64>, ProxError> {
    if !w.is_square() {
        return Err(ProxError::Shape(format!("affinity must be square, got {:?}", w.shape())));
    }
    let n = w.nrows();
    let scale = w.amax().max(1.0);
    for i in 0..n {
        if w[(i, i)] != 0.0 {
            return Err(ProxError::Graph(format!("nonzero diagonal at {i}")));
        }
        for j in 0..n {
            if w[(i, j)] < 0.0 {
                return Err(ProxError::Graph(format!("negative weight at ({i}, {j})")));
            }
            if (w[(i, j)] - w[(j, i)]).abs() > 1e-12 * scale {
                return Err(ProxError::Graph(format!("asymmetric at ({i}, {j})")));
            }
        }
    }
    let mut l = -w.clone();
    for i in 0..n {
        l[(i, i)] = w.row(i).sum();
    }
    Ok(l)
}

/// Symmetrized k-nearest-neighbour heat-kernel affinity between the columns
/// of `points`, bandwidth = median pairwise distance.
pub fn knn_heat_affinity(points: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = points.ncols();
    let mut dist = DMatrix::zeros(n, n);
    let mut all = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d = (points.column(i) - points.column(j)).norm();
            dist[(i, j)] = d;
            dist[(j, i)] = d;
            all.push(d);
        }
    }
    let mut w = DMatrix::zeros(n, n);
    if all.is_empty() {
        return w;
    }
    all.sort_by(f64::total_cmp);
    let h = all[all.len() / 2].max(f64::MIN_POSITIVE);
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| dist[(i, a)].total_cmp(&dist[(i, b)]).then(a.cmp(&b)));
        for &j in order.iter().take(k) {
            let v = (-(dist[(i, j)] / h).powi(2)).exp();
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_laplacian() {
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let l = build_graph_laplacian(&w).unwrap();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn empty_graph_and_errors() {
        let l = build_graph_laplacian(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(l, DMatrix::zeros(3, 3));
        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(build_graph_laplacian(&asym).is_err());
        let neg = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        assert!(build_graph_laplacian(&neg).is_err());
    }

    #[test]
    fn knn_affinity_is_symmetric_and_sparse() {
        let pts = DMatrix::from_fn(2, 8, |i, j| (i as f64 + 1.0) * (j as f64).sin());
        let w = knn_heat_affinity(&pts, 2);
        assert_eq!(w, w.transpose());
        for i in 0..8 {
            assert_eq!(w[(i, i)], 0.0);
            assert!(w.row(i).iter().filter(|v| **v > 0.0).count() >= 2);
        }
    }
}
