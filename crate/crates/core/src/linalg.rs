//! Small dense linear-algebra helpers shared by the rigidity and analysis code.

use nalgebra::{DMatrix, Vector2};

/// Numerical rank of a matrix together with the singular values that decided it.
#[derive(Debug, Clone, PartialEq)]
pub struct RankInfo {
    pub rank: usize,
    /// Singular values cut below this are treated as zero.
    pub threshold: f64,
    /// Smallest singular value counted towards the rank, if any.
    pub smallest_retained: Option<f64>,
    /// Largest singular value that was discarded, if any.
    pub largest_discarded: Option<f64>,
}

/// Rank from the singular values with threshold `σ_max · max(rows, cols) · ε · 64`.
pub fn numerical_rank(m: &DMatrix<f64>) -> RankInfo {
    if m.is_empty() {
        return RankInfo {
            rank: 0,
            threshold: 0.0,
            smallest_retained: None,
            largest_discarded: None,
        };
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let dim = m.nrows().max(m.ncols()) as f64;
    let threshold = sv[0] * dim * f64::EPSILON * 64.0;
    let rank = sv.iter().take_while(|&&s| s > threshold && s > 0.0).count();
    RankInfo {
        rank,
        threshold,
        smallest_retained: rank.checked_sub(1).map(|k| sv[k]),
        largest_discarded: sv.get(rank).copied(),
    }
}

/// Fixed counterclockwise quarter turn.
pub fn perp(v: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().min()
}
