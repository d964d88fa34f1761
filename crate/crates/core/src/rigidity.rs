//! Distance and angle rigidity functions, their Jacobians, and rank tests.

use nalgebra::{DMatrix, DVector, Vector2};

use crate::error::{FormationError, Result};
use crate::graph::FormationGraph;
use crate::linalg::{numerical_rank, perp, RankInfo};
use crate::sensing::is_separated;

/// Stacked robot centers `[x₁, y₁, …, xₙ, yₙ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    stacked: DVector<f64>,
}

impl Configuration {
    pub fn from_points(points: &[Vector2<f64>]) -> Self {
        Self {
            stacked: DVector::from_iterator(
                2 * points.len(),
                points.iter().flat_map(|p| [p.x, p.y]),
            ),
        }
    }

    pub fn from_stacked(stacked: DVector<f64>) -> Result<Self> {
        if !stacked.len().is_multiple_of(2) {
            return Err(FormationError::DimensionMismatch {
                expected: stacked.len() + 1,
                got: stacked.len(),
            });
        }
        Ok(Self { stacked })
    }

    pub fn n(&self) -> usize {
        self.stacked.len() / 2
    }

    pub fn point(&self, i: usize) -> Vector2<f64> {
        Vector2::new(self.stacked[2 * i], self.stacked[2 * i + 1])
    }

    pub fn points(&self) -> Vec<Vector2<f64>> {
        (0..self.n()).map(|i| self.point(i)).collect()
    }

    pub fn stacked(&self) -> &DVector<f64> {
        &self.stacked
    }

    pub fn into_stacked(self) -> DVector<f64> {
        self.stacked
    }

    pub fn centroid(&self) -> Vector2<f64> {
        let n = self.n() as f64;
        self.points().iter().sum::<Vector2<f64>>() / n
    }

    /// Rejects coincident centers and non-finite coordinates.
    pub fn check_distinct(&self) -> Result<()> {
        if self.stacked.iter().any(|x| !x.is_finite()) {
            return Err(FormationError::InvalidParameter(
                "configuration has non-finite coordinates".into(),
            ));
        }
        let pts = self.points();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if pts[i] == pts[j] {
                    return Err(FormationError::InvalidParameter(format!(
                        "robots {i} and {j} share a center"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Rigid motion `p ↦ R(angle)·p + offset` applied to every center.
    pub fn transformed(&self, angle: f64, offset: Vector2<f64>) -> Self {
        let (s, c) = angle.sin_cos();
        let pts: Vec<_> = self
            .points()
            .iter()
            .map(|p| Vector2::new(c * p.x - s * p.y, s * p.x + c * p.y) + offset)
            .collect();
        Self::from_points(&pts)
    }
}

fn check_size(g: &FormationGraph, p: &Configuration) -> Result<()> {
    if g.n_vertices() != p.n() {
        return Err(FormationError::DimensionMismatch {
            expected: g.n_vertices(),
            got: p.n(),
        });
    }
    Ok(())
}

/// Relative positions `z_k = p_j − p_i` in edge order.
pub fn relative_positions(g: &FormationGraph, p: &Configuration) -> Vec<Vector2<f64>> {
    g.edges()
        .iter()
        .map(|&(i, j)| p.point(j) - p.point(i))
        .collect()
}

pub fn edge_distances(g: &FormationGraph, p: &Configuration) -> DVector<f64> {
    DVector::from_iterator(
        g.n_edges(),
        relative_positions(g, p).iter().map(|z| z.norm()),
    )
}

/// Errors out on the first edge that is not clear of contact.
pub fn check_feasible(g: &FormationGraph, p: &Configuration, r: f64) -> Result<DVector<f64>> {
    check_size(g, p)?;
    let d = edge_distances(g, p);
    for (k, &(i, j)) in g.edges().iter().enumerate() {
        if !is_separated(d[k], r) || !d[k].is_finite() {
            return Err(FormationError::Infeasible {
                i,
                j,
                distance: d[k],
                radius: r,
            });
        }
    }
    Ok(d)
}

/// Half squared edge lengths.
pub fn distance_rigidity_function(g: &FormationGraph, p: &Configuration) -> DVector<f64> {
    DVector::from_iterator(
        g.n_edges(),
        relative_positions(g, p)
            .iter()
            .map(|z| 0.5 * z.norm_squared()),
    )
}

/// Jacobian of [`distance_rigidity_function`]: row `k` holds `−z_kᵀ` under
/// vertex `i` and `+z_kᵀ` under vertex `j`.
pub fn distance_rigidity_matrix(g: &FormationGraph, p: &Configuration) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(g.n_edges(), 2 * g.n_vertices());
    for (k, (&(i, j), z)) in g.edges().iter().zip(relative_positions(g, p)).enumerate() {
        m[(k, 2 * i)] = -z.x;
        m[(k, 2 * i + 1)] = -z.y;
        m[(k, 2 * j)] = z.x;
        m[(k, 2 * j + 1)] = z.y;
    }
    m
}

/// Per-edge `cos θ_k = 1 − 2(r/d_k)²`.
pub fn angle_rigidity_function(
    g: &FormationGraph,
    p: &Configuration,
    r: f64,
) -> Result<DVector<f64>> {
    let d = check_feasible(g, p, r)?;
    Ok(d.map(|dk| 1.0 - 2.0 * (r / dk).powi(2)))
}

/// Diagonal entries of `D(d) = 4r²·diag(d_k⁻⁴)`.
pub fn angle_scaling(d: &DVector<f64>, r: f64) -> DVector<f64> {
    d.map(|dk| 4.0 * r * r / dk.powi(4))
}

/// Jacobian of [`angle_rigidity_function`], `D(d)·R_dist`.
pub fn angle_rigidity_matrix(
    g: &FormationGraph,
    p: &Configuration,
    r: f64,
) -> Result<DMatrix<f64>> {
    let d = check_feasible(g, p, r)?;
    let scale = angle_scaling(&d, r);
    let mut m = distance_rigidity_matrix(g, p);
    for (k, mut row) in m.row_iter_mut().enumerate() {
        row *= scale[k];
    }
    Ok(m)
}

/// Everything rigidity-related evaluated at one configuration.
#[derive(Debug, Clone)]
pub struct RigidityMatrices {
    pub distances: DVector<f64>,
    pub r_dist: DVector<f64>,
    pub jac_dist: DMatrix<f64>,
    pub r_angle: DVector<f64>,
    pub jac_angle: DMatrix<f64>,
    /// Diagonal of `D(d)`.
    pub scaling: DVector<f64>,
}

impl RigidityMatrices {
    pub fn evaluate(g: &FormationGraph, p: &Configuration, r: f64) -> Result<Self> {
        let distances = check_feasible(g, p, r)?;
        let scaling = angle_scaling(&distances, r);
        let jac_dist = distance_rigidity_matrix(g, p);
        let jac_angle = DMatrix::from_diagonal(&scaling) * &jac_dist;
        Ok(Self {
            r_dist: distances.map(|dk| 0.5 * dk * dk),
            r_angle: distances.map(|dk| 1.0 - 2.0 * (r / dk).powi(2)),
            distances,
            jac_dist,
            jac_angle,
            scaling,
        })
    }
}

/// Result of the infinitesimal rigidity test.
#[derive(Debug, Clone)]
pub struct RigidityReport {
    pub rank: usize,
    /// Rank required for infinitesimal rigidity (`2n − 3`, or `1` for two robots).
    pub expected_rank: usize,
    pub n_edges: usize,
    pub infinitesimally_rigid: bool,
    pub minimally_rigid: bool,
    /// Rows: x-translation, y-translation, rotation about the origin.
    pub trivial_motion_basis: DMatrix<f64>,
    /// `‖R_dist · δ‖` for each trivial motion row.
    pub trivial_motion_residuals: [f64; 3],
    pub rank_info: RankInfo,
}

pub fn expected_rigid_rank(n: usize) -> usize {
    match n {
        0 | 1 => 0,
        2 => 1,
        _ => 2 * n - 3,
    }
}

pub fn trivial_motions(p: &Configuration) -> DMatrix<f64> {
    let n = p.n();
    let mut basis = DMatrix::zeros(3, 2 * n);
    for i in 0..n {
        basis[(0, 2 * i)] = 1.0;
        basis[(1, 2 * i + 1)] = 1.0;
        let w = perp(&p.point(i));
        basis[(2, 2 * i)] = w.x;
        basis[(2, 2 * i + 1)] = w.y;
    }
    basis
}

pub fn rigidity_report(g: &FormationGraph, p: &Configuration) -> Result<RigidityReport> {
    check_size(g, p)?;
    let jac = distance_rigidity_matrix(g, p);
    let rank_info = numerical_rank(&jac);
    let expected_rank = expected_rigid_rank(p.n());
    let basis = trivial_motions(p);
    let mut residuals = [0.0; 3];
    for (k, res) in residuals.iter_mut().enumerate() {
        *res = (&jac * basis.row(k).transpose()).norm();
    }
    let infinitesimally_rigid = rank_info.rank == expected_rank;
    Ok(RigidityReport {
        rank: rank_info.rank,
        expected_rank,
        n_edges: g.n_edges(),
        infinitesimally_rigid,
        minimally_rigid: infinitesimally_rigid && g.n_edges() == expected_rank,
        trivial_motion_basis: basis,
        trivial_motion_residuals: residuals,
        rank_info,
    })
}
