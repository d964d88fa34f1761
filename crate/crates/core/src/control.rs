//! Collision-avoiding angle potential and the gradient control law.
//!
//! Each edge carries the barrier potential `V(e) = ½ r (e / (e + c))²` on the
//! cosine error `e = cos θ − cos θ*`. It vanishes only at the desired angle
//! and blows up as `e → −c`, which is exactly the contact configuration
//! `d → 2r`. Robots descend the sum of their incident potentials.
//!
//! The control can be evaluated from positions ([`control_geometric`]) or
//! from the raw tangent bearings alone ([`control_bearing_only`]); the two are
//! algebraically identical.

use nalgebra::{DVector, Vector2};

use crate::error::{FormationError, Result};
use crate::graph::FormationGraph;
use crate::rigidity::{check_feasible, Configuration, RigidityMatrices};
use crate::sensing::{cos_from_distance, measure, BearingPair, DiskState};

/// Desired cosine for one edge and the feasibility margins derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleConstraint {
    pub edge: (usize, usize),
    pub cos_star: f64,
    /// `cos θ* − ½`, distance of the target from the contact cosine.
    pub c: f64,
    /// `1 − cos θ*`.
    pub f: f64,
    /// `min(c/2, f)`: the error must stay below this for `V''` to be positive.
    pub b_edge: f64,
}

impl AngleConstraint {
    pub fn from_cos(edge: (usize, usize), cos_star: f64) -> Result<Self> {
        if !(cos_star > 0.5 && cos_star < 1.0) {
            return Err(FormationError::CosineOutOfRange(cos_star));
        }
        let c = cos_star - 0.5;
        let f = 1.0 - cos_star;
        Ok(Self {
            edge: (edge.0.min(edge.1), edge.0.max(edge.1)),
            cos_star,
            c,
            f,
            b_edge: (0.5 * c).min(f),
        })
    }

    pub fn from_distance(edge: (usize, usize), d_star: f64, r: f64) -> Result<Self> {
        Self::from_cos(edge, cos_from_distance(d_star, r)?)
    }

    /// Angle error of a measured cosine.
    pub fn error(&self, cos_theta: f64) -> f64 {
        cos_theta - self.cos_star
    }

    fn check_domain(&self, e: f64) -> Result<()> {
        if e > -self.c && e < self.f {
            Ok(())
        } else {
            Err(FormationError::ErrorOutOfDomain {
                e,
                lower: -self.c,
                upper: self.f,
            })
        }
    }
}

/// Constraints aligned with a graph's edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    items: Vec<AngleConstraint>,
}

impl ConstraintSet {
    /// Reorders `constraints` into `g`'s edge order; every edge needs exactly one.
    pub fn new(g: &FormationGraph, constraints: &[AngleConstraint]) -> Result<Self> {
        let mut slots: Vec<Option<AngleConstraint>> = vec![None; g.n_edges()];
        for k in constraints {
            let idx = g
                .edge_index(k.edge.0, k.edge.1)
                .ok_or(FormationError::UnknownEdge(k.edge.0, k.edge.1))?;
            if slots[idx].replace(*k).is_some() {
                return Err(FormationError::DuplicateEdge(k.edge.0, k.edge.1));
            }
        }
        let items = slots
            .into_iter()
            .zip(g.edges())
            .map(|(s, &(i, j))| s.ok_or(FormationError::MissingConstraint(i, j)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { items })
    }

    /// Constraints from desired distances listed in `g`'s edge order.
    pub fn from_distances(g: &FormationGraph, d_star: &[f64], r: f64) -> Result<Self> {
        if d_star.len() != g.n_edges() {
            return Err(FormationError::DimensionMismatch {
                expected: g.n_edges(),
                got: d_star.len(),
            });
        }
        let items = g
            .edges()
            .iter()
            .zip(d_star)
            .map(|(&e, &d)| AngleConstraint::from_distance(e, d, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { items })
    }

    pub fn as_slice(&self) -> &[AngleConstraint] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, k: usize) -> &AngleConstraint {
        &self.items[k]
    }

    pub fn cos_star(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.items.iter().map(|k| k.cos_star))
    }
}

/// `V(e) = ½ r (e / (e + c))²`.
pub fn potential(e: f64, k: &AngleConstraint, r: f64) -> Result<f64> {
    k.check_domain(e)?;
    let q = e / (e + k.c);
    Ok(0.5 * r * q * q)
}

/// `V'(e) = r e c / (e + c)³`.
pub fn potential_derivative(e: f64, k: &AngleConstraint, r: f64) -> Result<f64> {
    k.check_domain(e)?;
    Ok(r * scaled_derivative(e, k.c))
}

/// `V''(e) = r c (c − 2e) / (e + c)⁴`.
pub fn potential_second_derivative(e: f64, k: &AngleConstraint, r: f64) -> Result<f64> {
    k.check_domain(e)?;
    Ok(r * k.c * (k.c - 2.0 * e) / (e + k.c).powi(4))
}

/// `V'(e) / r`, which depends on the error and the target only.
pub fn scaled_derivative(e: f64, c: f64) -> f64 {
    e * c / (e + c).powi(3)
}

/// Stacked angle errors in edge order.
pub fn edge_errors(
    g: &FormationGraph,
    p: &Configuration,
    r: f64,
    constraints: &ConstraintSet,
) -> Result<DVector<f64>> {
    let d = check_feasible(g, p, r)?;
    Ok(DVector::from_iterator(
        d.len(),
        d.iter()
            .zip(constraints.as_slice())
            .map(|(dk, k)| k.error(1.0 - 2.0 * (r / dk).powi(2))),
    ))
}

/// `V'` for every edge.
pub fn potential_gradients(
    errors: &DVector<f64>,
    constraints: &ConstraintSet,
    r: f64,
) -> Result<DVector<f64>> {
    let v = errors
        .iter()
        .zip(constraints.as_slice())
        .map(|(&e, k)| potential_derivative(e, k, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(DVector::from_vec(v))
}

/// Sum of the edge potentials.
pub fn total_potential(errors: &DVector<f64>, constraints: &ConstraintSet, r: f64) -> Result<f64> {
    errors
        .iter()
        .zip(constraints.as_slice())
        .map(|(&e, k)| potential(e, k, r))
        .sum()
}

/// Velocity command for robot `i` from neighbor positions:
/// `u_i = K Σ_j V'(e_ij) (4r²/d_ij⁴) z_ij`.
pub fn control_geometric(
    i: usize,
    p: &Configuration,
    g: &FormationGraph,
    constraints: &ConstraintSet,
    r: f64,
    gain: f64,
) -> Result<Vector2<f64>> {
    let mut u = Vector2::zeros();
    for j in g.neighbors(i)? {
        let k = g.edge_index(i, j).expect("neighbor implies edge");
        let z = p.point(j) - p.point(i);
        let d = z.norm();
        if !crate::sensing::is_separated(d, r) {
            return Err(FormationError::Infeasible {
                i: i.min(j),
                j: i.max(j),
                distance: d,
                radius: r,
            });
        }
        let kc = constraints.get(k);
        let e = kc.error(1.0 - 2.0 * (r / d).powi(2));
        let v = potential_derivative(e, kc, r)?;
        u += v * 4.0 * r * r / d.powi(4) * z;
    }
    Ok(gain * u)
}

/// Velocity command for one robot using only its bearing measurements.
///
/// Each reading pairs the measured tangent bearings with the constraint of
/// that edge. Neither the radius nor any range enters the computation.
pub fn control_bearing_only(
    observer: usize,
    readings: &[(BearingPair, AngleConstraint)],
    gain: f64,
) -> Result<Vector2<f64>> {
    let mut u = Vector2::zeros();
    for (m, k) in readings {
        let cos = m.g_left.dot(&m.g_right);
        if !(cos > 0.5 && cos < 1.0) {
            return Err(FormationError::CosineOutOfRange(cos));
        }
        let e = k.error(cos);
        k.check_domain(e)?;
        let sin = (1.0 - cos * cos).sqrt();
        let sum = m.bearing_sum();
        let norm2 = sum.norm_squared();
        // ‖g+‖ = 2cos(θ/2) > √3 inside the feasible cone
        if norm2 < 3.0 {
            return Err(FormationError::DegenerateBearing(observer));
        }
        u += 2.0 * scaled_derivative(e, k.c) * (1.0 - cos) * sin / norm2 * sum;
    }
    Ok(gain * u)
}

/// Synthesized bearing readings robot `i` takes of each neighbor, paired with
/// that edge's constraint.
pub fn readings_for(
    i: usize,
    p: &Configuration,
    g: &FormationGraph,
    constraints: &ConstraintSet,
    r: f64,
) -> Result<Vec<(BearingPair, AngleConstraint)>> {
    let me = DiskState::new(p.point(i), r)?;
    g.neighbors(i)?
        .into_iter()
        .map(|j| {
            let k = g.edge_index(i, j).expect("neighbor implies edge");
            let other = DiskState::new(p.point(j), r)?;
            let pair = measure(&me, &other).map_err(|_| FormationError::Infeasible {
                i: i.min(j),
                j: i.max(j),
                distance: (other.center - me.center).norm(),
                radius: r,
            })?;
            Ok((pair, *constraints.get(k)))
        })
        .collect()
}

/// How each robot evaluates its control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    #[default]
    Geometric,
    #[serde(alias = "bearing")]
    BearingOnly,
}

impl std::str::FromStr for ControllerKind {
    type Err = FormationError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(Self::Geometric),
            "bearing" | "bearing_only" | "bearing-only" => Ok(Self::BearingOnly),
            other => Err(FormationError::InvalidParameter(format!(
                "unknown controller `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Geometric => "geometric",
            Self::BearingOnly => "bearing_only",
        })
    }
}

/// Closed-loop velocity `−K R_angleᵀ V'(e)` for the whole team.
pub fn stacked_control(
    p: &Configuration,
    g: &FormationGraph,
    constraints: &ConstraintSet,
    r: f64,
    gain: f64,
) -> Result<DVector<f64>> {
    let mats = RigidityMatrices::evaluate(g, p, r)?;
    let e = &mats.r_angle - constraints.cos_star();
    let v = potential_gradients(&e, constraints, r)?;
    Ok(-gain * mats.jac_angle.transpose() * v)
}

/// Velocity field evaluated robot by robot with the chosen controller.
pub fn team_control(
    kind: ControllerKind,
    p: &Configuration,
    g: &FormationGraph,
    constraints: &ConstraintSet,
    r: f64,
    gain: f64,
) -> Result<DVector<f64>> {
    let n = g.n_vertices();
    let mut out = DVector::zeros(2 * n);
    for i in 0..n {
        let u = match kind {
            ControllerKind::Geometric => control_geometric(i, p, g, constraints, r, gain)?,
            ControllerKind::BearingOnly => {
                control_bearing_only(i, &readings_for(i, p, g, constraints, r)?, gain)?
            }
        };
        out[2 * i] = u.x;
        out[2 * i + 1] = u.y;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn k92() -> AngleConstraint {
        AngleConstraint::from_cos((0, 1), 0.92).unwrap()
    }

    fn central<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn constraint_margins() {
        let k = k92();
        assert_abs_diff_eq!(k.c, 0.42, epsilon = 1e-15);
        assert_abs_diff_eq!(k.f, 0.08, epsilon = 1e-15);
        assert_abs_diff_eq!(k.b_edge, 0.08, epsilon = 1e-15);
        let cross = AngleConstraint::from_cos((0, 1), 5.0 / 6.0).unwrap();
        assert_abs_diff_eq!(cross.c / 2.0, cross.f, epsilon = 1e-15);
        for cs in [0.6, 0.7, 0.8, 0.83] {
            let k = AngleConstraint::from_cos((0, 1), cs).unwrap();
            assert!(k.c / 2.0 < k.f);
        }
        for cs in [0.84, 0.9, 0.99] {
            let k = AngleConstraint::from_cos((0, 1), cs).unwrap();
            assert!(k.c / 2.0 > k.f);
        }
        assert!(AngleConstraint::from_cos((0, 1), 0.5).is_err());
        assert!(AngleConstraint::from_distance((0, 1), 1.5, 1.0).is_err());
    }

    #[test]
    fn potential_values() {
        let k = k92();
        assert_eq!(potential(0.0, &k, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            potential(0.08 - 1e-12, &k, 1.0).unwrap(),
            0.0128,
            epsilon = 1e-10
        );
        assert!(potential(0.08, &k, 1.0).is_err());
        assert!(potential(-k.c, &k, 1.0).is_err());
        let near = potential(-0.9 * k.c, &k, 1.0).unwrap();
        let far = potential(-0.5 * k.c, &k, 1.0).unwrap();
        assert!(near > far && far > 0.0);
        assert!(potential(-k.c * (1.0 - 1e-9), &k, 1.0).unwrap() > 1e16);
    }

    #[test]
    fn derivative_values() {
        let k = k92();
        let e = 0.08 - 1e-9;
        let v = potential_derivative(e, &k, 1.0).unwrap();
        assert_abs_diff_eq!(v, 0.08 * 0.42 / 0.5f64.powi(3), epsilon = 1e-7);
        assert!((v - 0.2688).abs() < 1e-7);
        assert_eq!(potential_derivative(0.0, &k, 1.0).unwrap(), 0.0);
        assert!(potential_derivative(-0.1, &k, 1.0).unwrap() < 0.0);
        for e in [-0.3, -0.1, 0.03, 0.07] {
            let fd = central(|x| potential(x, &k, 1.0).unwrap(), e, 1e-6);
            let v = potential_derivative(e, &k, 1.0).unwrap();
            assert!((fd - v).abs() <= 1e-6 * v.abs());
        }
    }

    #[test]
    fn second_derivative_values() {
        let k = k92();
        assert_abs_diff_eq!(
            potential_second_derivative(0.0, &k, 1.0).unwrap(),
            1.0 / (0.42 * 0.42),
            epsilon = 1e-12
        );
        let k = AngleConstraint::from_cos((0, 1), 0.7).unwrap();
        let half = k.c / 2.0;
        assert_abs_diff_eq!(
            potential_second_derivative(half, &k, 1.0).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert!(potential_second_derivative(half - 1e-6, &k, 1.0).unwrap() > 0.0);
        assert!(potential_second_derivative(half + 1e-6, &k, 1.0).unwrap() < 0.0);
        for e in [-0.15, 0.0, 0.05, 0.12] {
            let fd = central(|x| potential_derivative(x, &k, 1.0).unwrap(), e, 1e-6);
            let kk = potential_second_derivative(e, &k, 1.0).unwrap();
            assert!((fd - kk).abs() <= 1e-6 * kk.abs().max(1e-3));
        }
    }

    fn pair_setup(d: f64, d_star: f64) -> (FormationGraph, Configuration, ConstraintSet) {
        let g = FormationGraph::new(2, &[(0, 1)]).unwrap();
        let p = Configuration::from_points(&[Vector2::new(0.2, -0.1), Vector2::new(0.2 + d, -0.1)]);
        let cs = ConstraintSet::from_distances(&g, &[d_star], 1.0).unwrap();
        (g, p, cs)
    }

    #[test]
    fn two_robot_directions() {
        // too far apart: e > 0, robot 0 moves toward robot 1
        let (g, p, cs) = pair_setup(4.0, 3.0);
        let u = control_geometric(0, &p, &g, &cs, 1.0, 1.0).unwrap();
        assert!(u.x > 0.0 && u.y.abs() < 1e-15);
        // too close: moves away
        let (g, p, cs) = pair_setup(2.5, 3.0);
        let u = control_geometric(0, &p, &g, &cs, 1.0, 1.0).unwrap();
        assert!(u.x < 0.0);
        // a small step along u lowers the potential
        let e0 = edge_errors(&g, &p, 1.0, &cs).unwrap();
        let v0 = total_potential(&e0, &cs, 1.0).unwrap();
        let mut moved = p.stacked().clone();
        moved[0] += 1e-4 * u.x;
        let p1 = Configuration::from_stacked(moved).unwrap();
        let v1 = total_potential(&edge_errors(&g, &p1, 1.0, &cs).unwrap(), &cs, 1.0).unwrap();
        assert!(v1 < v0);
    }

    #[test]
    fn zero_at_target_and_gain_linear() {
        let (g, p, cs) = pair_setup(3.0, 3.0);
        assert_eq!(
            control_geometric(0, &p, &g, &cs, 1.0, 50.0).unwrap(),
            Vector2::zeros()
        );
        let readings = readings_for(0, &p, &g, &cs, 1.0).unwrap();
        assert!(control_bearing_only(0, &readings, 1.0).unwrap().norm() < 1e-15);

        let (g, p, cs) = pair_setup(3.7, 3.0);
        let u1 = stacked_control(&p, &g, &cs, 1.0, 1.0).unwrap();
        let u7 = stacked_control(&p, &g, &cs, 1.0, 7.0).unwrap();
        assert_eq!(u7, u1.map(|x| x * 7.0));
        let b1 = control_geometric(1, &p, &g, &cs, 1.0, 1.0).unwrap();
        let b7 = control_geometric(1, &p, &g, &cs, 1.0, 7.0).unwrap();
        assert_eq!(b7, 7.0 * b1);
    }

    #[test]
    fn bearing_form_matches_geometric_for_a_pair() {
        let (g, p, cs) = pair_setup(2.37, 4.1);
        for i in 0..2 {
            let geo = control_geometric(i, &p, &g, &cs, 1.0, 1.0).unwrap();
            let brg =
                control_bearing_only(i, &readings_for(i, &p, &g, &cs, 1.0).unwrap(), 1.0).unwrap();
            assert!((geo - brg).norm() < 1e-10 * geo.norm().max(1.0));
        }
    }

    #[test]
    fn bearing_form_rejects_bad_readings() {
        let k = k92();
        let g = Vector2::new(1.0, 0.0);
        let pair = BearingPair::from_bearings(g, g);
        assert!(control_bearing_only(0, &[(pair, k)], 1.0).is_err());
        let wide = BearingPair::from_bearings(Vector2::new(0.0, 1.0), Vector2::new(0.0, -1.0));
        assert!(control_bearing_only(0, &[(wide, k)], 1.0).is_err());
    }

    #[test]
    fn constraint_set_validation() {
        let g = FormationGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let a = AngleConstraint::from_cos((1, 0), 0.8).unwrap();
        let b = AngleConstraint::from_cos((2, 1), 0.9).unwrap();
        let set = ConstraintSet::new(&g, &[b, a]).unwrap();
        assert_eq!(set.get(0).cos_star, 0.8);
        assert_eq!(
            ConstraintSet::new(&g, &[a]),
            Err(FormationError::MissingConstraint(1, 2))
        );
        let stray = AngleConstraint::from_cos((0, 2), 0.9).unwrap();
        assert_eq!(
            ConstraintSet::new(&g, &[a, b, stray]),
            Err(FormationError::UnknownEdge(0, 2))
        );
        assert!(ConstraintSet::new(&g, &[a, a, b]).is_err());
    }

    #[test]
    fn controller_kind_parsing() {
        assert_eq!(
            "bearing".parse::<ControllerKind>().unwrap(),
            ControllerKind::BearingOnly
        );
        assert_eq!(
            "geometric".parse::<ControllerKind>().unwrap(),
            ControllerKind::Geometric
        );
        assert!("magic".parse::<ControllerKind>().is_err());
    }
}
