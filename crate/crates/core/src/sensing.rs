//! Disk geometry and the tangent-point bearing measurement model.
//!
//! An observer robot `i` sees a neighbor disk `j` as a cone bounded by the two
//! tangent lines from its own center. The unit bearings to the two tangent
//! points are the only thing robot `i` measures; the cosine of the cone's
//! opening angle follows from their inner product and, given the common
//! radius, determines the inter-center distance.

use nalgebra::Vector2;

use crate::error::{FormationError, Result};
use crate::linalg::perp;

/// Relative margin below which a separation counts as contact.
pub const CONTACT_MARGIN: f64 = 1e-12;

/// A disk-shaped robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskState {
    pub center: Vector2<f64>,
    pub radius: f64,
}

impl DiskState {
    pub fn new(center: Vector2<f64>, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(Self { center, radius })
    }
}

/// Bearings from the observer center to the left and right tangent points on
/// a neighbor, and the cosine of the angle between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BearingPair {
    pub g_left: Vector2<f64>,
    pub g_right: Vector2<f64>,
    pub cos_theta: f64,
}

impl BearingPair {
    /// Builds a pair from raw bearings, deriving the cosine from their inner product.
    pub fn from_bearings(g_left: Vector2<f64>, g_right: Vector2<f64>) -> Self {
        Self {
            g_left,
            g_right,
            cos_theta: g_left.dot(&g_right),
        }
    }

    /// `g_L + g_R`; parallel to the center-to-center direction.
    pub fn bearing_sum(&self) -> Vector2<f64> {
        self.g_left + self.g_right
    }
}

/// Relative position `z = p_j − p_i` and the quantities derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeState {
    pub z: Vector2<f64>,
    pub d: f64,
    pub g: Vector2<f64>,
    pub g_perp: Vector2<f64>,
}

impl RelativeState {
    pub fn between(p_i: &Vector2<f64>, p_j: &Vector2<f64>) -> Self {
        let z = p_j - p_i;
        let d = z.norm();
        let g = z / d;
        Self {
            z,
            d,
            g,
            g_perp: perp(&g),
        }
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(FormationError::InvalidRadius(r))
    }
}

/// True when `d` clears contact (`d > 2r(1 + 1e−12)`).
pub fn is_separated(d: f64, r: f64) -> bool {
    d > 2.0 * r * (1.0 + CONTACT_MARGIN)
}

fn check_separation(d: f64, r: f64) -> Result<()> {
    check_radius(r)?;
    if is_separated(d, r) && d.is_finite() {
        Ok(())
    } else {
        Err(FormationError::BelowContact {
            distance: d,
            radius: r,
        })
    }
}

/// Tangent points of the circle `(p_j, r)` seen from `p_i`; valid whenever `d > r`.
pub(crate) fn tangent_geometry(
    p_i: &Vector2<f64>,
    p_j: &Vector2<f64>,
    r: f64,
) -> (Vector2<f64>, Vector2<f64>) {
    let rel = RelativeState::between(p_i, p_j);
    let a = (rel.d * rel.d - r * r).sqrt();
    let k = r * r / rel.d;
    let h = r * a / rel.d;
    let foot = p_j - k * rel.g;
    (foot + h * rel.g_perp, foot - h * rel.g_perp)
}

/// The two tangent points on `observed` whose tangent lines pass through the
/// observer center, returned as `(left, right)`. "Left" is the point offset
/// counterclockwise from the center line.
pub fn tangent_points(
    observer: &DiskState,
    observed: &DiskState,
) -> Result<(Vector2<f64>, Vector2<f64>)> {
    let d = (observed.center - observer.center).norm();
    check_separation(d, observed.radius)?;
    Ok(tangent_geometry(
        &observer.center,
        &observed.center,
        observed.radius,
    ))
}

/// Exact synthesis of the bearing measurement robot `observer` takes of `observed`.
pub fn measure(observer: &DiskState, observed: &DiskState) -> Result<BearingPair> {
    let (left, right) = tangent_points(observer, observed)?;
    let g_left = (left - observer.center).normalize();
    let g_right = (right - observer.center).normalize();
    Ok(BearingPair::from_bearings(g_left, g_right))
}

/// `cos θ = 1 − 2(r/d)²`.
pub fn cos_from_distance(d: f64, r: f64) -> Result<f64> {
    check_separation(d, r)?;
    let s = r / d;
    Ok(1.0 - 2.0 * s * s)
}

/// Inverse of [`cos_from_distance`]: `d = √(2r² / (1 − cos θ))`.
pub fn distance_from_cos(c: f64, r: f64) -> Result<f64> {
    check_radius(r)?;
    if !(c > 0.5 && c < 1.0) {
        return Err(FormationError::CosineOutOfRange(c));
    }
    Ok((2.0 * r * r / (1.0 - c)).sqrt())
}
