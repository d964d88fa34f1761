//! Planar realization of a set of desired edge lengths by trilateration.
//!
//! The first edge is laid along the positive x-axis from the origin. Every
//! further vertex is placed from its two lowest-indexed placed neighbors. Of
//! the two mirror solutions the one on the counterclockwise side of the
//! neighbor pair is used, unless the mirrored point stays strictly farther
//! from every other placed vertex. A vertex with a single placed neighbor
//! (possible only for flexible graphs) is placed counterclockwise at a right
//! angle to the seed edge.

use nalgebra::Vector2;

use crate::error::{FormationError, Result};
use crate::graph::FormationGraph;
use crate::linalg::perp;
use crate::rigidity::Configuration;

/// Relative tolerance on the realized edge lengths and the triangle test.
pub const REALIZATION_TOL: f64 = 1e-9;

pub fn realize(g: &FormationGraph, lengths: &[f64]) -> Result<Configuration> {
    let n = g.n_vertices();
    if lengths.len() != g.n_edges() {
        return Err(FormationError::DimensionMismatch {
            expected: g.n_edges(),
            got: lengths.len(),
        });
    }
    if let Some(bad) = lengths.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(FormationError::Realization(format!(
            "edge length {bad} is not positive"
        )));
    }
    let mut placed: Vec<Option<Vector2<f64>>> = vec![None; n];
    let length = |i: usize, j: usize| g.edge_index(i, j).map(|k| lengths[k]);

    match g.edges().first() {
        Some(&(i, j)) => {
            placed[i] = Some(Vector2::zeros());
            placed[j] = Some(Vector2::new(lengths[0], 0.0));
        }
        None => {
            placed[0] = Some(Vector2::zeros());
        }
    }
    let seed_dir = Vector2::new(1.0, 0.0);

    while placed.iter().any(Option::is_none) {
        let mut progress = false;
        for v in 0..n {
            if placed[v].is_some() {
                continue;
            }
            let anchors: Vec<usize> = g
                .neighbors(v)?
                .into_iter()
                .filter(|&u| placed[u].is_some())
                .collect();
            if anchors.len() < 2 {
                continue;
            }
            let (a, b) = (anchors[0], anchors[1]);
            let pa = placed[a].unwrap();
            let pb = placed[b].unwrap();
            let ra = length(v, a).unwrap();
            let rb = length(v, b).unwrap();
            let base = (pb - pa).norm();
            if base == 0.0 {
                return Err(FormationError::Realization(format!(
                    "anchors {a} and {b} coincide"
                )));
            }
            let u = (pb - pa) / base;
            let x = (base * base + ra * ra - rb * rb) / (2.0 * base);
            let h2 = ra * ra - x * x;
            let scale = ra.max(rb).max(base);
            if h2 < -REALIZATION_TOL * scale * scale {
                return Err(FormationError::Realization(format!(
                    "triangle inequality fails for vertex {v} with anchors {a}, {b}: \
                     lengths {ra}, {rb} across a base of {base}"
                )));
            }
            let h = h2.max(0.0).sqrt();
            let ccw = pa + x * u + h * perp(&u);
            let cw = pa + x * u - h * perp(&u);
            let clearance = |q: Vector2<f64>| {
                placed
                    .iter()
                    .enumerate()
                    .filter(|(w, p)| *w != a && *w != b && p.is_some())
                    .map(|(_, p)| (p.unwrap() - q).norm())
                    .fold(f64::INFINITY, f64::min)
            };
            placed[v] = Some(if clearance(cw) > clearance(ccw) {
                cw
            } else {
                ccw
            });
            progress = true;
        }
        if !progress {
            // flexible graph: hang one vertex off a single placed neighbor
            let hang = (0..n).find_map(|v| {
                if placed[v].is_some() {
                    return None;
                }
                g.neighbors(v)
                    .ok()?
                    .into_iter()
                    .find(|&u| placed[u].is_some())
                    .map(|u| (v, u))
            });
            match hang {
                Some((v, u)) => {
                    placed[v] = Some(placed[u].unwrap() + length(v, u).unwrap() * perp(&seed_dir));
                }
                None => return Err(FormationError::Realization("graph is disconnected".into())),
            }
        }
    }

    let points: Vec<_> = placed.into_iter().map(Option::unwrap).collect();
    for (k, &(i, j)) in g.edges().iter().enumerate() {
        let d = (points[j] - points[i]).norm();
        if (d - lengths[k]).abs() > 1e-6 * lengths[k].max(1.0) {
            return Err(FormationError::Realization(format!(
                "edge {{{i}, {j}}} realizes at length {d}, inconsistent with the desired {}",
                lengths[k]
            )));
        }
    }
    Ok(Configuration::from_points(&points))
}
