//! Shared fixtures for integration tests.
#![allow(dead_code)]

use disk_formation::rigidity::{edge_distances, Configuration};
use disk_formation::{FormationGraph, Scenario};
use nalgebra::{DVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rect_graph() -> FormationGraph {
    Scenario::rectangle().graph
}

/// Rectangle target with corners (0,0), (3,0), (0,4), (3,4).
pub fn rect_target() -> Configuration {
    Configuration::from_points(&[
        Vector2::new(0.0, 0.0),
        Vector2::new(3.0, 0.0),
        Vector2::new(0.0, 4.0),
        Vector2::new(3.0, 4.0),
    ])
}

/// Random configurations of `g` whose edges all exceed `2r + margin`,
/// drawn uniformly from a square of half-width `spread`.
pub fn feasible_configurations(
    g: &FormationGraph,
    r: f64,
    margin: f64,
    spread: f64,
    count: usize,
    seed: u64,
) -> Vec<Configuration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.n_vertices();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = Configuration::from_stacked(DVector::from_fn(2 * n, |_, _| {
            rng.random_range(-spread..spread)
        }))
        .unwrap();
        if edge_distances(g, &p).iter().all(|&d| d > 2.0 * r + margin) {
            out.push(p);
        }
    }
    out
}

pub fn random_direction(dim: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let v = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
    let norm = v.norm();
    v / norm
}

/// Central-difference Jacobian of `f` at `x`, one column per coordinate.
pub fn central_jacobian<F>(f: F, x: &DVector<f64>, h: f64) -> nalgebra::DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let m = f(x).len();
    let mut jac = nalgebra::DMatrix::zeros(m, x.len());
    for c in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[c] += h;
        xm[c] -= h;
        jac.set_column(c, &((f(&xp) - f(&xm)) / (2.0 * h)));
    }
    jac
}

pub fn relative_error(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}
