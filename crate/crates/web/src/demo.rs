//! The demo's operations on plain Rust types, with errors as display strings.

use disk_formation::analysis::{compute_b, target_configuration};
use disk_formation::control::{potential, AngleConstraint};
use disk_formation::rigidity::{edge_distances, rigidity_report};
use disk_formation::scenario::load_scenario;
use disk_formation::sensing::{
    cos_from_distance, distance_from_cos, measure, tangent_points, DiskState,
};
use disk_formation::simulator::simulate as run_scenario;
use disk_formation::{ControllerKind, Scenario, SimulationTrace};
use nalgebra::Vector2;
use wasm_bindgen::prelude::*;

/// A finished (or halted) simulation, flattened for drawing.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Run {
    n_robots: usize,
    radius: f64,
    b: f64,
    edges: Vec<u32>,
    d_star: Vec<f64>,
    times: Vec<f64>,
    positions: Vec<f64>,
    errors: Vec<f64>,
    error_norm: Vec<f64>,
    min_clearance: f64,
    halted: Option<String>,
}

#[wasm_bindgen]
impl Run {
    #[wasm_bindgen(getter)]
    pub fn n_robots(&self) -> usize {
        self.n_robots
    }

    #[wasm_bindgen(getter)]
    pub fn n_edges(&self) -> usize {
        self.d_star.len()
    }

    #[wasm_bindgen(getter)]
    pub fn n_samples(&self) -> usize {
        self.times.len()
    }

    #[wasm_bindgen(getter)]
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Error bound below which the barrier is locally convex.
    #[wasm_bindgen(getter)]
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Zero-based endpoint pairs, `[i1, j1, i2, j2, …]`.
    #[wasm_bindgen(getter)]
    pub fn edges(&self) -> Vec<u32> {
        self.edges.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn d_star(&self) -> Vec<f64> {
        self.d_star.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    /// Sample-major `[x1, y1, …, xn, yn]` rows.
    #[wasm_bindgen(getter)]
    pub fn positions(&self) -> Vec<f64> {
        self.positions.clone()
    }

    /// Sample-major per-edge angle errors.
    #[wasm_bindgen(getter)]
    pub fn errors(&self) -> Vec<f64> {
        self.errors.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn error_norm(&self) -> Vec<f64> {
        self.error_norm.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn min_clearance(&self) -> f64 {
        self.min_clearance
    }

    /// Why integration stopped early, if it did.
    #[wasm_bindgen(getter)]
    pub fn halted(&self) -> Option<String> {
        self.halted.clone()
    }
}

impl Run {
    fn new(s: &Scenario, trace: &SimulationTrace, halted: Option<String>) -> Result<Self, String> {
        let flat =
            |rows: &[nalgebra::DVector<f64>]| rows.iter().flat_map(|r| r.iter().copied()).collect();
        Ok(Self {
            n_robots: s.graph.n_vertices(),
            radius: s.radius,
            b: compute_b(s.constraints.as_slice()).map_err(|e| e.to_string())?,
            edges: s
                .graph
                .edges()
                .iter()
                .flat_map(|&(i, j)| [i as u32, j as u32])
                .collect(),
            d_star: s
                .constraints
                .as_slice()
                .iter()
                .map(|k| distance_from_cos(k.cos_star, s.radius))
                .collect::<disk_formation::Result<_>>()
                .map_err(|e| e.to_string())?,
            times: trace.times.clone(),
            positions: flat(&trace.positions),
            errors: flat(&trace.errors),
            error_norm: trace.error_norm.clone(),
            min_clearance: trace.min_clearance,
            halted,
        })
    }
}

fn load(src: &str) -> Result<Scenario, String> {
    load_scenario(src).map_err(|e| e.to_string())
}

pub fn simulate(src: &str, gain: f64, controller: &str, t_final: f64) -> Result<Run, String> {
    let mut s = load(src)?;
    s.gain = gain;
    s.controller = controller
        .parse::<ControllerKind>()
        .map_err(|e| e.to_string())?;
    s.t_final = t_final;
    s.validate().map_err(|e| e.to_string())?;
    match run_scenario(&s) {
        Ok(trace) => Run::new(&s, &trace, None),
        Err(halt) => Run::new(&s, &halt.trace, Some(halt.error.to_string())),
    }
}

pub fn check(src: &str) -> Result<String, String> {
    let s = load(src)?;
    let target = target_configuration(&s).map_err(|e| e.to_string())?;
    let report = rigidity_report(&s.graph, &target).map_err(|e| e.to_string())?;
    let b = compute_b(s.constraints.as_slice()).map_err(|e| e.to_string())?;
    let lengths = edge_distances(&s.graph, &target);
    let mut out = String::from("target realization:\n");
    for (i, p) in target.points().iter().enumerate() {
        let tidy = |v: f64| if v.abs() < 5e-7 { 0.0 } else { v };
        out += &format!("  robot {}: ({:.4}, {:.4})\n", i + 1, tidy(p.x), tidy(p.y));
    }
    for (k, &(i, j)) in s.graph.edges().iter().enumerate() {
        out += &format!(
            "  edge ({},{}): d* = {:.4}, cos θ* = {:.6}\n",
            i + 1,
            j + 1,
            lengths[k],
            s.constraints.get(k).cos_star
        );
    }
    let verdict = match (report.infinitesimally_rigid, report.minimally_rigid) {
        (true, true) => "minimally and infinitesimally rigid",
        (true, false) => "infinitesimally rigid, not minimally rigid",
        (false, _) => "not infinitesimally rigid",
    };
    out += &format!(
        "rank {} of {} expected: {verdict}\nb = {b:.6}\n",
        report.rank, report.expected_rank
    );
    Ok(out)
}

/// One robot's view of a neighbor, and where that puts the edge on its barrier.
#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensing {
    left: [f64; 2],
    right: [f64; 2],
    pub cos_measured: f64,
    pub cos_from_distance: f64,
    pub cos_star: f64,
    pub error: f64,
    pub potential: f64,
}

#[wasm_bindgen]
impl Sensing {
    /// Tangent points on the observed disk, `[lx, ly, rx, ry]`.
    #[wasm_bindgen(getter)]
    pub fn tangents(&self) -> Vec<f64> {
        vec![self.left[0], self.left[1], self.right[0], self.right[1]]
    }
}

pub fn sense(p_i: [f64; 2], p_j: [f64; 2], radius: f64, d_star: f64) -> Result<Sensing, String> {
    let disk =
        |p: [f64; 2]| DiskState::new(Vector2::new(p[0], p[1]), radius).map_err(|e| e.to_string());
    let (observer, observed) = (disk(p_i)?, disk(p_j)?);
    let (left, right) = tangent_points(&observer, &observed).map_err(|e| e.to_string())?;
    let reading = measure(&observer, &observed).map_err(|e| e.to_string())?;
    let d = (observed.center - observer.center).norm();
    let k = AngleConstraint::from_distance((0, 1), d_star, radius).map_err(|e| e.to_string())?;
    let error = k.error(reading.cos_theta);
    Ok(Sensing {
        left: [left.x, left.y],
        right: [right.x, right.y],
        cos_measured: reading.cos_theta,
        cos_from_distance: cos_from_distance(d, radius).map_err(|e| e.to_string())?,
        cos_star: k.cos_star,
        error,
        // outside the barrier's domain the potential is unbounded
        potential: potential(error, &k, radius).unwrap_or(f64::INFINITY),
    })
}
