//! Closed-loop integration of the single-integrator team.
//!
//! The flow `ṗ = −K R_angleᵀ V'(e)` is integrated with classical RK4. A step
//! is accepted only if every edge stays clear of contact and no edge length
//! moves by more than [`MAX_RELATIVE_CHANGE`]; otherwise the step is halved,
//! down to `dt · 2⁻²⁰`.

use nalgebra::{DVector, Vector2};

use crate::control::{
    edge_errors, potential_gradients, team_control, total_potential, AngleConstraint,
    ConstraintSet, ControllerKind,
};
use crate::error::{FormationError, Result};
use crate::graph::FormationGraph;
use crate::rigidity::{check_feasible, edge_distances, Configuration, RigidityMatrices};
use crate::sensing::is_separated;

/// Largest accepted relative change of an edge length in one step.
pub const MAX_RELATIVE_CHANGE: f64 = 0.1;
/// Largest relative change of an edge's clearance `d − 2r` in one step. This
/// keeps the fast motion near contact resolved; it is waived for the last
/// halving, where only feasibility and [`MAX_RELATIVE_CHANGE`] apply.
pub const MAX_GAP_CHANGE: f64 = 0.01;
pub const MAX_HALVINGS: i32 = 20;
/// Consecutive steps below the early-stop tolerance before a run ends.
pub const EARLY_STOP_STEPS: usize = 100;

/// A complete problem instance.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub graph: FormationGraph,
    pub radius: f64,
    pub initial: Configuration,
    pub constraints: ConstraintSet,
    pub gain: f64,
    pub t_final: f64,
    pub dt: f64,
    pub controller: ControllerKind,
    /// Record every `output_decimation`-th accepted step (first and last are always kept).
    pub output_decimation: usize,
    /// Stop once `‖e‖` stays below this for [`EARLY_STOP_STEPS`] steps.
    pub early_stop_tol: Option<f64>,
    pub seed: u64,
}

impl Scenario {
    /// Scenario with default integration settings (`dt = 1e−3`, `t_final = 10`,
    /// decimation 10, early stop at `1e−10`, gain 1).
    pub fn new(
        graph: FormationGraph,
        radius: f64,
        initial: Configuration,
        constraints: ConstraintSet,
    ) -> Result<Self> {
        let s = Self {
            graph,
            radius,
            initial,
            constraints,
            gain: 1.0,
            t_final: 10.0,
            dt: 1e-3,
            controller: ControllerKind::Geometric,
            output_decimation: 10,
            early_stop_tol: Some(1e-10),
            seed: 0,
        };
        s.validate()?;
        Ok(s)
    }

    /// Four unit disks asked to form a 3 × 4 rectangle, starting from a
    /// cluster where robots 1 and 2 nearly touch.
    pub fn rectangle() -> Self {
        let graph = FormationGraph::new(4, &[(0, 1), (0, 2), (0, 3), (1, 3), (2, 3)])
            .expect("static graph");
        let initial = Configuration::from_points(&[
            Vector2::new(0.0, 0.0),
            Vector2::new(2.05, 0.0),
            Vector2::new(-2.05, 0.05),
            Vector2::new(-1.0, 1.85),
        ]);
        let constraints = ConstraintSet::from_distances(&graph, &[3.0, 4.0, 5.0, 4.0, 3.0], 1.0)
            .expect("static targets");
        let mut s = Self::new(graph, 1.0, initial, constraints).expect("static scenario");
        s.gain = 50.0;
        s
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.graph.n_vertices();
        if self.initial.n() != n {
            return Err(FormationError::DimensionMismatch {
                expected: n,
                got: self.initial.n(),
            });
        }
        if self.constraints.len() != self.graph.n_edges() {
            return Err(FormationError::DimensionMismatch {
                expected: self.graph.n_edges(),
                got: self.constraints.len(),
            });
        }
        for (k, &(i, j)) in self.graph.edges().iter().enumerate() {
            if self.constraints.get(k).edge != (i, j) {
                return Err(FormationError::MissingConstraint(i, j));
            }
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(FormationError::InvalidRadius(self.radius));
        }
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(FormationError::InvalidParameter(format!(
                    "{name} must be positive, got {x}"
                )))
            }
        };
        positive("gain", self.gain)?;
        positive("dt", self.dt)?;
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(FormationError::InvalidParameter(format!(
                "t_final must be non-negative, got {}",
                self.t_final
            )));
        }
        if self.output_decimation == 0 {
            return Err(FormationError::InvalidParameter(
                "output_decimation must be at least 1".into(),
            ));
        }
        self.initial.check_distinct()?;
        check_feasible(&self.graph, &self.initial, self.radius)?;
        Ok(())
    }

    pub fn constraint(&self, k: usize) -> &AngleConstraint {
        self.constraints.get(k)
    }

    /// Closed-loop velocity at `p`.
    pub fn velocity(&self, p: &DVector<f64>) -> Result<DVector<f64>> {
        let cfg = Configuration::from_stacked(p.clone())?;
        team_control(
            self.controller,
            &cfg,
            &self.graph,
            &self.constraints,
            self.radius,
            self.gain,
        )
    }
}

/// Recorded samples of one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationTrace {
    pub times: Vec<f64>,
    pub positions: Vec<DVector<f64>>,
    pub errors: Vec<DVector<f64>>,
    pub distances: Vec<DVector<f64>>,
    pub lyapunov: Vec<f64>,
    pub error_norm: Vec<f64>,
    pub centroid: Vec<Vector2<f64>>,
    /// Smallest `d − 2r` over all recorded samples and edges.
    pub min_clearance: f64,
    pub radius: f64,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_robots(&self) -> usize {
        self.positions.first().map_or(0, |p| p.len() / 2)
    }

    pub fn n_edges(&self) -> usize {
        self.errors.first().map_or(0, |e| e.len())
    }

    fn push(&mut self, t: f64, p: &DVector<f64>, scenario: &Scenario) -> Result<()> {
        let cfg = Configuration::from_stacked(p.clone())?;
        let d = edge_distances(&scenario.graph, &cfg);
        let e = edge_errors(
            &scenario.graph,
            &cfg,
            scenario.radius,
            &scenario.constraints,
        )?;
        let v = total_potential(&e, &scenario.constraints, scenario.radius)?;
        let clearance = d.min() - 2.0 * scenario.radius;
        self.min_clearance = if self.is_empty() {
            clearance
        } else {
            self.min_clearance.min(clearance)
        };
        self.times.push(t);
        self.error_norm.push(e.norm());
        self.centroid.push(cfg.centroid());
        self.positions.push(p.clone());
        self.errors.push(e);
        self.distances.push(d);
        self.lyapunov.push(v);
        Ok(())
    }

    /// Largest distance of any recorded centroid from the first one.
    pub fn centroid_drift(&self) -> f64 {
        let c0 = match self.centroid.first() {
            Some(c) => *c,
            None => return 0.0,
        };
        self.centroid
            .iter()
            .map(|c| (c - c0).norm())
            .fold(0.0, f64::max)
    }

    /// Largest increase `V(t_{k+1}) − V(t_k) − slack·(1 + V(t_k))` between
    /// consecutive samples; non-positive when the potential never rises
    /// beyond the slack.
    pub fn lyapunov_excess(&self, slack: f64) -> f64 {
        self.lyapunov
            .windows(2)
            .map(|w| w[1] - w[0] - slack * (1.0 + w[0]))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Counters collected while integrating.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub smallest_step: f64,
    /// `min(d − 2r)` over every accepted step, recorded or not.
    pub min_clearance: f64,
    pub early_stopped: bool,
}

/// A run that had to stop before `t_final`; carries everything recorded so far.
#[derive(Debug, Clone)]
pub struct SimulationHalt {
    pub error: FormationError,
    pub trace: SimulationTrace,
}

impl std::fmt::Display for SimulationHalt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "simulation halted after {} samples: {}",
            self.trace.len(),
            self.error
        )
    }
}

impl std::error::Error for SimulationHalt {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

fn rk4(scenario: &Scenario, p: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
    let k1 = scenario.velocity(p)?;
    let k2 = scenario.velocity(&(p + &k1 * (0.5 * h)))?;
    let k3 = scenario.velocity(&(p + &k2 * (0.5 * h)))?;
    let k4 = scenario.velocity(&(p + &k3 * h))?;
    Ok(p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Returns the first edge that violates the acceptance rules, if any.
fn rejected_edge(
    scenario: &Scenario,
    before: &DVector<f64>,
    after: &DVector<f64>,
    limit_gap: bool,
) -> Option<(usize, usize, f64)> {
    let g = &scenario.graph;
    for &(i, j) in g.edges() {
        let d0 = (Vector2::new(before[2 * j], before[2 * j + 1])
            - Vector2::new(before[2 * i], before[2 * i + 1]))
        .norm();
        let d1 = (Vector2::new(after[2 * j], after[2 * j + 1])
            - Vector2::new(after[2 * i], after[2 * i + 1]))
        .norm();
        let gap0 = d0 - 2.0 * scenario.radius;
        let gap1 = d1 - 2.0 * scenario.radius;
        if !d1.is_finite()
            || !is_separated(d1, scenario.radius)
            || (d1 - d0).abs() > MAX_RELATIVE_CHANGE * d0
            || (limit_gap && (gap1 - gap0).abs() > MAX_GAP_CHANGE * gap0)
        {
            return Some((i, j, d1));
        }
    }
    None
}

/// The edge nearest contact at `p`, with its length.
fn closest_edge(scenario: &Scenario, p: &DVector<f64>) -> (usize, usize, f64) {
    scenario
        .graph
        .edges()
        .iter()
        .map(|&(i, j)| {
            let d = (Vector2::new(p[2 * j], p[2 * j + 1]) - Vector2::new(p[2 * i], p[2 * i + 1]))
                .norm();
            (i, j, d)
        })
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .unwrap_or((0, 0, f64::NAN))
}

/// One accepted integration step from `p`: the new state and the step size used.
pub fn step(p: &DVector<f64>, scenario: &Scenario, dt: f64) -> Result<(DVector<f64>, f64)> {
    let h_min = dt * 2f64.powi(-MAX_HALVINGS);
    let mut h = dt;
    let mut last_edge = None;
    loop {
        let limit_gap = 0.5 * h >= h_min;
        match rk4(scenario, p, h) {
            Ok(cand) => match rejected_edge(scenario, p, &cand, limit_gap) {
                None => return Ok((cand, h)),
                Some(edge) => last_edge = Some(edge),
            },
            Err(FormationError::Infeasible { i, j, distance, .. }) => {
                last_edge = Some((i, j, distance))
            }
            // a stage flung so far that an angle left the barrier's domain
            Err(FormationError::ErrorOutOfDomain { .. }) => {}
            Err(e) => return Err(e),
        }
        h *= 0.5;
        if h < h_min {
            let (i, j, distance) = last_edge.unwrap_or_else(|| closest_edge(scenario, p));
            return Err(FormationError::StepUnderflow {
                t: f64::NAN,
                i,
                j,
                distance,
            });
        }
    }
}

pub fn simulate(scenario: &Scenario) -> std::result::Result<SimulationTrace, SimulationHalt> {
    simulate_with_stats(scenario).map(|(trace, _)| trace)
}

pub fn simulate_with_stats(
    scenario: &Scenario,
) -> std::result::Result<(SimulationTrace, RunStats), SimulationHalt> {
    let mut trace = SimulationTrace {
        radius: scenario.radius,
        ..Default::default()
    };
    let halt = |error: FormationError, trace: &SimulationTrace| SimulationHalt {
        error,
        trace: trace.clone(),
    };
    if let Err(e) = scenario.validate() {
        return Err(halt(e, &trace));
    }
    let mut p = scenario.initial.stacked().clone();
    let mut t = 0.0;
    if let Err(e) = trace.push(t, &p, scenario) {
        return Err(halt(e, &trace));
    }
    let mut stats = RunStats {
        smallest_step: f64::INFINITY,
        min_clearance: trace.min_clearance,
        ..Default::default()
    };
    let mut below_tol = 0usize;
    let mut since_sample = 0usize;
    // stop within a relative hair of t_final rather than taking a sliver step
    let t_end = scenario.t_final;
    while t < t_end - 1e-12 * t_end.max(1.0) {
        let dt = scenario.dt.min(t_end - t);
        let (next, h) = match step(&p, scenario, dt) {
            Ok(s) => s,
            Err(FormationError::StepUnderflow { i, j, distance, .. }) => {
                return Err(halt(
                    FormationError::StepUnderflow { t, i, j, distance },
                    &trace,
                ))
            }
            Err(e) => return Err(halt(e, &trace)),
        };
        if next.iter().any(|x| !x.is_finite()) {
            return Err(halt(FormationError::NonFinite { t: t + h }, &trace));
        }
        if h < dt {
            stats.rejected_steps += (dt / h).log2().round() as usize;
        }
        stats.accepted_steps += 1;
        stats.smallest_step = stats.smallest_step.min(h);
        p = next;
        t = if h == dt && dt == t_end - t {
            t_end
        } else {
            t + h
        };
        since_sample += 1;

        let cfg = Configuration::from_stacked(p.clone()).expect("even length");
        let d = edge_distances(&scenario.graph, &cfg);
        stats.min_clearance = stats.min_clearance.min(d.min() - 2.0 * scenario.radius);

        let mut stop = t >= t_end - 1e-12 * t_end.max(1.0);
        if let Some(tol) = scenario.early_stop_tol {
            let e = match edge_errors(
                &scenario.graph,
                &cfg,
                scenario.radius,
                &scenario.constraints,
            ) {
                Ok(e) => e,
                Err(err) => return Err(halt(err, &trace)),
            };
            if e.norm() < tol {
                below_tol += 1;
                if below_tol >= EARLY_STOP_STEPS {
                    stats.early_stopped = true;
                    stop = true;
                }
            } else {
                below_tol = 0;
            }
        }
        if since_sample >= scenario.output_decimation || stop {
            if let Err(e) = trace.push(t, &p, scenario) {
                return Err(halt(e, &trace));
            }
            since_sample = 0;
        }
        if stop {
            break;
        }
    }
    if stats.accepted_steps == 0 {
        stats.smallest_step = 0.0;
    }
    Ok((trace, stats))
}

/// Largest normalized mismatch between the recorded error rates and the
/// predicted `ė = −K F(p) V'(e)`, `F = R_angle R_angleᵀ`.
///
/// Rates are taken with the second-order three-point formula on the
/// (possibly uneven) sample grid, so the residual shrinks quadratically with
/// the sample spacing.
pub fn error_dynamics_residual(trace: &SimulationTrace, scenario: &Scenario) -> Result<f64> {
    if trace.len() < 3 {
        return Err(FormationError::TooFewSamples {
            needed: 3,
            got: trace.len(),
        });
    }
    let mut worst: f64 = 0.0;
    for k in 1..trace.len() - 1 {
        let h1 = trace.times[k] - trace.times[k - 1];
        let h2 = trace.times[k + 1] - trace.times[k];
        if h1 <= 0.0 || h2 <= 0.0 {
            continue;
        }
        let (em, e0, ep) = (&trace.errors[k - 1], &trace.errors[k], &trace.errors[k + 1]);
        let numeric =
            (ep * (h1 * h1) - em * (h2 * h2) - e0 * (h1 * h1 - h2 * h2)) / (h1 * h2 * (h1 + h2));
        let model = predicted_error_rate(&trace.positions[k], scenario)?;
        worst = worst.max((&numeric - model).norm() / (1.0 + numeric.norm()));
    }
    Ok(worst)
}

/// `−K F(p) V'(e)` at a stacked configuration.
pub fn predicted_error_rate(p: &DVector<f64>, scenario: &Scenario) -> Result<DVector<f64>> {
    let cfg = Configuration::from_stacked(p.clone())?;
    let mats = RigidityMatrices::evaluate(&scenario.graph, &cfg, scenario.radius)?;
    let e = &mats.r_angle - scenario.constraints.cos_star();
    let v = potential_gradients(&e, &scenario.constraints, scenario.radius)?;
    let f = &mats.jac_angle * mats.jac_angle.transpose();
    Ok(-scenario.gain * f * v)
}
