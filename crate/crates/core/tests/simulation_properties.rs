mod common;

use disk_formation::control::potential_derivative;
use disk_formation::simulator::*;
use disk_formation::trace_io::{from_csv, to_csv};
use disk_formation::{Configuration, ConstraintSet, FormationError, FormationGraph, Scenario};
use nalgebra::{Rotation2, Vector2};

fn pair(d0: f64, d_star: f64, gain: f64) -> Scenario {
    let g = FormationGraph::new(2, &[(0, 1)]).unwrap();
    let p = Configuration::from_points(&[Vector2::zeros(), Vector2::new(d0, 0.0)]);
    let cs = ConstraintSet::from_distances(&g, &[d_star], 1.0).unwrap();
    let mut s = Scenario::new(g, 1.0, p, cs).unwrap();
    s.gain = gain;
    s
}

/// Separation rate of two robots, `ḋ = −2K·V'(e)·4r²/d³`, integrated on its
/// own with fine RK4 substeps and sampled at `times`.
fn pair_distance_ode(s: &Scenario, times: &[f64]) -> Vec<f64> {
    let k = *s.constraints.get(0);
    let r = s.radius;
    let rate = |d: f64| {
        let e = 1.0 - 2.0 * (r / d).powi(2) - k.cos_star;
        -2.0 * s.gain * potential_derivative(e, &k, r).unwrap() * 4.0 * r * r / d.powi(3)
    };
    let mut d = (s.initial.point(1) - s.initial.point(0)).norm();
    let mut out = vec![d];
    for w in times.windows(2) {
        let n = ((w[1] - w[0]) / 1e-5).ceil().max(1.0);
        let h = (w[1] - w[0]) / n;
        for _ in 0..n as usize {
            let k1 = rate(d);
            let k2 = rate(d + 0.5 * h * k1);
            let k3 = rate(d + 0.5 * h * k2);
            let k4 = rate(d + h * k3);
            d += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        out.push(d);
    }
    out
}

#[test]
fn two_robots_converge_monotonically() {
    for (d0, d_star) in [(4.5, 3.0), (2.3, 3.0), (6.0, 2.5)] {
        let mut s = pair(d0, d_star, 50.0);
        s.t_final = 5.0;
        s.output_decimation = 1;
        s.early_stop_tol = None;
        let trace = simulate(&s).unwrap();
        let d: Vec<f64> = trace.distances.iter().map(|v| v[0]).collect();
        let rising = d0 < d_star;
        for w in d.windows(2) {
            assert!(if rising { w[1] >= w[0] } else { w[1] <= w[0] });
        }
        let gap = (d.last().unwrap() - d_star).abs();
        assert!(gap < 1e-6, "d0 = {d0}: final gap {gap:e}");

        let oracle = pair_distance_ode(&s, &trace.times);
        for (k, (a, b)) in oracle.iter().zip(&d).enumerate() {
            assert!(
                (a - b).abs() < 1e-6,
                "d0 = {d0}, t = {}: {a} vs {b}",
                trace.times[k]
            );
        }
    }
}

#[test]
fn traces_are_equivariant_under_rigid_motion() {
    let s = Scenario::rectangle();
    let base = simulate(&s).unwrap();
    for (angle, offset) in [
        (0.7, Vector2::new(3.0, -2.0)),
        (-2.4, Vector2::new(-10.0, 25.0)),
    ] {
        let mut moved = s.clone();
        moved.initial = s.initial.transformed(angle, offset);
        let trace = simulate(&moved).unwrap();
        assert_eq!(trace.len(), base.len());
        let rot = Rotation2::new(angle);
        for k in 0..base.len() {
            assert!((trace.times[k] - base.times[k]).abs() < 1e-12);
            for i in 0..4 {
                let a = Vector2::new(base.positions[k][2 * i], base.positions[k][2 * i + 1]);
                let b = Vector2::new(trace.positions[k][2 * i], trace.positions[k][2 * i + 1]);
                assert!((rot * a + offset - b).norm() < 1e-8);
            }
            assert!((&trace.errors[k] - &base.errors[k]).amax() < 1e-8);
        }
    }
}

#[test]
fn rectangle_run_respects_trace_contract() {
    let s = Scenario::rectangle();
    let (trace, stats) = simulate_with_stats(&s).unwrap();
    assert!(trace.min_clearance > 0.0);
    assert_eq!(
        trace.min_clearance,
        stats.min_clearance.min(trace.min_clearance)
    );
    assert!(trace.lyapunov_excess(1e-9) <= 0.0);
    let scale = 1.0 + s.initial.stacked().norm();
    assert!(trace.centroid_drift() < 1e-8 * scale);
    assert!(
        stats.rejected_steps > 0,
        "the near-contact start should force halving"
    );
    assert_eq!(*trace.times.last().unwrap(), 10.0);
}

#[test]
fn equilibrium_trace_is_constant() {
    let mut s = Scenario::rectangle();
    s.initial = common::rect_target();
    s.early_stop_tol = None;
    s.t_final = 1.0;
    let trace = simulate(&s).unwrap();
    for p in &trace.positions {
        assert!((p - s.initial.stacked()).amax() < 1e-14);
    }
    assert!(error_dynamics_residual(&trace, &s).unwrap() < 1e-12);
}

#[test]
fn early_stop_ends_converged_runs() {
    let mut s = Scenario::rectangle();
    s.initial = common::rect_target();
    s.t_final = 10.0;
    let (trace, stats) = simulate_with_stats(&s).unwrap();
    assert!(stats.early_stopped);
    assert!(*trace.times.last().unwrap() < 1.0);
}

#[test]
fn error_dynamics_residual_is_small_at_fine_steps() {
    let mut s = Scenario::rectangle();
    s.dt = 1e-4;
    s.output_decimation = 1;
    let trace = simulate(&s).unwrap();
    let res = error_dynamics_residual(&trace, &s).unwrap();
    assert!(res < 1e-3, "residual {res:e}");
}

#[test]
fn error_dynamics_residual_is_second_order() {
    // start from the smooth phase so no step halving mixes step sizes
    let s = Scenario::rectangle();
    let first = simulate(&s).unwrap();
    let k = first.times.iter().position(|&t| t >= 1.0).unwrap();
    let residual = |dt: f64| {
        let mut q = s.clone();
        q.initial = Configuration::from_stacked(first.positions[k].clone()).unwrap();
        q.t_final = 1.0;
        q.dt = dt;
        q.output_decimation = 1;
        error_dynamics_residual(&simulate(&q).unwrap(), &q).unwrap()
    };
    let coarse = residual(2e-2);
    let fine = residual(1e-2);
    let ratio = coarse / fine;
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn runs_are_deterministic_and_csv_round_trips() {
    let s = Scenario::rectangle();
    let a = simulate(&s).unwrap();
    let b = simulate(&s).unwrap();
    assert_eq!(to_csv(&a), to_csv(&b));
    let back = from_csv(&to_csv(&a), Some(s.radius)).unwrap();
    assert_eq!(back, a);
}

#[test]
fn too_coarse_step_halts_with_partial_trace() {
    // with this gain even dt·2⁻²⁰ moves robots 1 and 2 by more than 10 %
    let mut s = Scenario::rectangle();
    s.gain = 1e9;
    let halt = simulate(&s).unwrap_err();
    match halt.error {
        FormationError::StepUnderflow { t, i, j, distance } => {
            assert_eq!(t, 0.0);
            assert!(s.graph.edge_index(i, j).is_some());
            assert!(distance.is_finite());
        }
        other => panic!("unexpected error {other:?}"),
    }
    assert_eq!(halt.trace.len(), 1);
    assert!(halt.to_string().contains("smaller dt"));
}

#[test]
fn clearance_limit_is_waived_at_the_smallest_step() {
    // at K = 100 the opening repulsion needs the floor step with a large
    // relative clearance change; the run continues instead of halting
    let mut s = Scenario::rectangle();
    s.gain = 100.0;
    let (trace, stats) = simulate_with_stats(&s).unwrap();
    assert_eq!(stats.smallest_step, s.dt * 2f64.powi(-MAX_HALVINGS));
    assert!(trace.min_clearance > 0.0);
}

#[test]
fn controllers_produce_the_same_trace() {
    let s = Scenario::rectangle();
    let mut b = s.clone();
    b.controller = disk_formation::ControllerKind::BearingOnly;
    let geo = simulate(&s).unwrap();
    let brg = simulate(&b).unwrap();
    assert_eq!(geo.len(), brg.len());
    for k in 0..geo.len() {
        assert!((&geo.positions[k] - &brg.positions[k]).amax() < 1e-8);
    }
}
