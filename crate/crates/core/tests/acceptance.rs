//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::time::Instant;

use common::*;
use disk_formation::analysis::{compute_b, fit_exponential_rate, verify_equilibrium_set_equality};
use disk_formation::control::*;
use disk_formation::rigidity::*;
use disk_formation::sensing::cos_from_distance;
use disk_formation::simulator::{simulate, SimulationTrace};
use disk_formation::{AngleConstraint, Configuration, ConstraintSet, FormationGraph, Scenario};
use nalgebra::{DMatrix, DVector, Rotation2, Vector2};

type Outcome = (bool, String);

fn rectangle_run() -> (Scenario, SimulationTrace, f64) {
    let mut s = Scenario::rectangle();
    s.output_decimation = 1;
    s.early_stop_tol = None;
    let start = Instant::now();
    let trace = simulate(&s).expect("rectangle run");
    (s, trace, start.elapsed().as_secs_f64())
}

fn min_pairwise_distance(p: &DVector<f64>) -> f64 {
    let n = p.len() / 2;
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            let d = Vector2::new(p[2 * j] - p[2 * i], p[2 * j + 1] - p[2 * i + 1]).norm();
            best = best.min(d);
        }
    }
    best
}

fn criterion_1(s: &Scenario, trace: &SimulationTrace, seconds: f64) -> Outcome {
    let closest = trace
        .positions
        .iter()
        .map(min_pairwise_distance)
        .fold(f64::INFINITY, f64::min);
    let a = closest > 2.0;

    let b_bound = compute_b(s.constraints.as_slice()).unwrap();
    let worst = |k: usize| trace.errors[k].amax();
    let entered = (0..trace.len()).find(|&k| worst(k) < b_bound);
    let stays = entered.is_some_and(|k0| (k0..trace.len()).all(|k| worst(k) < b_bound));
    let final_err = worst(trace.len() - 1);
    let t_last = *trace.times.last().unwrap();
    let b = stays && final_err < 1e-6 && t_last <= 10.0;

    let drift = trace.centroid_drift();
    let c = drift < 1e-8;
    (
        a && b && c,
        format!(
            "(a) min distance {closest:.6} > 2: {}; (b) |e| below b from t = {:.3} s: {}, \
             max |e(10)| = {final_err:.3e} < 1e-6: {}; (c) centroid drift {drift:.1e}: {}; \
             run time {seconds:.2} s",
            verdict(a),
            entered.map_or(f64::NAN, |k| trace.times[k]),
            verdict(stays),
            verdict(final_err < 1e-6),
            verdict(c),
        ),
    )
}

fn criterion_2(s: &Scenario) -> Outcome {
    let expected = [0.7778, 0.8750, 0.9200, 0.8750, 0.7778];
    let d_star = [3.0, 4.0, 5.0, 4.0, 3.0];
    let cos: Vec<f64> = d_star
        .iter()
        .map(|&d| cos_from_distance(d, 1.0).unwrap())
        .collect();
    let cos_ok = cos
        .iter()
        .zip(&expected)
        .all(|(c, e)| (c - e).abs() <= 5e-5);
    let b = compute_b(s.constraints.as_slice()).unwrap();
    let b_ok = (b - 0.08).abs() <= 1e-12;
    (cos_ok && b_ok, format!("cos θ* = {:.4?}; b = {b:.15}", cos))
}

fn criterion_3(s: &Scenario, geometric: &SimulationTrace) -> Outcome {
    // near contact the controls reach 1e10, so the gap is taken relative to
    // max(1, |u|) there
    let mut pointwise: f64 = 0.0;
    let mut largest: f64 = 0.0;
    for p in feasible_configurations(&s.graph, 1.0, 0.0, 6.0, 1000, 2024) {
        let g = team_control(
            ControllerKind::Geometric,
            &p,
            &s.graph,
            &s.constraints,
            1.0,
            1.0,
        )
        .unwrap();
        let b = team_control(
            ControllerKind::BearingOnly,
            &p,
            &s.graph,
            &s.constraints,
            1.0,
            1.0,
        )
        .unwrap();
        largest = largest.max(g.amax());
        pointwise = pointwise.max((&g - b).amax() / g.amax().max(1.0));
    }
    let mut bearing = s.clone();
    bearing.controller = ControllerKind::BearingOnly;
    let other = simulate(&bearing).unwrap();
    let same_len = other.len() == geometric.len();
    let traj = if same_len {
        (0..other.len())
            .map(|k| (&other.positions[k] - &geometric.positions[k]).amax())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    (
        pointwise < 1e-10 && traj < 1e-8,
        format!(
            "max control gap {pointwise:.1e} (relative to max(1, |u|), |u| up to {largest:.1e}) \
             over 1000 configurations; trace gap {traj:.1e}"
        ),
    )
}

fn criterion_4(s: &Scenario) -> Outcome {
    let potential_at = |x: &DVector<f64>| {
        let cfg = Configuration::from_stacked(x.clone()).unwrap();
        let e = edge_errors(&s.graph, &cfg, 1.0, &s.constraints).unwrap();
        DVector::from_element(1, total_potential(&e, &s.constraints, 1.0).unwrap())
    };
    let mut grad_err: f64 = 0.0;
    for p in feasible_configurations(&s.graph, 1.0, 0.2, 6.0, 100, 4) {
        let u = stacked_control(&p, &s.graph, &s.constraints, 1.0, 1.0).unwrap();
        let fd = central_jacobian(potential_at, p.stacked(), 1e-6)
            .row(0)
            .transpose();
        grad_err = grad_err.max((&u + &fd).norm() / fd.norm());
    }
    let mut edge_err: f64 = 0.0;
    for &cos_star in &[0.55, 0.7778, 0.8333, 0.875, 0.92, 0.97] {
        let k = AngleConstraint::from_cos((0, 1), cos_star).unwrap();
        // offset grid: no sample sits exactly on a root of v or k
        for i in 0..20 {
            let e = -k.c + (k.c + k.f) * (i as f64 + 0.37) / 20.0;
            let h = 1e-6 * (e + k.c).min(k.f - e);
            let v = potential_derivative(e, &k, 1.0).unwrap();
            let fd_v = (potential(e + h, &k, 1.0).unwrap() - potential(e - h, &k, 1.0).unwrap())
                / (2.0 * h);
            let kk = potential_second_derivative(e, &k, 1.0).unwrap();
            let fd_k = (potential_derivative(e + h, &k, 1.0).unwrap()
                - potential_derivative(e - h, &k, 1.0).unwrap())
                / (2.0 * h);
            edge_err = edge_err
                .max((v - fd_v).abs() / v.abs().max(1e-12))
                .max((kk - fd_k).abs() / kk.abs().max(1e-12));
        }
    }
    (
        grad_err < 1e-5 && edge_err < 1e-6,
        format!(
            "stacked gradient rel. error {grad_err:.1e}; per-edge v, k rel. error {edge_err:.1e}"
        ),
    )
}

fn criterion_5(s: &Scenario) -> Outcome {
    let target = rect_target();
    let report = rigidity_report(&s.graph, &target).unwrap();
    let mats = RigidityMatrices::evaluate(&s.graph, &target, 1.0).unwrap();
    let scaled = DMatrix::from_diagonal(&mats.scaling) * &mats.jac_dist;
    let scale_gap = (&scaled - &mats.jac_angle).amax();
    let trivial = report
        .trivial_motion_residuals
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    let collinear = Configuration::from_points(&[
        Vector2::new(0.0, 0.0),
        Vector2::new(3.0, 0.0),
        Vector2::new(6.5, 0.0),
        Vector2::new(10.0, 0.0),
    ]);
    let flat = rigidity_report(&s.graph, &collinear).unwrap();
    let ok = report.rank == 5
        && report.n_edges == 5
        && report.infinitesimally_rigid
        && report.minimally_rigid
        && trivial < 1e-9
        && scale_gap < 1e-12
        && !flat.infinitesimally_rigid;
    (
        ok,
        format!(
            "rank {} with m = {}; trivial residual {trivial:.1e}; |R_angle − D R_dist| {scale_gap:.1e}; \
             collinear rank {} (rigid: {})",
            report.rank, report.n_edges, flat.rank, flat.infinitesimally_rigid
        ),
    )
}

fn criterion_6(trace: &SimulationTrace) -> Outcome {
    let excess = trace.lyapunov_excess(1e-9);
    let fit = fit_exponential_rate(trace, (3.0, 6.0)).unwrap();
    let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
    let synthetic = SimulationTrace {
        error_norm: times.iter().map(|t| 0.3 * (-2.0 * t).exp()).collect(),
        errors: vec![DVector::zeros(1); times.len()],
        times,
        ..Default::default()
    };
    let syn = fit_exponential_rate(&synthetic, (0.0, 10.0)).unwrap();
    let ok = excess <= 0.0
        && fit.gamma_fit < 0.0
        && fit.r_squared > 0.99
        && (syn.gamma_fit + 4.0).abs() < 1e-6;
    (
        ok,
        format!(
            "largest V increase beyond slack {excess:.1e}; fit on [3, 6] s: gamma {:.4}, r² {:.5}; \
             synthetic gamma {:.9}",
            fit.gamma_fit, fit.r_squared, syn.gamma_fit
        ),
    )
}

fn criterion_7(s: &Scenario, trace: &SimulationTrace) -> Outcome {
    let drift = trace.centroid_drift();
    let mut equivariance: f64 = 0.0;
    for (angle, offset) in [
        (0.9, Vector2::new(4.0, -1.5)),
        (-2.2, Vector2::new(-20.0, 7.0)),
    ] {
        let mut moved = s.clone();
        moved.initial = s.initial.transformed(angle, offset);
        let other = simulate(&moved).unwrap();
        if other.len() != trace.len() {
            equivariance = f64::INFINITY;
            continue;
        }
        let rot = Rotation2::new(angle);
        for k in 0..trace.len() {
            for i in 0..4 {
                let a = Vector2::new(trace.positions[k][2 * i], trace.positions[k][2 * i + 1]);
                let b = Vector2::new(other.positions[k][2 * i], other.positions[k][2 * i + 1]);
                equivariance = equivariance.max((rot * a + offset - b).norm());
            }
        }
    }
    let equal = feasible_configurations(&s.graph, 1.0, 0.0, 6.0, 1000, 77)
        .iter()
        .filter(|p| verify_equilibrium_set_equality(p, s, 1e-6).unwrap())
        .count();
    (
        drift < 1e-8 && equivariance < 1e-8 && equal == 1000,
        format!(
            "centroid drift {drift:.1e}; SE(2) deviation {equivariance:.1e}; \
             equilibrium sets agree on {equal}/1000 configurations"
        ),
    )
}

fn criterion_8() -> Outcome {
    let g = FormationGraph::new(2, &[(0, 1)]).unwrap();
    let p = Configuration::from_points(&[Vector2::zeros(), Vector2::new(2.01, 0.0)]);
    let cs = ConstraintSet::from_distances(&g, &[3.0], 1.0).unwrap();
    let mut s = Scenario::new(g, 1.0, p, cs).unwrap();
    s.gain = 50.0;
    s.t_final = 2.0;
    s.output_decimation = 1;
    let trace = simulate(&s).unwrap();
    let d: Vec<f64> = trace.distances.iter().map(|v| v[0]).collect();
    let opening = d
        .iter()
        .zip(&trace.times)
        .take_while(|(_, &t)| t <= 0.1)
        .map(|(&x, _)| x)
        .collect::<Vec<_>>();
    let increasing = opening.len() > 2 && opening.windows(2).all(|w| w[1] > w[0]);
    let floor = d.iter().cloned().fold(f64::INFINITY, f64::min);
    (
        increasing && floor > 2.0,
        format!(
            "d strictly increasing over the first {} samples (to {:.4}); min d {floor:.6}; final d {:.6}",
            opening.len(),
            opening.last().copied().unwrap_or(f64::NAN),
            d.last().unwrap()
        ),
    )
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() {
    let (s, trace, seconds) = rectangle_run();
    let results = [
        ("1 rectangle reproduction", criterion_1(&s, &trace, seconds)),
        ("2 rectangle constants", criterion_2(&s)),
        ("3 bearing-only equivalence", criterion_3(&s, &trace)),
        ("4 gradient correctness", criterion_4(&s)),
        ("5 rigidity algebra", criterion_5(&s)),
        ("6 Lyapunov and exponential decay", criterion_6(&trace)),
        (
            "7 centroid, equivariance, equilibrium sets",
            criterion_7(&s, &trace),
        ),
        ("8 barrier at near contact", criterion_8()),
    ];
    let mut failed = 0;
    for (name, (ok, detail)) in &results {
        println!("{} criterion {name}: {detail}", verdict(*ok));
        failed += usize::from(!ok);
    }
    println!(
        "acceptance: {} of {} criteria pass",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
