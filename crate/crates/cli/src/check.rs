//! `check`: realize the target and report on it without simulating.

use std::path::Path;

use disk_formation::analysis::compute_b;
use disk_formation::realization::realize;
use disk_formation::rigidity::{check_feasible, rigidity_report};
use disk_formation::sensing::distance_from_cos;

use crate::exit::{CliError, CliResult, Failure};
use crate::run::load;
use crate::Overrides;

pub fn check(path: &Path) -> CliResult<()> {
    let s = load(path, &Overrides::default())?;
    let lengths: Vec<f64> = s
        .constraints
        .as_slice()
        .iter()
        .map(|k| distance_from_cos(k.cos_star, s.radius).expect("validated target"))
        .collect();
    let target = realize(&s.graph, &lengths).map_err(|e| CliError::new(Failure::Realization, e))?;
    let report =
        rigidity_report(&s.graph, &target).map_err(|e| CliError::new(Failure::Internal, e))?;
    let b = compute_b(s.constraints.as_slice()).map_err(|e| CliError::new(Failure::Internal, e))?;

    println!("scenario: {}", path.display());
    println!(
        "robots: {}, edges: {}, radius: {}",
        s.graph.n_vertices(),
        s.graph.n_edges(),
        s.radius
    );
    println!("target realization:");
    for (i, p) in target.points().iter().enumerate() {
        // rounding noise such as -1e-16 would print as -0.000000
        let tidy = |v: f64| if v.abs() < 5e-7 { 0.0 } else { v };
        println!("  robot {}: ({:.6}, {:.6})", i + 1, tidy(p.x), tidy(p.y));
    }
    println!("edges (d*, cos θ*):");
    for (k, &(i, j)) in s.graph.edges().iter().enumerate() {
        println!(
            "  ({},{}): d* = {:.6}, cos θ* = {:.6}",
            i + 1,
            j + 1,
            lengths[k],
            s.constraints.get(k).cos_star
        );
    }
    println!(
        "rigidity: rank {} of {} expected, {} edges",
        report.rank, report.expected_rank, report.n_edges
    );
    let verdict = match (report.infinitesimally_rigid, report.minimally_rigid) {
        (true, true) => "minimally and infinitesimally rigid".to_string(),
        (true, false) => "infinitesimally rigid, not minimally rigid".to_string(),
        (false, _) => "not infinitesimally rigid".to_string(),
    };
    println!("{verdict}, b = {b}");
    let target_clear = check_feasible(&s.graph, &target, s.radius).is_ok();
    println!(
        "feasibility: targets all exceed 2r = {}: yes; initial disks clear: yes; target disks clear on edges: {}",
        2.0 * s.radius,
        if target_clear { "yes" } else { "no" }
    );
    Ok(())
}
