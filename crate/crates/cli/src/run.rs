//! `run`: simulate one scenario and write its outputs.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use disk_formation::analysis::{build_report, ReportOptions};
use disk_formation::scenario::load_scenario;
use disk_formation::simulator::{simulate_with_stats, RunStats, SimulationHalt};
use disk_formation::trace_io::to_csv;
use disk_formation::{Scenario, SimulationTrace};

use crate::exit::{io, CliError, CliResult, Failure};
use crate::plot::{write_plots, PlotInput};
use crate::Overrides;

/// Reads a scenario file and applies command-line overrides.
pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Scenario> {
    let src = io(
        std::fs::read_to_string(path),
        format!("reading {}", path.display()),
    )?;
    let mut s = load_scenario(&src).map_err(|e| {
        let CliError { failure, error } = CliError::from(e);
        CliError::new(failure, error.context(path.display().to_string()))
    })?;
    if let Some(dt) = overrides.dt {
        s.dt = dt;
    }
    if let Some(t) = overrides.t_final {
        s.t_final = t;
    }
    if let Some(k) = overrides.gain {
        s.gain = k;
    }
    if let Some(c) = overrides.controller {
        s.controller = c;
    }
    if let Some(seed) = overrides.seed {
        s.seed = seed;
    }
    if let Some(n) = overrides.decimate {
        s.output_decimation = n;
    }
    s.validate().map_err(|e| CliError::new(Failure::Usage, e))?;
    Ok(s)
}

pub struct Outcome {
    pub trace: SimulationTrace,
    pub stats: RunStats,
    pub seconds: f64,
}

fn edge_label(s: &Scenario, k: usize) -> String {
    let (i, j) = s.graph.edges()[k];
    format!("({},{})", i + 1, j + 1)
}

pub fn summary_text(s: &Scenario, out: &Outcome, halted: Option<&SimulationHalt>) -> String {
    let trace = &out.trace;
    let mut t = String::new();
    let mut line = |k: &str, v: String| writeln!(t, "{k} = {v}").expect("writing to a String");
    line(
        "status",
        halted.map_or("completed".into(), |h| format!("halted: {}", h.error)),
    );
    line("controller", s.controller.to_string());
    line("gain", format!("{}", s.gain));
    line("dt", format!("{}", s.dt));
    line("t_final", format!("{}", s.t_final));
    line(
        "t_reached",
        format!("{}", trace.times.last().copied().unwrap_or(0.0)),
    );
    line("samples", trace.len().to_string());
    line("accepted_steps", out.stats.accepted_steps.to_string());
    line("rejected_steps", out.stats.rejected_steps.to_string());
    line("smallest_step", format!("{:e}", out.stats.smallest_step));
    line("early_stopped", out.stats.early_stopped.to_string());
    line("min_clearance", format!("{:.6e}", trace.min_clearance));
    if let Some(e) = trace.errors.last() {
        line("final_error_norm", format!("{:.6e}", e.norm()));
        line("final_max_abs_error", format!("{:.6e}", e.amax()));
        for (k, v) in e.iter().enumerate() {
            line(
                &format!("final_e_{}", k + 1),
                format!("{v:.6e}  # edge {}", edge_label(s, k)),
            );
        }
        let d = trace.distances.last().unwrap();
        for (k, v) in d.iter().enumerate() {
            line(
                &format!("final_d_{}", k + 1),
                format!("{v:.9}  # edge {}", edge_label(s, k)),
            );
        }
    }
    line("centroid_drift", format!("{:.3e}", trace.centroid_drift()));
    line("wall_time_s", format!("{:.3}", out.seconds));
    t
}

fn write(dir: &Path, name: &str, text: &str) -> CliResult<()> {
    let path = dir.join(name);
    io(
        std::fs::write(&path, text),
        format!("writing {}", path.display()),
    )
}

/// Simulates `s` into `dir`. A halted run still leaves its partial trace and
/// summary behind before reporting the halt.
pub fn execute(s: &Scenario, dir: &Path, plots: bool) -> CliResult<Outcome> {
    io(
        std::fs::create_dir_all(dir),
        format!("creating {}", dir.display()),
    )?;
    let start = Instant::now();
    let result = simulate_with_stats(s);
    let seconds = start.elapsed().as_secs_f64();
    let (outcome, halt) = match result {
        Ok((trace, stats)) => (
            Outcome {
                trace,
                stats,
                seconds,
            },
            None,
        ),
        Err(h) => {
            let stats = RunStats {
                accepted_steps: h.trace.len().saturating_sub(1),
                min_clearance: h.trace.min_clearance,
                ..Default::default()
            };
            (
                Outcome {
                    trace: h.trace.clone(),
                    stats,
                    seconds,
                },
                Some(h),
            )
        }
    };
    write(dir, "trace.csv", &to_csv(&outcome.trace))?;
    write(
        dir,
        "summary.txt",
        &summary_text(s, &outcome, halt.as_ref()),
    )?;
    if let Some(h) = halt {
        return Err(CliError::new(Failure::Halted, h));
    }
    let report = build_report(s, &outcome.trace, &ReportOptions::default())
        .map_err(|e| CliError::new(Failure::Internal, e))?;
    write(dir, "report.txt", &report.to_text())?;
    if plots {
        write_plots(&PlotInput::from_scenario(&outcome.trace, s), dir)?;
    }
    Ok(outcome)
}

pub fn run(path: &Path, overrides: &Overrides, plots: bool) -> CliResult<()> {
    let s = load(path, overrides)?;
    let out = execute(&s, &overrides.out, plots)?;
    let last = out.trace.errors.last().map_or(f64::NAN, |e| e.norm());
    println!(
        "{}: {} samples to t = {}, final ‖e‖ = {last:.3e}, min clearance = {:.3e}, {:.2} s",
        path.display(),
        out.trace.len(),
        out.trace.times.last().copied().unwrap_or(0.0),
        out.trace.min_clearance,
        out.seconds
    );
    println!("wrote {}", overrides.out.display());
    Ok(())
}
