//! `plot`: three SVG panels from a trace.
//!
//! * `trajectories.svg`: robot center paths with disk outlines at the first
//!   and last sample.
//! * `distances.svg`: edge lengths over time, desired lengths and the contact
//!   floor `d = 2r`.
//! * `errors.svg`: `|e_ij(t)|` on a log axis with the threshold `b`.

use std::path::Path;

use disk_formation::analysis::compute_b;
use disk_formation::scenario::load_scenario;
use disk_formation::sensing::distance_from_cos;
use disk_formation::trace_io::from_csv;
use disk_formation::{AngleConstraint, Scenario, SimulationTrace};
use plotters::prelude::*;

use crate::exit::{io, CliError, CliResult, Failure};

/// Smallest error magnitude drawn on the log axis.
const LOG_FLOOR: f64 = 1e-16;

pub struct PlotInput<'a> {
    pub trace: &'a SimulationTrace,
    pub radius: f64,
    pub d_star: Vec<f64>,
    pub b: f64,
    pub labels: Vec<String>,
}

impl<'a> PlotInput<'a> {
    pub fn from_scenario(trace: &'a SimulationTrace, s: &Scenario) -> Self {
        let ks = s.constraints.as_slice();
        Self {
            trace,
            radius: s.radius,
            d_star: ks
                .iter()
                .map(|k| distance_from_cos(k.cos_star, s.radius).expect("validated target"))
                .collect(),
            b: compute_b(ks).expect("validated targets"),
            labels: s
                .graph
                .edges()
                .iter()
                .map(|&(i, j)| format!("({},{})", i + 1, j + 1))
                .collect(),
        }
    }

    /// Recovers the targets from the first sample: `cos θ* = cos θ − e`.
    pub fn from_trace(trace: &'a SimulationTrace, radius: f64) -> CliResult<Self> {
        let (d0, e0) = (&trace.distances[0], &trace.errors[0]);
        let mut ks = Vec::with_capacity(d0.len());
        for k in 0..d0.len() {
            let cos = 1.0 - 2.0 * (radius / d0[k]).powi(2);
            let c = AngleConstraint::from_cos((0, 1), cos - e0[k]).map_err(|e| {
                CliError::msg(
                    Failure::Trace,
                    format!("edge {}: targets implied by the trace are infeasible for r = {radius}: {e}", k + 1),
                )
            })?;
            ks.push(c);
        }
        Ok(Self {
            trace,
            radius,
            d_star: ks
                .iter()
                .map(|k| distance_from_cos(k.cos_star, radius).expect("feasible cosine"))
                .collect(),
            b: compute_b(&ks).map_err(|_| CliError::msg(Failure::Trace, "trace has no edges"))?,
            labels: (1..=ks.len()).map(|k| format!("edge {k}")).collect(),
        })
    }
}

fn draw_err<E: std::error::Error + Send + Sync + 'static>(e: DrawingAreaErrorKind<E>) -> CliError {
    CliError::msg(Failure::Io, format!("drawing failed: {e}"))
}

fn circle(center: (f64, f64), r: f64) -> Vec<(f64, f64)> {
    (0..=64)
        .map(|k| {
            let a = k as f64 / 64.0 * std::f64::consts::TAU;
            (center.0 + r * a.cos(), center.1 + r * a.sin())
        })
        .collect()
}

fn padded(lo: f64, hi: f64, pad: f64) -> std::ops::Range<f64> {
    if hi - lo < 1e-12 {
        (lo - 1.0)..(hi + 1.0)
    } else {
        let p = pad * (hi - lo);
        (lo - p)..(hi + p)
    }
}

fn trajectories(input: &PlotInput, path: &Path) -> CliResult<()> {
    let trace = input.trace;
    let n = trace.n_robots();
    let r = input.radius;
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for p in &trace.positions {
        for i in 0..n {
            x0 = x0.min(p[2 * i] - r);
            x1 = x1.max(p[2 * i] + r);
            y0 = y0.min(p[2 * i + 1] - r);
            y1 = y1.max(p[2 * i + 1] + r);
        }
    }
    // equal scales on both axes so disks stay round
    let half = 0.55 * (x1 - x0).max(y1 - y0);
    let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));

    let root = SVGBackend::new(path, (760, 760)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("robot trajectories", ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d((cx - half)..(cx + half), (cy - half)..(cy + half))
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc("x")
        .y_desc("y")
        .draw()
        .map_err(draw_err)?;
    let first = &trace.positions[0];
    let last = trace.positions.last().unwrap();
    for i in 0..n {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(
                trace.positions.iter().map(|p| (p[2 * i], p[2 * i + 1])),
                color.stroke_width(2),
            ))
            .map_err(draw_err)?
            .label(format!("robot {}", i + 1))
            .legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2))
            });
        chart
            .draw_series(std::iter::once(PathElement::new(
                circle((first[2 * i], first[2 * i + 1]), r),
                color.mix(0.4).stroke_width(1),
            )))
            .map_err(draw_err)?;
        chart
            .draw_series(std::iter::once(PathElement::new(
                circle((last[2 * i], last[2 * i + 1]), r),
                color.stroke_width(2),
            )))
            .map_err(draw_err)?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()
        .map_err(draw_err)?;
    root.present().map_err(draw_err)
}

fn distances(input: &PlotInput, path: &Path) -> CliResult<()> {
    let trace = input.trace;
    let t0 = trace.times[0];
    let t1 = *trace.times.last().unwrap();
    let floor = 2.0 * input.radius;
    let mut lo = floor;
    let mut hi = floor;
    for d in trace
        .distances
        .iter()
        .chain(std::iter::once(&input.d_star.clone().into()))
    {
        lo = lo.min(d.min());
        hi = hi.max(d.max());
    }
    let root = SVGBackend::new(path, (900, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("edge lengths d_ij(t)", ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(55)
        .build_cartesian_2d(padded(t0, t1, 0.0), padded(lo, hi, 0.05))
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc("t [s]")
        .y_desc("d")
        .draw()
        .map_err(draw_err)?;
    for (k, label) in input.labels.iter().enumerate() {
        let color = Palette99::pick(k).to_rgba();
        chart
            .draw_series(LineSeries::new(
                trace
                    .times
                    .iter()
                    .zip(&trace.distances)
                    .map(|(&t, d)| (t, d[k])),
                color.stroke_width(2),
            ))
            .map_err(draw_err)?
            .label(format!("d {label}"))
            .legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2))
            });
        chart
            .draw_series(DashedLineSeries::new(
                [(t0, input.d_star[k]), (t1, input.d_star[k])],
                6,
                4,
                color.mix(0.6).stroke_width(1),
            ))
            .map_err(draw_err)?;
    }
    chart
        .draw_series(LineSeries::new(
            [(t0, floor), (t1, floor)],
            BLACK.stroke_width(2),
        ))
        .map_err(draw_err)?
        .label(format!("contact d = {floor}"))
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLACK.stroke_width(2)));
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()
        .map_err(draw_err)?;
    root.present().map_err(draw_err)
}

fn errors(input: &PlotInput, path: &Path) -> CliResult<()> {
    let trace = input.trace;
    let t0 = trace.times[0];
    let t1 = *trace.times.last().unwrap();
    let mag = |x: f64| x.abs().max(LOG_FLOOR);
    let mut lo = input.b;
    let mut hi = input.b;
    for e in &trace.errors {
        for &x in e.iter() {
            lo = lo.min(mag(x));
            hi = hi.max(mag(x));
        }
    }
    let root = SVGBackend::new(path, (900, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("angle errors |e_ij(t)|", ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(padded(t0, t1, 0.0), ((lo * 0.5)..(hi * 2.0)).log_scale())
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc("t [s]")
        .y_desc("|e|")
        .y_label_formatter(&|y| format!("{y:.0e}"))
        .draw()
        .map_err(draw_err)?;
    for (k, label) in input.labels.iter().enumerate() {
        let color = Palette99::pick(k).to_rgba();
        chart
            .draw_series(LineSeries::new(
                trace
                    .times
                    .iter()
                    .zip(&trace.errors)
                    .map(|(&t, e)| (t, mag(e[k]))),
                color.stroke_width(2),
            ))
            .map_err(draw_err)?
            .label(format!("|e| {label}"))
            .legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2))
            });
    }
    chart
        .draw_series(LineSeries::new(
            [(t0, input.b), (t1, input.b)],
            BLACK.stroke_width(2),
        ))
        .map_err(draw_err)?
        .label(format!("b = {:.4}", input.b))
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLACK.stroke_width(2)));
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()
        .map_err(draw_err)?;
    root.present().map_err(draw_err)
}

pub const PLOT_FILES: [&str; 3] = ["trajectories.svg", "distances.svg", "errors.svg"];

pub fn write_plots(input: &PlotInput, dir: &Path) -> CliResult<()> {
    if input.trace.is_empty() {
        return Err(CliError::msg(Failure::Trace, "trace has no samples"));
    }
    io(
        std::fs::create_dir_all(dir),
        format!("creating {}", dir.display()),
    )?;
    trajectories(input, &dir.join(PLOT_FILES[0]))?;
    distances(input, &dir.join(PLOT_FILES[1]))?;
    errors(input, &dir.join(PLOT_FILES[2]))
}

pub fn plot_command(
    trace_path: &Path,
    out: &Path,
    scenario: Option<&Path>,
    radius: f64,
) -> CliResult<()> {
    let text = io(
        std::fs::read_to_string(trace_path),
        format!("reading {}", trace_path.display()),
    )?;
    let scenario = match scenario {
        Some(p) => {
            let src = io(
                std::fs::read_to_string(p),
                format!("reading {}", p.display()),
            )?;
            Some(load_scenario(&src)?)
        }
        None => None,
    };
    let radius = scenario.as_ref().map_or(radius, |s| s.radius);
    let trace = from_csv(&text, Some(radius)).map_err(|e| {
        CliError::new(
            Failure::Trace,
            anyhow::Error::new(e).context(trace_path.display().to_string()),
        )
    })?;
    let input = match &scenario {
        Some(s)
            if s.graph.n_edges() == trace.n_edges() && s.graph.n_vertices() == trace.n_robots() =>
        {
            PlotInput::from_scenario(&trace, s)
        }
        Some(_) => {
            return Err(CliError::msg(
                Failure::Trace,
                "trace does not match the scenario's robot and edge counts",
            ))
        }
        None => PlotInput::from_trace(&trace, radius)?,
    };
    write_plots(&input, out)?;
    for f in PLOT_FILES {
        println!("wrote {}", out.join(f).display());
    }
    Ok(())
}
