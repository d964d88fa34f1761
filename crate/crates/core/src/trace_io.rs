//! CSV export and import of simulation traces.
//!
//! One row per recorded sample with columns
//! `t, x1, y1, …, xn, yn, e_1 … e_m, d_1 … d_m, V, enorm, cx, cy`, edges in the
//! graph's stacking order. Values carry 17 significant digits, so parsing a
//! written trace gives back the same bits.

use std::fmt::Write as _;

use nalgebra::{DVector, Vector2};

use crate::error::{FormationError, Result};
use crate::simulator::SimulationTrace;

pub fn header(n: usize, m: usize) -> String {
    let mut cols = vec!["t".to_string()];
    for i in 1..=n {
        cols.push(format!("x{i}"));
        cols.push(format!("y{i}"));
    }
    cols.extend((1..=m).map(|k| format!("e_{k}")));
    cols.extend((1..=m).map(|k| format!("d_{k}")));
    cols.extend(["V", "enorm", "cx", "cy"].map(String::from));
    cols.join(",")
}

fn num(out: &mut String, x: f64) {
    write!(out, ",{x:.16e}").expect("writing to a String");
}

pub fn to_csv(trace: &SimulationTrace) -> String {
    let (n, m) = (trace.n_robots(), trace.n_edges());
    let mut out = header(n, m);
    out.push('\n');
    for k in 0..trace.len() {
        write!(out, "{:.16e}", trace.times[k]).expect("writing to a String");
        trace.positions[k].iter().for_each(|&x| num(&mut out, x));
        trace.errors[k].iter().for_each(|&x| num(&mut out, x));
        trace.distances[k].iter().for_each(|&x| num(&mut out, x));
        num(&mut out, trace.lyapunov[k]);
        num(&mut out, trace.error_norm[k]);
        num(&mut out, trace.centroid[k].x);
        num(&mut out, trace.centroid[k].y);
        out.push('\n');
    }
    out
}

fn malformed(line: usize, msg: impl Into<String>) -> FormationError {
    FormationError::InvalidParameter(format!("trace line {line}: {}", msg.into()))
}

/// Parses a trace written by [`to_csv`]. With a radius, `min_clearance` is
/// recomputed from the distance columns; without one it is NaN.
pub fn from_csv(text: &str, radius: Option<f64>) -> Result<SimulationTrace> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or_else(|| malformed(1, "empty trace"))?;
    let cols: Vec<&str> = head.split(',').map(str::trim).collect();
    let n = cols.iter().filter(|c| c.starts_with('x')).count();
    let m = cols.iter().filter(|c| c.starts_with("e_")).count();
    if cols.first() != Some(&"t") || head.replace(' ', "") != header(n, m) {
        return Err(malformed(1, "unexpected header"));
    }
    let width = 1 + 2 * n + 2 * m + 4;
    let mut trace = SimulationTrace {
        radius: radius.unwrap_or(f64::NAN),
        ..Default::default()
    };
    for (idx, line) in lines {
        let vals = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| malformed(idx + 1, e.to_string()))?;
        if vals.len() != width {
            return Err(malformed(
                idx + 1,
                format!("expected {width} columns, found {}", vals.len()),
            ));
        }
        let mut it = vals.into_iter();
        let mut take = |k: usize| DVector::from_iterator(k, it.by_ref().take(k));
        let t = take(1)[0];
        let p = take(2 * n);
        let e = take(m);
        let d = take(m);
        let tail = take(4);
        trace.times.push(t);
        trace.positions.push(p);
        trace.errors.push(e);
        trace.distances.push(d);
        trace.lyapunov.push(tail[0]);
        trace.error_norm.push(tail[1]);
        trace.centroid.push(Vector2::new(tail[2], tail[3]));
    }
    if trace.is_empty() {
        return Err(malformed(2, "trace has no samples"));
    }
    trace.min_clearance = match radius {
        Some(r) => trace
            .distances
            .iter()
            .map(|d| d.min() - 2.0 * r)
            .fold(f64::INFINITY, f64::min),
        None => f64::NAN,
    };
    Ok(trace)
}
