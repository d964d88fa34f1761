//! `sweep`: every combination of the listed settings, run in parallel.

use std::fmt::Write as _;
use std::path::Path;

use disk_formation::ControllerKind;
use rayon::prelude::*;

use crate::exit::{io, CliError, CliResult};
use crate::run::{execute, load};
use crate::Overrides;

/// Values to combine; an empty list keeps the scenario's own value.
#[derive(Debug, Clone, Default)]
pub struct Grid {
    pub gain: Vec<f64>,
    pub dt: Vec<f64>,
    pub controller: Vec<ControllerKind>,
    pub seed: Vec<u64>,
    pub t_final: Option<f64>,
    pub decimate: Option<usize>,
}

fn or_keep<T: Copy>(values: &[T]) -> Vec<Option<T>> {
    if values.is_empty() {
        vec![None]
    } else {
        values.iter().copied().map(Some).collect()
    }
}

impl Grid {
    pub fn variants(&self) -> Vec<Overrides> {
        let mut out = Vec::new();
        for gain in or_keep(&self.gain) {
            for dt in or_keep(&self.dt) {
                for controller in or_keep(&self.controller) {
                    for seed in or_keep(&self.seed) {
                        out.push(Overrides {
                            out: Default::default(),
                            dt,
                            t_final: self.t_final,
                            gain,
                            controller,
                            seed,
                            decimate: self.decimate,
                        });
                    }
                }
            }
        }
        out
    }
}

fn variant_name(index: usize, v: &Overrides) -> String {
    let mut name = format!("{index:03}");
    if let Some(k) = v.gain {
        write!(name, "_K{k}").unwrap();
    }
    if let Some(dt) = v.dt {
        write!(name, "_dt{dt}").unwrap();
    }
    if let Some(c) = v.controller {
        write!(name, "_{c}").unwrap();
    }
    if let Some(s) = v.seed {
        write!(name, "_seed{s}").unwrap();
    }
    name
}

pub fn sweep(path: &Path, out: &Path, grid: &Grid, plots: bool) -> CliResult<()> {
    // fail early on a bad scenario instead of once per variant
    let base = load(path, &Overrides::default())?;
    io(
        std::fs::create_dir_all(out),
        format!("creating {}", out.display()),
    )?;
    let variants = grid.variants();
    let results: Vec<(String, Overrides, CliResult<_>)> = variants
        .into_par_iter()
        .enumerate()
        .map(|(k, v)| {
            let name = variant_name(k, &v);
            let result = load(path, &v).and_then(|s| {
                let dir = out.join(&name);
                execute(&s, &dir, plots).map(|o| (s, o))
            });
            (name, v, result)
        })
        .collect();

    let mut table = String::from(
        "variant,gain,dt,controller,seed,status,exit_code,t_reached,final_error_norm,min_clearance,wall_time_s\n",
    );
    let mut first_failure = None;
    let mut failed = 0;
    for (name, v, result) in &results {
        let gain = v.gain.unwrap_or(base.gain);
        let dt = v.dt.unwrap_or(base.dt);
        let controller = v.controller.unwrap_or(base.controller);
        let seed = v.seed.unwrap_or(base.seed);
        match result {
            Ok((_, o)) => {
                let t = o.trace.times.last().copied().unwrap_or(0.0);
                let e = o.trace.errors.last().map_or(f64::NAN, |e| e.norm());
                writeln!(
                    table,
                    "{name},{gain},{dt},{controller},{seed},ok,0,{t},{e:.6e},{:.6e},{:.3}",
                    o.trace.min_clearance, o.seconds
                )
                .unwrap();
                println!(
                    "{name}: final ‖e‖ = {e:.3e}, min clearance = {:.3e}",
                    o.trace.min_clearance
                );
            }
            Err(err) => {
                failed += 1;
                let (status, code) = (err.failure.label(), err.failure.code());
                writeln!(
                    table,
                    "{name},{gain},{dt},{controller},{seed},{status},{code},,,,"
                )
                .unwrap();
                eprintln!("{name}: {err}");
                first_failure.get_or_insert(err.failure);
            }
        }
    }
    let table_path = out.join("sweep.csv");
    io(
        std::fs::write(&table_path, table),
        format!("writing {}", table_path.display()),
    )?;
    println!("wrote {} variants to {}", results.len(), out.display());
    match first_failure {
        None => Ok(()),
        Some(failure) => Err(CliError::msg(
            failure,
            format!("{failed} of {} variants failed", results.len()),
        )),
    }
}
