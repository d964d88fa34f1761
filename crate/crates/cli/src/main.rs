//! `diskform`: drive disk-formation scenarios from the command line.

mod check;
mod exit;
mod plot;
mod run;
mod sweep;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use disk_formation::ControllerKind;

use exit::{CliResult, EXIT_CODES_HELP};

#[derive(Debug, Parser)]
#[command(name = "diskform", version, about = "Angle-constrained formation control for disk robots", after_help = EXIT_CODES_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and write trace.csv, report.txt, summary.txt and plots.
    #[command(after_help = EXIT_CODES_HELP)]
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Skip the SVG plots.
        #[arg(long)]
        no_plots: bool,
    },
    /// Render the three SVG panels from a trace.csv.
    #[command(after_help = EXIT_CODES_HELP)]
    Plot {
        trace: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Scenario the trace came from (for the radius and edge labels).
        #[arg(long, conflicts_with = "radius")]
        scenario: Option<PathBuf>,
        /// Robot radius, when no scenario is given.
        #[arg(long, default_value_t = 1.0, value_parser = positive)]
        radius: f64,
    },
    /// Realize the target, then report rigidity, b and feasibility without simulating.
    #[command(after_help = EXIT_CODES_HELP)]
    Check { scenario: PathBuf },
    /// Run a grid of variants in parallel, one output directory each.
    ///
    /// --gain, --dt, --controller and --seed accept comma-separated lists; every
    /// combination is run.
    #[command(after_help = EXIT_CODES_HELP)]
    Sweep {
        scenario: PathBuf,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', value_parser = positive)]
        gain: Vec<f64>,
        #[arg(long, value_delimiter = ',', value_parser = positive)]
        dt: Vec<f64>,
        #[arg(long, value_delimiter = ',', value_parser = parse_controller)]
        controller: Vec<ControllerKind>,
        #[arg(long, value_delimiter = ',')]
        seed: Vec<u64>,
        #[arg(long, value_parser = non_negative)]
        t_final: Option<f64>,
        #[arg(long)]
        decimate: Option<usize>,
        /// Also write SVG plots for every variant.
        #[arg(long)]
        plots: bool,
    },
}

/// Settings that replace the scenario file's values.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Base integration step in seconds.
    #[arg(long, value_parser = positive)]
    pub dt: Option<f64>,
    /// End time in seconds.
    #[arg(long, value_parser = non_negative)]
    pub t_final: Option<f64>,
    /// Control gain K.
    #[arg(long, value_parser = positive)]
    pub gain: Option<f64>,
    /// geometric or bearing.
    #[arg(long, value_parser = parse_controller)]
    pub controller: Option<ControllerKind>,
    /// Seed for the randomized diagnostics.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Record every n-th accepted step.
    #[arg(long)]
    pub decimate: Option<usize>,
}

fn parse_controller(s: &str) -> Result<ControllerKind, String> {
    s.parse::<ControllerKind>().map_err(|e| e.to_string())
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("expected a positive number, got {s}")),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("expected a non-negative number, got {s}")),
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run {
            scenario,
            overrides,
            no_plots,
        } => run::run(&scenario, &overrides, !no_plots),
        Command::Plot {
            trace,
            out,
            scenario,
            radius,
        } => plot::plot_command(&trace, &out, scenario.as_deref(), radius),
        Command::Check { scenario } => check::check(&scenario),
        Command::Sweep {
            scenario,
            out,
            gain,
            dt,
            controller,
            seed,
            t_final,
            decimate,
            plots,
        } => sweep::sweep(
            &scenario,
            &out,
            &sweep::Grid {
                gain,
                dt,
                controller,
                seed,
                t_final,
                decimate,
            },
            plots,
        ),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.failure.code());
    }
}
