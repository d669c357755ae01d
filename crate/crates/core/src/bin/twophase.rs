use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use two_phase_obstacle::experiment::{format_table, run_experiment, RunConfig};

/// Solves a two-phase obstacle benchmark on nested meshes and certifies each
/// approximation with the functional error majorant.
#[derive(Parser, Debug)]
#[command(version)]
struct Args {
    /// Benchmark: 1 (exact solution known) or 2 (reference solution).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    example: u8,
    /// Number of mesh levels.
    #[arg(long, default_value_t = 5)]
    levels: usize,
    /// Majorant minimization sweeps per level.
    #[arg(long = "majorant-iters", default_value_t = 1000)]
    majorant_iters: usize,
    /// KKT residual at which the multiplier QP stops.
    #[arg(long = "qp-tol", default_value_t = 1e-9)]
    qp_tol: f64,
    /// Output directory for CSV, log and VTK files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write one VTK file per level.
    #[arg(long)]
    vtk: bool,
    /// Override the Friedrichs constant of the domain.
    #[arg(long)]
    friedrichs: Option<f64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = RunConfig {
        levels: args.levels,
        majorant_iters: args.majorant_iters,
        qp_tol: args.qp_tol,
        emit_vtk: args.vtk,
        friedrichs_override: args.friedrichs,
        ..RunConfig::new(args.example, args.out)
    };
    match run_experiment(&config) {
        Ok(report) => {
            print!("{}", format_table(&report));
            println!("reference energy {:.6}", report.reference_energy);
            println!("table written to {}", config.csv_path().display());
            if report.all_bounds_hold() {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: the majorant fell below the energy gap on some level");
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
