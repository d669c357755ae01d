//! Full Example I run: energies, gaps and optimized majorants per level.

use two_phase_obstacle::experiment::{format_table, run_experiment, RunConfig};

fn main() -> two_phase_obstacle::Result<()> {
    let dir = std::env::temp_dir().join("two_phase_example1");
    let mut config = RunConfig::new(1, &dir);
    config.majorant_iters = 10_000;
    let report = run_experiment(&config)?;
    print!("{}", format_table(&report));
    println!("CSV written to {}", config.csv_path().display());
    Ok(())
}
