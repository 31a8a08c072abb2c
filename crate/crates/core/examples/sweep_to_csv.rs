//! Writes a valuation sweep as CSV and runs the same sweep through the
//! command-line layer with a JSON result.
//!
//!     cargo run --example sweep_to_csv -- /tmp/sweep.csv

use std::path::PathBuf;

use globalbid::cli::{emit_sweep_csv, run, Command, RunConfig};
use globalbid::solver_identical::sweep_valuations;
use globalbid::CompetitiveBidModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("globalbid_sweep.csv"));
    let rows = sweep_valuations(6, &CompetitiveBidModel::static_uniform(5)?, 99)?;
    emit_sweep_csv(&rows, &path)?;
    println!("wrote {} rows to {}", rows.len(), path.display());

    let config = RunConfig::resolve(Command::Sweep, Some("m = 6\ngrid = 99\n"), &["format=json".to_string()])?;
    let artifact = run(&config)?;
    println!("split threshold: {}", artifact.summary["bifurcation_threshold"]);
    Ok(())
}
