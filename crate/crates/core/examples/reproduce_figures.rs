//! Writes the three simulation tables as CSV into a directory
//! (default `figures/`).

use std::path::PathBuf;

use cip_contract::experiments::{run_experiment, ExperimentConfig, ExperimentId};

fn main() -> cip_contract::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "figures".into()));
    std::fs::create_dir_all(&dir)?;
    for id in [ExperimentId::Fig1, ExperimentId::Fig2, ExperimentId::Fig3] {
        let table = run_experiment(&ExperimentConfig::new(id))?;
        let path = dir.join(format!("{}.csv", id.name()));
        table.write(&path)?;
        println!(
            "{} ({} rows, scenario {})",
            path.display(),
            table.rows.len(),
            &table.provenance.scenario_sha256[..12]
        );
    }
    Ok(())
}
