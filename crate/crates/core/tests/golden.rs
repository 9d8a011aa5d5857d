use std::path::PathBuf;
use std::process::Command;

use cip_contract::experiments::{run_experiment, ExperimentConfig, ExperimentId};

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.csv"));
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn figures_match_golden_files() {
    for id in [ExperimentId::Fig1, ExperimentId::Fig2, ExperimentId::Fig3] {
        let csv = run_experiment(&ExperimentConfig::new(id))
            .unwrap()
            .to_csv()
            .unwrap();
        assert_eq!(csv, golden(id.name()), "{} drifted", id.name());
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let config = ExperimentConfig::new(ExperimentId::Fig1);
    let a = run_experiment(&config).unwrap();
    let b = run_experiment(&config).unwrap();
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    assert_eq!(a.provenance, b.provenance);
}

#[test]
fn other_seed_changes_fig1() {
    let mut config = ExperimentConfig::new(ExperimentId::Fig1);
    config.seed = 7;
    let csv = run_experiment(&config).unwrap().to_csv().unwrap();
    assert_ne!(csv, golden("fig1"));
}

fn cli(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_cip-contract"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn cli_reproduces_golden_and_round_trips_scenarios() {
    assert_eq!(cli(&["fig3"]), golden("fig3"));

    let dir = std::env::temp_dir().join(format!("cip-contract-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("s.json");
    std::fs::write(&file, cli(&["gen-scenario", "--n", "3"])).unwrap();
    let f = file.to_str().unwrap();

    let v: serde_json::Value = serde_json::from_str(&cli(&["validate", f])).unwrap();
    assert_eq!(v["ladder"]["ok"], true);
    assert_eq!(v["relaxed_constraints"], 9);

    let s: serde_json::Value = serde_json::from_str(&cli(&["solve", f])).unwrap();
    assert_eq!(s["status"], "optimal");
    let o: serde_json::Value =
        serde_json::from_str(&cli(&["solve", f, "--oracle", "--step", "5"])).unwrap();
    assert!(o["objective"].as_f64().unwrap() <= s["objective"].as_f64().unwrap() + 1e-6);

    let t: serde_json::Value =
        serde_json::from_str(&cli(&["negotiate", f, "--max-rounds", "3"])).unwrap();
    assert!(t["rounds"].as_u64().unwrap() <= 3);

    let csv = dir.join("f1.csv");
    cli(&[
        "fig1",
        "--n-max",
        "4",
        "--budget",
        "fixed",
        "--out",
        csv.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("n,t_max_fixed,"));
    assert_eq!(text.lines().count(), 3);
    assert!(dir.join("f1.csv.provenance.json").exists());
    std::fs::remove_dir_all(&dir).ok();
}
