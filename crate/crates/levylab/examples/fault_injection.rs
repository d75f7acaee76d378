//! Demonstrates fault detection end to end through the run harness:
//! the honest configuration passes every gate, injecting the
//! uncompensated-jumps defect flips the jump-martingale gates while
//! the energy identity still closes, and the broken-antisymmetry
//! defect is caught immediately by the operator checks.
//!
//!   cargo run --example fault_injection

use levylab::{load_config, run, Command, FaultMode};

fn main() -> levylab::Result<()> {
    let mut cfg = load_config(std::path::Path::new("configs/fault_demo.toml"), true)?;
    let tmp = tempfile_dir()?;

    for (label, fault) in [
        ("honest", None),
        ("uncompensated_jumps", Some(FaultMode::UncompensatedJumps)),
        ("broken_antisymmetry", Some(FaultMode::BrokenAntisymmetry)),
    ] {
        cfg.sim.fault = fault;
        cfg.output = Some(format!("{}/{label}", tmp.display()));
        let out = run(Command::All, &cfg)?;
        println!(
            "{label}: overall = {}, failures = [{}]",
            if out.report.overall() { "pass" } else { "FAIL" },
            out.report.failures().join(", ")
        );
    }
    Ok(())
}

fn tempfile_dir() -> levylab::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join("levylab_fault_demo");
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
