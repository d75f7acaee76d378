//! Command-line front end. All logic lives in the library; this
//! parses arguments, applies the flag overrides, runs the command,
//! and turns the gate table into an exit code: 0 when every executed
//! gate passes, 1 when any fails, 2 on configuration or I/O errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use levylab::{load_config, run, Command, FaultMode};

#[derive(Parser)]
#[command(
    name = "levylab",
    version,
    about = "Galerkin simulation and assumption verification for stochastic fluid systems"
)]
struct Cli {
    /// One of: check, simulate, moments, diagnose, all.
    command: String,

    /// Path to the run configuration (TOML).
    #[arg(long)]
    config: PathBuf,

    /// Worker threads: 1 forces the serial path, 0 uses all cores.
    /// Overrides `run.parallel` from the configuration.
    #[arg(long)]
    parallel: Option<usize>,

    /// Reject configuration files containing unknown keys.
    #[arg(long)]
    strict: bool,

    /// Inject a deliberate defect so the checkers can demonstrate
    /// detection: uncompensated_jumps or broken_antisymmetry.
    #[arg(long)]
    inject: Option<String>,
}

fn parse_fault(s: &str) -> levylab::Result<FaultMode> {
    match s {
        "uncompensated_jumps" => Ok(FaultMode::UncompensatedJumps),
        "broken_antisymmetry" => Ok(FaultMode::BrokenAntisymmetry),
        other => Err(levylab::Error::Contract(format!(
            "unknown fault `{other}` (expected uncompensated_jumps or broken_antisymmetry)"
        ))),
    }
}

fn real_main(cli: Cli) -> levylab::Result<ExitCode> {
    let cmd = Command::parse(&cli.command)?;
    let mut cfg = load_config(&cli.config, cli.strict)?;
    if let Some(p) = cli.parallel {
        cfg.parallel = p;
    }
    if let Some(f) = &cli.inject {
        cfg.sim.fault = Some(parse_fault(f)?);
    }
    let out = run(cmd, &cfg)?;
    println!("run directory: {}", out.dir.display());
    for g in &out.report.gates {
        let verdict = if g.pass { "pass" } else { "FAIL" };
        println!("gate {} = {} ({})", g.name, verdict, g.detail);
    }
    let overall = out.report.overall();
    println!("overall = {}", if overall { "pass" } else { "FAIL" });
    println!("failures = [{}]", out.report.failures().join(", "));
    Ok(if overall { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
