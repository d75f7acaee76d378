//! Run orchestration: a resolved configuration in, a run directory of
//! certificates, trajectories, and reports out.
//!
//! Every command writes the manifest first, then its stage reports,
//! then a summary with one pass/fail gate per executed check and a
//! machine-readable failure list. Nothing here samples outside the
//! seeded streams and nothing writes timestamps, so rerunning a
//! command with the same configuration reproduces the run directory
//! byte for byte.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::basis::{build_basis, SpectralBasis};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::ledger::{
    accumulate_ledger, martingale_mean_test, martingale_mean_test_values, EnergyLedger,
    MartingaleGate, MartingaleTerm,
};
use crate::manifest::RunManifest;
use crate::moments::estimate_moments;
use crate::noise::{
    certify_noise, compensated_integral_test, path_rng, MarkPart, NoiseSkeleton, StreamRole,
    TestIntegrand, TimePart, WienerOperator,
};
use crate::pathdiag::{
    aldous_statistic, modulus_curve, seminorms_on_windows, PathDiagnostics, StoppingRule,
};
use crate::sim::{simulate_on_skeleton, simulate_path, FaultMode, SimConfig, TrajectoryRecord};
use crate::triple::{assemble_triple, check_assumptions, OperatorTriple};
use crate::util::fmt_g17;

/// Top-level commands. `All` chains the other four and adds the
/// energy-ledger verification, which needs the simulated ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Check,
    Simulate,
    Moments,
    Diagnose,
    All,
}

impl Command {
    pub fn parse(s: &str) -> Result<Command> {
        match s {
            "check" => Ok(Command::Check),
            "simulate" => Ok(Command::Simulate),
            "moments" => Ok(Command::Moments),
            "diagnose" => Ok(Command::Diagnose),
            "all" => Ok(Command::All),
            other => Err(Error::Contract(format!(
                "unknown command `{other}` (expected check, simulate, moments, diagnose, all)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Simulate => "simulate",
            Command::Moments => "moments",
            Command::Diagnose => "diagnose",
            Command::All => "all",
        }
    }
}

/// One executed check: a stable name, a verdict, and a one-line
/// diagnostic with the numbers the verdict came from.
#[derive(Clone, Debug)]
pub struct Gate {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Gate {
    fn new(name: &'static str, pass: bool, detail: String) -> Gate {
        Gate { name, pass, detail }
    }
}

/// Gate table for one command invocation. The exit-code contract
/// reads `overall`; scripts parse the `failures = [..]` line of the
/// summary file.
#[derive(Clone, Debug)]
pub struct SummaryReport {
    pub command: &'static str,
    pub digest: String,
    pub gates: Vec<Gate>,
}

impl SummaryReport {
    pub fn overall(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.gates.iter().filter(|g| !g.pass).map(|g| g.name).collect()
    }

    pub fn gate(&self, name: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.name == name)
    }

    pub fn write_text(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "command = {}", self.command)?;
        writeln!(out, "digest = {}", self.digest)?;
        for g in &self.gates {
            let verdict = if g.pass { "pass" } else { "FAIL" };
            writeln!(out, "gate {} = {} ({})", g.name, verdict, g.detail)?;
        }
        writeln!(out, "overall = {}", if self.overall() { "pass" } else { "FAIL" })?;
        writeln!(out, "failures = [{}]", self.failures().join(", "))?;
        Ok(())
    }
}

/// Result of `run`: the gate table plus where the artifacts went.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: SummaryReport,
    pub dir: PathBuf,
}

/// Assembled operators for one configuration: basis, system triple
/// (with any injected tensor fault applied), and the Wiener operator.
pub struct Workbench {
    pub basis: SpectralBasis,
    pub triple: OperatorTriple,
    pub gop: WienerOperator,
}

impl Workbench {
    pub fn assemble(cfg: &RunConfig) -> Result<Workbench> {
        let basis = build_basis(&cfg.domain, &cfg.system, cfg.basis_size, cfg.sobolev_order)?;
        let mut triple = assemble_triple(&basis, &cfg.system)?;
        if cfg.sim.fault == Some(FaultMode::BrokenAntisymmetry) {
            // Large enough to clear every probe tolerance, small enough
            // that the simulation still runs on the reference horizon.
            triple.tensor_mut().perturb_entries(3, 1e-4);
        }
        let gop = cfg.noise.assemble_wiener(&basis)?;
        cfg.sim.validate(&basis)?;
        Ok(Workbench { basis, triple, gop })
    }
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Static operator checks: trilinear-form assumptions on random
/// probes and the noise certificate (coercivity window, linear
/// growth, Lipschitz ratios).
fn stage_check(w: &Workbench, cfg: &RunConfig, dir: &Path, gates: &mut Vec<Gate>) -> Result<()> {
    let tol = &cfg.tolerances;
    let report = check_assumptions(
        &w.triple,
        &w.basis,
        tol.probe_trials,
        cfg.seed,
        &tol.check,
    )?;
    let mut out = writer(&dir.join("certificates/assumptions.txt"))?;
    report.write_text(&mut out)?;
    gates.push(Gate::new(
        "operator_assumptions",
        report.all_pass(),
        format!(
            "antisymmetry residual {}, {} probe trials",
            fmt_g17(report.antisymmetry_residual),
            report.trials
        ),
    ));

    match certify_noise(&cfg.noise, &w.basis, &w.triple, tol.certify_probes, cfg.seed) {
        Ok(cert) => {
            let mut out = writer(&dir.join("certificates/noise.txt"))?;
            cert.write_text(&mut out)?;
            let pass = cert.coercivity.in_window() && cert.growth_nondecreasing();
            gates.push(Gate::new(
                "noise_certificate",
                pass,
                format!(
                    "a = {}, window floor {}, lambda = {}",
                    fmt_g17(cert.coercivity.a),
                    fmt_g17(crate::noise::CoercivityCertificate::window_floor(
                        cert.coercivity.gamma
                    )),
                    fmt_g17(cert.coercivity.lambda)
                ),
            ));
        }
        Err(Error::Certificate { name, msg }) => {
            let mut out = writer(&dir.join("certificates/noise.txt"))?;
            writeln!(out, "certificate {name} failed: {msg}")?;
            gates.push(Gate::new("noise_certificate", false, format!("{name}: {msg}")));
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

enum PathOutcome {
    Done(TrajectoryRecord),
    Aborted { t: f64, msg: String },
}

/// Simulates `paths` trajectories from the template. Aborted paths
/// are recorded, not fatal; any other error is. Parallel execution
/// maps path indices in order, so the output is identical to the
/// serial run.
fn simulate_ensemble(
    w: &Workbench,
    cfg: &RunConfig,
    sim: &SimConfig,
    paths: u64,
    parallel: bool,
) -> Result<Vec<PathOutcome>> {
    let one = |path: u64| -> Result<PathOutcome> {
        match simulate_path(&w.basis, &w.triple, &cfg.noise, sim, path) {
            Ok(rec) => Ok(PathOutcome::Done(rec)),
            Err(Error::Abort { t, msg }) => Ok(PathOutcome::Aborted { t, msg }),
            Err(e) => Err(e),
        }
    };
    if parallel {
        (0..paths).into_par_iter().map(one).collect()
    } else {
        (0..paths).map(one).collect()
    }
}

/// Primary-level ensemble: writes per-path trajectory files (capped)
/// and the shared jump log, and gates on zero aborts.
fn stage_simulate(
    w: &Workbench,
    cfg: &RunConfig,
    dir: &Path,
    gates: &mut Vec<Gate>,
    parallel: bool,
) -> Result<Vec<TrajectoryRecord>> {
    let outcomes = simulate_ensemble(w, cfg, &cfg.sim, cfg.paths as u64, parallel)?;
    let mut aborted = 0usize;
    let mut first_abort = String::new();
    let mut records = Vec::with_capacity(outcomes.len());
    for out in outcomes {
        match out {
            PathOutcome::Done(rec) => records.push(rec),
            PathOutcome::Aborted { t, msg } => {
                if aborted == 0 {
                    first_abort = format!(" (first at t = {}: {msg})", fmt_g17(t));
                }
                aborted += 1;
            }
        }
    }

    // Per-path files get large with coefficients on; 32 paths is
    // plenty for plotting and the jump log still covers the ensemble.
    let cap = records.len().min(32);
    for rec in &records[..cap] {
        let mut out = writer(&dir.join(format!("trajectories/path_{:04}.csv", rec.path)))?;
        rec.write_text(&w.basis, cfg.record_coefficients, &mut out)?;
    }
    let mut jl = writer(&dir.join("trajectories/jumps.csv"))?;
    writeln!(jl, "# path, t, region, mark")?;
    for rec in &records {
        for m in &rec.jumps {
            let region = if m.small { "small" } else { "large" };
            writeln!(jl, "{}, {}, {}, {}", rec.path, fmt_g17(m.t), region, fmt_g17(m.mark))?;
        }
    }

    gates.push(Gate::new(
        "simulation_aborts",
        aborted == 0,
        format!("{aborted} of {} paths aborted{first_abort}", cfg.paths),
    ));
    Ok(records)
}

/// Energy-ledger verification on shared noise skeletons at two step
/// sizes. The per-path residual carries a mean-zero O(√dt) term, so
/// the first-order statistic is the ensemble-mean stopped residual;
/// halving dt must roughly halve it. The martingale terms are tested
/// at zero mean, terminal and stopped, and the convection term must
/// stay energy-neutral pathwise.
fn stage_ledger(w: &Workbench, cfg: &RunConfig, dir: &Path, gates: &mut Vec<Gate>) -> Result<()> {
    let paths = (cfg.paths as u64).clamp(50, 64);
    let fine_steps = 2 * cfg.sim.base_steps();
    let mut sim = cfg.sim.clone();
    sim.dt = sim.t_end / fine_steps as f64;
    let sigma = cfg.tolerances.martingale_sigma;

    // Anchors shared by both strides: every 8th fine base time.
    let anchor: Vec<f64> = {
        let sk = NoiseSkeleton::sample(&cfg.noise, sim.t_end, fine_steps, sim.seed, 0)?;
        sk.base_times().iter().copied().step_by(8).collect()
    };
    let mut mean_res = [vec![0.0; anchor.len()], vec![0.0; anchor.len()]];
    let mut ledgers: Vec<EnergyLedger> = Vec::with_capacity(paths as usize);
    let mut stopped_m = Vec::with_capacity(paths as usize);
    let mut stopped_n = Vec::with_capacity(paths as usize);
    let mut max_conv = 0.0f64;
    for path in 0..paths {
        let sk = NoiseSkeleton::sample(&cfg.noise, sim.t_end, fine_steps, sim.seed, path)?;
        for (slot, stride) in [(0usize, 2usize), (1, 1)] {
            let rec =
                simulate_on_skeleton(&w.basis, &w.triple, &w.gop, &cfg.noise, &sim, &sk, stride, path)?;
            let led = accumulate_ledger(&w.basis, &w.triple, &w.gop, &cfg.noise, &sim, &rec, 2.0)?;
            let stop = rec.stopped_index();
            for (i, t) in anchor.iter().enumerate() {
                mean_res[slot][i] += led.stopped_residual_at(*t, stop)? / paths as f64;
            }
            if stride == 1 {
                max_conv = max_conv.max(led.max_convection_energy);
                stopped_m.push(led.stopped_martingale(MartingaleTerm::Wiener, stop));
                stopped_n.push(led.stopped_martingale(MartingaleTerm::Jump, stop));
                ledgers.push(led);
            }
        }
    }

    let max_mean = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let coarse = max_mean(&mean_res[0]);
    let fine = max_mean(&mean_res[1]);
    let ratio = if fine > 0.0 { coarse / fine } else { f64::INFINITY };
    let res_pass = fine.is_finite() && fine < 0.1 && (1.5..=2.5).contains(&ratio);
    gates.push(Gate::new(
        "ledger_residual",
        res_pass,
        format!(
            "mean stopped residual {} at dt, {} at dt/2, ratio {}",
            fmt_g17(coarse),
            fmt_g17(fine),
            fmt_g17(ratio)
        ),
    ));

    let mut out = writer(&dir.join("reports/ledger.txt"))?;
    writeln!(out, "# ensemble-mean stopped residual, {} paths, R_stop = {}", paths, fmt_g17(sim.r_stop))?;
    writeln!(out, "# t, residual(dt), residual(dt/2)")?;
    for (i, t) in anchor.iter().enumerate() {
        writeln!(
            out,
            "{}, {}, {}",
            fmt_g17(*t),
            fmt_g17(mean_res[0][i]),
            fmt_g17(mean_res[1][i])
        )?;
    }
    writeln!(out, "# ratio = {}", fmt_g17(ratio))?;

    let mut push_gate = |name: &'static str, gate: MartingaleGate, out: &mut BufWriter<File>| -> Result<()> {
        // Recompute against the configured sigma; the library default
        // is three standard errors.
        let pass = gate.mean.abs() <= sigma * gate.stderr;
        writeln!(
            out,
            "{name}: mean = {}, stderr = {}, paths = {}, pass = {pass}",
            fmt_g17(gate.mean),
            fmt_g17(gate.stderr),
            gate.paths
        )?;
        gates.push(Gate::new(
            name,
            pass,
            format!(
                "mean {} vs {} sigma = {}",
                fmt_g17(gate.mean),
                fmt_g17(sigma),
                fmt_g17(sigma * gate.stderr)
            ),
        ));
        Ok(())
    };
    push_gate(
        "martingale_wiener",
        martingale_mean_test(&ledgers, MartingaleTerm::Wiener)?,
        &mut out,
    )?;
    push_gate(
        "martingale_jump",
        martingale_mean_test(&ledgers, MartingaleTerm::Jump)?,
        &mut out,
    )?;
    push_gate(
        "martingale_wiener_stopped",
        martingale_mean_test_values(&stopped_m, MartingaleTerm::Wiener)?,
        &mut out,
    )?;
    push_gate(
        "martingale_jump_stopped",
        martingale_mean_test_values(&stopped_n, MartingaleTerm::Jump)?,
        &mut out,
    )?;

    let conv_tol = cfg.tolerances.check.energy_neutrality;
    writeln!(out, "max_convection_energy = {}", fmt_g17(max_conv))?;
    gates.push(Gate::new(
        "convection_neutrality",
        max_conv <= conv_tol,
        format!("max |<B(u,u), u>| = {} vs {}", fmt_g17(max_conv), fmt_g17(conv_tol)),
    ));
    Ok(())
}

/// Level sweep of E[sup|u|_H^p] and E∫‖u‖²_V dt with the uniformity
/// gate, written as a moment table.
fn stage_moments(
    w: &Workbench,
    cfg: &RunConfig,
    dir: &Path,
    gates: &mut Vec<Gate>,
    parallel: bool,
) -> Result<()> {
    let report = estimate_moments(
        &w.basis,
        &w.triple,
        &cfg.noise,
        &cfg.sim,
        &cfg.n_sweep,
        cfg.paths,
        &cfg.diagnostics.moment_orders,
        cfg.tolerances.uniformity_ratio,
        parallel,
    )?;
    let mut out = writer(&dir.join("reports/moments.txt"))?;
    report.write_text(&mut out)?;
    gates.push(Gate::new(
        "moment_uniformity",
        report.uniformity.pass,
        format!(
            "worst ratio {} ({}) vs {}",
            fmt_g17(report.uniformity.worst_ratio),
            report.uniformity.worst_family,
            fmt_g17(report.uniformity.ratio_limit)
        ),
    ));
    gates.push(Gate::new(
        "moment_aborts",
        report.aborted_paths == 0,
        format!("{} of {} runs aborted", report.aborted_paths, report.total_runs),
    ));
    Ok(())
}

/// Path-space diagnostics on a small ensemble: cadlag modulus curve,
/// Aldous-type exceedance table with its (C, beta) fit, localized
/// seminorms on nested windows, and the compensated-integral isometry
/// checks.
fn stage_diagnose(
    w: &Workbench,
    cfg: &RunConfig,
    dir: &Path,
    gates: &mut Vec<Gate>,
    records: &[TrajectoryRecord],
) -> Result<()> {
    let dg = &cfg.diagnostics;
    if records.is_empty() {
        return Err(Error::Contract(
            "path diagnostics need at least one completed trajectory".into(),
        ));
    }
    let modulus = modulus_curve(&w.basis, &records[0], &dg.deltas, dg.modulus_norm)?;

    let mut rules: Vec<StoppingRule> = dg
        .hitting_levels
        .iter()
        .map(|&level| StoppingRule::FirstHitting { level })
        .collect();
    rules.extend(dg.fixed_times.iter().map(|&t| StoppingRule::FixedTime { t }));
    let aldous = aldous_statistic(&w.basis, records, &rules, &dg.thetas, &dg.etas, dg.alpha)?;

    let windows = crate::domain::LocalWindow::nested_family(&cfg.domain, dg.windows);
    let seminorms = seminorms_on_windows(&w.basis, &records[0], &windows, dg.seminorm_samples)?;

    let pd = PathDiagnostics { modulus, aldous, seminorms };
    let mut out = writer(&dir.join("reports/diagnostics.txt"))?;
    pd.write_text(&mut out)?;

    gates.push(Gate::new(
        "path_diagnostics",
        pd.pass(),
        format!(
            "{} modulus points, {} exceedance rows, {} windows",
            pd.modulus.points.len(),
            pd.aldous.rows.len(),
            pd.seminorms.len()
        ),
    ));
    let beta_detail = match &pd.aldous.fit {
        Some(fit) => format!("beta = {}, c = {}", fmt_g17(fit.beta), fmt_g17(fit.c)),
        None => "fit unavailable (degenerate moments)".into(),
    };
    gates.push(Gate::new(
        "aldous_beta",
        pd.aldous.fit.as_ref().map_or(false, |f| f.beta > 0.0),
        beta_detail,
    ));

    // Compensated-integral isometry on the three shipped integrands.
    let integrands = [
        ("one_x_small", TestIntegrand { time: TimePart::One, mark: MarkPart::IndicatorSmall(0.8) }),
        ("linear_x_identity", TestIntegrand { time: TimePart::Linear, mark: MarkPart::Identity }),
        ("sine_x_square_large", TestIntegrand { time: TimePart::Sine, mark: MarkPart::SquareLarge }),
    ];
    let sigma = cfg.tolerances.isometry_sigma;
    let mut rng = path_rng(cfg.seed, 24301, StreamRole::Probes);
    let mut out = writer(&dir.join("reports/isometry.txt"))?;
    writeln!(out, "# integrand, estimate, exact, stderr, mean, mean_stderr, paths")?;
    let mut all_pass = true;
    let mut worst = 0.0f64;
    for (label, integrand) in integrands {
        let rep = compensated_integral_test(
            &cfg.noise.jumps,
            integrand,
            cfg.sim.t_end,
            dg.isometry_samples,
            &mut rng,
        )?;
        writeln!(
            out,
            "{label}, {}, {}, {}, {}, {}, {}",
            fmt_g17(rep.estimate),
            fmt_g17(rep.exact),
            fmt_g17(rep.stderr),
            fmt_g17(rep.mean),
            fmt_g17(rep.mean_stderr),
            rep.paths
        )?;
        all_pass &= rep.within(sigma) && rep.mean_within(sigma);
        if rep.stderr > 0.0 {
            worst = worst.max(rep.error().abs() / rep.stderr);
        }
    }
    gates.push(Gate::new(
        "isometry",
        all_pass,
        format!(
            "3 integrands at {} samples, worst deviation {} sigma",
            dg.isometry_samples,
            fmt_g17(worst)
        ),
    ));
    Ok(())
}

fn dispatch(
    cmd: Command,
    cfg: &RunConfig,
    w: &Workbench,
    dir: &Path,
    parallel: bool,
) -> Result<Vec<Gate>> {
    let mut gates = Vec::new();
    match cmd {
        Command::Check => stage_check(w, cfg, dir, &mut gates)?,
        Command::Simulate => {
            stage_simulate(w, cfg, dir, &mut gates, parallel)?;
        }
        Command::Moments => stage_moments(w, cfg, dir, &mut gates, parallel)?,
        Command::Diagnose => {
            let paths = cfg.diagnostics.paths.max(1) as u64;
            let outcomes = simulate_ensemble(w, cfg, &cfg.sim, paths, parallel)?;
            let records: Vec<TrajectoryRecord> = outcomes
                .into_iter()
                .filter_map(|o| match o {
                    PathOutcome::Done(rec) => Some(rec),
                    PathOutcome::Aborted { .. } => None,
                })
                .collect();
            stage_diagnose(w, cfg, dir, &mut gates, &records)?;
        }
        Command::All => {
            stage_check(w, cfg, dir, &mut gates)?;
            let records = stage_simulate(w, cfg, dir, &mut gates, parallel)?;
            stage_ledger(w, cfg, dir, &mut gates)?;
            stage_moments(w, cfg, dir, &mut gates, parallel)?;
            let take = records.len().min(cfg.diagnostics.paths.max(1));
            stage_diagnose(w, cfg, dir, &mut gates, &records[..take])?;
        }
    }
    Ok(gates)
}

/// Runs one command against a resolved configuration. Creates the run
/// directory (manifest, certificates, trajectories, reports), executes
/// the stage gates, and writes the summary. The caller decides the
/// process exit code from `report.overall()`.
pub fn run(cmd: Command, cfg: &RunConfig) -> Result<RunOutcome> {
    let manifest = RunManifest::new(cfg);
    let dir = manifest.output_dir(cfg);
    manifest.prepare(&dir)?;
    let w = Workbench::assemble(cfg)?;

    let gates = if cfg.parallel == 1 {
        dispatch(cmd, cfg, &w, &dir, false)?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallel)
            .build()
            .map_err(|e| Error::Contract(format!("thread pool: {e}")))?;
        pool.install(|| dispatch(cmd, cfg, &w, &dir, true))?
    };

    let report = SummaryReport { command: cmd.name(), digest: manifest.digest.clone(), gates };
    let mut out = writer(&dir.join("reports/summary.txt"))?;
    report.write_text(&mut out)?;
    Ok(RunOutcome { report, dir })
}
