//! Run manifest: a canonical digest of the resolved configuration,
//! the per-path seed derivation rule, and the fixed output layout
//! (`manifest`, `certificates/`, `trajectories/`, `reports/`).
//!
//! The digest hashes the resolved configuration, not the file text, so
//! reordering keys in the file cannot change it. The canonical listing
//! is emitted into the manifest itself, making the hashed content
//! reviewable.

use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::Result;
use crate::noise::MarkLaw;
use crate::util::{fmt_g17, hex};

/// Environment variable overriding the output root (the directory
/// that receives `runs/<digest prefix>/`).
pub const OUTPUT_ROOT_ENV: &str = "LEVYLAB_OUTPUT_ROOT";

#[derive(Clone, Debug)]
pub struct RunManifest {
    pub digest: String,
    pub version: String,
    pub seed: u64,
    pub seed_rule: String,
    /// Sorted `key = value` listing of the resolved configuration,
    /// exactly the bytes the digest covers.
    pub lines: Vec<String>,
}

fn fmt_list(xs: &[f64]) -> String {
    let inner: Vec<String> = xs.iter().map(|&x| fmt_g17(x)).collect();
    format!("[{}]", inner.join(", "))
}

fn fmt_usize_list(xs: &[usize]) -> String {
    let inner: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("[{}]", inner.join(", "))
}

/// Flattens the resolved configuration to sorted `key = value` lines.
fn canonical_lines(cfg: &RunConfig) -> Vec<String> {
    let mut kv: Vec<(String, String)> = Vec::new();
    let mut push = |k: &str, v: String| kv.push((k.to_string(), v));

    // run.parallel and run.output are execution knobs, not experiment
    // parameters: they cannot change any sampled number, so they stay
    // out of the digest and a parallel rerun into a fresh directory
    // reproduces the whole run byte for byte.
    push("run.seed", cfg.seed.to_string());
    push("run.paths", cfg.paths.to_string());
    push(
        "run.inject",
        match cfg.sim.fault {
            None => "none".into(),
            Some(f) => format!("{f:?}"),
        },
    );

    push("domain.d", cfg.domain.d().to_string());
    push("domain.sides", fmt_list(cfg.domain.sides()));
    push("domain.resolution", cfg.domain.resolution().to_string());

    push("system.kind", cfg.system.kind.name().to_string());
    push("system.re", fmt_g17(cfg.system.re));
    push("system.rm", fmt_g17(cfg.system.rm));
    push("system.s", fmt_g17(cfg.system.s));
    push("system.kappa_thermal", fmt_g17(cfg.system.kappa_thermal));
    push("system.buoyancy_axis", cfg.system.buoyancy_axis.to_string());

    push("galerkin.n", cfg.sim.n.to_string());
    push("galerkin.n_sweep", fmt_usize_list(&cfg.n_sweep));
    push("galerkin.basis_size", cfg.basis_size.to_string());
    push("galerkin.m", fmt_g17(cfg.sobolev_order));
    push("galerkin.dt", fmt_g17(cfg.sim.dt));
    push("galerkin.t_end", fmt_g17(cfg.sim.t_end));
    push("galerkin.r_stop", fmt_g17(cfg.sim.r_stop));
    push("galerkin.cutoff_level", fmt_g17(cfg.sim.cutoff_level));
    push(
        "galerkin.disable_cutoff",
        cfg.sim.disable_cutoff.to_string(),
    );
    push("galerkin.semi_implicit", cfg.sim.semi_implicit.to_string());
    push(
        "galerkin.record_coefficients",
        cfg.record_coefficients.to_string(),
    );

    push("initial.coeffs", fmt_list(&cfg.sim.u0));
    push("forcing.times", fmt_list(&cfg.sim.forcing.times));
    for (i, c) in cfg.sim.forcing.coeffs.iter().enumerate() {
        push(&format!("forcing.coeffs.{i}"), fmt_list(c));
    }

    push("noise.wiener.additive", fmt_g17(cfg.noise.wiener.additive));
    for (i, dir) in cfg.noise.wiener.directions.iter().enumerate() {
        push(
            &format!("noise.wiener.directions.{i}.b"),
            fmt_list(&dir.b),
        );
        push(&format!("noise.wiener.directions.{i}.c"), fmt_g17(dir.c));
    }
    push(
        "noise.wiener.a",
        cfg.claimed_a.map(fmt_g17).unwrap_or_else(|| "none".into()),
    );
    push("noise.jumps.rate", fmt_g17(cfg.noise.jumps.total_rate));
    push("noise.jumps.y0_radius", fmt_g17(cfg.noise.jumps.y0_radius));
    push("noise.jumps.gamma", fmt_g17(cfg.noise.jumps.gamma));
    push(
        "noise.jumps.gamma_scale",
        fmt_g17(cfg.noise.jumps.gamma_scale),
    );
    push("noise.jumps.h0", fmt_list(&cfg.noise.jumps.h0));
    let MarkLaw::TwoSidedExp {
        scale_pos,
        scale_neg,
        weight_pos,
    } = cfg.noise.jumps.law;
    push("noise.jumps.law.kind", "two_sided_exp".into());
    push("noise.jumps.law.scale_pos", fmt_g17(scale_pos));
    push("noise.jumps.law.scale_neg", fmt_g17(scale_neg));
    push("noise.jumps.law.weight_pos", fmt_g17(weight_pos));

    let dg = &cfg.diagnostics;
    push("diagnostics.deltas", fmt_list(&dg.deltas));
    push("diagnostics.thetas", fmt_list(&dg.thetas));
    push("diagnostics.etas", fmt_list(&dg.etas));
    push("diagnostics.alpha", fmt_g17(dg.alpha));
    push(
        "diagnostics.hitting_levels",
        fmt_list(&dg.hitting_levels),
    );
    push("diagnostics.fixed_times", fmt_list(&dg.fixed_times));
    push("diagnostics.windows", dg.windows.to_string());
    push(
        "diagnostics.isometry_samples",
        dg.isometry_samples.to_string(),
    );
    push(
        "diagnostics.seminorm_samples",
        dg.seminorm_samples.to_string(),
    );
    push(
        "diagnostics.modulus_norm",
        dg.modulus_norm.label().to_string(),
    );
    push("diagnostics.paths", dg.paths.to_string());
    push("diagnostics.moment_orders", fmt_list(&dg.moment_orders));

    let tl = &cfg.tolerances;
    push("tolerances.antisymmetry", fmt_g17(tl.check.antisymmetry));
    push(
        "tolerances.energy_neutrality",
        fmt_g17(tl.check.energy_neutrality),
    );
    push("tolerances.r_bound_slack", fmt_g17(tl.check.r_bound_slack));
    push("tolerances.uniformity_ratio", fmt_g17(tl.uniformity_ratio));
    push("tolerances.martingale_sigma", fmt_g17(tl.martingale_sigma));
    push("tolerances.isometry_sigma", fmt_g17(tl.isometry_sigma));
    push("tolerances.probe_trials", tl.probe_trials.to_string());
    push("tolerances.certify_probes", tl.certify_probes.to_string());

    kv.sort_by(|a, b| a.0.cmp(&b.0));
    kv.into_iter().map(|(k, v)| format!("{k} = {v}")).collect()
}

impl RunManifest {
    pub fn new(cfg: &RunConfig) -> RunManifest {
        let lines = canonical_lines(cfg);
        let mut hasher = Sha256::new();
        for line in &lines {
            hasher.update(line.as_bytes());
            hasher.update(b"\n");
        }
        RunManifest {
            digest: hex(&hasher.finalize()),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
            seed_rule: "chacha8: seed_from_u64(run.seed), stream = path*8 + role".to_string(),
            lines,
        }
    }

    /// Output directory: the config's explicit path when set, else
    /// `<root>/runs/<digest prefix>` with the root taken from the
    /// override environment variable or the working directory.
    pub fn output_dir(&self, cfg: &RunConfig) -> PathBuf {
        if let Some(out) = &cfg.output {
            return PathBuf::from(out);
        }
        let root = std::env::var(OUTPUT_ROOT_ENV).unwrap_or_else(|_| ".".into());
        Path::new(&root).join("runs").join(&self.digest[..12])
    }

    /// Creates the fixed layout and writes the manifest file.
    pub fn prepare(&self, dir: &Path) -> Result<()> {
        for sub in ["certificates", "trajectories", "reports"] {
            std::fs::create_dir_all(dir.join(sub))?;
        }
        let mut buf = Vec::new();
        self.write_text(&mut buf)?;
        std::fs::write(dir.join("manifest"), buf)?;
        Ok(())
    }

    pub fn write_text(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "digest = {}", self.digest)?;
        writeln!(out, "version = {}", self.version)?;
        writeln!(out, "seed = {}", self.seed)?;
        writeln!(out, "seed_rule = {}", self.seed_rule)?;
        writeln!(out, "layout = manifest, certificates/, trajectories/, reports/")?;
        for line in &self.lines {
            writeln!(out, "config.{line}")?;
        }
        Ok(())
    }
}
