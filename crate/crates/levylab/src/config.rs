//! Run configuration: the TOML schema, its defaults, strict-mode key
//! checking, and resolution into the domain types.
//!
//! One structured file fully determines a run; the CLI only selects
//! the command, parallelism, strictness, and fault injection. Every
//! validation error names the offending key and the violated
//! constraint.

use std::path::Path;

use serde::Deserialize;

use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::noise::{CoercivityCertificate, GDirection, JumpSpec, MarkLaw, NoiseModel, WienerSpec};
use crate::pathdiag::PathNorm;
use crate::sim::{FaultMode, Forcing, SimConfig};
use crate::system::{SystemKind, SystemSpec};
use crate::triple::CheckTolerances;

/// Fully resolved configuration: defaults applied, arithmetic
/// constraints checked. Grid-dependent checks (mode counts, stability)
/// run again when the basis is assembled.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: usize,
    pub parallel: usize,
    pub output: Option<String>,
    pub domain: BoxDomain,
    pub system: SystemSpec,
    /// Modes to build; at least the largest sweep level.
    pub basis_size: usize,
    pub sobolev_order: f64,
    pub n_sweep: Vec<usize>,
    pub record_coefficients: bool,
    /// Simulation template at the primary level.
    pub sim: SimConfig,
    pub noise: NoiseModel,
    /// Claimed coercivity exponent, checked against the window at load
    /// time when present; certification measures its own value either
    /// way.
    pub claimed_a: Option<f64>,
    pub diagnostics: DiagnosticsConfig,
    pub tolerances: ToleranceConfig,
}

#[derive(Clone, Debug)]
pub struct DiagnosticsConfig {
    pub deltas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub etas: Vec<f64>,
    pub alpha: f64,
    pub hitting_levels: Vec<f64>,
    pub fixed_times: Vec<f64>,
    pub windows: usize,
    pub isometry_samples: usize,
    pub seminorm_samples: usize,
    pub modulus_norm: PathNorm,
    /// Ensemble size for the path diagnostics (the moment sweep uses
    /// the full run.paths).
    pub paths: usize,
    pub moment_orders: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ToleranceConfig {
    pub check: CheckTolerances,
    pub uniformity_ratio: f64,
    pub martingale_sigma: f64,
    pub isometry_sigma: f64,
    pub probe_trials: usize,
    pub certify_probes: usize,
}

fn default_u0() -> Vec<f64> {
    vec![0.4, -0.3, 0.2, 0.1]
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct FileConfig {
    run: RunSection,
    domain: DomainSection,
    system: SystemSection,
    galerkin: GalerkinSection,
    initial: InitialSection,
    forcing: ForcingSection,
    noise: NoiseSection,
    diagnostics: DiagnosticsSection,
    tolerances: TolerancesSection,
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct RunSection {
    seed: u64,
    paths: usize,
    parallel: usize,
    output: Option<String>,
    inject: Option<FaultMode>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 42,
            paths: 200,
            parallel: 0,
            output: None,
            inject: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct DomainSection {
    d: usize,
    sides: Option<Vec<f64>>,
    resolution: Option<usize>,
}

impl Default for DomainSection {
    fn default() -> Self {
        Self {
            d: 2,
            sides: None,
            resolution: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct SystemSection {
    kind: SystemKind,
    re: f64,
    rm: f64,
    s: f64,
    kappa_thermal: f64,
    buoyancy_axis: Option<usize>,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            kind: SystemKind::Nse,
            re: 1.0,
            rm: 1.0,
            s: 1.0,
            kappa_thermal: 1.0,
            buoyancy_axis: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct GalerkinSection {
    n: usize,
    n_sweep: Vec<usize>,
    basis_size: Option<usize>,
    m: f64,
    dt: f64,
    t_end: f64,
    r_stop: f64,
    cutoff_level: f64,
    disable_cutoff: bool,
    semi_implicit: bool,
    record_coefficients: bool,
}

impl Default for GalerkinSection {
    fn default() -> Self {
        Self {
            n: 8,
            n_sweep: vec![4, 8, 16],
            basis_size: None,
            m: 3.0,
            dt: 1e-3,
            t_end: 1.0,
            r_stop: 2.0,
            cutoff_level: 4.0,
            disable_cutoff: false,
            semi_implicit: false,
            record_coefficients: true,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct InitialSection {
    coeffs: Vec<f64>,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            coeffs: default_u0(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct ForcingSection {
    times: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct NoiseSection {
    wiener: WienerSection,
    jumps: JumpsSection,
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct WienerSection {
    additive: f64,
    directions: Vec<GDirection>,
    a: Option<f64>,
}

impl Default for WienerSection {
    fn default() -> Self {
        let reference = NoiseModel::reference().wiener;
        Self {
            additive: reference.additive,
            directions: reference.directions,
            a: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct JumpsSection {
    rate: f64,
    y0_radius: f64,
    gamma: f64,
    gamma_scale: f64,
    h0: Vec<f64>,
    law: LawSection,
}

impl Default for JumpsSection {
    fn default() -> Self {
        let reference = NoiseModel::reference().jumps;
        Self {
            rate: reference.total_rate,
            y0_radius: reference.y0_radius,
            gamma: reference.gamma,
            gamma_scale: reference.gamma_scale,
            h0: reference.h0,
            law: LawSection::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct LawSection {
    kind: String,
    scale_pos: f64,
    scale_neg: f64,
    weight_pos: f64,
}

impl Default for LawSection {
    fn default() -> Self {
        let MarkLaw::TwoSidedExp {
            scale_pos,
            scale_neg,
            weight_pos,
        } = NoiseModel::reference().jumps.law;
        Self {
            kind: "two_sided_exp".into(),
            scale_pos,
            scale_neg,
            weight_pos,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct DiagnosticsSection {
    deltas: Vec<f64>,
    thetas: Vec<f64>,
    etas: Vec<f64>,
    alpha: f64,
    hitting_levels: Vec<f64>,
    fixed_times: Vec<f64>,
    windows: usize,
    isometry_samples: usize,
    seminorm_samples: usize,
    modulus_norm: String,
    paths: usize,
    moment_orders: Vec<f64>,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            deltas: vec![0.02, 0.05, 0.1, 0.2, 0.4],
            thetas: vec![1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0],
            etas: vec![1e-4, 1e-3, 1e-2, 0.1],
            alpha: 1.0,
            hitting_levels: vec![0.6],
            fixed_times: vec![0.0, 0.5],
            windows: 3,
            isometry_samples: 2000,
            seminorm_samples: 33,
            modulus_norm: "h".into(),
            paths: 50,
            moment_orders: vec![],
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct TolerancesSection {
    antisymmetry: f64,
    energy_neutrality: f64,
    r_bound_slack: f64,
    uniformity_ratio: f64,
    martingale_sigma: f64,
    isometry_sigma: f64,
    probe_trials: usize,
    certify_probes: usize,
}

impl Default for TolerancesSection {
    fn default() -> Self {
        let check = CheckTolerances::default();
        Self {
            antisymmetry: check.antisymmetry,
            energy_neutrality: check.energy_neutrality,
            r_bound_slack: check.r_bound_slack,
            uniformity_ratio: 1.5,
            martingale_sigma: 3.0,
            isometry_sigma: 3.0,
            probe_trials: 1000,
            certify_probes: 400,
        }
    }
}

/// Allowed-key tree for strict mode, mirroring the serde schema. The
/// shipped configurations are tested against it so the two cannot
/// drift silently.
enum Node {
    Leaf,
    Table(&'static [(&'static str, Node)]),
    /// Array whose elements are tables with this schema.
    TableArray(&'static [(&'static str, Node)]),
}

static SCHEMA: &[(&str, Node)] = &[
    (
        "run",
        Node::Table(&[
            ("seed", Node::Leaf),
            ("paths", Node::Leaf),
            ("parallel", Node::Leaf),
            ("output", Node::Leaf),
            ("inject", Node::Leaf),
        ]),
    ),
    (
        "domain",
        Node::Table(&[
            ("d", Node::Leaf),
            ("sides", Node::Leaf),
            ("resolution", Node::Leaf),
        ]),
    ),
    (
        "system",
        Node::Table(&[
            ("kind", Node::Leaf),
            ("re", Node::Leaf),
            ("rm", Node::Leaf),
            ("s", Node::Leaf),
            ("kappa_thermal", Node::Leaf),
            ("buoyancy_axis", Node::Leaf),
        ]),
    ),
    (
        "galerkin",
        Node::Table(&[
            ("n", Node::Leaf),
            ("n_sweep", Node::Leaf),
            ("basis_size", Node::Leaf),
            ("m", Node::Leaf),
            ("dt", Node::Leaf),
            ("t_end", Node::Leaf),
            ("r_stop", Node::Leaf),
            ("cutoff_level", Node::Leaf),
            ("disable_cutoff", Node::Leaf),
            ("semi_implicit", Node::Leaf),
            ("record_coefficients", Node::Leaf),
        ]),
    ),
    ("initial", Node::Table(&[("coeffs", Node::Leaf)])),
    (
        "forcing",
        Node::Table(&[("times", Node::Leaf), ("coeffs", Node::Leaf)]),
    ),
    (
        "noise",
        Node::Table(&[
            (
                "wiener",
                Node::Table(&[
                    ("additive", Node::Leaf),
                    (
                        "directions",
                        Node::TableArray(&[("b", Node::Leaf), ("c", Node::Leaf)]),
                    ),
                    ("a", Node::Leaf),
                ]),
            ),
            (
                "jumps",
                Node::Table(&[
                    ("rate", Node::Leaf),
                    ("y0_radius", Node::Leaf),
                    ("gamma", Node::Leaf),
                    ("gamma_scale", Node::Leaf),
                    ("h0", Node::Leaf),
                    (
                        "law",
                        Node::Table(&[
                            ("kind", Node::Leaf),
                            ("scale_pos", Node::Leaf),
                            ("scale_neg", Node::Leaf),
                            ("weight_pos", Node::Leaf),
                        ]),
                    ),
                ]),
            ),
        ]),
    ),
    (
        "diagnostics",
        Node::Table(&[
            ("deltas", Node::Leaf),
            ("thetas", Node::Leaf),
            ("etas", Node::Leaf),
            ("alpha", Node::Leaf),
            ("hitting_levels", Node::Leaf),
            ("fixed_times", Node::Leaf),
            ("windows", Node::Leaf),
            ("isometry_samples", Node::Leaf),
            ("seminorm_samples", Node::Leaf),
            ("modulus_norm", Node::Leaf),
            ("paths", Node::Leaf),
            ("moment_orders", Node::Leaf),
        ]),
    ),
    (
        "tolerances",
        Node::Table(&[
            ("antisymmetry", Node::Leaf),
            ("energy_neutrality", Node::Leaf),
            ("r_bound_slack", Node::Leaf),
            ("uniformity_ratio", Node::Leaf),
            ("martingale_sigma", Node::Leaf),
            ("isometry_sigma", Node::Leaf),
            ("probe_trials", Node::Leaf),
            ("certify_probes", Node::Leaf),
        ]),
    ),
];

fn check_keys(value: &toml::Value, schema: &[(&str, Node)], prefix: &str) -> Result<()> {
    let table = match value.as_table() {
        Some(t) => t,
        None => return Ok(()),
    };
    for (key, sub) in table {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match schema.iter().find(|(name, _)| name == key) {
            None => {
                return Err(Error::config(path, "unknown key (strict mode)"));
            }
            Some((_, Node::Leaf)) => {}
            Some((_, Node::Table(children))) => check_keys(sub, children, &path)?,
            Some((_, Node::TableArray(children))) => {
                if let Some(items) = sub.as_array() {
                    for item in items {
                        check_keys(item, children, &path)?;
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn load_config(path: &Path, strict: bool) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    load_config_str(&text, strict)
}

pub fn load_config_str(text: &str, strict: bool) -> Result<RunConfig> {
    let value: toml::Value = text.parse()?;
    if strict {
        check_keys(&value, SCHEMA, "")?;
    }
    let file: FileConfig = value
        .try_into()
        .map_err(Error::Toml)?;
    resolve(file)
}

fn ensure(cond: bool, key: &str, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::config(key, msg))
    }
}

fn ensure_finite_list(xs: &[f64], key: &str) -> Result<()> {
    ensure(
        xs.iter().all(|x| x.is_finite()),
        key,
        "entries must be finite",
    )
}

fn resolve(file: FileConfig) -> Result<RunConfig> {
    ensure(file.run.paths >= 1, "run.paths", "need at least one path")?;

    let d = file.domain.d;
    ensure(d == 2 || d == 3, "domain.d", format!("must be 2 or 3, got {d}"))?;
    let standard = BoxDomain::standard(d).expect("standard domain is valid");
    let sides = file
        .domain
        .sides
        .unwrap_or_else(|| standard.sides().to_vec());
    let resolution = file.domain.resolution.unwrap_or(standard.resolution());
    let domain = BoxDomain::new(d, &sides, resolution)
        .map_err(|e| Error::config("domain", e.to_string()))?;

    let mut system = SystemSpec {
        kind: file.system.kind,
        re: file.system.re,
        rm: file.system.rm,
        s: file.system.s,
        kappa_thermal: file.system.kappa_thermal,
        buoyancy_axis: file.system.buoyancy_axis.unwrap_or(usize::MAX),
    };
    system = system.validated(d)?;

    let g = file.galerkin;
    ensure(g.n >= 1, "galerkin.n", "need at least one mode")?;
    let mut n_sweep = g.n_sweep;
    ensure(!n_sweep.is_empty(), "galerkin.n_sweep", "need at least one level")?;
    ensure(
        n_sweep.windows(2).all(|w| w[1] > w[0]) && n_sweep[0] >= 1,
        "galerkin.n_sweep",
        "levels must be strictly ascending and positive",
    )?;
    if !n_sweep.contains(&g.n) {
        n_sweep.push(g.n);
        n_sweep.sort_unstable();
    }
    let needed = *n_sweep.last().unwrap();
    let basis_size = g.basis_size.unwrap_or(needed);
    ensure(
        basis_size >= needed,
        "galerkin.basis_size",
        format!("must cover the largest sweep level {needed}"),
    )?;
    ensure(
        g.m > 0.0 && g.m.is_finite(),
        "galerkin.m",
        "sobolev order must be positive",
    )?;
    ensure(
        g.dt > 0.0 && g.dt.is_finite(),
        "galerkin.dt",
        "time step must be positive",
    )?;
    ensure(
        g.t_end > 0.0 && g.t_end.is_finite(),
        "galerkin.t_end",
        "horizon must be positive",
    )?;
    let steps = g.t_end / g.dt;
    ensure(
        (steps - steps.round()).abs() <= 1e-9 * steps.max(1.0),
        "galerkin.dt",
        "time step must divide the horizon",
    )?;
    ensure(
        g.r_stop > 0.0,
        "galerkin.r_stop",
        "stopping radius must be positive",
    )?;
    ensure(
        g.cutoff_level > 0.0,
        "galerkin.cutoff_level",
        "cutoff level must be positive",
    )?;

    ensure_finite_list(&file.initial.coeffs, "initial.coeffs")?;
    let forcing = Forcing {
        times: file.forcing.times,
        coeffs: file.forcing.coeffs,
    };
    forcing.validate()?;

    let wiener = WienerSpec {
        directions: file.noise.wiener.directions,
        additive: file.noise.wiener.additive,
    };
    wiener.validate()?;
    let law = match file.noise.jumps.law.kind.as_str() {
        "two_sided_exp" => MarkLaw::TwoSidedExp {
            scale_pos: file.noise.jumps.law.scale_pos,
            scale_neg: file.noise.jumps.law.scale_neg,
            weight_pos: file.noise.jumps.law.weight_pos,
        },
        other => {
            return Err(Error::config(
                "noise.jumps.law.kind",
                format!("unknown mark law `{other}`"),
            ));
        }
    };
    let jumps = JumpSpec {
        law,
        total_rate: file.noise.jumps.rate,
        y0_radius: file.noise.jumps.y0_radius,
        gamma: file.noise.jumps.gamma,
        h0: file.noise.jumps.h0,
        gamma_scale: file.noise.jumps.gamma_scale,
    };
    let noise = NoiseModel { wiener, jumps };
    noise.validate()?;

    let claimed_a = file.noise.wiener.a;
    if let Some(a) = claimed_a {
        let floor = CoercivityCertificate::window_floor(noise.jumps.gamma);
        ensure(
            a > floor && a <= 2.0,
            "noise.wiener.a",
            format!(
                "claimed coercivity exponent outside the window ({floor}, 2]"
            ),
        )?;
    }

    let dg = file.diagnostics;
    ensure(
        !dg.deltas.is_empty() && dg.deltas.windows(2).all(|w| w[1] > w[0]) && dg.deltas[0] > 0.0,
        "diagnostics.deltas",
        "need a strictly ascending positive delta grid",
    )?;
    ensure_finite_list(&dg.deltas, "diagnostics.deltas")?;
    ensure(
        !dg.thetas.is_empty() && dg.thetas.iter().all(|&t| t >= 0.0 && t.is_finite()),
        "diagnostics.thetas",
        "need finite thetas >= 0",
    )?;
    ensure(
        !dg.etas.is_empty() && dg.etas.iter().all(|&e| e > 0.0 && e.is_finite()),
        "diagnostics.etas",
        "need finite etas > 0",
    )?;
    ensure(
        dg.alpha > 0.0 && dg.alpha.is_finite(),
        "diagnostics.alpha",
        "alpha must be positive",
    )?;
    ensure(
        !dg.hitting_levels.is_empty() || !dg.fixed_times.is_empty(),
        "diagnostics.hitting_levels",
        "need at least one stopping rule",
    )?;
    ensure_finite_list(&dg.hitting_levels, "diagnostics.hitting_levels")?;
    ensure(
        dg.fixed_times.iter().all(|&t| t >= 0.0 && t.is_finite()),
        "diagnostics.fixed_times",
        "fixed times must be finite and nonnegative",
    )?;
    ensure(dg.windows >= 1, "diagnostics.windows", "need at least one window")?;
    ensure(
        dg.isometry_samples >= 2,
        "diagnostics.isometry_samples",
        "need at least two samples",
    )?;
    ensure(
        dg.seminorm_samples >= 2,
        "diagnostics.seminorm_samples",
        "need at least two retained samples",
    )?;
    ensure(dg.paths >= 1, "diagnostics.paths", "need at least one path")?;
    let modulus_norm = match dg.modulus_norm.as_str() {
        "h" => PathNorm::H,
        "u_dual" => PathNorm::UDual,
        other => {
            return Err(Error::config(
                "diagnostics.modulus_norm",
                format!("unknown norm `{other}` (expected `h` or `u_dual`)"),
            ));
        }
    };
    let moment_orders = if dg.moment_orders.is_empty() {
        vec![2.0, 2.0 + noise.jumps.gamma]
    } else {
        ensure(
            dg.moment_orders.iter().all(|&p| p >= 2.0 && p.is_finite()),
            "diagnostics.moment_orders",
            "orders must be >= 2",
        )?;
        dg.moment_orders
    };

    let tl = file.tolerances;
    for (key, v) in [
        ("tolerances.antisymmetry", tl.antisymmetry),
        ("tolerances.energy_neutrality", tl.energy_neutrality),
        ("tolerances.uniformity_ratio", tl.uniformity_ratio),
        ("tolerances.martingale_sigma", tl.martingale_sigma),
        ("tolerances.isometry_sigma", tl.isometry_sigma),
    ] {
        ensure(v > 0.0 && v.is_finite(), key, "must be positive")?;
    }
    ensure(
        tl.uniformity_ratio > 1.0,
        "tolerances.uniformity_ratio",
        "ratio limit must exceed 1",
    )?;
    ensure(
        tl.probe_trials >= 1,
        "tolerances.probe_trials",
        "need at least one trial",
    )?;
    ensure(
        tl.certify_probes >= 100,
        "tolerances.certify_probes",
        "certification needs at least 100 probes",
    )?;

    let sim = SimConfig {
        n: g.n,
        dt: g.dt,
        t_end: g.t_end,
        u0: file.initial.coeffs,
        forcing,
        r_stop: g.r_stop,
        cutoff_level: g.cutoff_level,
        disable_cutoff: g.disable_cutoff,
        semi_implicit: g.semi_implicit,
        seed: file.run.seed,
        fault: file.run.inject,
    };

    Ok(RunConfig {
        seed: file.run.seed,
        paths: file.run.paths,
        parallel: file.run.parallel,
        output: file.run.output,
        domain,
        system,
        basis_size,
        sobolev_order: g.m,
        n_sweep,
        record_coefficients: g.record_coefficients,
        sim,
        noise,
        claimed_a,
        diagnostics: DiagnosticsConfig {
            deltas: dg.deltas,
            thetas: dg.thetas,
            etas: dg.etas,
            alpha: dg.alpha,
            hitting_levels: dg.hitting_levels,
            fixed_times: dg.fixed_times,
            windows: dg.windows,
            isometry_samples: dg.isometry_samples,
            seminorm_samples: dg.seminorm_samples,
            modulus_norm,
            paths: dg.paths,
            moment_orders,
        },
        tolerances: ToleranceConfig {
            check: CheckTolerances {
                antisymmetry: tl.antisymmetry,
                energy_neutrality: tl.energy_neutrality,
                r_bound_slack: tl.r_bound_slack,
            },
            uniformity_ratio: tl.uniformity_ratio,
            martingale_sigma: tl.martingale_sigma,
            isometry_sigma: tl.isometry_sigma,
            probe_trials: tl.probe_trials,
            certify_probes: tl.certify_probes,
        },
    })
}
