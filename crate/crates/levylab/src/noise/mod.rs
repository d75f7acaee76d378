//! Lévy noise: truncated Wiener part, finite-activity Poisson part,
//! per-path deterministic RNG substreams, and the joint noise
//! certificate (coercivity, growth, Lipschitz constants).
//!
//! A `NoiseSkeleton` freezes one path's randomness up front: the jump
//! events and a cumulative Wiener table on the union of the base time
//! grid and the jump times. Solvers at any step stride that divides
//! the base grid read increments from the same table, so refinement
//! studies compare discretizations of the identical driving path.

pub mod jumps;
pub mod marks;
pub mod wiener;

pub use jumps::{
    compensated_integral_test, mark_sum_compensated, mark_sum_recombined, mark_sum_split,
    sample_jumps, IsometryReport, JumpEvent, JumpSpec, MarkPart, TestIntegrand, TimePart,
};
pub use marks::MarkLaw;
pub use wiener::{
    certify_coercivity, sample_wiener_increment, CoercivityCertificate, GDirection,
    WienerOperator, WienerSpec,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::SpectralBasis;
use crate::error::{Error, Result};
use crate::state::{norm_dirichlet_sq, GalerkinState};
use crate::triple::OperatorTriple;
use crate::util::fmt_g17;

/// Purpose of an RNG substream. Each (path, role) pair owns a
/// counter-based stream, so adding draws to one role never shifts
/// another.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamRole {
    Wiener = 0,
    Jumps = 1,
    Probes = 2,
    Scratch = 3,
}

/// Deterministic substream keyed by (seed, path, role).
pub fn path_rng(seed: u64, path: u64, role: StreamRole) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path.wrapping_mul(8).wrapping_add(role as u64));
    rng
}

/// The complete noise model: Wiener coefficient tables plus the jump
/// specification. Immutable once built; all sampling goes through
/// owned per-path streams.
#[derive(Clone, Debug)]
pub struct NoiseModel {
    pub wiener: WienerSpec,
    pub jumps: JumpSpec,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        self.wiener.validate()?;
        self.jumps.validate()
    }

    pub fn assemble_wiener(&self, basis: &SpectralBasis) -> Result<WienerOperator> {
        WienerOperator::assemble(basis, &self.wiener)
    }

    /// The noise shipped with the reference configurations: a mild
    /// gradient-plus-multiplier Wiener part that certifies inside the
    /// coercivity window, and an asymmetric two-sided exponential jump
    /// law with |h₀| = 1.25 so the growth constants are ordered in p.
    pub fn reference() -> NoiseModel {
        NoiseModel {
            wiener: WienerSpec {
                directions: vec![
                    GDirection { b: [0.15, 0.0, 0.0], c: 0.2 },
                    GDirection { b: [0.0, 0.15, 0.0], c: 0.0 },
                ],
                additive: 0.05,
            },
            jumps: JumpSpec {
                law: MarkLaw::TwoSidedExp {
                    scale_pos: 0.6,
                    scale_neg: 0.5,
                    weight_pos: 0.7,
                },
                total_rate: 3.0,
                y0_radius: 1.0,
                gamma: 2.0,
                h0: vec![0.8838834764831844, -0.8838834764831844],
                gamma_scale: 0.12,
            },
        }
    }
}

/// One path's randomness, frozen on the union of the base grid and the
/// jump times.
#[derive(Clone, Debug)]
pub struct NoiseSkeleton {
    t_end: f64,
    base_steps: usize,
    base_times: Vec<f64>,
    jumps: Vec<JumpEvent>,
    grid: Vec<f64>,
    /// cum[g][k]: cumulative Wiener component k at grid[g]; cum[0] = 0.
    cum: Vec<Vec<f64>>,
}

impl NoiseSkeleton {
    pub fn sample(
        model: &NoiseModel,
        t_end: f64,
        base_steps: usize,
        seed: u64,
        path: u64,
    ) -> Result<NoiseSkeleton> {
        if !(t_end > 0.0) || base_steps == 0 {
            return Err(Error::Contract(
                "noise skeleton needs a positive horizon and at least one base step".into(),
            ));
        }
        let mut jump_rng = path_rng(seed, path, StreamRole::Jumps);
        let jumps = sample_jumps(&model.jumps, 0.0, t_end, &mut jump_rng)?;
        let dt = t_end / base_steps as f64;
        let mut base_times: Vec<f64> = (0..base_steps).map(|i| i as f64 * dt).collect();
        base_times.push(t_end);
        let mut grid = base_times.clone();
        grid.extend(jumps.iter().map(|e| e.t));
        grid.sort_by(|a, b| a.total_cmp(b));
        grid.dedup();
        let k = model.wiener.directions.len();
        let mut wiener_rng = path_rng(seed, path, StreamRole::Wiener);
        let mut cum: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
        cum.push(vec![0.0; k]);
        for g in 1..grid.len() {
            let inc = sample_wiener_increment(k, grid[g] - grid[g - 1], &mut wiener_rng);
            let next = cum[g - 1]
                .iter()
                .zip(&inc)
                .map(|(p, i)| p + i)
                .collect();
            cum.push(next);
        }
        Ok(NoiseSkeleton {
            t_end,
            base_steps,
            base_times,
            jumps,
            grid,
            cum,
        })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn base_steps(&self) -> usize {
        self.base_steps
    }

    /// The uniform times (without jump times): the anchor set shared
    /// by every stride of `step_grid` and by ensemble statistics.
    pub fn base_times(&self) -> &[f64] {
        &self.base_times
    }

    pub fn direction_count(&self) -> usize {
        self.cum[0].len()
    }

    pub fn jumps(&self) -> &[JumpEvent] {
        &self.jumps
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    fn grid_index(&self, t: f64) -> Result<usize> {
        self.grid
            .binary_search_by(|x| x.total_cmp(&t))
            .map_err(|_| Error::Contract(format!("time {t} is not on the noise skeleton grid")))
    }

    /// Exact Wiener increment between two grid times. Times off the
    /// grid are a caller bug, not something to interpolate over.
    pub fn wiener_between(&self, t0: f64, t1: f64) -> Result<Vec<f64>> {
        let i0 = self.grid_index(t0)?;
        let i1 = self.grid_index(t1)?;
        if i1 < i0 {
            return Err(Error::Contract("wiener increment interval reversed".into()));
        }
        Ok(self.cum[i1]
            .iter()
            .zip(&self.cum[i0])
            .map(|(a, b)| a - b)
            .collect())
    }

    /// Step times for a solver running at `stride` × the base step:
    /// every stride-th base time, unioned with the jump times. All
    /// entries are grid members bitwise, so increment lookups never
    /// miss.
    pub fn step_grid(&self, stride: usize) -> Result<Vec<f64>> {
        if stride == 0 || self.base_steps % stride != 0 {
            return Err(Error::Contract(format!(
                "stride {stride} does not divide the {} base steps",
                self.base_steps
            )));
        }
        let mut g: Vec<f64> = self.base_times.iter().copied().step_by(stride).collect();
        g.extend(self.jumps.iter().map(|e| e.t));
        g.sort_by(|a, b| a.total_cmp(b));
        g.dedup();
        Ok(g)
    }

    /// Jump events landing exactly at time t (empty for non-jump times).
    pub fn jumps_at(&self, t: f64) -> &[JumpEvent] {
        let lo = self.jumps.partition_point(|e| e.t < t);
        let hi = self.jumps.partition_point(|e| e.t <= t);
        &self.jumps[lo..hi]
    }
}

/// Joint noise certificate: the coercivity triple, the jump growth
/// constants C_p, and the two Lipschitz constants.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoiseCertificate {
    pub coercivity: CoercivityCertificate,
    /// (p, C_p) with ∫|F(u;y)|^p μ(dy) ≤ C_p(1 + |u|^p) on probes.
    pub growth: Vec<(f64, f64)>,
    /// ∫|F(u;y) − F(v;y)|² μ(dy) ≤ L |u − v|² on probes.
    pub jump_lipschitz: f64,
    /// ‖G(u) − G(v)‖²_HS ≤ L_G ‖u − v‖² on probes.
    pub wiener_lipschitz: f64,
}

impl NoiseCertificate {
    /// Growth constants ordered in p (split certificates would break
    /// the moment interpolation downstream).
    pub fn growth_nondecreasing(&self) -> bool {
        let mut sorted = self.growth.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        sorted.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12)
    }

    pub fn write_text(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        self.coercivity.write_text(out)?;
        writeln!(out, "wiener_lipschitz = {}", fmt_g17(self.wiener_lipschitz))?;
        writeln!(out, "jump_lipschitz = {}", fmt_g17(self.jump_lipschitz))?;
        for (p, c) in &self.growth {
            writeln!(out, "growth_c[{p}] = {}", fmt_g17(*c))?;
        }
        Ok(())
    }
}

/// Probe states for the growth and Lipschitz estimates: the origin,
/// scaled single modes, the h₀ direction, and random states in the
/// closed unit ball of H.
fn growth_probes(model: &NoiseModel, basis: &SpectralBasis, count: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::Rng;
    let n = basis.len();
    let mut probes = Vec::new();
    probes.push(vec![0.0; n]);
    for i in 0..n {
        for amp in [0.25, 0.5, 1.0] {
            let mut c = vec![0.0; n];
            c[i] = amp;
            probes.push(c);
        }
    }
    let h = model.jumps.f_direction(&vec![0.0; n]);
    let hn: f64 = h.iter().map(|x| x * x).sum::<f64>().sqrt();
    if hn > 0.0 {
        probes.push(h.iter().map(|x| x / hn).collect());
        probes.push(h.iter().map(|x| -x / hn).collect());
    }
    let mut rng = path_rng(seed, 0, StreamRole::Probes);
    for _ in 0..count {
        let mut c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1.0 {
            for x in c.iter_mut() {
                *x /= norm;
            }
        }
        probes.push(c);
    }
    probes
}

/// Certifies the full noise model against the basis and operators:
/// coercivity sweep for the Wiener part, empirical maxima for the
/// growth and Lipschitz constants of both parts.
pub fn certify_noise(
    model: &NoiseModel,
    basis: &SpectralBasis,
    operators: &OperatorTriple,
    probes: usize,
    seed: u64,
) -> Result<NoiseCertificate> {
    if probes < 100 {
        return Err(Error::Contract(
            "noise certification needs at least 100 probes".into(),
        ));
    }
    model.validate()?;
    operators.check_basis(basis)?;
    let op = model.assemble_wiener(basis)?;
    let coercivity = certify_coercivity(&op, basis, model.jumps.gamma, probes, seed)?;

    let n = basis.len();
    let probe_coeffs = growth_probes(model, basis, probes, seed);
    let states: Vec<GalerkinState> = probe_coeffs
        .iter()
        .map(|c| basis.state(c.clone(), 0.0))
        .collect();

    let mut growth = Vec::new();
    for p in model.jumps.moment_orders() {
        let mp = model.jumps.mu_abs_moment_total(p);
        let mut cp = 0.0f64;
        for u in &probe_coeffs {
            let dir = model.jumps.f_direction(u);
            let fd: f64 = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            let un: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            cp = cp.max(mp * fd.powf(p) / (1.0 + un.powf(p)));
        }
        growth.push((p, cp));
    }

    let m2 = model.jumps.mu_abs_moment_total(2.0);
    let mut jump_lipschitz = 0.0f64;
    let mut wiener_lipschitz = 0.0f64;
    for w in states.windows(2) {
        let (u, v) = (&w[0], &w[1]);
        let mut diff = u.clone();
        diff.axpy(-1.0, v);
        let dh = diff.norm_h_sq();
        let dv = norm_dirichlet_sq(basis, &diff);
        if dh > 1e-14 {
            let fu = model.jumps.f_direction(u.coeffs());
            let fv = model.jumps.f_direction(v.coeffs());
            let dd: f64 = fu.iter().zip(&fv).map(|(a, b)| (a - b) * (a - b)).sum();
            jump_lipschitz = jump_lipschitz.max(m2 * dd / dh);
        }
        if dv > 1e-14 {
            wiener_lipschitz = wiener_lipschitz.max(op.hs_diff_sq(u, v, n) / dv);
        }
    }

    Ok(NoiseCertificate {
        coercivity,
        growth,
        jump_lipschitz,
        wiener_lipschitz,
    })
}
