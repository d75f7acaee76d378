//! Orthonormal H-basis of trigonometric eigenmodes on the periodic box.
//!
//! Velocity and magnetic blocks use divergence-free vector modes
//! (polarization orthogonal to the wavevector), the temperature block
//! scalar modes. Every mode is an eigenfunction of the block's
//! Stokes/Laplace-type operator, so the Dirichlet form is diagonal with
//! the stored eigenvalues. The zero wavevector is excluded throughout:
//! mean-free fields keep every eigenvalue strictly positive.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::Write;

use crate::domain::{BoxDomain, LocalWindow};
use crate::error::{Error, Result};
use crate::state::GalerkinState;
use crate::system::{Block, SystemSpec};
use crate::util::{fmt_g17, KahanSum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Cos,
    Sin,
}

impl Phase {
    pub fn apply(self, arg: f64) -> f64 {
        match self {
            Phase::Cos => arg.cos(),
            Phase::Sin => arg.sin(),
        }
    }

    /// Derivative with respect to the argument: cos' = -sin, sin' = cos.
    pub fn derivative(self, arg: f64) -> f64 {
        match self {
            Phase::Cos => -arg.sin(),
            Phase::Sin => arg.cos(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::Cos => "cos",
            Phase::Sin => "sin",
        }
    }
}

/// One basis mode: `amp · trig(κ·x) · pol` on its block's components
/// (scalar `amp · trig(κ·x)` for temperature).
#[derive(Clone, Debug)]
pub struct Mode {
    pub block: Block,
    /// Integer wavevector; the physical frequency is `freq`.
    pub k: [i64; 3],
    /// 2π k_a / L_a per axis.
    pub freq: [f64; 3],
    pub phase: Phase,
    /// Unit polarization, orthogonal to `freq`; zero for temperature.
    pub pol: [f64; 3],
    pub pol_index: usize,
    /// Amplitude making the mode H-orthonormal (block weight included).
    pub amp: f64,
    /// Eigenvalue of the generating operator.
    pub lambda: f64,
}

impl Mode {
    pub fn scalar(&self, x: &[f64; 3]) -> f64 {
        self.amp * self.phase.apply(self.arg(x))
    }

    /// Scalar factor of ∂_axis: amp · trig'(κ·x) · κ_axis.
    pub fn scalar_derivative(&self, x: &[f64; 3], axis: usize) -> f64 {
        self.amp * self.phase.derivative(self.arg(x)) * self.freq[axis]
    }

    fn arg(&self, x: &[f64; 3]) -> f64 {
        self.freq[0] * x[0] + self.freq[1] * x[1] + self.freq[2] * x[2]
    }

    pub fn freq_norm_sq(&self) -> f64 {
        self.freq.iter().map(|f| f * f).sum()
    }

    fn sort_key(&self) -> (f64, Block, [i64; 3], usize, Phase) {
        (self.lambda, self.block, self.k, self.pol_index, self.phase)
    }
}

/// A field sampled on the quadrature grid, one vector per component.
#[derive(Clone, Debug)]
pub struct GridField {
    pub comps: Vec<Vec<f64>>,
}

impl GridField {
    pub fn zeros(domain: &BoxDomain, comp_count: usize) -> Self {
        Self {
            comps: vec![vec![0.0; domain.grid_len()]; comp_count],
        }
    }

    pub fn from_fn(
        domain: &BoxDomain,
        comp_count: usize,
        f: impl Fn(&[f64; 3], usize) -> f64,
    ) -> Self {
        let mut field = Self::zeros(domain, comp_count);
        for (idx, x) in domain.grid_points().enumerate() {
            for (c, comp) in field.comps.iter_mut().enumerate() {
                comp[idx] = f(&x, c);
            }
        }
        field
    }

    pub fn comp_count(&self) -> usize {
        self.comps.len()
    }
}

/// The orthonormal basis `{e_1, ..., e_N}` with eigenvalues of the
/// generating operator, ordered by nondecreasing eigenvalue (ties:
/// block, then lexicographic wavevector, then polarization, then
/// cos before sin).
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    domain: BoxDomain,
    system: SystemSpec,
    modes: Vec<Mode>,
    lambdas: Vec<f64>,
    /// Sobolev order m defining U (weights λ_i^m); m > d/2 + 1.
    m: f64,
    id: u64,
}

/// Builds the basis of the `n` lowest eigenmodes for the given system.
///
/// Fails when the quadrature resolution cannot integrate pairwise mode
/// products exactly (aliasing), or when `m` is at or below d/2 + 1.
pub fn build_basis(
    domain: &BoxDomain,
    system: &SystemSpec,
    n: usize,
    m: f64,
) -> Result<SpectralBasis> {
    if n == 0 {
        return Err(Error::Basis("requested empty basis".into()));
    }
    let d = domain.d();
    if !(m > d as f64 / 2.0 + 1.0) {
        return Err(Error::Basis(format!(
            "sobolev order m = {m} must exceed d/2 + 1 = {}",
            d as f64 / 2.0 + 1.0
        )));
    }
    let system = system.clone().validated(d)?;
    let max_side = domain.sides().iter().cloned().fold(f64::MIN, f64::max);

    let mut kk: i64 = 1;
    let modes = loop {
        let mut candidates = enumerate_modes(domain, &system, kk);
        candidates.sort_by(|a, b| {
            let (la, ba, ka, pa, fa) = a.sort_key();
            let (lb, bb, kb, pb, fb) = b.sort_key();
            la.total_cmp(&lb)
                .then(ba.cmp(&bb))
                .then(ka.cmp(&kb))
                .then(pa.cmp(&pb))
                .then(fa.cmp(&fb))
        });
        // Any mode outside the enumerated cube has |κ|² at least this
        // large, hence an eigenvalue at least lambda_floor in every
        // block; once n enumerated modes sit below that floor the
        // selection is complete.
        let q_sq = ((kk + 1) as f64 * 2.0 * std::f64::consts::PI / max_side).powi(2);
        let lambda_floor = system
            .blocks()
            .iter()
            .map(|&b| block_lambda(&system, b, q_sq))
            .fold(f64::MAX, f64::min);
        if candidates.len() >= n && candidates[n - 1].lambda <= lambda_floor {
            candidates.truncate(n);
            break candidates;
        }
        kk += 1;
        if kk > 64 {
            return Err(Error::Basis("basis enumeration failed to converge".into()));
        }
    };

    let kmax = modes
        .iter()
        .flat_map(|mode| mode.k.iter().map(|k| k.abs()))
        .max()
        .unwrap_or(0);
    if !domain.resolves_products(kmax, 2) {
        return Err(Error::Aliasing(format!(
            "resolution {} cannot integrate mode pairs up to wavenumber {kmax} \
             (need resolution > {})",
            domain.resolution(),
            2 * kmax
        )));
    }

    let lambdas: Vec<f64> = modes.iter().map(|mode| mode.lambda).collect();
    let id = basis_id(domain, &system, &modes, m);
    Ok(SpectralBasis {
        domain: domain.clone(),
        system,
        modes,
        lambdas,
        m,
        id,
    })
}

fn block_lambda(system: &SystemSpec, block: Block, freq_sq: f64) -> f64 {
    match block {
        Block::Velocity => freq_sq / system.re,
        Block::Magnetic => freq_sq / system.rm,
        Block::Temperature => 1.0 + system.kappa_thermal * freq_sq,
    }
}

fn block_amp(system: &SystemSpec, block: Block, volume: f64) -> f64 {
    (2.0 / (system.h_weight(block) * volume)).sqrt()
}

/// All modes with integer wavevector in the cube |k_a| <= kk, canonical
/// half-lattice only (the first nonzero entry positive), zero excluded.
fn enumerate_modes(domain: &BoxDomain, system: &SystemSpec, kk: i64) -> Vec<Mode> {
    let d = domain.d();
    let volume = domain.volume();
    let mut modes = Vec::new();
    let mut k = [0i64; 3];
    let krange = |_axis: usize| -kk..=kk;
    for k0 in krange(0) {
        k[0] = k0;
        for k1 in krange(1) {
            k[1] = k1;
            let k2s: Vec<i64> = if d == 3 { krange(2).collect() } else { vec![0] };
            for &k2 in &k2s {
                k[2] = k2;
                if !is_canonical(&k, d) {
                    continue;
                }
                let mut freq = [0.0; 3];
                for a in 0..d {
                    freq[a] = 2.0 * std::f64::consts::PI * k[a] as f64 / domain.sides()[a];
                }
                let freq_sq: f64 = freq.iter().map(|f| f * f).sum();
                for &block in system.blocks() {
                    let lambda = block_lambda(system, block, freq_sq);
                    let amp = block_amp(system, block, volume);
                    let pols: Vec<[f64; 3]> = match block {
                        Block::Temperature => vec![[0.0; 3]],
                        _ => polarizations(&freq, d),
                    };
                    for (pol_index, &pol) in pols.iter().enumerate() {
                        for phase in [Phase::Cos, Phase::Sin] {
                            modes.push(Mode {
                                block,
                                k,
                                freq,
                                phase,
                                pol,
                                pol_index,
                                amp,
                                lambda,
                            });
                        }
                    }
                }
            }
        }
    }
    modes
}

fn is_canonical(k: &[i64; 3], d: usize) -> bool {
    for a in 0..d {
        if k[a] > 0 {
            return true;
        }
        if k[a] < 0 {
            return false;
        }
    }
    false
}

/// Unit polarizations orthogonal to the frequency vector: one in 2-D
/// (the rotated frequency direction), two in 3-D (a deterministic
/// orthonormal pair from cross products with a fixed axis).
fn polarizations(freq: &[f64; 3], d: usize) -> Vec<[f64; 3]> {
    let norm = freq.iter().map(|f| f * f).sum::<f64>().sqrt();
    assert!(norm > 0.0);
    if d == 2 {
        vec![[-freq[1] / norm, freq[0] / norm, 0.0]]
    } else {
        let axis = if freq[0].abs() < 1e-12 && freq[1].abs() < 1e-12 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 0.0, 1.0]
        };
        let e1 = normalize(cross(freq, &axis));
        let e2 = normalize(cross(freq, &e1));
        vec![e1, e2]
    }
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn basis_id(domain: &BoxDomain, system: &SystemSpec, modes: &[Mode], m: f64) -> u64 {
    let mut h = DefaultHasher::new();
    system.kind.name().hash(&mut h);
    domain.d().hash(&mut h);
    domain.resolution().hash(&mut h);
    for s in domain.sides() {
        s.to_bits().hash(&mut h);
    }
    m.to_bits().hash(&mut h);
    for mode in modes {
        mode.block.hash(&mut h);
        mode.k.hash(&mut h);
        mode.pol_index.hash(&mut h);
        mode.phase.hash(&mut h);
    }
    h.finish()
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn mode(&self, i: usize) -> &Mode {
        &self.modes[i]
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn lambda(&self, i: usize) -> f64 {
        self.lambdas[i]
    }

    pub fn lambda_max(&self, n: usize) -> f64 {
        self.lambdas[..n].iter().cloned().fold(0.0, f64::max)
    }

    pub fn sobolev_order(&self) -> f64 {
        self.m
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn comp_count(&self) -> usize {
        self.system.comp_count(self.domain.d())
    }

    /// Largest per-axis integer wavenumber present in the basis.
    pub fn max_axis_wavenumber(&self) -> i64 {
        self.modes
            .iter()
            .flat_map(|mode| mode.k.iter().map(|k| k.abs()))
            .max()
            .unwrap_or(0)
    }

    /// State with coefficient vector `coeffs` at time `t`.
    pub fn state(&self, coeffs: Vec<f64>, t: f64) -> GalerkinState {
        GalerkinState::new(self, coeffs, t)
    }

    /// Unit coordinate state e_i at level n.
    pub fn unit_state(&self, i: usize, n: usize) -> GalerkinState {
        let mut coeffs = vec![0.0; n];
        coeffs[i] = 1.0;
        self.state(coeffs, 0.0)
    }

    /// Samples the mode on the grid, adding `scale` times the mode into
    /// the block components of `out`.
    fn add_mode_to_field(&self, i: usize, scale: f64, out: &mut GridField) {
        let mode = &self.modes[i];
        let d = self.domain.d();
        let range = self.system.comp_range(d, mode.block);
        for (idx, x) in self.domain.grid_points().enumerate() {
            let s = scale * mode.scalar(&x);
            match mode.block {
                Block::Temperature => out.comps[range.start][idx] += s,
                _ => {
                    for (off, c) in range.clone().enumerate() {
                        out.comps[c][idx] += s * mode.pol[off];
                    }
                }
            }
        }
    }

    /// Reconstructs the grid field of a coefficient vector.
    pub fn reconstruct(&self, coeffs: &[f64]) -> GridField {
        let mut field = GridField::zeros(&self.domain, self.comp_count());
        for (i, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                self.add_mode_to_field(i, c, &mut field);
            }
        }
        field
    }

    pub fn mode_field(&self, i: usize) -> GridField {
        let mut field = GridField::zeros(&self.domain, self.comp_count());
        self.add_mode_to_field(i, 1.0, &mut field);
        field
    }

    /// H inner product of two grid fields (block weights included).
    pub fn h_inner_fields(&self, a: &GridField, b: &GridField) -> f64 {
        let d = self.domain.d();
        let w = self.domain.cell_weight();
        let mut acc = KahanSum::new();
        for &block in self.system.blocks() {
            let hw = self.system.h_weight(block);
            for c in self.system.comp_range(d, block) {
                for (x, y) in a.comps[c].iter().zip(&b.comps[c]) {
                    acc.add(hw * x * y);
                }
            }
        }
        w * acc.value()
    }

    /// P_n of a grid field: coordinate i is the duality pairing
    /// (H inner product) against e_i.
    pub fn project(&self, field: &GridField, n: usize) -> Result<GalerkinState> {
        if n > self.len() {
            return Err(Error::Contract(format!(
                "projection level {n} exceeds basis size {}",
                self.len()
            )));
        }
        if field.comp_count() != self.comp_count() {
            return Err(Error::Contract(format!(
                "field has {} components, basis expects {}",
                field.comp_count(),
                self.comp_count()
            )));
        }
        let coeffs = (0..n)
            .map(|i| self.h_inner_fields(field, &self.mode_field(i)))
            .collect();
        Ok(self.state(coeffs, 0.0))
    }

    /// P_n in coordinates: truncation.
    pub fn project_state(&self, state: &GalerkinState, n: usize) -> Result<GalerkinState> {
        state.check_basis(self)?;
        let mut coeffs = state.coeffs().to_vec();
        coeffs.truncate(n);
        Ok(self.state(coeffs, state.time()))
    }

    /// Basis metadata records: `index, block, wavevector, eigenvalue`.
    pub fn export_metadata(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "# index, block, wavevector, eigenvalue")?;
        for (i, mode) in self.modes.iter().enumerate() {
            let d = self.domain.d();
            let kvec = mode.k[..d]
                .iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            writeln!(
                out,
                "{}, {}, {}, {}",
                i + 1,
                mode.block.name(),
                kvec,
                fmt_g17(mode.lambda)
            )?;
        }
        Ok(())
    }
}

/// Space-time seminorm p_{T,R}: the square root of the time integral
/// (trapezoid) of ∫_{O_R} |u|² dx (rectangle rule over grid points in
/// the window, plain component sum).
pub fn seminorm_local(
    domain: &BoxDomain,
    times: &[f64],
    fields: &[GridField],
    window: &LocalWindow,
) -> Result<f64> {
    if times.is_empty() || times.len() != fields.len() {
        return Err(Error::Contract(
            "seminorm needs matching, nonempty times and fields".into(),
        ));
    }
    let d = domain.d();
    let w = domain.cell_weight();
    let inside: Vec<usize> = domain
        .grid_points()
        .enumerate()
        .filter(|(_, x)| window.contains(d, x))
        .map(|(i, _)| i)
        .collect();
    let energy: Vec<f64> = fields
        .iter()
        .map(|f| {
            let mut acc = KahanSum::new();
            for comp in &f.comps {
                for &idx in &inside {
                    acc.add(comp[idx] * comp[idx]);
                }
            }
            w * acc.value()
        })
        .collect();
    let mut acc = KahanSum::new();
    for i in 1..times.len() {
        let dt = times[i] - times[i - 1];
        acc.add(0.5 * dt * (energy[i] + energy[i - 1]));
    }
    Ok(acc.value().max(0.0).sqrt())
}
