//! The operator triple (A, B, R) on a Galerkin level, the smooth
//! truncation of the convection term, and randomized assumption
//! certificates.

use std::io::Write;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::basis::SpectralBasis;
use crate::error::{Error, Result};
use crate::state::{
    self, inner_h, norm_u_dual, norm_v, norm_v_dual, GalerkinState,
};
use crate::system::{Block, SystemKind, SystemSpec};
use crate::tensor::{assemble_tensor, TrilinearTensor};
use crate::util::fmt_g17;

/// Velocity/temperature coupling pair of the buoyancy operator: modes
/// share wavevector and phase; `coeff` is minus the buoyancy component
/// of the velocity polarization.
#[derive(Clone, Copy, Debug)]
pub struct CouplingPair {
    pub velocity: u32,
    pub temperature: u32,
    pub coeff: f64,
}

/// (A, B, R) in coordinates: A acts diagonally with the basis
/// eigenvalues, B through the sparse convection tensor with a smooth
/// high-norm cutoff, R through sparse block coupling (zero for
/// Navier-Stokes and MHD).
#[derive(Clone, Debug)]
pub struct OperatorTriple {
    basis_id: u64,
    tensor: TrilinearTensor,
    coupling: Vec<CouplingPair>,
}

/// Smooth cutoff θ_n(r): identically 1 for r ≤ n, identically 0 for
/// r ≥ n+1, strictly decreasing between, value 1/2 at the midpoint.
/// Built from the standard bump f(s) = exp(-1/s)·[s>0].
pub fn smooth_cutoff(n: f64, r: f64) -> f64 {
    fn bump(s: f64) -> f64 {
        if s > 0.0 {
            (-1.0 / s).exp()
        } else {
            0.0
        }
    }
    let up = bump(n + 1.0 - r);
    let down = bump(r - n);
    if up == 0.0 {
        return 0.0;
    }
    up / (up + down)
}

pub fn assemble_triple(basis: &SpectralBasis, spec: &SystemSpec) -> Result<OperatorTriple> {
    let tensor = assemble_tensor(basis, spec)?;
    let coupling = assemble_coupling(basis);
    Ok(OperatorTriple {
        basis_id: basis.id(),
        tensor,
        coupling,
    })
}

/// Triple with the convection tensor empty: pure Stokes-type dynamics.
pub fn assemble_stokes_triple(basis: &SpectralBasis) -> OperatorTriple {
    OperatorTriple {
        basis_id: basis.id(),
        tensor: TrilinearTensor::empty(basis),
        coupling: assemble_coupling(basis),
    }
}

fn assemble_coupling(basis: &SpectralBasis) -> Vec<CouplingPair> {
    if basis.system().kind != SystemKind::Boussinesq {
        return Vec::new();
    }
    let axis = basis.system().buoyancy_axis;
    let mut pairs = Vec::new();
    for (i, mi) in basis.modes().iter().enumerate() {
        if mi.block != Block::Velocity {
            continue;
        }
        for (j, mj) in basis.modes().iter().enumerate() {
            if mj.block == Block::Temperature && mj.k == mi.k && mj.phase == mi.phase {
                let coeff = -mi.pol[axis];
                if coeff != 0.0 {
                    pairs.push(CouplingPair {
                        velocity: i as u32,
                        temperature: j as u32,
                        coeff,
                    });
                }
            }
        }
    }
    pairs
}

impl OperatorTriple {
    pub fn tensor(&self) -> &TrilinearTensor {
        &self.tensor
    }

    pub fn tensor_mut(&mut self) -> &mut TrilinearTensor {
        &mut self.tensor
    }

    pub fn coupling(&self) -> &[CouplingPair] {
        &self.coupling
    }

    pub fn check_basis(&self, basis: &SpectralBasis) -> Result<()> {
        if self.basis_id != basis.id() {
            return Err(Error::Contract(
                "operator triple and basis come from different constructions".into(),
            ));
        }
        Ok(())
    }

    /// A u: diagonal eigenvalue action. ⟨Au, v⟩ then reproduces the
    /// Dirichlet form bitwise because both group the product as
    /// (λ_i·u_i)·v_i.
    pub fn apply_a(&self, basis: &SpectralBasis, u: &GalerkinState) -> Result<GalerkinState> {
        self.check_basis(basis)?;
        u.check_basis(basis)?;
        let coeffs = u
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, &x)| basis.lambda(i) * x)
            .collect();
        Ok(basis.state(coeffs, u.time()))
    }

    /// Raw bilinear B(u, v) truncated to H_n.
    pub fn apply_b(
        &self,
        basis: &SpectralBasis,
        u: &GalerkinState,
        v: &GalerkinState,
        n: usize,
    ) -> Result<GalerkinState> {
        self.tensor.apply(basis, u, v, n)
    }

    /// Galerkin convection B_n(u) = θ_cutoff(|u|_{U'}) · P_n B(u, u).
    ///
    /// `cutoff_level` is the index of the smooth cutoff (the Galerkin
    /// level in the compactness argument); `None` disables truncation.
    pub fn apply_b_galerkin(
        &self,
        basis: &SpectralBasis,
        u: &GalerkinState,
        n: usize,
        cutoff_level: Option<f64>,
    ) -> Result<GalerkinState> {
        let mut out = self.tensor.apply(basis, u, u, n)?;
        if let Some(level) = cutoff_level {
            let theta = smooth_cutoff(level, norm_u_dual(basis, u));
            out.scale(theta);
        }
        Ok(out)
    }

    /// R u: zero for NSE/MHD; for Boussinesq the left-hand operator
    /// (−ϑ e_d, −u_d) in coordinates.
    pub fn apply_r(&self, basis: &SpectralBasis, u: &GalerkinState) -> Result<GalerkinState> {
        self.check_basis(basis)?;
        u.check_basis(basis)?;
        let n = u.n();
        let mut out = vec![0.0; n];
        let x = u.coeffs();
        for pair in &self.coupling {
            let (v, t) = (pair.velocity as usize, pair.temperature as usize);
            if v < n && t < n {
                out[v] += pair.coeff * x[t];
                out[t] += pair.coeff * x[v];
            }
        }
        Ok(basis.state(out, u.time()))
    }
}

/// One certified quantity with its configured bound.
#[derive(Clone, Debug)]
pub struct CheckItem {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl CheckItem {
    fn new(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            pass: value <= bound,
        }
    }
}

/// Randomized-probe certificate over the operator triple.
#[derive(Clone, Debug)]
pub struct AssumptionReport {
    pub items: Vec<CheckItem>,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub lipschitz_ratio: f64,
    pub antisymmetry_residual: f64,
    pub trials: usize,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|item| item.pass)
    }

    pub fn item(&self, name: &str) -> Option<&CheckItem> {
        self.items.iter().find(|item| item.name == name)
    }

    /// One key/value line per certified quantity.
    pub fn write_text(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "trials = {}", self.trials)?;
        for item in &self.items {
            writeln!(
                out,
                "{} = {} (bound {}): {}",
                item.name,
                fmt_g17(item.value),
                fmt_g17(item.bound),
                if item.pass { "pass" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// Tolerances for the assumption certificates.
#[derive(Clone, Debug)]
pub struct CheckTolerances {
    pub antisymmetry: f64,
    pub energy_neutrality: f64,
    /// Upper bound accepted for c₃ (1 for Boussinesq per the shipped
    /// coupling, 0 otherwise).
    pub r_bound_slack: f64,
}

impl Default for CheckTolerances {
    fn default() -> Self {
        Self {
            antisymmetry: 1e-10,
            energy_neutrality: 1e-10,
            r_bound_slack: 1e-9,
        }
    }
}

/// Draws a probe state: dense, low-band, high-band, or single-mode
/// coefficients, scaled to a moderate amplitude.
fn probe_state(basis: &SpectralBasis, n: usize, rng: &mut ChaCha8Rng, trial: usize) -> GalerkinState {
    let mut coeffs = vec![0.0; n];
    match trial % 4 {
        0 => {
            for c in coeffs.iter_mut() {
                *c = rng.gen_range(-1.0..1.0);
            }
        }
        1 => {
            for c in coeffs.iter_mut().take((n / 2).max(1)) {
                *c = rng.gen_range(-1.0..1.0);
            }
        }
        2 => {
            for c in coeffs.iter_mut().skip(n / 2) {
                *c = rng.gen_range(-1.0..1.0);
            }
        }
        _ => {
            let i = rng.gen_range(0..n);
            coeffs[i] = rng.gen_range(0.25..2.0);
        }
    }
    let amp = *[0.5, 1.0, 4.0].choose(rng).unwrap();
    for c in coeffs.iter_mut() {
        *c *= amp;
    }
    basis.state(coeffs, 0.0)
}

/// Certifies the structural operator assumptions on random probes:
/// antisymmetry and energy neutrality of B, the exact A-identity, the
/// continuity constants c₁ (V'-norm) and c₂ (U'-norm against H), the
/// local Lipschitz ratio on a ball, and the one-sided R bound c₃.
pub fn check_assumptions(
    triple: &OperatorTriple,
    basis: &SpectralBasis,
    trials: usize,
    seed: u64,
    tol: &CheckTolerances,
) -> Result<AssumptionReport> {
    if trials == 0 {
        return Err(Error::Contract("assumption check needs trials >= 1".into()));
    }
    triple.check_basis(basis)?;
    let n = basis.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut anti = 0.0f64;
    let mut neutral = 0.0f64;
    let mut a_residual = 0.0f64;
    let mut c1 = 0.0f64;
    let mut c2 = 0.0f64;
    let mut c3 = 0.0f64;

    // Pass 1: pairwise residuals and continuity constants.
    for trial in 0..trials {
        let u = probe_state(basis, n, &mut rng, trial);
        let v = probe_state(basis, n, &mut rng, trial + 1);
        let w = probe_state(basis, n, &mut rng, trial + 2);
        let buv = triple.apply_b(basis, &u, &v, n)?;
        let buw = triple.apply_b(basis, &u, &w, n)?;
        let scale = 1.0 + u.norm_h() * v.norm_h() * w.norm_h();
        anti = anti.max((inner_h(&buv, &w) + inner_h(&buw, &v)).abs() / scale);
        let scale2 = 1.0 + u.norm_h() * v.norm_h() * v.norm_h();
        neutral = neutral.max(inner_h(&buv, &v).abs() / scale2);

        // ⟨Au, v⟩ vs ((u, v)): bitwise identical grouping.
        let au = triple.apply_a(basis, &u)?;
        a_residual = a_residual.max((inner_h(&au, &v) - state::inner_dirichlet(basis, &u, &v)).abs());

        let (nu, nv) = (norm_v(basis, &u), norm_v(basis, &v));
        if nu > 0.0 && nv > 0.0 {
            c1 = c1.max(norm_v_dual(basis, &buv) / (nu * nv));
        }
        let (hu, hv) = (u.norm_h(), v.norm_h());
        if hu > 0.0 && hv > 0.0 {
            c2 = c2.max(norm_u_dual(basis, &buv) / (hu * hv));
        }

        let ru = triple.apply_r(basis, &u)?;
        let h2 = u.norm_h_sq();
        if h2 > 0.0 {
            c3 = c3.max(-inner_h(&ru, &u) / h2);
        }
    }
    c3 = c3.max(0.0);

    // Pass 2: local Lipschitz on the V-ball of radius r. The bilinear
    // split B(u,u)-B(ũ,ũ) = B(u-ũ,u) + B(ũ,u-ũ) is folded into the
    // operator-norm estimate first, so the certified ratio against
    // 2r·ĉ is a genuine consequence, not a lucky probe draw.
    let r_ball = 2.0;
    let mut pairs = Vec::new();
    for trial in 0..trials {
        let mut u = probe_state(basis, n, &mut rng, trial);
        let mut v = probe_state(basis, n, &mut rng, trial + 3);
        for s in [&mut u, &mut v] {
            let nv = norm_v(basis, s);
            if nv > r_ball {
                s.scale(r_ball / nv * 0.999);
            }
        }
        let mut diff = u.clone();
        diff.axpy(-1.0, &v);
        let b_du = triple.apply_b(basis, &diff, &u, n)?;
        let b_vd = triple.apply_b(basis, &v, &diff, n)?;
        let (nd, nu, nv2) = (norm_v(basis, &diff), norm_v(basis, &u), norm_v(basis, &v));
        if nd > 1e-12 {
            if nu > 0.0 {
                c1 = c1.max(norm_v_dual(basis, &b_du) / (nd * nu));
            }
            if nv2 > 0.0 {
                c1 = c1.max(norm_v_dual(basis, &b_vd) / (nv2 * nd));
            }
        }
        pairs.push((u, v));
    }
    let mut lipschitz_ratio = 0.0f64;
    if c1 > 0.0 {
        for (u, v) in &pairs {
            let buu = triple.apply_b(basis, u, u, n)?;
            let bvv = triple.apply_b(basis, v, v, n)?;
            let mut diff_b = buu;
            diff_b.axpy(-1.0, &bvv);
            let mut diff = u.clone();
            diff.axpy(-1.0, v);
            let nd = norm_v(basis, &diff);
            if nd > 1e-12 {
                lipschitz_ratio =
                    lipschitz_ratio.max(norm_v_dual(basis, &diff_b) / (2.0 * r_ball * c1 * nd));
            }
        }
    }

    let c3_bound = match basis.system().kind {
        SystemKind::Boussinesq => 1.0 + tol.r_bound_slack,
        _ => tol.r_bound_slack,
    };
    let items = vec![
        CheckItem::new("antisymmetry_residual", anti, tol.antisymmetry),
        CheckItem::new("energy_neutrality_residual", neutral, tol.energy_neutrality),
        CheckItem::new("a_identity_residual", a_residual, 0.0),
        CheckItem::new("c1_estimate_finite", if c1.is_finite() { 0.0 } else { 1.0 }, 0.5),
        CheckItem::new("c2_estimate_finite", if c2.is_finite() { 0.0 } else { 1.0 }, 0.5),
        CheckItem::new("local_lipschitz_ratio", lipschitz_ratio, 1.0 + 1e-9),
        CheckItem::new("r_one_sided_bound", c3, c3_bound),
    ];
    Ok(AssumptionReport {
        items,
        c1,
        c2,
        c3,
        lipschitz_ratio,
        antisymmetry_residual: anti,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_basis;
    use crate::domain::BoxDomain;
    use crate::state::norm_u_dual_sq;
    use approx::assert_relative_eq;

    fn setup(spec: &SystemSpec, n: usize) -> (SpectralBasis, OperatorTriple) {
        let dom = BoxDomain::standard(2).unwrap();
        let basis = build_basis(&dom, spec, n, 3.0).unwrap();
        let triple = assemble_triple(&basis, spec).unwrap();
        (basis, triple)
    }

    #[test]
    fn cutoff_plateaus_midpoint_and_frozen_values() {
        assert_eq!(smooth_cutoff(2.0, 1.0), 1.0);
        assert_eq!(smooth_cutoff(2.0, 2.0), 1.0);
        assert_eq!(smooth_cutoff(2.0, 3.0), 0.0);
        assert_eq!(smooth_cutoff(2.0, 5.0), 0.0);
        assert_eq!(smooth_cutoff(2.0, 2.5), 0.5);
        assert_eq!(smooth_cutoff(4.0, 4.5), 0.5);
        assert_relative_eq!(smooth_cutoff(2.0, 2.25), 0.935030830871336, epsilon = 1e-14);
        assert_relative_eq!(
            smooth_cutoff(2.0, 2.75),
            0.06496916912866406,
            epsilon = 1e-14
        );
    }

    #[test]
    fn cutoff_monotone_and_complementary() {
        let n = 3.0;
        let mut prev = 1.0;
        for i in 0..=100 {
            let r = n + i as f64 / 100.0;
            let th = smooth_cutoff(n, r);
            assert!(th <= prev + 1e-15);
            prev = th;
            // Reflection symmetry of the bump quotient.
            let mirror = smooth_cutoff(n, n + 1.0 - (r - n));
            assert_relative_eq!(th + mirror, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn a_identity_bitwise() {
        let (basis, triple) = setup(&SystemSpec::nse(), 8);
        let u = basis.state(vec![0.3, -1.7, 2.1, 0.9, -0.2, 1.3, -0.8, 0.6], 0.0);
        let v = basis.state(vec![1.1, 0.4, -0.6, 2.2, 0.7, -1.9, 0.05, -0.3], 0.0);
        let au = triple.apply_a(&basis, &u).unwrap();
        let lhs = inner_h(&au, &v);
        let rhs = state::inner_dirichlet(&basis, &u, &v);
        assert_eq!(lhs.to_bits(), rhs.to_bits());
    }

    #[test]
    fn a_is_diagonal_in_coordinates() {
        let (basis, triple) = setup(&SystemSpec::nse(), 8);
        for i in 0..8 {
            let e = basis.unit_state(i, 8);
            let ae = triple.apply_a(&basis, &e).unwrap();
            for (j, &c) in ae.coeffs().iter().enumerate() {
                let expect = if j == i { basis.lambda(i) } else { 0.0 };
                assert_eq!(c, expect);
            }
        }
    }

    #[test]
    fn galerkin_convection_truncates_high_norm_states() {
        let (basis, triple) = setup(&SystemSpec::nse(), 8);
        let mut u = basis.state(vec![0.5; 8], 0.0);
        // Small state: cutoff inactive, B_n = P_n B(u,u).
        let raw = triple.apply_b(&basis, &u, &u, 8).unwrap();
        let bn = triple.apply_b_galerkin(&basis, &u, 8, Some(8.0)).unwrap();
        for (a, b) in raw.coeffs().iter().zip(bn.coeffs()) {
            assert_eq!(a, b);
        }
        // Inflate until |u|_{U'} > level + 1: convection vanishes.
        let target = 10.0f64;
        let cur = norm_u_dual_sq(&basis, &u).sqrt();
        u.scale(target / cur);
        let bn = triple.apply_b_galerkin(&basis, &u, 8, Some(8.0)).unwrap();
        assert!(bn.coeffs().iter().all(|c| *c == 0.0));
        // Without a cutoff the quadratic form explodes quadratically.
        let raw = triple.apply_b(&basis, &u, &u, 8).unwrap();
        assert!(raw.norm_h() > 0.0);
    }

    #[test]
    fn nse_and_mhd_have_zero_r() {
        for spec in [SystemSpec::nse(), SystemSpec::mhd()] {
            let (basis, triple) = setup(&spec, 8);
            let u = basis.state(vec![1.0; 8], 0.0);
            let ru = triple.apply_r(&basis, &u).unwrap();
            assert!(ru.coeffs().iter().all(|c| *c == 0.0));
        }
    }

    #[test]
    fn boussinesq_r_structure_and_sharp_bound() {
        let spec = SystemSpec::boussinesq();
        let (basis, triple) = setup(&spec, 24);
        // Velocity-only state: R(φ) has zero temperature... the
        // contract is the reverse: u = 0 forces zero temperature block
        // of R(φ). Build a temperature-only state.
        let temp_idx = (0..24)
            .find(|&i| basis.mode(i).block == Block::Temperature)
            .unwrap();
        let phi = basis.unit_state(temp_idx, 24);
        let r = triple.apply_r(&basis, &phi).unwrap();
        for (i, &c) in r.coeffs().iter().enumerate() {
            if basis.mode(i).block == Block::Temperature {
                assert_eq!(c, 0.0, "temperature block must vanish when u = 0");
            }
        }
        // Equality case of the one-sided bound: pair a velocity mode
        // whose polarization is the buoyancy axis with its temperature
        // partner. k = (1,0): pol = (0,1) = e_d.
        let vel = (0..24)
            .find(|&i| {
                let m = basis.mode(i);
                m.block == Block::Velocity && m.k == [1, 0, 0] && m.phase == crate::basis::Phase::Cos
            })
            .unwrap();
        let tmp = (0..24)
            .find(|&i| {
                let m = basis.mode(i);
                m.block == Block::Temperature
                    && m.k == [1, 0, 0]
                    && m.phase == crate::basis::Phase::Cos
            })
            .unwrap();
        let mut coeffs = vec![0.0; 24];
        coeffs[vel] = 1.0;
        coeffs[tmp] = 1.0;
        let phi = basis.state(coeffs, 0.0);
        let r = triple.apply_r(&basis, &phi).unwrap();
        let pairing = inner_h(&r, &phi);
        assert_relative_eq!(pairing, -2.0, epsilon = 1e-14);
        assert_relative_eq!(phi.norm_h_sq(), 2.0, epsilon = 1e-14);
        // -⟨Rφ,φ⟩ = |φ|_H²: the bound is attained, not slack.
    }

    #[test]
    fn boussinesq_r_bound_on_random_probes() {
        let spec = SystemSpec::boussinesq();
        let (basis, triple) = setup(&spec, 24);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let coeffs: Vec<f64> = (0..24).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let phi = basis.state(coeffs, 0.0);
            let r = triple.apply_r(&basis, &phi).unwrap();
            assert!(inner_h(&r, &phi) >= -phi.norm_h_sq() - 1e-12);
        }
    }

    #[test]
    fn certificates_pass_for_all_shipped_systems() {
        for spec in [SystemSpec::nse(), SystemSpec::mhd(), SystemSpec::boussinesq()] {
            let (basis, triple) = setup(&spec, 16);
            let report =
                check_assumptions(&triple, &basis, 200, 42, &CheckTolerances::default()).unwrap();
            assert!(
                report.all_pass(),
                "{}: {:?}",
                spec.kind.name(),
                report
                    .items
                    .iter()
                    .filter(|i| !i.pass)
                    .collect::<Vec<_>>()
            );
            assert!(report.c1 > 0.0 && report.c1.is_finite());
            assert!(report.c2 > 0.0 && report.c2.is_finite());
        }
    }

    #[test]
    fn stokes_only_triple_has_exactly_zero_b_residuals() {
        let dom = BoxDomain::standard(2).unwrap();
        let spec = SystemSpec::nse();
        let basis = build_basis(&dom, &spec, 8, 3.0).unwrap();
        let triple = assemble_stokes_triple(&basis);
        let report =
            check_assumptions(&triple, &basis, 50, 3, &CheckTolerances::default()).unwrap();
        assert_eq!(report.antisymmetry_residual, 0.0);
        assert_eq!(report.item("energy_neutrality_residual").unwrap().value, 0.0);
        assert_eq!(report.c1, 0.0);
        assert_eq!(report.lipschitz_ratio, 0.0);
    }

    #[test]
    fn scaling_tensor_doubles_c1() {
        let spec = SystemSpec::nse();
        let (basis, triple) = setup(&spec, 12);
        let report =
            check_assumptions(&triple, &basis, 100, 11, &CheckTolerances::default()).unwrap();
        let mut scaled = triple.clone();
        scaled.tensor_mut().scale_values(2.0);
        let report2 =
            check_assumptions(&scaled, &basis, 100, 11, &CheckTolerances::default()).unwrap();
        assert_relative_eq!(report2.c1, 2.0 * report.c1, max_relative = 0.01);
    }

    #[test]
    fn broken_antisymmetry_fault_detected() {
        let spec = SystemSpec::nse();
        let (basis, mut triple) = setup(&spec, 12);
        triple.tensor_mut().perturb_entries(4, 1e-3);
        let report =
            check_assumptions(&triple, &basis, 100, 9, &CheckTolerances::default()).unwrap();
        assert!(!report.all_pass());
        assert!(report.antisymmetry_residual > 1e-5);
    }

    #[test]
    fn report_text_lines_are_key_value() {
        let spec = SystemSpec::nse();
        let (basis, triple) = setup(&spec, 8);
        let report =
            check_assumptions(&triple, &basis, 20, 1, &CheckTolerances::default()).unwrap();
        let mut buf = Vec::new();
        report.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().count() >= 7);
        for line in text.lines() {
            assert!(line.contains('='), "line without key/value: {line}");
        }
    }
}
