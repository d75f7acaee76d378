//! Sparse trilinear convection tensor B_{ijk} = ⟨B(e_i, e_j), e_k⟩.
//!
//! Entries are evaluated in closed form: each mode is a product of a
//! polarization and a trig factor, so the integral of a triple product
//! reduces to eight complex-exponential terms, each contributing the
//! box volume exactly when its signed integer wavevectors cancel. The
//! only rounding is in the final few multiplications, which is what
//! lets non-interacting triads vanish exactly and the quadrature
//! oracle agree to near machine precision.

use std::io::Write;

use crate::basis::{Mode, Phase, SpectralBasis};
use crate::error::{Error, Result};
use crate::state::GalerkinState;
use crate::system::{Block, SystemKind, SystemSpec};
use crate::util::fmt_g17;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TensorEntry {
    pub i: u32,
    pub j: u32,
    pub k: u32,
    pub value: f64,
}

/// The convection tensor at level N, sparse over interacting triads.
#[derive(Clone, Debug)]
pub struct TrilinearTensor {
    level: usize,
    basis_id: u64,
    entries: Vec<TensorEntry>,
}

/// Block channels of the convection form: (advecting, advected,
/// test, weight). The weighted sum of plain convection integrals
/// over these channels reproduces the system's bilinear pairing.
fn channels(system: &SystemSpec) -> Vec<(Block, Block, Block, f64)> {
    use Block::{Magnetic as M, Temperature as T, Velocity as V};
    match system.kind {
        SystemKind::Nse => vec![(V, V, V, 1.0)],
        SystemKind::Mhd => vec![
            (V, V, V, 1.0),
            (M, M, V, -system.s),
            (V, M, M, system.s),
            (M, V, M, -system.s),
        ],
        SystemKind::Boussinesq => vec![(V, V, V, 1.0), (V, T, T, 1.0)],
    }
}

/// ∫_box t₀(κ₀·x) t₁(κ₁·x) t₂(κ₂·x) dx.
///
/// Expanding each trig factor into two complex exponentials gives
/// eight terms; a term integrates to `volume` exactly when its signed
/// integer wavevectors sum to zero, else to zero. All coefficients are
/// dyadic, so the result is exact up to the final volume product.
fn triple_trig_integral(volume: f64, trig: [Phase; 3], ks: [[i64; 3]; 3]) -> f64 {
    let mut total_re = 0.0f64;
    let mut total_im = 0.0f64;
    for combo in 0..8u32 {
        let mut ksum = [0i64; 3];
        let (mut re, mut im) = (1.0f64, 0.0f64);
        for f in 0..3 {
            let s: i64 = if combo >> f & 1 == 0 { 1 } else { -1 };
            for a in 0..3 {
                ksum[a] += s * ks[f][a];
            }
            // cos θ = (e^{iθ} + e^{-iθ})/2, sin θ = (e^{iθ} - e^{-iθ})/(2i).
            let (fre, fim) = match trig[f] {
                Phase::Cos => (0.5, 0.0),
                Phase::Sin => (0.0, -0.5 * s as f64),
            };
            let nre = re * fre - im * fim;
            let nim = re * fim + im * fre;
            re = nre;
            im = nim;
        }
        if ksum == [0, 0, 0] {
            total_re += re;
            total_im += im;
        }
    }
    // Matching combos pair with their sign-negations, whose dyadic
    // coefficients are complex conjugates, so the sum is real.
    debug_assert!(total_im == 0.0);
    volume * total_re
}

/// Closed-form b(e_i, e_j, e_k) = ∫ (e_i·∇e_j)·e_k dx for one channel
/// triple (polarization dot products times a triple trig integral).
fn convection_entry(volume: f64, mi: &Mode, mj: &Mode, mk: &Mode) -> f64 {
    let advect: f64 = (0..3).map(|a| mi.pol[a] * mj.freq[a]).sum();
    if advect == 0.0 {
        return 0.0;
    }
    let pair = match (mj.block, mk.block) {
        (Block::Temperature, Block::Temperature) => 1.0,
        _ => (0..3).map(|a| mj.pol[a] * mk.pol[a]).sum(),
    };
    if pair == 0.0 {
        return 0.0;
    }
    // d/dθ of the advected trig factor: cos' = -sin, sin' = cos.
    let (dj_phase, dj_sign) = match mj.phase {
        Phase::Cos => (Phase::Sin, -1.0),
        Phase::Sin => (Phase::Cos, 1.0),
    };
    let i3 = triple_trig_integral(volume, [mi.phase, dj_phase, mk.phase], [mi.k, mj.k, mk.k]);
    mi.amp * mj.amp * mk.amp * advect * pair * dj_sign * i3
}

/// Assembles the tensor over the whole basis for the given system.
///
/// `spec` must be the system the basis was built for; it is accepted
/// separately so mismatches surface as errors instead of silent reuse.
pub fn assemble_tensor(basis: &SpectralBasis, spec: &SystemSpec) -> Result<TrilinearTensor> {
    let spec = spec.clone().validated(basis.domain().d())?;
    if &spec != basis.system() {
        return Err(Error::Contract(
            "tensor system spec differs from the basis construction".into(),
        ));
    }
    let kmax = basis.max_axis_wavenumber();
    if !basis.domain().resolves_products(kmax, 3) {
        return Err(Error::Aliasing(format!(
            "resolution {} cannot integrate triple products up to wavenumber {kmax} \
             (need resolution > {})",
            basis.domain().resolution(),
            3 * kmax
        )));
    }
    let volume = basis.domain().volume();
    let n = basis.len();
    let mut entries = Vec::new();
    for (bi, bj, bk, w) in channels(basis.system()) {
        for i in 0..n {
            let mi = basis.mode(i);
            if mi.block != bi {
                continue;
            }
            for j in 0..n {
                let mj = basis.mode(j);
                if mj.block != bj {
                    continue;
                }
                for k in 0..n {
                    let mk = basis.mode(k);
                    if mk.block != bk {
                        continue;
                    }
                    let value = w * convection_entry(volume, mi, mj, mk);
                    if value != 0.0 {
                        entries.push(TensorEntry {
                            i: i as u32,
                            j: j as u32,
                            k: k as u32,
                            value,
                        });
                    }
                }
            }
        }
    }
    entries.sort_by_key(|e| (e.i, e.j, e.k));
    Ok(TrilinearTensor {
        level: n,
        basis_id: basis.id(),
        entries,
    })
}

impl TrilinearTensor {
    /// Tensor with no entries: B = 0 (pure Stokes dynamics).
    pub fn empty(basis: &SpectralBasis) -> Self {
        Self {
            level: basis.len(),
            basis_id: basis.id(),
            entries: Vec::new(),
        }
    }

    /// Multiplies every entry; homogeneity experiments only.
    pub fn scale_values(&mut self, factor: f64) {
        for e in &mut self.entries {
            e.value *= factor;
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn entries(&self) -> &[TensorEntry] {
        &self.entries
    }

    pub fn basis_id(&self) -> u64 {
        self.basis_id
    }

    pub fn check_basis(&self, basis: &SpectralBasis) -> Result<()> {
        if self.basis_id != basis.id() {
            return Err(Error::Contract(
                "tensor and basis come from different constructions".into(),
            ));
        }
        Ok(())
    }

    /// B(u, v) truncated to H_n: coordinate k is Σ_{i,j<n} B_{ijk} u_i v_j.
    pub fn apply(
        &self,
        basis: &SpectralBasis,
        u: &GalerkinState,
        v: &GalerkinState,
        n: usize,
    ) -> Result<GalerkinState> {
        self.check_basis(basis)?;
        u.check_basis(basis)?;
        v.check_basis(basis)?;
        if n > self.level || u.n() < n || v.n() < n {
            return Err(Error::Contract(format!(
                "apply_B level {n} incompatible with tensor level {} and states ({}, {})",
                self.level,
                u.n(),
                v.n()
            )));
        }
        let mut out = vec![0.0; n];
        let (uc, vc) = (u.coeffs(), v.coeffs());
        let nn = n as u32;
        for e in &self.entries {
            if e.i < nn && e.j < nn && e.k < nn {
                out[e.k as usize] += e.value * uc[e.i as usize] * vc[e.j as usize];
            }
        }
        Ok(basis.state(out, u.time()))
    }

    /// Largest |B_{ijk} + B_{ikj}| over stored triples (0 when the
    /// form is perfectly antisymmetric in its last two slots).
    pub fn antisymmetry_residual(&self, n: usize) -> f64 {
        let nn = n as u32;
        let mut worst = 0.0f64;
        for e in &self.entries {
            if e.i >= nn || e.j >= nn || e.k >= nn {
                continue;
            }
            let partner = self.entry(e.i, e.k, e.j);
            worst = worst.max((e.value + partner).abs());
        }
        worst
    }

    pub fn entry(&self, i: u32, j: u32, k: u32) -> f64 {
        self.entries
            .binary_search_by_key(&(i, j, k), |e| (e.i, e.j, e.k))
            .map(|idx| self.entries[idx].value)
            .unwrap_or(0.0)
    }

    /// Perturbs stored entries whose flat rank is below `count` by
    /// `eps`, destroying antisymmetry. Used by fault injection only.
    pub fn perturb_entries(&mut self, count: usize, eps: f64) {
        for e in self.entries.iter_mut().take(count) {
            e.value += eps;
        }
    }

    /// Sparse records `i, j, k, value`, 1-based indices.
    pub fn export(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "# i, j, k, value")?;
        for e in &self.entries {
            writeln!(
                out,
                "{}, {}, {}, {}",
                e.i + 1,
                e.j + 1,
                e.k + 1,
                fmt_g17(e.value)
            )?;
        }
        Ok(())
    }
}

/// Grid-quadrature oracle for one channel triple: evaluates the modes
/// and the analytic gradient of the advected mode on the grid and sums
/// the rectangle rule. Slow; used to validate the closed form.
pub fn convection_quadrature(basis: &SpectralBasis, i: usize, j: usize, k: usize) -> f64 {
    let domain = basis.domain();
    let d = domain.d();
    let (mi, mj, mk) = (basis.mode(i), basis.mode(j), basis.mode(k));
    let w = domain.cell_weight();
    let mut acc = 0.0;
    for x in domain.grid_points() {
        // (e_i · ∇) applied to each component of e_j, dotted with e_k.
        let mut conv = 0.0;
        for a in 0..d {
            conv += mi.scalar(&x) * mi.pol[a] * mj.scalar_derivative(&x, a);
        }
        let pair = match (mj.block, mk.block) {
            (Block::Temperature, Block::Temperature) => 1.0,
            _ => (0..3).map(|c| mj.pol[c] * mk.pol[c]).sum(),
        };
        acc += conv * pair * mk.scalar(&x);
    }
    w * acc
}

/// Oracle for the full system pairing ⟨B(e_i, e_j), e_k⟩: channel sum
/// of quadrature integrals with the system weights.
pub fn pairing_quadrature(basis: &SpectralBasis, i: usize, j: usize, k: usize) -> f64 {
    let (mi, mj, mk) = (basis.mode(i), basis.mode(j), basis.mode(k));
    channels(basis.system())
        .into_iter()
        .filter(|&(bi, bj, bk, _)| mi.block == bi && mj.block == bj && mk.block == bk)
        .map(|(_, _, _, w)| w * convection_quadrature(basis, i, j, k))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_basis;
    use crate::domain::BoxDomain;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn setup(kind: SystemKind, n: usize) -> (SpectralBasis, TrilinearTensor) {
        let dom = BoxDomain::standard(2).unwrap();
        let spec = match kind {
            SystemKind::Nse => SystemSpec::nse(),
            SystemKind::Mhd => SystemSpec::mhd(),
            SystemKind::Boussinesq => SystemSpec::boussinesq(),
        };
        let basis = build_basis(&dom, &spec, n, 3.0).unwrap();
        let tensor = assemble_tensor(&basis, &spec).unwrap();
        (basis, tensor)
    }

    fn find_mode(basis: &SpectralBasis, block: Block, k: [i64; 3], phase: Phase) -> usize {
        (0..basis.len())
            .find(|&i| {
                let m = basis.mode(i);
                m.block == block && m.k == k && m.phase == phase
            })
            .unwrap()
    }

    #[test]
    fn nse_reference_triad_matches_hand_value() {
        // cos(1,0), cos(0,1) advected, sin(1,1) test mode: the closed
        // form reduces to -1/(4π) with the rotated-wavevector
        // polarization convention.
        let (basis, tensor) = setup(SystemKind::Nse, 12);
        let i = find_mode(&basis, Block::Velocity, [1, 0, 0], Phase::Cos);
        let j = find_mode(&basis, Block::Velocity, [0, 1, 0], Phase::Cos);
        let k = find_mode(&basis, Block::Velocity, [1, 1, 0], Phase::Sin);
        let expected = -1.0 / (4.0 * std::f64::consts::PI);
        assert_relative_eq!(
            tensor.entry(i as u32, j as u32, k as u32),
            expected,
            max_relative = 1e-13
        );
        assert_relative_eq!(-0.079_577_471_545_947_67, expected, max_relative = 1e-15);
        // Quadrature oracle agrees.
        assert_relative_eq!(
            pairing_quadrature(&basis, i, j, k),
            expected,
            max_relative = 1e-12
        );
    }

    #[test]
    fn mhd_magnetic_channel_flips_sign() {
        let (basis, tensor) = setup(SystemKind::Mhd, 24);
        let i = find_mode(&basis, Block::Magnetic, [1, 0, 0], Phase::Cos);
        let j = find_mode(&basis, Block::Magnetic, [0, 1, 0], Phase::Cos);
        let k = find_mode(&basis, Block::Velocity, [1, 1, 0], Phase::Sin);
        let expected = 1.0 / (4.0 * std::f64::consts::PI);
        assert_relative_eq!(
            tensor.entry(i as u32, j as u32, k as u32),
            expected,
            max_relative = 1e-13
        );
    }

    #[test]
    fn mhd_tensor_independent_of_hartman_number() {
        // The 1/√s magnetic normalization cancels the s-weighted
        // channels, so coordinates see no Hartman number.
        let dom = BoxDomain::standard(2).unwrap();
        let mut s1 = SystemSpec::mhd();
        s1.s = 1.0;
        let mut s5 = SystemSpec::mhd();
        s5.s = 5.0;
        let b1 = build_basis(&dom, &s1, 16, 3.0).unwrap();
        let b5 = build_basis(&dom, &s5, 16, 3.0).unwrap();
        let t1 = assemble_tensor(&b1, &s1).unwrap();
        let t5 = assemble_tensor(&b5, &s5).unwrap();
        assert_eq!(t1.entries().len(), t5.entries().len());
        for (e1, e5) in t1.entries().iter().zip(t5.entries()) {
            assert_eq!((e1.i, e1.j, e1.k), (e5.i, e5.j, e5.k));
            assert_relative_eq!(e1.value, e5.value, max_relative = 1e-12);
        }
    }

    #[test]
    fn boussinesq_temperature_channel_reference_value() {
        let (basis, tensor) = setup(SystemKind::Boussinesq, 24);
        let i = find_mode(&basis, Block::Velocity, [1, 0, 0], Phase::Cos);
        let j = find_mode(&basis, Block::Temperature, [0, 1, 0], Phase::Cos);
        let k = find_mode(&basis, Block::Temperature, [1, 1, 0], Phase::Sin);
        let expected = -2.0f64.sqrt() / (4.0 * std::f64::consts::PI);
        assert_relative_eq!(
            tensor.entry(i as u32, j as u32, k as u32),
            expected,
            max_relative = 1e-13
        );
        assert_relative_eq!(-0.112_539_539_519_638_3, expected, max_relative = 1e-15);
    }

    #[test]
    fn closed_form_matches_quadrature_oracle_everywhere() {
        for kind in [SystemKind::Nse, SystemKind::Mhd, SystemKind::Boussinesq] {
            let n = 10;
            let (basis, tensor) = setup(kind, n);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let closed = tensor.entry(i as u32, j as u32, k as u32);
                        let quad = pairing_quadrature(&basis, i, j, k);
                        assert!(
                            (closed - quad).abs() <= 1e-12 * (1.0 + quad.abs()),
                            "{:?} ({i},{j},{k}): closed {closed} quad {quad}",
                            kind
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn diagonal_last_slots_vanish() {
        for kind in [SystemKind::Nse, SystemKind::Mhd, SystemKind::Boussinesq] {
            let (_, tensor) = setup(kind, 16);
            for e in tensor.entries() {
                if e.j == e.k {
                    assert!(e.value.abs() <= 1e-10, "B({},{},{}) = {}", e.i, e.j, e.k, e.value);
                }
            }
        }
    }

    #[test]
    fn stored_entries_live_on_wavevector_triads() {
        let (basis, tensor) = setup(SystemKind::Nse, 16);
        for e in tensor.entries() {
            let ki = basis.mode(e.i as usize).k;
            let kj = basis.mode(e.j as usize).k;
            let kk = basis.mode(e.k as usize).k;
            let mut found = false;
            for combo in 0..8 {
                let s = |b: u32| if combo >> b & 1 == 0 { 1i64 } else { -1 };
                if (0..3).all(|a| s(0) * ki[a] + s(1) * kj[a] + s(2) * kk[a] == 0) {
                    found = true;
                    break;
                }
            }
            assert!(found, "entry ({}, {}, {}) off-triad", e.i, e.j, e.k);
        }
    }

    #[test]
    fn antisymmetry_residual_small_and_fault_detectable() {
        let (_, mut tensor) = setup(SystemKind::Nse, 16);
        assert!(tensor.antisymmetry_residual(16) <= 1e-12);
        tensor.perturb_entries(3, 1e-3);
        assert!(tensor.antisymmetry_residual(16) >= 5e-4);
    }

    #[test]
    fn apply_matches_brute_force_double_loop() {
        let (basis, tensor) = setup(SystemKind::Nse, 8);
        let u = basis.state(vec![0.5, -1.0, 0.25, 2.0, -0.125, 0.75, 1.5, -0.375], 0.0);
        let v = basis.state(vec![1.0, 0.5, -0.5, 0.25, 1.25, -0.75, 0.125, 2.0], 0.0);
        let fast = tensor.apply(&basis, &u, &v, 8).unwrap();
        let mut slow = vec![0.0; 8];
        for k in 0..8u32 {
            for i in 0..8u32 {
                for j in 0..8u32 {
                    slow[k as usize] +=
                        tensor.entry(i, j, k) * u.coeffs()[i as usize] * v.coeffs()[j as usize];
                }
            }
        }
        for (f, s) in fast.coeffs().iter().zip(&slow) {
            assert!((f - s).abs() <= 1e-14 * (1.0 + s.abs()));
        }
    }

    #[test]
    fn tensor_rejects_foreign_spec_and_aliased_grid() {
        let dom = BoxDomain::standard(2).unwrap();
        let basis = build_basis(&dom, &SystemSpec::nse(), 8, 3.0).unwrap();
        assert!(matches!(
            assemble_tensor(&basis, &SystemSpec::boussinesq()),
            Err(Error::Contract(_))
        ));
        // Resolution 8 resolves pairs up to |k| = 3 (2·3 < 8) but not
        // triples (3·3 >= 8); wavenumber 3 enters at n = 28.
        let coarse = BoxDomain::new(2, &[2.0 * std::f64::consts::PI; 2], 8).unwrap();
        let basis = build_basis(&coarse, &SystemSpec::nse(), 28, 3.0).unwrap();
        assert!(matches!(
            assemble_tensor(&basis, &SystemSpec::nse()),
            Err(Error::Aliasing(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn energy_neutrality_and_antisymmetry(
            xs in proptest::collection::vec(-2.0f64..2.0, 12),
            ys in proptest::collection::vec(-2.0f64..2.0, 12),
            zs in proptest::collection::vec(-2.0f64..2.0, 12),
        ) {
            for kind in [SystemKind::Nse, SystemKind::Mhd, SystemKind::Boussinesq] {
                let (basis, tensor) = setup(kind, 12);
                let u = basis.state(xs.clone(), 0.0);
                let v = basis.state(ys.clone(), 0.0);
                let w = basis.state(zs.clone(), 0.0);
                let buv = tensor.apply(&basis, &u, &v, 12).unwrap();
                let buw = tensor.apply(&basis, &u, &w, 12).unwrap();
                let scale = 1.0 + u.norm_h() * v.norm_h() * w.norm_h();
                // ⟨B(u,v),v⟩ = 0 and ⟨B(u,v),w⟩ = -⟨B(u,w),v⟩.
                prop_assert!(crate::state::inner_h(&buv, &v).abs() <= 1e-10 * scale);
                let anti = crate::state::inner_h(&buv, &w) + crate::state::inner_h(&buw, &v);
                prop_assert!(anti.abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn apply_is_bilinear(
            xs in proptest::collection::vec(-2.0f64..2.0, 8),
            ys in proptest::collection::vec(-2.0f64..2.0, 8),
            zs in proptest::collection::vec(-2.0f64..2.0, 8),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let (basis, tensor) = setup(SystemKind::Nse, 8);
            let u = basis.state(xs, 0.0);
            let up = basis.state(ys, 0.0);
            let v = basis.state(zs, 0.0);
            let mut combo = u.clone();
            combo.scale(a);
            combo.axpy(b, &up);
            let lhs = tensor.apply(&basis, &combo, &v, 8).unwrap();
            let mut rhs = tensor.apply(&basis, &u, &v, 8).unwrap();
            rhs.scale(a);
            let term = tensor.apply(&basis, &up, &v, 8).unwrap();
            rhs.axpy(b, &term);
            for (l, r) in lhs.coeffs().iter().zip(rhs.coeffs()) {
                prop_assert!((l - r).abs() <= 1e-12 * (1.0 + r.abs()));
            }
        }

        #[test]
        fn zero_argument_annihilates(
            xs in proptest::collection::vec(-2.0f64..2.0, 8),
        ) {
            let (basis, tensor) = setup(SystemKind::Nse, 8);
            let u = basis.state(xs, 0.0);
            let z = basis.state(vec![0.0; 8], 0.0);
            let b1 = tensor.apply(&basis, &z, &u, 8).unwrap();
            let b2 = tensor.apply(&basis, &u, &z, 8).unwrap();
            prop_assert!(b1.coeffs().iter().all(|c| *c == 0.0));
            prop_assert!(b2.coeffs().iter().all(|c| *c == 0.0));
        }
    }
}
