//! Galerkin coordinate states and the norm family.
//!
//! In the eigenbasis every norm is a weighted coordinate sum:
//!   |u|_H²   = Σ x_i²
//!   ((u,u))  = Σ λ_i x_i²          (Dirichlet form)
//!   ‖u‖_V²   = |u|_H² + ((u,u))
//!   |u|_{V'}² = Σ x_i²/(1+λ_i)
//!   |u|_{U'}² = Σ x_i²/λ_i^m
//! with m the Sobolev order carried by the basis.

use crate::basis::SpectralBasis;
use crate::error::{Error, Result};
use crate::util::KahanSum;

/// Coefficients of an element of H_n = span{e_1, ..., e_n}.
#[derive(Clone, Debug)]
pub struct GalerkinState {
    coeffs: Vec<f64>,
    t: f64,
    basis_id: u64,
}

impl GalerkinState {
    pub(crate) fn new(basis: &SpectralBasis, coeffs: Vec<f64>, t: f64) -> Self {
        assert!(
            coeffs.len() <= basis.len(),
            "state dimension {} exceeds basis size {}",
            coeffs.len(),
            basis.len()
        );
        Self {
            coeffs,
            t,
            basis_id: basis.id(),
        }
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn set_time(&mut self, t: f64) {
        self.t = t;
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn basis_id(&self) -> u64 {
        self.basis_id
    }

    /// Errs when the state was built on a different basis.
    pub fn check_basis(&self, basis: &SpectralBasis) -> Result<()> {
        if self.basis_id != basis.id() {
            return Err(Error::Contract(
                "state and basis come from different constructions".into(),
            ));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn norm_h_sq(&self) -> f64 {
        let mut acc = KahanSum::new();
        for &c in &self.coeffs {
            acc.add(c * c);
        }
        acc.value()
    }

    pub fn norm_h(&self) -> f64 {
        self.norm_h_sq().sqrt()
    }

    pub fn axpy(&mut self, a: f64, other: &GalerkinState) {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        assert_eq!(self.basis_id, other.basis_id);
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += a * y;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for x in &mut self.coeffs {
            *x *= a;
        }
    }
}

/// ⟨u, v⟩_H in coordinates.
pub fn inner_h(u: &GalerkinState, v: &GalerkinState) -> f64 {
    assert_eq!(u.n(), v.n(), "inner product needs equal dimensions");
    let mut acc = KahanSum::new();
    for (x, y) in u.coeffs.iter().zip(&v.coeffs) {
        acc.add(x * y);
    }
    acc.value()
}

/// Dirichlet form ((u, v)) = Σ λ_i x_i y_i.
///
/// The summand is grouped as (λ_i · x_i) · y_i so that the identity
/// ⟨Au, v⟩_H = ((u, v)) holds bitwise against applying A first.
pub fn inner_dirichlet(basis: &SpectralBasis, u: &GalerkinState, v: &GalerkinState) -> f64 {
    assert_eq!(u.n(), v.n(), "inner product needs equal dimensions");
    let mut acc = KahanSum::new();
    for (i, (x, y)) in u.coeffs.iter().zip(&v.coeffs).enumerate() {
        acc.add((basis.lambda(i) * x) * y);
    }
    acc.value()
}

pub fn norm_v_sq(basis: &SpectralBasis, u: &GalerkinState) -> f64 {
    let mut acc = KahanSum::new();
    for (i, &x) in u.coeffs.iter().enumerate() {
        acc.add((1.0 + basis.lambda(i)) * x * x);
    }
    acc.value()
}

pub fn norm_v(basis: &SpectralBasis, u: &GalerkinState) -> f64 {
    norm_v_sq(basis, u).sqrt()
}

pub fn norm_dirichlet_sq(basis: &SpectralBasis, u: &GalerkinState) -> f64 {
    inner_dirichlet(basis, u, u)
}

/// |u|_{V'}² = Σ x_i²/(1+λ_i).
pub fn norm_v_dual_sq(basis: &SpectralBasis, u: &GalerkinState) -> f64 {
    let mut acc = KahanSum::new();
    for (i, &x) in u.coeffs.iter().enumerate() {
        acc.add(x * x / (1.0 + basis.lambda(i)));
    }
    acc.value()
}

pub fn norm_v_dual(basis: &SpectralBasis, u: &GalerkinState) -> f64 {
    norm_v_dual_sq(basis, u).sqrt()
}

/// |u|_{U'}² = Σ x_i²·λ_i^{-m}.
pub fn norm_u_dual_sq(basis: &SpectralBasis, u: &GalerkinState) -> f64 {
    let m = basis.sobolev_order();
    let mut acc = KahanSum::new();
    for (i, &x) in u.coeffs.iter().enumerate() {
        acc.add(x * x * basis.lambda(i).powf(-m));
    }
    acc.value()
}

pub fn norm_u_dual(basis: &SpectralBasis, u: &GalerkinState) -> f64 {
    norm_u_dual_sq(basis, u).sqrt()
}

/// |u|_U² = Σ x_i²·λ_i^m (the smooth test space realized by eigenvalue
/// weights).
pub fn norm_u_sq(basis: &SpectralBasis, u: &GalerkinState) -> f64 {
    let m = basis.sobolev_order();
    let mut acc = KahanSum::new();
    for (i, &x) in u.coeffs.iter().enumerate() {
        acc.add(x * x * basis.lambda(i).powf(m));
    }
    acc.value()
}

/// Difference u - v as a fresh state (dimensions padded with zeros, so
/// states from different Galerkin levels of one basis can be compared).
pub fn difference(u: &GalerkinState, v: &GalerkinState) -> GalerkinState {
    assert_eq!(u.basis_id, v.basis_id);
    let n = u.n().max(v.n());
    let mut coeffs = vec![0.0; n];
    for (i, c) in coeffs.iter_mut().enumerate() {
        let a = u.coeffs.get(i).copied().unwrap_or(0.0);
        let b = v.coeffs.get(i).copied().unwrap_or(0.0);
        *c = a - b;
    }
    GalerkinState {
        coeffs,
        t: u.t,
        basis_id: u.basis_id,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_basis;
    use crate::domain::BoxDomain;
    use crate::system::SystemSpec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn basis() -> SpectralBasis {
        let dom = BoxDomain::standard(2).unwrap();
        build_basis(&dom, &SystemSpec::nse(), 8, 3.0).unwrap()
    }

    #[test]
    fn norm_family_on_unit_modes() {
        let b = basis();
        for i in 0..b.len() {
            let e = b.unit_state(i, b.len());
            let li = b.lambda(i);
            assert_relative_eq!(e.norm_h_sq(), 1.0);
            assert_relative_eq!(norm_v_sq(&b, &e), 1.0 + li);
            assert_relative_eq!(norm_v_dual_sq(&b, &e), 1.0 / (1.0 + li));
            assert_relative_eq!(norm_u_dual_sq(&b, &e), li.powf(-3.0));
            assert_relative_eq!(norm_u_sq(&b, &e), li.powf(3.0));
        }
    }

    #[test]
    fn v_norm_splits_into_h_and_dirichlet() {
        let b = basis();
        let u = b.state(vec![0.3, -1.2, 0.0, 2.0, 0.7, -0.1, 0.05, 1.0], 0.0);
        let split = u.norm_h_sq() + norm_dirichlet_sq(&b, &u);
        assert_relative_eq!(norm_v_sq(&b, &u), split, max_relative = 1e-14);
    }

    #[test]
    fn dual_norms_below_h_above_nothing() {
        // λ_i >= 1 for this basis, so |u|_{V'} <= |u|_H and |u|_{U'} <= |u|_H.
        let b = basis();
        let u = b.state(vec![1.0, 2.0, -0.5, 0.25, 0.0, 3.0, -1.0, 0.125], 0.0);
        assert!(norm_v_dual_sq(&b, &u) <= u.norm_h_sq());
        assert!(norm_u_dual_sq(&b, &u) <= u.norm_h_sq());
    }

    #[test]
    fn basis_mismatch_detected() {
        let b1 = basis();
        let dom = BoxDomain::standard(2).unwrap();
        let b2 = build_basis(&dom, &SystemSpec::boussinesq(), 8, 3.0).unwrap();
        let u = b1.state(vec![1.0; 8], 0.0);
        assert!(u.check_basis(&b1).is_ok());
        assert!(u.check_basis(&b2).is_err());
    }

    #[test]
    fn difference_pads_levels() {
        let b = basis();
        let u = b.state(vec![1.0, 2.0, 3.0], 0.0);
        let v = b.state(vec![1.0, 0.0, 0.0, 4.0], 0.0);
        let d = difference(&u, &v);
        assert_eq!(d.coeffs(), &[0.0, 2.0, 3.0, -4.0]);
    }

    proptest! {
        #[test]
        fn cauchy_schwarz_and_triangle(
            xs in proptest::collection::vec(-10.0f64..10.0, 8),
            ys in proptest::collection::vec(-10.0f64..10.0, 8),
        ) {
            let b = basis();
            let u = b.state(xs, 0.0);
            let v = b.state(ys, 0.0);
            let ip = inner_h(&u, &v).abs();
            prop_assert!(ip <= u.norm_h() * v.norm_h() + 1e-9);
            let mut sum = u.clone();
            sum.axpy(1.0, &v);
            prop_assert!(sum.norm_h() <= u.norm_h() + v.norm_h() + 1e-9);
            prop_assert!(norm_v(&b, &sum) <= norm_v(&b, &u) + norm_v(&b, &v) + 1e-9);
        }

        #[test]
        fn projection_contracts_every_norm(
            xs in proptest::collection::vec(-5.0f64..5.0, 8),
            n in 1usize..8,
        ) {
            let b = basis();
            let u = b.state(xs, 0.0);
            let p = b.project_state(&u, n).unwrap();
            prop_assert!(p.norm_h_sq() <= u.norm_h_sq() + 1e-12);
            prop_assert!(norm_v_sq(&b, &p) <= norm_v_sq(&b, &u) + 1e-12);
            prop_assert!(norm_v_dual_sq(&b, &p) <= norm_v_dual_sq(&b, &u) + 1e-12);
            prop_assert!(norm_u_dual_sq(&b, &p) <= norm_u_dual_sq(&b, &u) + 1e-12);
        }

        #[test]
        fn dirichlet_form_symmetric(
            xs in proptest::collection::vec(-5.0f64..5.0, 8),
            ys in proptest::collection::vec(-5.0f64..5.0, 8),
        ) {
            let b = basis();
            let u = b.state(xs, 0.0);
            let v = b.state(ys, 0.0);
            let a = inner_dirichlet(&b, &u, &v);
            let bb = inner_dirichlet(&b, &v, &u);
            prop_assert!((a - bb).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }
}
