//! Energy-ledger accounting for |u|^p along simulated paths.
//!
//! Itô's formula for the truncated dynamics splits |u(t)|^p - |u(0)|^p
//! into drift work, a compensated-jump martingale, two jump
//! compensators, a Wiener martingale, and the quadratic-variation
//! correction. The ledger recomputes every term from a recorded
//! trajectory with left-endpoint quadrature. Two falsifiable outputs:
//! the defect ("residual") must vanish at first order in dt, and the
//! two martingale columns must be mean zero across an ensemble.

use crate::basis::SpectralBasis;
use crate::error::{Error, Result};
use crate::noise::{JumpSpec, MarkLaw, NoiseModel, WienerOperator};
use crate::sim::{FaultMode, SimConfig, TrajectoryRecord};
use crate::state::norm_u_dual;
use crate::triple::{smooth_cutoff, OperatorTriple};
use crate::util::{fmt_g17, integrate_gl, mean_stderr, KahanSum};

/// Cumulative ledger columns on the trajectory's grid. Index i is the
/// accumulation over [0, times[i]]; residual[i] is the identity defect
/// at times[i].
#[derive(Clone, Debug)]
pub struct EnergyLedger {
    pub p: f64,
    pub times: Vec<f64>,
    /// ∫ p|u|^{p-2} ⟨u, -Au - B_n(u) - Ru + f⟩ ds. The compensation
    /// drift is excluded here: its φ′-work cancels exactly against the
    /// small-jump compensator's linear part.
    pub drift: Vec<f64>,
    /// Σ Δ|u|^p over jumps minus the jump compensator (all of Y; under
    /// the uncompensated-jumps fault only Y∖Y₀, keeping the identity
    /// intact while the mean drifts).
    pub jump_martingale: Vec<f64>,
    /// ∫∫_{Y₀} (Δ|u|^p - φ′·F) dμ ds: the quadratic-and-higher part of
    /// small jumps.
    pub small_jump_compensator: Vec<f64>,
    /// ∫∫_{Y∖Y₀} Δ|u|^p dμ ds: the large-jump drift, which belongs to
    /// the ledger identity, never to the stepper.
    pub large_jump_compensator: Vec<f64>,
    /// Σ p|u|^{p-2} ⟨u, G(u)ΔW⟩.
    pub wiener_martingale: Vec<f64>,
    /// ½∫ tr(φ″ GG*) ds.
    pub ito_correction: Vec<f64>,
    pub residual: Vec<f64>,
    /// max |⟨B_n(u), u⟩| over the grid: zero up to roundoff when the
    /// convection tensor is antisymmetric.
    pub max_convection_energy: f64,
}

impl EnergyLedger {
    pub fn max_abs_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |a, r| a.max(r.abs()))
    }

    /// Residual at an exact grid time (ensemble statistics align
    /// ledgers from different paths on the shared uniform times).
    pub fn residual_at(&self, t: f64) -> Result<f64> {
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => Ok(self.residual[i]),
            Err(_) => Err(Error::Contract(format!(
                "time {t} is not on the ledger grid"
            ))),
        }
    }

    /// Residual of the stopped process at t∧τ, with `stop_index` the
    /// trajectory's grid index of τ. The identity is proved for the
    /// stopped process; stopping also keeps the heavy-tailed
    /// post-blow-up states out of the ensemble statistics.
    pub fn stopped_residual_at(&self, t: f64, stop_index: usize) -> Result<f64> {
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => Ok(self.residual[i.min(stop_index)]),
            Err(_) => Err(Error::Contract(format!(
                "time {t} is not on the ledger grid"
            ))),
        }
    }

    /// Martingale column value at t∧τ (the optional-stopping
    /// statistic: still exactly mean zero for an honest run).
    pub fn stopped_martingale(&self, term: MartingaleTerm, stop_index: usize) -> f64 {
        let i = stop_index.min(self.times.len() - 1);
        match term {
            MartingaleTerm::Jump => self.jump_martingale[i],
            MartingaleTerm::Wiener => self.wiener_martingale[i],
        }
    }

    pub fn final_jump_martingale(&self) -> f64 {
        *self.jump_martingale.last().expect("nonempty ledger")
    }

    pub fn final_wiener_martingale(&self) -> f64 {
        *self.wiener_martingale.last().expect("nonempty ledger")
    }

    pub fn final_small_jump_compensator(&self) -> f64 {
        *self.small_jump_compensator.last().expect("nonempty ledger")
    }

    /// Line-delimited export
    /// `t, residual, drift, jump_mart, small_comp, large_comp, wiener_mart, ito_corr`.
    pub fn write_text(&self, out: &mut impl std::io::Write) -> Result<()> {
        writeln!(
            out,
            "# t, residual, drift, jump_mart, small_comp, large_comp, wiener_mart, ito_corr"
        )?;
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{}, {}, {}, {}, {}, {}, {}, {}",
                fmt_g17(self.times[i]),
                fmt_g17(self.residual[i]),
                fmt_g17(self.drift[i]),
                fmt_g17(self.jump_martingale[i]),
                fmt_g17(self.small_jump_compensator[i]),
                fmt_g17(self.large_jump_compensator[i]),
                fmt_g17(self.wiener_martingale[i]),
                fmt_g17(self.ito_correction[i]),
            )?;
        }
        Ok(())
    }
}

fn phi(hsq: f64, p: f64) -> f64 {
    if p == 2.0 {
        hsq
    } else {
        hsq.powf(0.5 * p)
    }
}

/// |u|^{p-2} with the p = 2 case exact.
fn phi_weight(hsq: f64, p: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else {
        hsq.powf(0.5 * p - 1.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// ∫ g dμ over one region, splitting the two-sided exponential into
/// sides and integrating each on unit panels (the density scale is
/// O(1), so 16-node panels resolve it to roundoff).
fn mark_region_integral(spec: &JumpSpec, below: bool, g: impl Fn(f64) -> f64) -> f64 {
    let MarkLaw::TwoSidedExp {
        scale_pos,
        scale_neg,
        weight_pos,
    } = spec.law;
    let r = spec.y0_radius;
    let side = |scale: f64, weight: f64, sign: f64| {
        let f = |m: f64| weight / scale * (-m / scale).exp() * g(sign * m);
        let (a, b) = if below { (0.0, r) } else { (r, r + 40.0 * scale) };
        let panels = ((b - a).ceil() as usize).max(1);
        let mut acc = KahanSum::new();
        for j in 0..panels {
            let x0 = a + (b - a) * j as f64 / panels as f64;
            let x1 = a + (b - a) * (j + 1) as f64 / panels as f64;
            acc.add(integrate_gl(&f, x0, x1, 16));
        }
        acc.value()
    };
    spec.total_rate * (side(scale_pos, weight_pos, 1.0) + side(scale_neg, 1.0 - weight_pos, -1.0))
}

/// ∫ (|u + y·dir|^p - |u|^p) dμ(y) over one region, reduced to scalar
/// quadrature through the invariants hsq = |u|², c1 = ⟨u,dir⟩,
/// c2 = |dir|². The p = 2 closed moment form is exact; the quadrature
/// route stays available as an independent cross-check.
pub fn jump_phi_compensator(
    spec: &JumpSpec,
    hsq: f64,
    c1: f64,
    c2: f64,
    p: f64,
    below: bool,
) -> f64 {
    if p == 2.0 {
        let m1 = spec.mu_signed_moment(1, below);
        let m2 = spec.mu_signed_moment(2, below);
        return 2.0 * m1 * c1 + m2 * c2;
    }
    jump_phi_compensator_quadrature(spec, hsq, c1, c2, p, below)
}

/// Quadrature route for the same integral (any p ≥ 2).
pub fn jump_phi_compensator_quadrature(
    spec: &JumpSpec,
    hsq: f64,
    c1: f64,
    c2: f64,
    p: f64,
    below: bool,
) -> f64 {
    let base = phi(hsq, p);
    mark_region_integral(spec, below, |y| {
        phi((hsq + 2.0 * c1 * y + c2 * y * y).max(0.0), p) - base
    })
}

/// ∫_{Y₀} (Δ|u|^p - φ′·F) dμ: the small-jump compensator rate. Exact
/// moment form at p = 2; one cancellation-friendly quadrature
/// otherwise.
fn small_jump_rate(spec: &JumpSpec, hsq: f64, c1: f64, c2: f64, p: f64) -> f64 {
    if p == 2.0 {
        return spec.mu_signed_moment(2, true) * c2;
    }
    let base = phi(hsq, p);
    let lin = p * phi_weight(hsq, p) * c1;
    mark_region_integral(spec, true, |y| {
        phi((hsq + 2.0 * c1 * y + c2 * y * y).max(0.0), p) - base - lin * y
    })
}

/// Rebuilds the p-th power ledger from a recorded trajectory,
/// mirroring the stepper's left-endpoint drift (including the cutoff
/// state and any injected fault) so the identity closes to O(dt).
pub fn accumulate_ledger(
    basis: &SpectralBasis,
    triple: &OperatorTriple,
    gop: &WienerOperator,
    model: &NoiseModel,
    sim: &SimConfig,
    rec: &TrajectoryRecord,
    p: f64,
) -> Result<EnergyLedger> {
    if !(p >= 2.0) {
        return Err(Error::Contract(
            "ledger exponent p must be at least 2".into(),
        ));
    }
    if rec.level != sim.n {
        return Err(Error::Contract(format!(
            "trajectory level {} does not match configured level {}",
            rec.level, sim.n
        )));
    }
    if rec.times.len() != rec.states.len() || rec.dw.len() + 1 != rec.times.len() {
        return Err(Error::Contract(
            "trajectory arrays are inconsistent".into(),
        ));
    }
    let n = sim.n;
    let spec = &model.jumps;
    let uncompensated = sim.fault == Some(FaultMode::UncompensatedJumps);
    let steps = rec.times.len();

    let mut drift = Vec::with_capacity(steps);
    let mut jump_mart = Vec::with_capacity(steps);
    let mut small_comp = Vec::with_capacity(steps);
    let mut large_comp = Vec::with_capacity(steps);
    let mut wiener_mart = Vec::with_capacity(steps);
    let mut ito_corr = Vec::with_capacity(steps);
    let mut residual = Vec::with_capacity(steps);
    for v in [
        &mut drift,
        &mut jump_mart,
        &mut small_comp,
        &mut large_comp,
        &mut wiener_mart,
        &mut ito_corr,
        &mut residual,
    ] {
        v.push(0.0);
    }

    let phi0 = phi(dot(&rec.states[0], &rec.states[0]), p);
    let mut acc_drift = KahanSum::new();
    let mut acc_m = KahanSum::new();
    let mut acc_i = KahanSum::new();
    let mut acc_k = KahanSum::new();
    let mut acc_n = KahanSum::new();
    let mut acc_j = KahanSum::new();
    let mut max_conv: f64 = 0.0;

    for g in 1..steps {
        let (t0, t1) = (rec.times[g - 1], rec.times[g]);
        let h = t1 - t0;
        let u = &rec.states[g - 1];
        let state = basis.state(u.clone(), t0);
        let hsq = dot(u, u);
        let w2 = phi_weight(hsq, p);

        // Drift work at the left endpoint, mirroring the stepper's
        // cutoff but excluding the compensation drift.
        let au = triple.apply_a(basis, &state)?;
        let braw = triple.apply_b(basis, &state, &state, n)?;
        let conv = dot(braw.coeffs(), u);
        max_conv = max_conv.max(conv.abs());
        let theta = if sim.disable_cutoff {
            1.0
        } else {
            smooth_cutoff(sim.cutoff_level, norm_u_dual(basis, &state))
        };
        let rop = triple.apply_r(basis, &state)?;
        let mut f = vec![0.0; n];
        sim.forcing.add_at(t0, &mut f);
        let mut phi_dot = 0.0;
        for i in 0..n {
            phi_dot +=
                u[i] * (-au.coeffs()[i] - theta * braw.coeffs()[i] - rop.coeffs()[i] + f[i]);
        }
        acc_drift.add(h * p * w2 * phi_dot);

        // Wiener martingale and the quadratic-variation correction.
        let gdw = gop.apply(basis, &state, &rec.dw[g - 1], n)?;
        acc_n.add(p * w2 * dot(u, gdw.coeffs()));
        let hs = gop.hs_norm_sq(&state, n);
        let j_rate = if p == 2.0 {
            hs
        } else if hsq > 0.0 {
            let mut cross = 0.0;
            for i in 0..gop.direction_count() {
                let col = gop.column(&state, i, n);
                let c = dot(u, &col);
                cross += c * c;
            }
            0.5 * p * w2 * hs + 0.5 * p * (p - 2.0) * hsq.powf(0.5 * p - 2.0) * cross
        } else {
            0.0
        };
        acc_j.add(h * j_rate);

        // Jump compensators at the left endpoint.
        let dir = spec.f_direction(u);
        let c1 = dot(u, &dir);
        let c2 = dot(&dir, &dir);
        let comp_small = jump_phi_compensator(spec, hsq, c1, c2, p, true);
        let comp_large = jump_phi_compensator(spec, hsq, c1, c2, p, false);
        if !uncompensated {
            acc_i.add(h * small_jump_rate(spec, hsq, c1, c2, p));
        }
        acc_k.add(h * comp_large);
        let m_comp = if uncompensated {
            comp_large
        } else {
            comp_small + comp_large
        };
        acc_m.add(-h * m_comp);
        for marker in rec.jump_markers_at(t1) {
            let left = phi(dot(&marker.left, &marker.left), p);
            let right = phi(dot(&marker.right, &marker.right), p);
            acc_m.add(right - left);
        }

        drift.push(acc_drift.value());
        jump_mart.push(acc_m.value());
        small_comp.push(acc_i.value());
        large_comp.push(acc_k.value());
        wiener_mart.push(acc_n.value());
        ito_corr.push(acc_j.value());
        let phit = phi(dot(&rec.states[g], &rec.states[g]), p);
        residual.push(
            phit - phi0
                - acc_drift.value()
                - acc_m.value()
                - acc_i.value()
                - acc_k.value()
                - acc_n.value()
                - acc_j.value(),
        );
    }

    Ok(EnergyLedger {
        p,
        times: rec.times.clone(),
        drift,
        jump_martingale: jump_mart,
        small_jump_compensator: small_comp,
        large_jump_compensator: large_comp,
        wiener_martingale: wiener_mart,
        ito_correction: ito_corr,
        residual,
        max_convection_energy: max_conv,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MartingaleTerm {
    Jump,
    Wiener,
}

impl MartingaleTerm {
    pub fn label(self) -> &'static str {
        match self {
            MartingaleTerm::Jump => "jump_martingale",
            MartingaleTerm::Wiener => "wiener_martingale",
        }
    }
}

/// Outcome of the 3σ mean-zero gate on a martingale column.
#[derive(Clone, Debug)]
pub struct MartingaleGate {
    pub term: MartingaleTerm,
    pub paths: usize,
    pub mean: f64,
    pub stderr: f64,
    pub pass: bool,
}

/// Tests E[value] = 0 at three standard errors over per-path
/// martingale samples (terminal or stopped values). Needs at least 50
/// paths for the normal approximation to carry weight.
pub fn martingale_mean_test_values(values: &[f64], term: MartingaleTerm) -> Result<MartingaleGate> {
    if values.len() < 50 {
        return Err(Error::Contract(format!(
            "martingale mean test needs at least 50 paths, got {}",
            values.len()
        )));
    }
    let (mean, stderr) = mean_stderr(values);
    Ok(MartingaleGate {
        term,
        paths: values.len(),
        mean,
        stderr,
        pass: mean.abs() <= 3.0 * stderr,
    })
}

/// Terminal-value form of the gate over an ensemble of ledgers.
pub fn martingale_mean_test(
    ledgers: &[EnergyLedger],
    term: MartingaleTerm,
) -> Result<MartingaleGate> {
    let finals: Vec<f64> = ledgers
        .iter()
        .map(|l| match term {
            MartingaleTerm::Jump => l.final_jump_martingale(),
            MartingaleTerm::Wiener => l.final_wiener_martingale(),
        })
        .collect();
    martingale_mean_test_values(&finals, term)
}
