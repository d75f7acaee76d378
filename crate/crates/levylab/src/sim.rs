//! Jump-adapted Euler-Maruyama stepper for the truncated system
//!
//!   du = [-Au - B_n(u) - Ru + P_n f - ∫_{Y₀} P_nF dμ] dt
//!        + P_nG(u) dW + Σ_jumps P_nF(u⁻; y),
//!
//! integrated on the union of the uniform grid and the sampled jump
//! times. Jumps are applied exactly at their times, so the only
//! discretization error is the Euler drift/diffusion error on the
//! sub-intervals. Large jumps enter raw: their mean drift belongs to
//! the energy-ledger identity, not to the dynamics.

use serde::{Deserialize, Serialize};

use crate::basis::SpectralBasis;
use crate::error::{Error, Result};
use crate::noise::{JumpEvent, JumpSpec, NoiseModel, NoiseSkeleton, WienerOperator};
use crate::state::{norm_u_dual, norm_v};
use crate::triple::{smooth_cutoff, OperatorTriple};
use crate::util::fmt_g17;

/// Deliberate defects for verifying that the checkers detect them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultMode {
    /// Pretend Y₀ is empty: the stepper drops the small-jump
    /// compensation drift and the ledger compensates only over Y∖Y₀.
    /// The ledger identity survives (the two changes are consistent),
    /// but the jump martingale acquires a mean drift.
    UncompensatedJumps,
    /// Perturb the convection tensor after assembly (applied by the
    /// runner): breaks antisymmetry, detected by the assumption
    /// checks and the per-step energy-neutrality assertion.
    BrokenAntisymmetry,
}

/// Deterministic forcing as a time-indexed coefficient table,
/// piecewise constant from each row's time onward.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Forcing {
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default)]
    pub coeffs: Vec<Vec<f64>>,
}

impl Forcing {
    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.coeffs.len() {
            return Err(Error::config(
                "forcing",
                "times and coefficient rows must have equal length",
            ));
        }
        if self.times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(
                "forcing.times",
                "table times must be strictly increasing",
            ));
        }
        if self
            .times
            .iter()
            .chain(self.coeffs.iter().flatten())
            .any(|x| !x.is_finite())
        {
            return Err(Error::config("forcing", "entries must be finite"));
        }
        Ok(())
    }

    /// Adds f(t) (truncated to n coordinates) into `out`.
    pub fn add_at(&self, t: f64, out: &mut [f64]) {
        let row = self.times.partition_point(|&s| s <= t);
        if row == 0 {
            return;
        }
        for (o, f) in out.iter_mut().zip(&self.coeffs[row - 1]) {
            *o += f;
        }
    }
}

/// One simulation setup at a fixed Galerkin level.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub u0: Vec<f64>,
    pub forcing: Forcing,
    pub r_stop: f64,
    /// Index of the smooth cutoff θ (the Galerkin level in the
    /// compactness argument; defaults to n).
    pub cutoff_level: f64,
    pub disable_cutoff: bool,
    pub semi_implicit: bool,
    pub seed: u64,
    pub fault: Option<FaultMode>,
}

impl SimConfig {
    pub fn validate(&self, basis: &SpectralBasis) -> Result<()> {
        if self.n == 0 || self.n > basis.len() {
            return Err(Error::config(
                "galerkin.n",
                format!("level must lie in 1..={}", basis.len()),
            ));
        }
        if !(self.dt > 0.0) {
            return Err(Error::config("galerkin.dt", "time step must be positive"));
        }
        if !(self.t_end >= self.dt) {
            return Err(Error::config(
                "galerkin.t_end",
                "horizon must cover at least one step",
            ));
        }
        let steps = self.t_end / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::config(
                "galerkin.dt",
                "step must divide the horizon into a whole number of steps",
            ));
        }
        if !(self.r_stop > 0.0) {
            return Err(Error::config(
                "galerkin.r_stop",
                "stopping threshold must be positive",
            ));
        }
        if !(self.cutoff_level > 0.0) {
            return Err(Error::config(
                "galerkin.cutoff_level",
                "cutoff level must be positive",
            ));
        }
        if self.u0.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("initial", "coefficients must be finite"));
        }
        self.forcing.validate()
    }

    pub fn base_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// A recorded jump: raw mark, region, and the (left, right) state pair
/// that makes the path càdlàg bookkeeping explicit.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpMarker {
    pub t: f64,
    pub mark: f64,
    pub small: bool,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// One path on the jump-adapted grid. States are right limits; left
/// limits at jump times live in the markers.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub basis_id: u64,
    pub level: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Wiener increment per interval [times[i], times[i+1]].
    pub dw: Vec<Vec<f64>>,
    pub jumps: Vec<JumpMarker>,
    /// First grid time with |u|_H ≥ R_stop, if any. The path keeps
    /// running past it; stopped-process statistics cut here.
    pub tau: Option<f64>,
    pub cutoff_activations: usize,
    pub seed: u64,
    pub path: u64,
}

impl TrajectoryRecord {
    pub fn final_coeffs(&self) -> &[f64] {
        self.states.last().expect("nonempty trajectory")
    }

    pub fn jump_markers_at(&self, t: f64) -> impl Iterator<Item = &JumpMarker> {
        self.jumps.iter().filter(move |m| m.t == t)
    }

    /// Index bookkeeping for the stopped process: grid points with
    /// times[i] ≤ τ (all of them when the path never stopped).
    pub fn stopped_index(&self) -> usize {
        match self.tau {
            None => self.times.len() - 1,
            Some(tau) => self.times.partition_point(|&t| t <= tau) - 1,
        }
    }

    /// Line-delimited export `t, |u|_H, ‖u‖_V, jump_flag[, coeffs…]`.
    pub fn write_text(
        &self,
        basis: &SpectralBasis,
        include_coeffs: bool,
        out: &mut impl std::io::Write,
    ) -> Result<()> {
        writeln!(out, "# t, h_norm, v_norm, jump_flag")?;
        for (i, t) in self.times.iter().enumerate() {
            let state = basis.state(self.states[i].clone(), *t);
            let jump_flag = if self.jump_markers_at(*t).next().is_some() {
                1
            } else {
                0
            };
            let mut line = format!(
                "{}, {}, {}, {}",
                fmt_g17(*t),
                fmt_g17(state.norm_h()),
                fmt_g17(norm_v(basis, &state)),
                jump_flag
            );
            if include_coeffs {
                for c in &self.states[i] {
                    line.push_str(", ");
                    line.push_str(&fmt_g17(*c));
                }
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Outcome of one sub-interval step.
pub struct StepOutcome {
    pub state: Vec<f64>,
    pub markers: Vec<JumpMarker>,
    pub cutoff_active: bool,
}

/// One jump-adapted Euler-Maruyama step over [t0, t1]: left-point
/// drift and diffusion, then the interval's jumps in time order.
#[allow(clippy::too_many_arguments)]
pub fn step(
    basis: &SpectralBasis,
    triple: &OperatorTriple,
    gop: &WienerOperator,
    jumps: &JumpSpec,
    sim: &SimConfig,
    u: &[f64],
    t0: f64,
    t1: f64,
    dw: &[f64],
    events: &[JumpEvent],
) -> Result<StepOutcome> {
    let n = sim.n;
    let h = t1 - t0;
    let state = basis.state(u.to_vec(), t0);

    let au = triple.apply_a(basis, &state)?;
    let mut b = triple.apply_b(basis, &state, &state, n)?;
    let mut cutoff_active = false;
    if sim.disable_cutoff {
        // Raw P_nB: the truncation-consistency route.
    } else {
        let theta = smooth_cutoff(sim.cutoff_level, norm_u_dual(basis, &state));
        if theta < 1.0 {
            cutoff_active = true;
        }
        b.scale(theta);
    }
    let r = triple.apply_r(basis, &state)?;
    let mut f = vec![0.0; n];
    sim.forcing.add_at(t0, &mut f);
    let m10 = match sim.fault {
        Some(FaultMode::UncompensatedJumps) => 0.0,
        _ => jumps.small_mean(),
    };
    let dir = jumps.f_direction(u);

    let gdw = gop.apply(basis, &state, dw, n)?;

    let mut next = vec![0.0; n];
    for i in 0..n {
        let drift = -au.coeffs()[i] - b.coeffs()[i] - r.coeffs()[i] + f[i] - m10 * dir[i];
        if sim.semi_implicit {
            // A treated implicitly on the diagonal; everything else
            // stays explicit at the left point.
            let explicit = drift + au.coeffs()[i];
            next[i] = (u[i] + h * explicit + gdw.coeffs()[i]) / (1.0 + h * basis.lambda(i));
        } else {
            next[i] = u[i] + h * drift + gdw.coeffs()[i];
        }
    }

    let mut markers = Vec::new();
    for e in events {
        let left = next.clone();
        let dir = jumps.f_direction(&next);
        for i in 0..n {
            next[i] += e.mark * dir[i];
        }
        markers.push(JumpMarker {
            t: e.t,
            mark: e.mark,
            small: e.is_small(jumps.y0_radius),
            left,
            right: next.clone(),
        });
    }

    if next.iter().any(|x| !x.is_finite()) {
        return Err(Error::Abort {
            t: t1,
            msg: "nonfinite coordinate (blow-up or bad configuration)".into(),
        });
    }

    Ok(StepOutcome {
        state: next,
        markers,
        cutoff_active,
    })
}

/// Integrates one path on a frozen noise skeleton, stepping at
/// `stride` × the skeleton's base step. Refinement studies call this
/// with strides {16, 8, 1} on the identical skeleton.
#[allow(clippy::too_many_arguments)]
pub fn simulate_on_skeleton(
    basis: &SpectralBasis,
    triple: &OperatorTriple,
    gop: &WienerOperator,
    model: &NoiseModel,
    sim: &SimConfig,
    skeleton: &NoiseSkeleton,
    stride: usize,
    path: u64,
) -> Result<TrajectoryRecord> {
    sim.validate(basis)?;
    triple.check_basis(basis)?;
    gop.check_basis(basis)?;
    let n = sim.n;
    let eff_dt = stride as f64 * skeleton.t_end() / skeleton.base_steps() as f64;
    let lambda_max = basis.lambda(n - 1);
    if !sim.semi_implicit && eff_dt * lambda_max >= 1.0 {
        return Err(Error::config(
            "galerkin.dt",
            format!(
                "explicit step is unstable: dt·λ_max = {:.3} ≥ 1 at level {n}; \
                 reduce dt or enable semi_implicit",
                eff_dt * lambda_max
            ),
        ));
    }

    let grid = skeleton.step_grid(stride)?;
    let mut u: Vec<f64> = (0..n)
        .map(|i| sim.u0.get(i).copied().unwrap_or(0.0))
        .collect();
    let mut states = Vec::with_capacity(grid.len());
    let mut dws = Vec::with_capacity(grid.len() - 1);
    let mut markers = Vec::new();
    let mut tau = None;
    let mut cutoff_activations = 0usize;

    let h_norm = |x: &[f64]| x.iter().map(|c| c * c).sum::<f64>().sqrt();
    if h_norm(&u) >= sim.r_stop {
        tau = Some(0.0);
    }
    states.push(u.clone());

    for g in 1..grid.len() {
        let (t0, t1) = (grid[g - 1], grid[g]);
        let dw = skeleton.wiener_between(t0, t1)?;
        let events = skeleton.jumps_at(t1);
        let outcome = step(
            basis, triple, gop, &model.jumps, sim, &u, t0, t1, &dw, events,
        )?;
        if outcome.cutoff_active {
            cutoff_activations += 1;
        }
        u = outcome.state;
        markers.extend(outcome.markers);
        if tau.is_none() && h_norm(&u) >= sim.r_stop {
            tau = Some(t1);
        }
        states.push(u.clone());
        dws.push(dw);
    }

    Ok(TrajectoryRecord {
        basis_id: basis.id(),
        level: n,
        times: grid,
        states,
        dw: dws,
        jumps: markers,
        tau,
        cutoff_activations,
        seed: sim.seed,
        path,
    })
}

/// Full path at the configured base step: samples the skeleton from
/// (seed, path) and integrates at stride 1.
pub fn simulate_path(
    basis: &SpectralBasis,
    triple: &OperatorTriple,
    model: &NoiseModel,
    sim: &SimConfig,
    path: u64,
) -> Result<TrajectoryRecord> {
    sim.validate(basis)?;
    let gop = model.assemble_wiener(basis)?;
    let skeleton = NoiseSkeleton::sample(model, sim.t_end, sim.base_steps(), sim.seed, path)?;
    simulate_on_skeleton(basis, triple, &gop, model, sim, &skeleton, 1, path)
}
