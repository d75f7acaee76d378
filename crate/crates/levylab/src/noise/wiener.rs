//! Truncated cylindrical Wiener noise G(u) dW = Σ_i [(b_i·∇)u + c_i u
//! + g_i] dβ_i in coordinates, and the coercivity certificate
//! 2⟨Au,u⟩ − ‖G(u)‖²_HS ≥ a‖u‖² − λ|u|_H² − κ.
//!
//! A constant advection field maps a trig mode to its opposite-phase
//! partner with factor ±(b·κ), so every direction matrix is sparse:
//! one partner entry plus the multiplier diagonal per column. Columns
//! whose partner falls outside the basis lose that entry, which is
//! exactly the Galerkin projection P_n G.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::basis::{Phase, SpectralBasis};
use crate::error::{Error, Result};
use crate::state::{norm_dirichlet_sq, GalerkinState};
use crate::util::fmt_g17;

/// One Wiener direction: advection field `b`, scalar multiplier `c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GDirection {
    #[serde(default)]
    pub b: [f64; 3],
    #[serde(default)]
    pub c: f64,
}

/// Wiener coefficient tables: K directions plus a shared additive
/// amplitude feeding the inhomogeneous part of G.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WienerSpec {
    #[serde(default)]
    pub directions: Vec<GDirection>,
    #[serde(default)]
    pub additive: f64,
}

impl WienerSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.additive.is_finite() || self.additive < 0.0 {
            return Err(Error::config(
                "noise.wiener.additive",
                "additive amplitude must be finite and nonnegative",
            ));
        }
        for dir in &self.directions {
            if dir.b.iter().any(|x| !x.is_finite()) || !dir.c.is_finite() {
                return Err(Error::config(
                    "noise.wiener.directions",
                    "coefficients must be finite",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
struct MatEntry {
    row: u32,
    col: u32,
    val: f64,
}

/// The Wiener coefficients assembled on a basis at level N.
#[derive(Clone, Debug)]
pub struct WienerOperator {
    directions: Vec<GDirection>,
    mats: Vec<Vec<MatEntry>>,
    /// Additive column g_i per direction (length N each).
    adds: Vec<Vec<f64>>,
    level: usize,
    basis_id: u64,
}

impl WienerOperator {
    /// Assembles the direction matrices on the given basis. The
    /// additive amplitude seeds direction i with `additive · e_{i+1}`
    /// so a nonzero G(0) exercises the growth assumption.
    pub fn assemble(basis: &SpectralBasis, spec: &WienerSpec) -> Result<WienerOperator> {
        spec.validate()?;
        let directions = &spec.directions;
        let additive = spec.additive;
        let n = basis.len();
        let mut mats = Vec::with_capacity(directions.len());
        let mut adds = Vec::with_capacity(directions.len());
        for (di, dir) in directions.iter().enumerate() {
            let mut entries = Vec::new();
            for j in 0..n {
                let mode = basis.mode(j);
                if dir.c != 0.0 {
                    entries.push(MatEntry {
                        row: j as u32,
                        col: j as u32,
                        val: dir.c,
                    });
                }
                let bk: f64 = (0..3).map(|a| dir.b[a] * mode.freq[a]).sum();
                if bk == 0.0 {
                    continue;
                }
                // (b·∇)[amp·cos(θ)·P] = -(b·κ)[amp·sin(θ)·P]; sin maps
                // back with +(b·κ).
                let want = match mode.phase {
                    Phase::Cos => Phase::Sin,
                    Phase::Sin => Phase::Cos,
                };
                let sign = match mode.phase {
                    Phase::Cos => -1.0,
                    Phase::Sin => 1.0,
                };
                let partner = (0..n).find(|&l| {
                    let ml = basis.mode(l);
                    ml.block == mode.block
                        && ml.k == mode.k
                        && ml.pol_index == mode.pol_index
                        && ml.phase == want
                });
                if let Some(row) = partner {
                    entries.push(MatEntry {
                        row: row as u32,
                        col: j as u32,
                        val: sign * bk,
                    });
                }
            }
            mats.push(entries);
            let mut g = vec![0.0; n];
            if additive > 0.0 && n > 0 {
                g[(di + 1) % n] = additive;
            }
            adds.push(g);
        }
        Ok(WienerOperator {
            directions: directions.to_vec(),
            mats,
            adds,
            level: n,
            basis_id: basis.id(),
        })
    }

    pub fn direction_count(&self) -> usize {
        self.directions.len()
    }

    pub fn directions(&self) -> &[GDirection] {
        &self.directions
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn check_basis(&self, basis: &SpectralBasis) -> Result<()> {
        if self.basis_id != basis.id() {
            return Err(Error::Contract(
                "wiener operator and basis come from different constructions".into(),
            ));
        }
        Ok(())
    }

    /// Column i of the noise at u, truncated to dimension n:
    /// P_n(M_i u + g_i).
    pub fn column(&self, u: &GalerkinState, i: usize, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        let x = u.coeffs();
        let nn = n.min(x.len()) as u32;
        for e in &self.mats[i] {
            if e.row < n as u32 && e.col < nn {
                out[e.row as usize] += e.val * x[e.col as usize];
            }
        }
        for (o, g) in out.iter_mut().zip(&self.adds[i]) {
            *o += g;
        }
        out
    }

    /// G(u) dW = Σ_i (M_i u + g_i)·dW_i, truncated to dimension n.
    pub fn apply(
        &self,
        basis: &SpectralBasis,
        u: &GalerkinState,
        dw: &[f64],
        n: usize,
    ) -> Result<GalerkinState> {
        self.check_basis(basis)?;
        u.check_basis(basis)?;
        if dw.len() != self.directions.len() {
            return Err(Error::Contract(format!(
                "increment has {} components, spec has {} directions",
                dw.len(),
                self.directions.len()
            )));
        }
        let mut out = vec![0.0; n];
        for (i, &w) in dw.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let col = self.column(u, i, n);
            for (o, c) in out.iter_mut().zip(&col) {
                *o += w * c;
            }
        }
        Ok(basis.state(out, u.time()))
    }

    /// ‖P_n G(u)‖²_HS = Σ_i |P_n(M_i u + g_i)|_H².
    pub fn hs_norm_sq(&self, u: &GalerkinState, n: usize) -> f64 {
        (0..self.directions.len())
            .map(|i| {
                self.column(u, i, n)
                    .iter()
                    .map(|c| c * c)
                    .sum::<f64>()
            })
            .sum()
    }

    /// ‖G(u) − G(v)‖²_HS (additive parts cancel; linear in u − v).
    pub fn hs_diff_sq(&self, u: &GalerkinState, v: &GalerkinState, n: usize) -> f64 {
        (0..self.directions.len())
            .map(|i| {
                let cu = self.column(u, i, n);
                let cv = self.column(v, i, n);
                cu.iter().zip(&cv).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            })
            .sum()
    }
}

/// K independent N(0, dt) Gaussian increments.
pub fn sample_wiener_increment(k: usize, dt: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if dt == 0.0 {
        return vec![0.0; k];
    }
    assert!(dt > 0.0, "negative time step");
    let normal = Normal::new(0.0, dt.sqrt()).expect("positive std");
    (0..k).map(|_| normal.sample(rng)).collect()
}

/// Coercivity certificate: 2⟨Au,u⟩ − ‖G(u)‖²_HS ≥ a‖u‖² − λ|u|_H² − κ
/// on all probes, with ‖·‖ the Dirichlet form and the admissible
/// window a ∈ (2 − 2/(3+γ), 2].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityCertificate {
    pub a: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub gamma: f64,
}

impl CoercivityCertificate {
    pub fn window_floor(gamma: f64) -> f64 {
        2.0 - 2.0 / (3.0 + gamma)
    }

    pub fn in_window(&self) -> bool {
        self.a > Self::window_floor(self.gamma) && self.a <= 2.0
    }

    pub fn write_text(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "a = {}", fmt_g17(self.a))?;
        writeln!(out, "lambda = {}", fmt_g17(self.lambda))?;
        writeln!(out, "kappa = {}", fmt_g17(self.kappa))?;
        writeln!(out, "gamma = {}", fmt_g17(self.gamma))?;
        writeln!(
            out,
            "window = ({}, 2]",
            fmt_g17(Self::window_floor(self.gamma))
        )?;
        Ok(())
    }
}

/// Probe family for the coercivity sweep: every single mode at signed
/// amplitudes (both cross-term signs against the additive part), plus
/// dense and banded random states at several amplitudes.
fn coercivity_probes(
    basis: &SpectralBasis,
    n: usize,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<GalerkinState> {
    let mut probes = Vec::new();
    for i in 0..n {
        for amp in [0.5, 1.0, 4.0, -0.5, -1.0, -4.0] {
            let mut coeffs = vec![0.0; n];
            coeffs[i] = amp;
            probes.push(basis.state(coeffs, 0.0));
        }
    }
    for trial in 0..count {
        let mut coeffs = vec![0.0; n];
        let (lo, hi) = match trial % 3 {
            0 => (0, n),
            1 => (0, n / 2),
            _ => (n / 2, n),
        };
        for c in coeffs.iter_mut().take(hi).skip(lo) {
            *c = rng.gen_range(-1.0..1.0);
        }
        let amp = [0.5, 1.0, 4.0][trial % 3];
        for c in coeffs.iter_mut() {
            *c *= amp;
        }
        probes.push(basis.state(coeffs, 0.0));
    }
    probes
}

/// Sweeps a from 2 downward and accepts the first value whose
/// requirement profile is frequency-stable: regressing the per-probe
/// requirement (a·v − d)/h on the probe frequency v/h must give a
/// slope within the sweep resolution. A positive slope means the λ
/// forced by the probes grows with the cutoff frequency, so the pair
/// (a, λ) would certify nothing in the limit n → ∞.
pub fn certify_coercivity(
    op: &WienerOperator,
    basis: &SpectralBasis,
    gamma: f64,
    probes: usize,
    seed: u64,
) -> Result<CoercivityCertificate> {
    if probes < 100 {
        return Err(Error::Contract(
            "coercivity certification needs at least 100 probes".into(),
        ));
    }
    op.check_basis(basis)?;
    let n = basis.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probe_set = coercivity_probes(basis, n, probes, &mut rng);
    let zero = basis.state(vec![0.0; n], 0.0);
    let kappa = op.hs_norm_sq(&zero, n);

    // Per probe: v = ((u,u)), h = |u|², d = 2((u,u)) − ‖G(u)‖² + κ.
    let data: Vec<(f64, f64, f64)> = probe_set
        .iter()
        .map(|u| {
            let v = norm_dirichlet_sq(basis, u);
            let h = u.norm_h_sq();
            let d = 2.0 * v - op.hs_norm_sq(u, n) + kappa;
            (v, h, d)
        })
        .filter(|&(_, h, _)| h > 1e-12)
        .collect();

    let requirement_slope = |a: f64| -> f64 {
        let m = data.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for &(v, h, d) in &data {
            let x = v / h;
            let y = (a * v - d) / h;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let denom = sxx - sx * sx / m;
        if denom <= 1e-9 {
            // All probes at one frequency: no trend to measure.
            return 0.0;
        }
        (sxy - sx * sy / m) / denom
    };
    let required_lambda = |a: f64| -> f64 {
        let mut lam = 0.0f64;
        for &(v, h, d) in &data {
            lam = lam.max((a * v - d) / h);
        }
        lam.max(0.0)
    };

    let floor = CoercivityCertificate::window_floor(gamma);
    let step = 0.002;
    let slope_tol = 1.5 * step;
    let mut a = 2.0;
    while a > floor {
        if requirement_slope(a) <= slope_tol {
            return Ok(CoercivityCertificate {
                a,
                lambda: required_lambda(a),
                kappa,
                gamma,
            });
        }
        a -= step;
    }
    Err(Error::Certificate {
        name: "coercivity".into(),
        msg: format!(
            "no frequency-stable coercivity constant found in the window ({:.4}, 2]: \
             the noise gradient is too strong",
            floor
        ),
    })
}
