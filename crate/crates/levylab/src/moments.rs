//! Ensemble moment estimation across a Galerkin-level sweep.
//!
//! The theory gives n-uniform bounds on E[sup_t |u_n|_H^p] and
//! E ∫‖u_n‖²_V dt. At desk scale the testable surrogate is uniformity:
//! the estimates across the sweep must stay within a configured ratio
//! between successive levels. Per-path seeds are fixed by path index,
//! so every level sees the same driving noise and the reduction is
//! identical for serial and parallel execution.

use rayon::prelude::*;

use crate::basis::SpectralBasis;
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::sim::{simulate_path, SimConfig, TrajectoryRecord};
use crate::state::norm_v_sq;
use crate::triple::OperatorTriple;
use crate::util::{fmt_g17, ksum, mean_stderr};

/// One estimate row: `n, p, estimate, stderr, M`. For the V-integral
/// rows p is the (quadratic) exponent of the norm.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentRow {
    pub n: usize,
    pub p: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub paths: usize,
}

/// Worst successive-level ratio per statistic family and the verdict.
#[derive(Clone, Debug)]
pub struct UniformityVerdict {
    pub ratio_limit: f64,
    pub worst_ratio: f64,
    pub worst_family: String,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct MomentReport {
    /// E[sup_t |u|_H^p] rows, one per (level, order).
    pub sup_rows: Vec<MomentRow>,
    /// E ∫₀ᵀ ‖u‖²_V dt rows, one per level.
    pub v_rows: Vec<MomentRow>,
    pub aborted_paths: usize,
    pub total_runs: usize,
    pub uniformity: UniformityVerdict,
}

impl MomentReport {
    pub fn any_aborts(&self) -> bool {
        self.aborted_paths > 0
    }

    pub fn pass(&self) -> bool {
        self.uniformity.pass && !self.any_aborts()
    }

    pub fn write_text(&self, out: &mut impl std::io::Write) -> Result<()> {
        writeln!(out, "# sup_h_moment: n, p, estimate, stderr, M")?;
        for r in &self.sup_rows {
            writeln!(
                out,
                "{}, {}, {}, {}, {}",
                r.n,
                fmt_g17(r.p),
                fmt_g17(r.estimate),
                fmt_g17(r.stderr),
                r.paths
            )?;
        }
        writeln!(out, "# v_integral: n, p, estimate, stderr, M")?;
        for r in &self.v_rows {
            writeln!(
                out,
                "{}, {}, {}, {}, {}",
                r.n,
                fmt_g17(r.p),
                fmt_g17(r.estimate),
                fmt_g17(r.stderr),
                r.paths
            )?;
        }
        writeln!(
            out,
            "# uniformity: worst_ratio = {} ({}), limit = {}, aborted = {}, pass = {}",
            fmt_g17(self.uniformity.worst_ratio),
            self.uniformity.worst_family,
            fmt_g17(self.uniformity.ratio_limit),
            self.aborted_paths,
            self.pass()
        )?;
        Ok(())
    }
}

/// Path statistics entering the reduction.
struct PathStats {
    sup_hsq: f64,
    v_integral: f64,
}

fn path_stats(basis: &SpectralBasis, rec: &TrajectoryRecord) -> PathStats {
    let hsq = |x: &[f64]| x.iter().map(|c| c * c).sum::<f64>();
    // The càdlàg supremum sees left limits at jump times too.
    let mut sup = rec.states.iter().map(|s| hsq(s)).fold(0.0f64, f64::max);
    sup = rec
        .jumps
        .iter()
        .map(|m| hsq(&m.left))
        .fold(sup, f64::max);
    let mut v = Vec::with_capacity(rec.times.len() - 1);
    for g in 0..rec.times.len() - 1 {
        let h = rec.times[g + 1] - rec.times[g];
        let state = basis.state(rec.states[g].clone(), rec.times[g]);
        v.push(h * norm_v_sq(basis, &state));
    }
    PathStats {
        sup_hsq: sup,
        v_integral: ksum(&v),
    }
}

/// Runs the level sweep and reduces the ensemble. Path k at every
/// level reuses the seed substream k, so levels face identical noise;
/// the reduction order is by path index regardless of `parallel`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_moments(
    basis: &SpectralBasis,
    triple: &OperatorTriple,
    model: &NoiseModel,
    sim_template: &SimConfig,
    levels: &[usize],
    paths: usize,
    orders: &[f64],
    uniformity_ratio: f64,
    parallel: bool,
) -> Result<MomentReport> {
    if paths < 50 {
        return Err(Error::Contract(format!(
            "moment estimation needs at least 50 paths, got {paths}"
        )));
    }
    if levels.is_empty() || orders.is_empty() {
        return Err(Error::Contract(
            "moment estimation needs at least one level and one order".into(),
        ));
    }
    if !(uniformity_ratio > 1.0) {
        return Err(Error::Contract(
            "uniformity ratio must exceed 1".into(),
        ));
    }

    let mut sup_rows = Vec::new();
    let mut v_rows = Vec::new();
    let mut aborted = 0usize;
    let mut total = 0usize;

    for &n in levels {
        let mut sim = sim_template.clone();
        sim.n = n;
        sim.validate(basis)?;
        let run = |path: u64| -> Result<PathStats> {
            let rec = simulate_path(basis, triple, model, &sim, path)?;
            Ok(path_stats(basis, &rec))
        };
        let results: Vec<Result<PathStats>> = if parallel {
            (0..paths as u64).into_par_iter().map(run).collect()
        } else {
            (0..paths as u64).map(run).collect()
        };
        total += paths;

        let mut sup_vals = Vec::with_capacity(paths);
        let mut v_vals = Vec::with_capacity(paths);
        for r in results {
            match r {
                Ok(s) => {
                    sup_vals.push(s.sup_hsq);
                    v_vals.push(s.v_integral);
                }
                Err(Error::Abort { .. }) => aborted += 1,
                Err(e) => return Err(e),
            }
        }
        if sup_vals.is_empty() {
            return Err(Error::Contract(format!(
                "every path aborted at level {n}; no estimates possible"
            )));
        }
        for &p in orders {
            let powered: Vec<f64> = sup_vals.iter().map(|&s| s.powf(0.5 * p)).collect();
            let (est, se) = mean_stderr(&powered);
            sup_rows.push(MomentRow {
                n,
                p,
                estimate: est,
                stderr: se,
                paths: sup_vals.len(),
            });
        }
        let (est, se) = mean_stderr(&v_vals);
        v_rows.push(MomentRow {
            n,
            p: 2.0,
            estimate: est,
            stderr: se,
            paths: v_vals.len(),
        });
    }

    let uniformity = uniformity_verdict(&sup_rows, &v_rows, orders, uniformity_ratio);
    Ok(MomentReport {
        sup_rows,
        v_rows,
        aborted_paths: aborted,
        total_runs: total,
        uniformity,
    })
}

fn uniformity_verdict(
    sup_rows: &[MomentRow],
    v_rows: &[MomentRow],
    orders: &[f64],
    limit: f64,
) -> UniformityVerdict {
    let mut worst = 1.0f64;
    let mut family = String::from("none");
    let mut track = |name: String, series: Vec<&MomentRow>| {
        for w in series.windows(2) {
            let (a, b) = (w[0].estimate, w[1].estimate);
            if a <= 0.0 || b <= 0.0 {
                continue;
            }
            let r = (a / b).max(b / a);
            if r > worst {
                worst = r;
                family = format!("{name}: n {} vs {}", w[0].n, w[1].n);
            }
        }
    };
    for &p in orders {
        let series: Vec<&MomentRow> = sup_rows.iter().filter(|r| r.p == p).collect();
        track(format!("sup_h p={p}"), series);
    }
    track("v_integral".into(), v_rows.iter().collect());
    UniformityVerdict {
        ratio_limit: limit,
        worst_ratio: worst,
        worst_family: family,
        pass: worst < limit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_basis;
    use crate::domain::BoxDomain;
    use crate::sim::Forcing;
    use crate::system::SystemSpec;
    use crate::triple::assemble_triple;

    fn basis(n: usize) -> SpectralBasis {
        let dom = BoxDomain::standard(2).unwrap();
        build_basis(&dom, &SystemSpec::nse(), n, 3.0).unwrap()
    }

    fn sim_template(dt: f64, t_end: f64, u0: Vec<f64>) -> SimConfig {
        SimConfig {
            n: 4,
            dt,
            t_end,
            u0,
            forcing: Forcing::default(),
            r_stop: 1e6,
            cutoff_level: 16.0,
            disable_cutoff: false,
            semi_implicit: false,
            seed: 77,
            fault: None,
        }
    }

    fn null_noise() -> NoiseModel {
        let mut m = NoiseModel::reference();
        m.wiener.directions.clear();
        m.wiener.additive = 0.0;
        m.jumps.total_rate = 0.0;
        m
    }

    #[test]
    fn decay_sup_moment_is_initial_energy_exactly() {
        let b = basis(16);
        let triple = assemble_triple(&b, &SystemSpec::nse()).unwrap();
        let model = null_noise();
        // Dyadic energies so the ensemble mean of identical values is
        // bitwise exact.
        let u0 = vec![0.5, 0.25, 0.125, 0.25];
        let h0sq = 0.25 + 0.0625 + 0.015625 + 0.0625;
        let sim = sim_template(1e-2, 0.5, u0);
        let rep = estimate_moments(
            &b,
            &triple,
            &model,
            &sim,
            &[4, 8, 16],
            50,
            &[2.0],
            1.5,
            false,
        )
        .unwrap();
        assert_eq!(rep.sup_rows.len(), 3);
        for row in &rep.sup_rows {
            assert_eq!(row.estimate, h0sq, "decay sup must be |u0|² at n={}", row.n);
            assert_eq!(row.stderr, 0.0);
        }
        assert_eq!(rep.aborted_paths, 0);
        assert!(rep.uniformity.pass);
        assert_eq!(rep.uniformity.worst_ratio, 1.0);
    }

    #[test]
    fn v_integral_matches_linear_closed_form_to_first_order() {
        let b = basis(8);
        let triple = crate::triple::assemble_stokes_triple(&b);
        let model = null_noise();
        let dt = 1e-3;
        let t_end = 1.0;
        let u0 = vec![0.5, -0.25, 0.25, 0.125];
        let sim = sim_template(dt, t_end, u0.clone());
        let rep =
            estimate_moments(&b, &triple, &model, &sim, &[8], 50, &[2.0], 1.5, false).unwrap();
        let est = rep.v_rows[0].estimate;
        // Continuous closed form Σ (1+λ_k)|u₀ₖ|² (1−e^{−2λ_k T})/(2λ_k).
        let mut exact = 0.0;
        let mut scale = 0.0;
        for (k, &x) in u0.iter().enumerate() {
            let lam = b.lambda(k);
            exact += (1.0 + lam) * x * x * (1.0 - (-2.0 * lam * t_end).exp()) / (2.0 * lam);
            scale += (1.0 + lam) * lam * x * x;
        }
        assert!(
            (est - exact).abs() <= 5.0 * scale * dt,
            "V-integral {est} vs closed form {exact} beyond O(dt)"
        );
        // Discrete left-rectangle geometric-series oracle, tight.
        let mut discrete = 0.0;
        for (k, &x) in u0.iter().enumerate() {
            let lam = b.lambda(k);
            let rho = 1.0 - lam * dt;
            let n_steps = (t_end / dt).round() as i32;
            discrete +=
                (1.0 + lam) * x * x * dt * (1.0 - rho.powi(2 * n_steps)) / (1.0 - rho * rho);
        }
        assert!(
            ((est - discrete) / discrete).abs() < 1e-6,
            "V-integral {est} vs discrete oracle {discrete}"
        );
    }

    #[test]
    fn reference_sweep_is_uniform_and_parallel_matches_serial() {
        let b = basis(16);
        let triple = assemble_triple(&b, &SystemSpec::nse()).unwrap();
        let model = NoiseModel::reference();
        let mut sim = sim_template(2e-3, 1.0, vec![0.4, -0.3, 0.2, 0.1]);
        sim.r_stop = 2.0;
        let serial = estimate_moments(
            &b,
            &triple,
            &model,
            &sim,
            &[4, 8, 16],
            64,
            &[2.0, 4.0],
            1.5,
            false,
        )
        .unwrap();
        assert_eq!(serial.aborted_paths, 0);
        assert!(
            serial.uniformity.pass,
            "uniformity failed: {:?}",
            serial.uniformity
        );
        let parallel = estimate_moments(
            &b,
            &triple,
            &model,
            &sim,
            &[4, 8, 16],
            64,
            &[2.0, 4.0],
            1.5,
            true,
        )
        .unwrap();
        assert_eq!(serial.sup_rows, parallel.sup_rows);
        assert_eq!(serial.v_rows, parallel.v_rows);
    }

    #[test]
    fn unstable_config_counts_aborts() {
        let b = basis(8);
        let triple = assemble_triple(&b, &SystemSpec::nse()).unwrap();
        let model = null_noise();
        // Huge initial data with the cutoff disabled: the quadratic
        // term amplifies the explicit step into overflow. Mass on the
        // higher modes matters: the lowest shell alone is
        // self-convection free.
        let mut sim = sim_template(
            0.05,
            2.0,
            vec![
                1200.0, -1100.0, 1000.0, 900.0, 800.0, -700.0, 600.0, 500.0,
            ],
        );
        sim.disable_cutoff = true;
        let first = simulate_path(&b, &triple, &model, &{
            let mut s = sim.clone();
            s.n = 8;
            s
        }, 0);
        assert!(
            matches!(first, Err(Error::Abort { .. })),
            "expected a blow-up abort, got {first:?}"
        );
        let rep =
            estimate_moments(&b, &triple, &model, &sim, &[8], 50, &[2.0], 1.5, false);
        match rep {
            Err(Error::Contract(msg)) => assert!(msg.contains("aborted")),
            Ok(r) => {
                assert!(r.aborted_paths > 0);
                assert!(r.any_aborts());
            }
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn preconditions_are_enforced() {
        let b = basis(4);
        let triple = assemble_triple(&b, &SystemSpec::nse()).unwrap();
        let model = null_noise();
        let sim = sim_template(1e-2, 0.1, vec![0.1; 4]);
        assert!(
            estimate_moments(&b, &triple, &model, &sim, &[4], 10, &[2.0], 1.5, false).is_err()
        );
        assert!(
            estimate_moments(&b, &triple, &model, &sim, &[], 50, &[2.0], 1.5, false).is_err()
        );
        assert!(
            estimate_moments(&b, &triple, &model, &sim, &[4], 50, &[2.0], 0.9, false).is_err()
        );
    }
}
