//! Cadlag-path diagnostics: the Skorokhod modulus w_{[0,T]}(u, delta),
//! the Aldous increment statistic after stopping times, and the local
//! space-time seminorms p_{T,R}.
//!
//! The modulus takes the infimum, over breakpoint sequences with
//! spacing >= delta, of the largest oscillation within one segment.
//! Segments are right-open, so a jump sitting exactly on a breakpoint
//! costs nothing; that is what separates this modulus from the
//! continuous modulus of continuity. On a finite grid the infimum is
//! an exact minimum over breakpoint subsets of the grid, found here by
//! dynamic programming.

use std::io::Write;

use crate::basis::{seminorm_local, GridField, SpectralBasis};
use crate::domain::LocalWindow;
use crate::error::{Error, Result};
use crate::sim::TrajectoryRecord;
use crate::util::{fmt_g17, KahanSum};

/// Distance used on path values. H is the default for the modulus
/// (stronger); the U'-weighted variant is the norm the increment
/// statistic after stopping times is phrased in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathNorm {
    H,
    UDual,
}

impl PathNorm {
    pub fn label(self) -> &'static str {
        match self {
            PathNorm::H => "h",
            PathNorm::UDual => "u_dual",
        }
    }

    /// Coordinate weights w_i with dist(a, b)^2 = sum_i w_i (a_i - b_i)^2.
    fn weights(self, basis: &SpectralBasis, n: usize) -> Vec<f64> {
        match self {
            PathNorm::H => vec![1.0; n],
            PathNorm::UDual => {
                let m = basis.sobolev_order();
                (0..n).map(|i| basis.lambda(i).powf(-m)).collect()
            }
        }
    }
}

fn dist(wts: &[f64], a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = KahanSum::new();
    for i in 0..a.len() {
        let d = a[i] - b[i];
        acc.add(wts[i] * d * d);
    }
    acc.value().max(0.0).sqrt()
}

fn validate_record(basis: &SpectralBasis, rec: &TrajectoryRecord) -> Result<()> {
    if rec.basis_id != basis.id() {
        return Err(Error::Contract(
            "trajectory and basis come from different constructions".into(),
        ));
    }
    if rec.times.len() < 2 || rec.times.len() != rec.states.len() {
        return Err(Error::Contract(
            "trajectory needs at least two samples with matching times and states".into(),
        ));
    }
    if rec.level > basis.len() {
        return Err(Error::Contract(
            "trajectory level exceeds the basis size".into(),
        ));
    }
    Ok(())
}

/// Path samples augmented with the left limit at each jump time,
/// ordered so a left limit at t precedes the value at t. Returns the
/// ordered value list plus, per grid index j, the position of the
/// regular sample at times[j]. A segment [a, b) of the modulus then
/// covers positions pos[a]..pos[b]: the value at the right breakpoint
/// stays out while its left limit stays in, which is exactly the
/// right-open convention on the cadlag interpolant.
fn ext_samples(rec: &TrajectoryRecord) -> (Vec<&[f64]>, Vec<usize>) {
    let mut vals: Vec<&[f64]> = Vec::with_capacity(rec.times.len() + rec.jumps.len());
    let mut pos = Vec::with_capacity(rec.times.len());
    for (&t, st) in rec.times.iter().zip(&rec.states) {
        if let Some(first) = rec.jump_markers_at(t).next() {
            vals.push(first.left.as_slice());
        }
        pos.push(vals.len());
        vals.push(st.as_slice());
    }
    (vals, pos)
}

/// Exact modulus of the sampled path, minimized over breakpoint
/// subsets of its own grid with spacing >= delta. When delta exceeds
/// the horizon no admissible partition exists and the single-interval
/// oscillation is returned instead.
pub fn modulus(
    basis: &SpectralBasis,
    rec: &TrajectoryRecord,
    delta: f64,
    norm: PathNorm,
) -> Result<f64> {
    validate_record(basis, rec)?;
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::Contract(
            "modulus needs a positive finite delta".into(),
        ));
    }
    let wts = norm.weights(basis, rec.level);
    let times = &rec.times;
    let m = times.len() - 1;
    let (vals, pos) = ext_samples(rec);

    // best[b]: smallest achievable worst-segment oscillation over
    // partitions of [0, times[b]] with breakpoints on the grid and all
    // spacings >= delta. Unreachable prefixes stay infinite.
    let mut best = vec![f64::INFINITY; m + 1];
    best[0] = 0.0;
    for b in 1..=m {
        let mut cur = f64::INFINITY;
        let mut diam = 0.0f64;
        // Walk the segment start a downward while growing the
        // oscillation of positions pos[a]..pos[b]. It only grows as a
        // decreases, so once it reaches the best candidate found so
        // far no smaller a can improve on it.
        'starts: for a in (0..b).rev() {
            for i in (pos[a]..pos[a + 1]).rev() {
                for j in (i + 1)..pos[b] {
                    let d = dist(&wts, vals[i], vals[j]);
                    if d > diam {
                        diam = d;
                        if diam >= cur {
                            break 'starts;
                        }
                    }
                }
            }
            if times[b] - times[a] >= delta && best[a].is_finite() {
                let cand = if best[a] > diam { best[a] } else { diam };
                if cand < cur {
                    cur = cand;
                }
            }
        }
        best[b] = cur;
    }
    if best[m].is_finite() {
        return Ok(best[m]);
    }
    let mut diam = 0.0f64;
    for i in pos[0]..pos[m] {
        for j in (i + 1)..pos[m] {
            let d = dist(&wts, vals[i], vals[j]);
            if d > diam {
                diam = d;
            }
        }
    }
    Ok(diam)
}

/// Modulus sampled on an ascending delta grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulusCurve {
    pub norm: PathNorm,
    /// (delta, w) in delta order.
    pub points: Vec<(f64, f64)>,
}

impl ModulusCurve {
    /// Exact on the DP output: enlarging delta shrinks the partition
    /// set, so no floating-point slack is needed.
    pub fn nondecreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].1 >= w[0].1)
    }

    pub fn write_text(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "# delta, w")?;
        for &(delta, w) in &self.points {
            writeln!(out, "{}, {}", fmt_g17(delta), fmt_g17(w))?;
        }
        Ok(())
    }
}

pub fn modulus_curve(
    basis: &SpectralBasis,
    rec: &TrajectoryRecord,
    deltas: &[f64],
    norm: PathNorm,
) -> Result<ModulusCurve> {
    if deltas.is_empty() {
        return Err(Error::Contract("modulus curve needs a delta grid".into()));
    }
    if deltas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Contract(
            "modulus curve needs a strictly ascending delta grid".into(),
        ));
    }
    let mut points = Vec::with_capacity(deltas.len());
    for &d in deltas {
        points.push((d, modulus(basis, rec, d, norm)?));
    }
    Ok(ModulusCurve { norm, points })
}

/// A grid-measurable stopping rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StoppingRule {
    /// First grid time with |u|_H >= level; the horizon when the level
    /// is never reached.
    FirstHitting { level: f64 },
    /// The deterministic time min(t, T). Constants are stopping times,
    /// and they probe increments started anywhere along the path.
    FixedTime { t: f64 },
}

impl StoppingRule {
    fn is_finite(self) -> bool {
        match self {
            StoppingRule::FirstHitting { level } => level.is_finite(),
            StoppingRule::FixedTime { t } => t.is_finite() && t >= 0.0,
        }
    }

    fn stop_index(self, rec: &TrajectoryRecord) -> usize {
        match self {
            StoppingRule::FirstHitting { level } => rec
                .states
                .iter()
                .position(|s| {
                    let mut acc = KahanSum::new();
                    for &x in s {
                        acc.add(x * x);
                    }
                    acc.value().sqrt() >= level
                })
                .unwrap_or(rec.times.len() - 1),
            StoppingRule::FixedTime { t } => {
                (rec.times.partition_point(|&s| s <= t)).saturating_sub(1)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AldousRow {
    pub theta: f64,
    pub eta: f64,
    pub prob: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AldousFit {
    pub c: f64,
    pub beta: f64,
}

/// Empirical Aldous table: worst case over the supplied stopping
/// rules of P(|u(tau+theta) - u(tau)|_{U'} >= eta), plus the per-theta
/// alpha-moments and their log-log fit moment ~ C theta^beta. The fit
/// is absent when fewer than two (theta, moment) pairs admit logs.
#[derive(Clone, Debug)]
pub struct AldousReport {
    pub alpha: f64,
    pub rows: Vec<AldousRow>,
    /// (theta, worst-case alpha-moment), the fit input.
    pub moments: Vec<(f64, f64)>,
    pub fit: Option<AldousFit>,
    pub paths: usize,
}

impl AldousReport {
    /// The exceedance probability can only drop as eta grows; exact on
    /// empirical frequencies.
    pub fn nonincreasing_in_eta(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].theta != w[0].theta || w[1].prob <= w[0].prob)
    }

    pub fn write_text(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "# theta, eta, prob")?;
        for r in &self.rows {
            writeln!(
                out,
                "{}, {}, {}",
                fmt_g17(r.theta),
                fmt_g17(r.eta),
                fmt_g17(r.prob)
            )?;
        }
        writeln!(out, "# moment (alpha = {}): theta, value", fmt_g17(self.alpha))?;
        for &(theta, m) in &self.moments {
            writeln!(out, "# {}, {}", fmt_g17(theta), fmt_g17(m))?;
        }
        match self.fit {
            Some(f) => writeln!(
                out,
                "# fit: c = {}, beta = {}",
                fmt_g17(f.c),
                fmt_g17(f.beta)
            )?,
            None => writeln!(out, "# fit: unavailable (degenerate moments)")?,
        }
        Ok(())
    }
}

fn loglog_fit(pts: &[(f64, f64)]) -> Option<AldousFit> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let beta = sxy / sxx;
    let c = (my - beta * mx).exp();
    Some(AldousFit { c, beta })
}

/// Empirical increment statistic after stopping times. For each rule
/// and theta the path is read at tau and at the last grid time <=
/// tau + theta (the cadlag value of the sampled skeleton, clamped at
/// the horizon); the table and the alpha-moments take the worst case
/// over rules, mirroring the sup over stopping-time sequences in the
/// condition being probed.
pub fn aldous_statistic(
    basis: &SpectralBasis,
    ensemble: &[TrajectoryRecord],
    rules: &[StoppingRule],
    thetas: &[f64],
    etas: &[f64],
    alpha: f64,
) -> Result<AldousReport> {
    if ensemble.is_empty() || rules.is_empty() || thetas.is_empty() || etas.is_empty() {
        return Err(Error::Contract(
            "aldous statistic needs a nonempty ensemble, rule set, theta grid and eta grid".into(),
        ));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Contract(
            "aldous statistic needs a positive finite alpha".into(),
        ));
    }
    if thetas.iter().any(|t| !t.is_finite() || *t < 0.0)
        || etas.iter().any(|e| !e.is_finite() || *e <= 0.0)
    {
        return Err(Error::Contract(
            "aldous grids need finite thetas >= 0 and etas > 0".into(),
        ));
    }
    if rules.iter().any(|r| !r.is_finite()) {
        return Err(Error::Contract(
            "stopping rules need finite parameters".into(),
        ));
    }
    for rec in ensemble {
        validate_record(basis, rec)?;
    }

    let wts = PathNorm::UDual.weights(basis, basis.len());
    let paths = ensemble.len();
    let mut probs = vec![vec![0.0f64; etas.len()]; thetas.len()];
    let mut moments = vec![0.0f64; thetas.len()];
    for rule in rules {
        let stops: Vec<usize> = ensemble.iter().map(|rec| rule.stop_index(rec)).collect();
        for (k, &theta) in thetas.iter().enumerate() {
            let mut mom = KahanSum::new();
            let mut exceed = vec![0usize; etas.len()];
            for (rec, &si) in ensemble.iter().zip(&stops) {
                let target = rec.times[si] + theta;
                let ei = rec.times.partition_point(|&s| s <= target) - 1;
                let d = dist(&wts, &rec.states[ei], &rec.states[si]);
                mom.add(if alpha == 1.0 { d } else { d.powf(alpha) });
                for (q, &eta) in etas.iter().enumerate() {
                    if d >= eta {
                        exceed[q] += 1;
                    }
                }
            }
            let mval = mom.value() / paths as f64;
            if mval > moments[k] {
                moments[k] = mval;
            }
            for q in 0..etas.len() {
                let p = exceed[q] as f64 / paths as f64;
                if p > probs[k][q] {
                    probs[k][q] = p;
                }
            }
        }
    }

    let mut rows = Vec::with_capacity(thetas.len() * etas.len());
    for (k, &theta) in thetas.iter().enumerate() {
        for (q, &eta) in etas.iter().enumerate() {
            rows.push(AldousRow {
                theta,
                eta,
                prob: probs[k][q],
            });
        }
    }
    let pts: Vec<(f64, f64)> = thetas
        .iter()
        .zip(&moments)
        .filter(|(&t, &m)| t > 0.0 && m > 0.0)
        .map(|(&t, &m)| (t.ln(), m.ln()))
        .collect();
    let fit = loglog_fit(&pts);
    let moments = thetas.iter().copied().zip(moments).collect();
    Ok(AldousReport {
        alpha,
        rows,
        moments,
        fit,
        paths,
    })
}

/// One local seminorm value p_{T,R}.
#[derive(Clone, Debug, PartialEq)]
pub struct SeminormRow {
    pub window: usize,
    /// Half-width of the window along the first axis, the R label.
    pub halfwidth: f64,
    pub value: f64,
}

/// p_{T,R} per window on a thinned copy of the trajectory grid: the
/// spatial reconstruction per retained sample dominates the cost, so
/// at most max_samples grid times are kept (endpoints always).
pub fn seminorms_on_windows(
    basis: &SpectralBasis,
    rec: &TrajectoryRecord,
    windows: &[LocalWindow],
    max_samples: usize,
) -> Result<Vec<SeminormRow>> {
    validate_record(basis, rec)?;
    if windows.is_empty() {
        return Err(Error::Contract("seminorms need at least one window".into()));
    }
    if max_samples < 2 {
        return Err(Error::Contract(
            "seminorms need at least two retained samples".into(),
        ));
    }
    let idxs = thin_indices(rec.times.len(), max_samples);
    let times: Vec<f64> = idxs.iter().map(|&i| rec.times[i]).collect();
    let fields: Vec<GridField> = idxs
        .iter()
        .map(|&i| basis.reconstruct(&rec.states[i]))
        .collect();
    let mut rows = Vec::with_capacity(windows.len());
    for w in windows {
        let value = seminorm_local(basis.domain(), &times, &fields, w)?;
        rows.push(SeminormRow {
            window: w.index,
            halfwidth: 0.5 * (w.hi[0] - w.lo[0]),
            value,
        });
    }
    Ok(rows)
}

fn thin_indices(len: usize, max: usize) -> Vec<usize> {
    if len <= max {
        return (0..len).collect();
    }
    let mut v: Vec<usize> = (0..max).map(|k| k * (len - 1) / (max - 1)).collect();
    v.dedup();
    v
}

/// Composite diagnostics for one run: a representative path's modulus
/// curve and local seminorms plus the ensemble Aldous table.
#[derive(Clone, Debug)]
pub struct PathDiagnostics {
    pub modulus: ModulusCurve,
    pub aldous: AldousReport,
    pub seminorms: Vec<SeminormRow>,
}

impl PathDiagnostics {
    /// Structural gates: modulus nondecreasing in delta, exceedance
    /// table nonincreasing in eta, everything nonnegative.
    pub fn pass(&self) -> bool {
        self.modulus.nondecreasing()
            && self.modulus.points.iter().all(|p| p.1 >= 0.0)
            && self.aldous.nonincreasing_in_eta()
            && self.aldous.rows.iter().all(|r| r.prob >= 0.0)
            && self.seminorms.iter().all(|r| r.value >= 0.0)
    }

    pub fn write_text(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "# modulus curve ({} norm)", self.modulus.norm.label())?;
        self.modulus.write_text(out)?;
        writeln!(out, "# aldous table")?;
        self.aldous.write_text(out)?;
        writeln!(out, "# seminorm: window, halfwidth, value")?;
        for r in &self.seminorms {
            writeln!(
                out,
                "{}, {}, {}",
                r.window,
                fmt_g17(r.halfwidth),
                fmt_g17(r.value)
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_basis;
    use crate::domain::BoxDomain;
    use crate::noise::NoiseModel;
    use crate::sim::{simulate_path, Forcing, JumpMarker, SimConfig};
    use crate::state::norm_u_dual;
    use crate::system::SystemSpec;
    use crate::triple::{assemble_stokes_triple, assemble_triple};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn basis(n: usize) -> SpectralBasis {
        let dom = BoxDomain::standard(2).unwrap();
        build_basis(&dom, &SystemSpec::nse(), n, 3.0).unwrap()
    }

    fn synthetic(
        basis: &SpectralBasis,
        times: Vec<f64>,
        states: Vec<Vec<f64>>,
        jumps: Vec<JumpMarker>,
    ) -> TrajectoryRecord {
        let level = states[0].len();
        TrajectoryRecord {
            basis_id: basis.id(),
            level,
            times,
            states,
            dw: vec![],
            jumps,
            tau: None,
            cutoff_activations: 0,
            seed: 0,
            path: 0,
        }
    }

    fn uniform_times(m: usize) -> Vec<f64> {
        (0..=m).map(|j| j as f64 / m as f64).collect()
    }

    /// Exhaustive minimum over breakpoint subsets, the oracle the DP
    /// must match bitwise: both draw min/max over the same finite set
    /// of pairwise distances.
    fn modulus_bruteforce(
        basis: &SpectralBasis,
        rec: &TrajectoryRecord,
        delta: f64,
        norm: PathNorm,
    ) -> f64 {
        let wts = norm.weights(basis, rec.level);
        let (vals, pos) = ext_samples(rec);
        let times = &rec.times;
        let m = times.len() - 1;
        assert!(m >= 1 && m <= 16, "oracle is exponential in the grid");
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << (m - 1)) {
            let mut bps = vec![0usize];
            for i in 1..m {
                if mask >> (i - 1) & 1 == 1 {
                    bps.push(i);
                }
            }
            bps.push(m);
            if bps.windows(2).any(|w| times[w[1]] - times[w[0]] < delta) {
                continue;
            }
            let mut worst = 0.0f64;
            for w in bps.windows(2) {
                for i in pos[w[0]]..pos[w[1]] {
                    for j in (i + 1)..pos[w[1]] {
                        let d = dist(&wts, vals[i], vals[j]);
                        if d > worst {
                            worst = d;
                        }
                    }
                }
            }
            if worst < best {
                best = worst;
            }
        }
        if best.is_finite() {
            return best;
        }
        let mut diam = 0.0f64;
        for i in pos[0]..pos[m] {
            for j in (i + 1)..pos[m] {
                let d = dist(&wts, vals[i], vals[j]);
                if d > diam {
                    diam = d;
                }
            }
        }
        diam
    }

    #[test]
    fn constant_path_has_zero_modulus_for_every_delta() {
        let b = basis(4);
        let times = uniform_times(10);
        let states = vec![vec![0.3, -0.2, 0.1, 0.05]; times.len()];
        let rec = synthetic(&b, times, states, vec![]);
        for delta in [0.05, 0.3, 0.9, 2.0] {
            assert_eq!(modulus(&b, &rec, delta, PathNorm::H).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_jump_is_invisible_below_the_gap_and_visible_above_it() {
        let b = basis(2);
        let times = uniform_times(10);
        let before = vec![1.0, 0.0];
        let after = vec![1.5, -0.5];
        let states: Vec<Vec<f64>> = times
            .iter()
            .map(|&t| if t < 0.5 { before.clone() } else { after.clone() })
            .collect();
        let marker = JumpMarker {
            t: 0.5,
            mark: 1.0,
            small: false,
            left: before.clone(),
            right: after.clone(),
        };
        let rec = synthetic(&b, times, states, vec![marker]);
        // delta below both gap halves: {0, 0.5, 1} is admissible and
        // the jump sits on a breakpoint.
        assert_eq!(modulus(&b, &rec, 0.3, PathNorm::H).unwrap(), 0.0);
        // delta = 0.6 rules the interior breakpoint out, so some
        // segment straddles the jump and pays |after - before|_H.
        let w = modulus(&b, &rec, 0.6, PathNorm::H).unwrap();
        assert_eq!(w, 0.5f64.sqrt());
        // U'-weighted variant agrees with the state-level norm.
        let diff = b.state(vec![0.5, -0.5], 0.0);
        let wu = modulus(&b, &rec, 0.6, PathNorm::UDual).unwrap();
        assert_relative_eq!(wu, norm_u_dual(&b, &diff), max_relative = 1e-14);
    }

    #[test]
    fn linear_ramp_matches_bruteforce_and_frozen_value() {
        let b = basis(2);
        let times = uniform_times(8);
        let states: Vec<Vec<f64>> = times.iter().map(|&t| vec![t, 0.0]).collect();
        let rec = synthetic(&b, times, states, vec![]);
        let dp = modulus(&b, &rec, 0.25, PathNorm::H).unwrap();
        let bf = modulus_bruteforce(&b, &rec, 0.25, PathNorm::H);
        assert_eq!(dp, bf);
        // Optimal partition {0, 1/4, 1/2, 3/4, 1}: each right-open
        // segment holds two samples 1/8 apart.
        assert_eq!(dp, 0.125);
    }

    #[test]
    fn delta_beyond_horizon_gives_the_single_interval_value() {
        let b = basis(2);
        let times = uniform_times(8);
        let states: Vec<Vec<f64>> = times.iter().map(|&t| vec![t, 0.0]).collect();
        let rec = synthetic(&b, times, states, vec![]);
        let w = modulus(&b, &rec, 2.0, PathNorm::H).unwrap();
        // Right-open [0, 1): the last sample is excluded.
        assert_eq!(w, 0.875);
        let bf = modulus_bruteforce(&b, &rec, 2.0, PathNorm::H);
        assert_eq!(w, bf);
    }

    #[test]
    fn modulus_curve_is_monotone_on_simulated_noise_paths() {
        let b = basis(4);
        let triple = assemble_triple(&b, &SystemSpec::nse()).unwrap();
        let model = NoiseModel::reference();
        let sim = SimConfig {
            n: 4,
            dt: 1.0 / 256.0,
            t_end: 1.0,
            u0: vec![0.4, -0.3, 0.2, 0.1],
            forcing: Forcing::default(),
            r_stop: 1e6,
            cutoff_level: 4.0,
            disable_cutoff: false,
            semi_implicit: false,
            seed: 77,
            fault: None,
        };
        let deltas = [0.02, 0.05, 0.1, 0.2, 0.4, 0.8];
        for path in 0..3u64 {
            let rec = simulate_path(&b, &triple, &model, &sim, path).unwrap();
            for norm in [PathNorm::H, PathNorm::UDual] {
                let curve = modulus_curve(&b, &rec, &deltas, norm).unwrap();
                assert!(curve.nondecreasing(), "curve not monotone: {curve:?}");
                assert!(curve.points.iter().all(|p| p.1 >= 0.0));
            }
        }
    }

    proptest! {
        #[test]
        fn dp_matches_bruteforce_on_random_cadlag_paths(
            m in 3usize..=9,
            raw in proptest::collection::vec(
                proptest::collection::vec(-1.0f64..1.0, 2), 10),
            jump_at in 1usize..=8,
            jump_left in proptest::collection::vec(-1.0f64..1.0, 2),
            delta in 0.05f64..1.6,
        ) {
            let b = basis(2);
            let times = uniform_times(m);
            let states: Vec<Vec<f64>> = (0..=m).map(|j| raw[j].clone()).collect();
            let jumps = if jump_at < m {
                vec![JumpMarker {
                    t: times[jump_at],
                    mark: 1.0,
                    small: false,
                    left: jump_left,
                    right: states[jump_at].clone(),
                }]
            } else {
                vec![]
            };
            let rec = synthetic(&b, times, states, jumps);
            for norm in [PathNorm::H, PathNorm::UDual] {
                let dp = modulus(&b, &rec, delta, norm).unwrap();
                let bf = modulus_bruteforce(&b, &rec, delta, norm);
                prop_assert_eq!(dp, bf);
            }
        }
    }

    #[test]
    fn frozen_path_has_zero_aldous_probabilities_and_no_fit() {
        let b = basis(4);
        let times = uniform_times(20);
        let states = vec![vec![0.2, 0.1, 0.0, -0.1]; times.len()];
        let ensemble: Vec<TrajectoryRecord> = (0..10)
            .map(|_| synthetic(&b, times.clone(), states.clone(), vec![]))
            .collect();
        let rules = [
            StoppingRule::FirstHitting { level: 0.5 },
            StoppingRule::FixedTime { t: 0.25 },
        ];
        let rep = aldous_statistic(
            &b,
            &ensemble,
            &rules,
            &[0.1, 0.2],
            &[1e-6, 0.1],
            1.0,
        )
        .unwrap();
        assert!(rep.rows.iter().all(|r| r.prob == 0.0));
        assert!(rep.moments.iter().all(|m| m.1 == 0.0));
        assert!(rep.fit.is_none());
        assert!(rep.nonincreasing_in_eta());
    }

    #[test]
    fn pure_drift_decay_fits_beta_near_one() {
        let b = basis(4);
        let triple = assemble_stokes_triple(&b);
        let mut model = NoiseModel::reference();
        model.wiener.directions.clear();
        model.wiener.additive = 0.0;
        model.jumps.total_rate = 0.0;
        let sim = SimConfig {
            n: 4,
            dt: 1.0 / 256.0,
            t_end: 1.0,
            u0: vec![0.8, 0.0, 0.0, 0.0],
            forcing: Forcing::default(),
            r_stop: 1e6,
            cutoff_level: 4.0,
            disable_cutoff: false,
            semi_implicit: false,
            seed: 5,
            fault: None,
        };
        let rec = simulate_path(&b, &triple, &model, &sim, 0).unwrap();
        let rep = aldous_statistic(
            &b,
            &[rec],
            &[StoppingRule::FixedTime { t: 0.0 }],
            &[1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0],
            &[1e-3],
            1.0,
        )
        .unwrap();
        let fit = rep.fit.expect("nondegenerate moments");
        assert!(
            (fit.beta - 1.0).abs() < 0.2,
            "decay increment exponent {} not near 1",
            fit.beta
        );
        assert!(fit.c > 0.0);
    }

    #[test]
    fn full_noise_ensemble_has_positive_beta_and_monotone_table() {
        let b = basis(4);
        let triple = assemble_triple(&b, &SystemSpec::nse()).unwrap();
        let model = NoiseModel::reference();
        let sim = SimConfig {
            n: 4,
            dt: 1.0 / 256.0,
            t_end: 1.0,
            u0: vec![0.4, -0.3, 0.2, 0.1],
            forcing: Forcing::default(),
            r_stop: 1e6,
            cutoff_level: 4.0,
            disable_cutoff: false,
            semi_implicit: false,
            seed: 99,
            fault: None,
        };
        let ensemble: Vec<TrajectoryRecord> = (0..40)
            .map(|p| simulate_path(&b, &triple, &model, &sim, p).unwrap())
            .collect();
        let rules = [
            StoppingRule::FixedTime { t: 0.0 },
            StoppingRule::FixedTime { t: 0.5 },
            StoppingRule::FirstHitting { level: 0.6 },
        ];
        let rep = aldous_statistic(
            &b,
            &ensemble,
            &rules,
            &[1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0],
            &[1e-4, 1e-3, 1e-2, 0.1],
            1.0,
        )
        .unwrap();
        assert!(rep.nonincreasing_in_eta());
        let fit = rep.fit.expect("noise gives nondegenerate moments");
        assert!(fit.beta > 0.0, "fitted exponent {} not positive", fit.beta);
    }

    #[test]
    fn full_window_seminorm_matches_the_h_time_integral() {
        let b = basis(4);
        let times = uniform_times(10);
        let states: Vec<Vec<f64>> = times
            .iter()
            .map(|&t| vec![0.5 * (-t).exp(), 0.2 * t, -0.1, 0.3 * t * t])
            .collect();
        let rec = synthetic(&b, times.clone(), states.clone(), vec![]);
        let full = LocalWindow::full(b.domain());
        let rows = seminorms_on_windows(&b, &rec, &[full], 64).unwrap();
        let hsq = |s: &Vec<f64>| s.iter().map(|x| x * x).sum::<f64>();
        let mut acc = KahanSum::new();
        for i in 1..times.len() {
            let dt = times[i] - times[i - 1];
            acc.add(0.5 * dt * (hsq(&states[i]) + hsq(&states[i - 1])));
        }
        assert_relative_eq!(rows[0].value, acc.value().sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn nested_windows_give_nondecreasing_seminorms() {
        let b = basis(4);
        let times = uniform_times(10);
        let states: Vec<Vec<f64>> = times
            .iter()
            .map(|&t| vec![0.5, 0.2 * t, -0.1, 0.3])
            .collect();
        let rec = synthetic(&b, times, states, vec![]);
        let windows = LocalWindow::nested_family(b.domain(), 3);
        let rows = seminorms_on_windows(&b, &rec, &windows, 64).unwrap();
        assert!(rows.windows(2).all(|w| w[1].value >= w[0].value));
        assert!(rows.windows(2).all(|w| w[1].halfwidth > w[0].halfwidth));
    }

    #[test]
    fn composite_diagnostics_pass_and_export_deterministically() {
        let b = basis(4);
        let triple = assemble_triple(&b, &SystemSpec::nse()).unwrap();
        let model = NoiseModel::reference();
        let sim = SimConfig {
            n: 4,
            dt: 1.0 / 128.0,
            t_end: 1.0,
            u0: vec![0.4, -0.3, 0.2, 0.1],
            forcing: Forcing::default(),
            r_stop: 1e6,
            cutoff_level: 4.0,
            disable_cutoff: false,
            semi_implicit: false,
            seed: 42,
            fault: None,
        };
        let ensemble: Vec<TrajectoryRecord> = (0..12)
            .map(|p| simulate_path(&b, &triple, &model, &sim, p).unwrap())
            .collect();
        let curve =
            modulus_curve(&b, &ensemble[0], &[0.05, 0.1, 0.2, 0.4], PathNorm::H).unwrap();
        let aldous = aldous_statistic(
            &b,
            &ensemble,
            &[StoppingRule::FixedTime { t: 0.0 }],
            &[1.0 / 32.0, 1.0 / 16.0],
            &[1e-3, 1e-2],
            1.0,
        )
        .unwrap();
        let windows = LocalWindow::nested_family(b.domain(), 2);
        let seminorms = seminorms_on_windows(&b, &ensemble[0], &windows, 32).unwrap();
        let diag = PathDiagnostics {
            modulus: curve,
            aldous,
            seminorms,
        };
        assert!(diag.pass());
        let mut a = Vec::new();
        diag.write_text(&mut a).unwrap();
        let mut c = Vec::new();
        diag.write_text(&mut c).unwrap();
        assert_eq!(a, c);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("# modulus curve (h norm)"));
        assert!(text.contains("# theta, eta, prob"));
        assert!(text.contains("# seminorm: window, halfwidth, value"));
    }

    #[test]
    fn preconditions_are_enforced() {
        let b = basis(4);
        let times = uniform_times(4);
        let states = vec![vec![0.1, 0.0, 0.0, 0.0]; times.len()];
        let mut rec = synthetic(&b, times, states, vec![]);
        assert!(modulus(&b, &rec, 0.0, PathNorm::H).is_err());
        assert!(modulus(&b, &rec, f64::NAN, PathNorm::H).is_err());
        assert!(modulus_curve(&b, &rec, &[0.2, 0.1], PathNorm::H).is_err());
        assert!(aldous_statistic(&b, &[], &[], &[0.1], &[0.1], 1.0).is_err());
        assert!(aldous_statistic(
            &b,
            std::slice::from_ref(&rec),
            &[StoppingRule::FixedTime { t: 0.0 }],
            &[0.1],
            &[0.1],
            0.0
        )
        .is_err());
        assert!(seminorms_on_windows(&b, &rec, &[], 64).is_err());
        rec.basis_id ^= 1;
        assert!(modulus(&b, &rec, 0.1, PathNorm::H).is_err());
    }
}
