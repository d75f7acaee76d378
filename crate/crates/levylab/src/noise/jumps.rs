//! Finite-activity Poisson random measure: jump skeleton sampling,
//! regional compensator moments, and the compensated-integral isometry
//! check.
//!
//! Events are always drawn from the total intensity; the small/large
//! classification happens afterwards against the configured Y₀ radius.
//! Two runs with the same seed but different radii therefore see the
//! identical event skeleton, which is what makes the split/recombine
//! drift identities testable path by path.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::marks::MarkLaw;
use crate::error::{Error, Result};
use crate::util::{mean_stderr, KahanSum};

/// One Poisson event: time and raw mark. The region is derived from
/// the radius at the point of use, never stored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpEvent {
    pub t: f64,
    pub mark: f64,
}

impl JumpEvent {
    pub fn is_small(&self, radius: f64) -> bool {
        self.mark.abs() < radius
    }

    pub fn region_tag(&self, radius: f64) -> &'static str {
        if self.is_small(radius) {
            "small"
        } else {
            "large"
        }
    }
}

/// Jump noise: total intensity `total_rate · law`, small-jump region
/// Y₀ = {|y| < y0_radius}, coefficient map F(u; y) = y·(h₀ + Γu) with
/// Γ = gamma_scale · identity, and moment parameter γ.
#[derive(Clone, Debug)]
pub struct JumpSpec {
    pub law: MarkLaw,
    pub total_rate: f64,
    pub y0_radius: f64,
    pub gamma: f64,
    pub h0: Vec<f64>,
    pub gamma_scale: f64,
}

impl JumpSpec {
    pub fn validate(&self) -> Result<()> {
        self.law.validate()?;
        if !(self.total_rate >= 0.0) || !self.total_rate.is_finite() {
            return Err(Error::config(
                "noise.jumps.rate",
                "total jump rate must be finite and nonnegative",
            ));
        }
        if !(self.y0_radius > 0.0) {
            return Err(Error::config(
                "noise.jumps.y0_radius",
                "small-jump radius must be strictly positive",
            ));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::config("noise.jumps.gamma", "gamma must be positive"));
        }
        if self.h0.iter().any(|x| !x.is_finite()) || !self.gamma_scale.is_finite() {
            return Err(Error::config(
                "noise.jumps.h0",
                "jump coefficients must be finite",
            ));
        }
        Ok(())
    }

    /// μ(Y₀) = rate of small jumps.
    pub fn rate_small(&self) -> f64 {
        self.total_rate * self.law.prob_below(self.y0_radius)
    }

    /// μ(Y∖Y₀) < ∞ by construction (finite total activity).
    pub fn rate_large(&self) -> f64 {
        self.total_rate - self.rate_small()
    }

    /// ∫ y^k 1_region μ(dy); region selected by `below`.
    pub fn mu_signed_moment(&self, k: u32, below: bool) -> f64 {
        let m = if below {
            self.law.signed_moment_below(k, self.y0_radius)
        } else {
            self.law.signed_moment_above(k, self.y0_radius)
        };
        self.total_rate * m
    }

    /// ∫ |y|^p 1_region μ(dy).
    pub fn mu_abs_moment(&self, p: f64, below: bool) -> f64 {
        let m = if below {
            self.law.abs_moment_below(p, self.y0_radius)
        } else {
            self.law.abs_moment_above(p, self.y0_radius)
        };
        self.total_rate * m
    }

    /// ∫_Y |y|^p μ(dy).
    pub fn mu_abs_moment_total(&self, p: f64) -> f64 {
        self.total_rate * self.law.abs_moment(p)
    }

    /// First mark moment over Y₀: the scalar in the compensation drift
    /// −m₁⁰ (h₀ + Γu).
    pub fn small_mean(&self) -> f64 {
        self.mu_signed_moment(1, true)
    }

    /// Coefficient direction h₀ + Γu in dimension n (h₀ truncated or
    /// zero-padded).
    pub fn f_direction(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        (0..n)
            .map(|i| self.h0.get(i).copied().unwrap_or(0.0) + self.gamma_scale * u[i])
            .collect()
    }

    /// The moment orders {1, 2, 2+γ, 4, 4+2γ} used by the growth
    /// certificates.
    pub fn moment_orders(&self) -> [f64; 5] {
        [
            1.0,
            2.0,
            2.0 + self.gamma,
            4.0,
            4.0 + 2.0 * self.gamma,
        ]
    }
}

/// Poisson skeleton on [t0, t1): count from the total rate, times
/// i.i.d. uniform (sorted), marks i.i.d. from the law.
pub fn sample_jumps(
    spec: &JumpSpec,
    t0: f64,
    t1: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<JumpEvent>> {
    if !(t1 > t0) {
        return Err(Error::Contract("jump interval must have positive length".into()));
    }
    let lam = spec.total_rate * (t1 - t0);
    if lam == 0.0 {
        return Ok(Vec::new());
    }
    let count = Poisson::new(lam)
        .map_err(|e| Error::Contract(format!("invalid jump intensity: {e}")))?
        .sample(rng) as usize;
    let mut times: Vec<f64> = (0..count).map(|_| t0 + (t1 - t0) * rng.gen::<f64>()).collect();
    times.sort_by(|a, b| a.total_cmp(b));
    let events = times
        .into_iter()
        .map(|t| JumpEvent {
            t,
            mark: spec.law.sample(rng),
        })
        .collect();
    Ok(events)
}

/// Σ of marks over one region of the skeleton.
pub fn mark_sum_region(events: &[JumpEvent], radius: f64, small: bool) -> f64 {
    let mut acc = KahanSum::new();
    for e in events {
        if e.is_small(radius) == small {
            acc.add(e.mark);
        }
    }
    acc.value()
}

/// Split-form mark functional over [0, T]: small jumps compensated,
/// large jumps raw.
pub fn mark_sum_split(spec: &JumpSpec, events: &[JumpEvent], t_end: f64, radius: f64) -> f64 {
    let small = mark_sum_region(events, radius, true);
    let large = mark_sum_region(events, radius, false);
    let comp_small = t_end * spec.total_rate * spec.law.signed_moment_below(1, radius);
    small - comp_small + large
}

/// Recombined form: everything compensated over Y, with the explicit
/// large-jump mean drift added back.
pub fn mark_sum_recombined(spec: &JumpSpec, events: &[JumpEvent], t_end: f64, radius: f64) -> f64 {
    let all = mark_sum_region(events, radius, true) + mark_sum_region(events, radius, false);
    let comp_total = t_end * spec.total_rate * spec.law.signed_moment_below(1, f64::INFINITY);
    let large_mean = t_end * spec.total_rate * spec.law.signed_moment_above(1, radius);
    all - comp_total + large_mean
}

/// Fully compensated functional Σ y − T∫y dμ: independent of any
/// radius on a fixed skeleton.
pub fn mark_sum_compensated(spec: &JumpSpec, events: &[JumpEvent], t_end: f64) -> f64 {
    let mut acc = KahanSum::new();
    for e in events {
        acc.add(e.mark);
    }
    acc.value() - t_end * spec.total_rate * spec.law.signed_moment_below(1, f64::INFINITY)
}

/// Deterministic time factor of a separable test integrand.
#[derive(Clone, Copy, Debug)]
pub enum TimePart {
    One,
    Linear,
    Sine,
}

impl TimePart {
    pub fn eval(self, s: f64) -> f64 {
        match self {
            TimePart::One => 1.0,
            TimePart::Linear => s,
            TimePart::Sine => s.sin(),
        }
    }

    /// ∫₀ᵀ time(s) ds.
    pub fn integral(self, t: f64) -> f64 {
        match self {
            TimePart::One => t,
            TimePart::Linear => t * t / 2.0,
            TimePart::Sine => 1.0 - t.cos(),
        }
    }

    /// ∫₀ᵀ time(s)² ds.
    pub fn sq_integral(self, t: f64) -> f64 {
        match self {
            TimePart::One => t,
            TimePart::Linear => t * t * t / 3.0,
            TimePart::Sine => t / 2.0 - (2.0 * t).sin() / 4.0,
        }
    }
}

/// Mark factor of a separable test integrand.
#[derive(Clone, Copy, Debug)]
pub enum MarkPart {
    /// c · 1_{Y₀}.
    IndicatorSmall(f64),
    /// y itself.
    Identity,
    /// y² · 1_{Y∖Y₀}.
    SquareLarge,
}

impl MarkPart {
    pub fn eval(self, y: f64, radius: f64) -> f64 {
        match self {
            MarkPart::IndicatorSmall(c) => {
                if y.abs() < radius {
                    c
                } else {
                    0.0
                }
            }
            MarkPart::Identity => y,
            MarkPart::SquareLarge => {
                if y.abs() >= radius {
                    y * y
                } else {
                    0.0
                }
            }
        }
    }

    /// ∫ mark(y) μ(dy).
    pub fn mu_first(self, spec: &JumpSpec) -> f64 {
        match self {
            MarkPart::IndicatorSmall(c) => c * spec.rate_small(),
            MarkPart::Identity => spec.mu_signed_moment(1, true) + spec.mu_signed_moment(1, false),
            MarkPart::SquareLarge => spec.mu_signed_moment(2, false),
        }
    }

    /// ∫ mark(y)² μ(dy).
    pub fn mu_second(self, spec: &JumpSpec) -> f64 {
        match self {
            MarkPart::IndicatorSmall(c) => c * c * spec.rate_small(),
            MarkPart::Identity => spec.mu_abs_moment_total(2.0),
            MarkPart::SquareLarge => spec.mu_abs_moment(4.0, false),
        }
    }
}

/// ξ(s, y) = time(s) · mark(y).
#[derive(Clone, Copy, Debug)]
pub struct TestIntegrand {
    pub time: TimePart,
    pub mark: MarkPart,
}

/// Monte-Carlo check of E|∫∫ ξ dη̃|² = ∫∫ ξ² ds dμ.
#[derive(Clone, Debug)]
pub struct IsometryReport {
    pub estimate: f64,
    pub stderr: f64,
    pub exact: f64,
    pub mean: f64,
    pub mean_stderr: f64,
    pub paths: usize,
}

impl IsometryReport {
    pub fn error(&self) -> f64 {
        self.estimate - self.exact
    }

    pub fn rel_error(&self) -> f64 {
        if self.exact == 0.0 {
            self.estimate.abs()
        } else {
            (self.error() / self.exact).abs()
        }
    }

    /// |estimate − exact| within k standard errors (degenerate zero
    /// cases must match exactly).
    pub fn within(&self, k: f64) -> bool {
        if self.stderr == 0.0 {
            return self.error() == 0.0;
        }
        self.error().abs() <= k * self.stderr
    }

    pub fn mean_within(&self, k: f64) -> bool {
        if self.mean_stderr == 0.0 {
            return self.mean == 0.0;
        }
        self.mean.abs() <= k * self.mean_stderr
    }
}

/// Runs the isometry Monte Carlo: per path, the compensated integral
/// is the event sum minus the closed-form compensator.
pub fn compensated_integral_test(
    spec: &JumpSpec,
    integrand: TestIntegrand,
    t_end: f64,
    paths: usize,
    rng: &mut ChaCha8Rng,
) -> Result<IsometryReport> {
    if paths < 2 {
        return Err(Error::Contract("isometry test needs at least 2 paths".into()));
    }
    let compensator = integrand.time.integral(t_end) * integrand.mark.mu_first(spec);
    let exact = integrand.time.sq_integral(t_end) * integrand.mark.mu_second(spec);
    let mut values = Vec::with_capacity(paths);
    let mut squares = Vec::with_capacity(paths);
    for _ in 0..paths {
        let events = sample_jumps(spec, 0.0, t_end, rng)?;
        let mut acc = KahanSum::new();
        for e in &events {
            acc.add(integrand.time.eval(e.t) * integrand.mark.eval(e.mark, spec.y0_radius));
        }
        let v = acc.value() - compensator;
        values.push(v);
        squares.push(v * v);
    }
    let (estimate, stderr) = mean_stderr(&squares);
    let (mean, mean_stderr_v) = mean_stderr(&values);
    Ok(IsometryReport {
        estimate,
        stderr,
        exact,
        mean,
        mean_stderr: mean_stderr_v,
        paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn spec() -> JumpSpec {
        JumpSpec {
            law: MarkLaw::TwoSidedExp {
                scale_pos: 0.6,
                scale_neg: 0.5,
                weight_pos: 0.7,
            },
            total_rate: 3.0,
            y0_radius: 1.0,
            gamma: 2.0,
            h0: vec![1.0, -0.5],
            gamma_scale: 0.12,
        }
    }

    #[test]
    fn validation_and_rates() {
        let s = spec();
        assert!(s.validate().is_ok());
        assert_relative_eq!(s.rate_small() + s.rate_large(), 3.0, epsilon = 1e-12);
        assert!(s.rate_large() < f64::INFINITY);
        assert!(s.rate_small() > s.rate_large(), "most mass inside Y₀");
        let mut bad = spec();
        bad.y0_radius = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = spec();
        bad.total_rate = -1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_rate_gives_empty_skeleton() {
        let mut s = spec();
        s.total_rate = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_jumps(&s, 0.0, 1.0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn skeleton_times_sorted_in_range_and_deterministic() {
        let s = spec();
        let mut r1 = ChaCha8Rng::seed_from_u64(10);
        let mut r2 = ChaCha8Rng::seed_from_u64(10);
        let a = sample_jumps(&s, 0.5, 2.0, &mut r1).unwrap();
        let b = sample_jumps(&s, 0.5, 2.0, &mut r2).unwrap();
        assert_eq!(a, b);
        for w in a.windows(2) {
            assert!(w[0].t <= w[1].t);
        }
        for e in &a {
            assert!(e.t >= 0.5 && e.t < 2.0);
        }
    }

    #[test]
    fn counts_follow_poisson_per_region() {
        // Thinning: small and large counts are Poisson with the
        // regional rates. 40k intervals of length 1.
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let trials = 40_000;
        let (mut sum_s, mut sumsq_s, mut sum_l, mut sumsq_l) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..trials {
            let ev = sample_jumps(&s, 0.0, 1.0, &mut rng).unwrap();
            let ns = ev.iter().filter(|e| e.is_small(s.y0_radius)).count() as f64;
            let nl = ev.len() as f64 - ns;
            sum_s += ns;
            sumsq_s += ns * ns;
            sum_l += nl;
            sumsq_l += nl * nl;
        }
        let nf = trials as f64;
        let mean_s = sum_s / nf;
        let var_s = sumsq_s / nf - mean_s * mean_s;
        let mean_l = sum_l / nf;
        let var_l = sumsq_l / nf - mean_l * mean_l;
        // 4σ band on the mean; 5% on the variance/mean Poisson ratio.
        assert!((mean_s - s.rate_small()).abs() <= 4.0 * (s.rate_small() / nf).sqrt());
        assert!((mean_l - s.rate_large()).abs() <= 4.0 * (s.rate_large() / nf).sqrt());
        assert!((var_s / mean_s - 1.0).abs() <= 0.05);
        assert!((var_l / mean_l - 1.0).abs() <= 0.05);
    }

    #[test]
    fn skeleton_invariant_under_radius() {
        // The radius only classifies; it must not perturb sampling.
        let mut s1 = spec();
        s1.y0_radius = 0.5;
        let mut s2 = spec();
        s2.y0_radius = 2.0;
        let mut r1 = ChaCha8Rng::seed_from_u64(33);
        let mut r2 = ChaCha8Rng::seed_from_u64(33);
        let a = sample_jumps(&s1, 0.0, 3.0, &mut r1).unwrap();
        let b = sample_jumps(&s2, 0.0, 3.0, &mut r2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_equals_recombined_and_compensated_part_radius_free() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let events = sample_jumps(&s, 0.0, 2.0, &mut rng).unwrap();
        assert!(!events.is_empty());
        for radius in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let split = mark_sum_split(&s, &events, 2.0, radius);
            let recombined = mark_sum_recombined(&s, &events, 2.0, radius);
            assert_relative_eq!(split, recombined, epsilon = 1e-12);
        }
        let c1 = mark_sum_compensated(&s, &events, 2.0);
        // No radius enters: recompute under a spec with another radius.
        let mut s2 = s.clone();
        s2.y0_radius = 0.3;
        let c2 = mark_sum_compensated(&s2, &events, 2.0);
        assert_eq!(c1.to_bits(), c2.to_bits());
    }

    #[test]
    fn isometry_holds_for_three_integrands() {
        let s = spec();
        let integrands = [
            TestIntegrand { time: TimePart::One, mark: MarkPart::IndicatorSmall(0.8) },
            TestIntegrand { time: TimePart::Linear, mark: MarkPart::Identity },
            TestIntegrand { time: TimePart::Sine, mark: MarkPart::SquareLarge },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for integrand in integrands {
            let report = compensated_integral_test(&s, integrand, 1.5, 4000, &mut rng).unwrap();
            assert!(report.exact > 0.0);
            assert!(
                report.within(3.0),
                "isometry off: est {} exact {} stderr {}",
                report.estimate,
                report.exact,
                report.stderr
            );
            assert!(report.mean_within(3.0), "martingale mean not near 0");
        }
    }

    #[test]
    fn zero_integrand_matches_exactly() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = TestIntegrand { time: TimePart::One, mark: MarkPart::IndicatorSmall(0.0) };
        let report = compensated_integral_test(&s, z, 1.0, 100, &mut rng).unwrap();
        assert_eq!(report.estimate, 0.0);
        assert_eq!(report.exact, 0.0);
        assert!(report.within(3.0));
    }

    #[test]
    fn closed_form_compensator_matches_quadrature_route() {
        // ∫ y 1_{Y₀} μ(dy) via the fractional quadrature path agrees
        // with the incomplete-gamma closed form: positive side minus
        // negative side.
        let s = spec();
        let m_closed = s.mu_signed_moment(1, true);
        let MarkLaw::TwoSidedExp {
            scale_pos,
            scale_neg,
            weight_pos,
        } = s.law;
        let pos = crate::util::integrate_gl(
            |y| y * weight_pos * (-y / scale_pos).exp() / scale_pos,
            0.0,
            s.y0_radius,
            64,
        );
        let neg = crate::util::integrate_gl(
            |y| y * (1.0 - weight_pos) * (-y / scale_neg).exp() / scale_neg,
            0.0,
            s.y0_radius,
            64,
        );
        assert_relative_eq!(m_closed, s.total_rate * (pos - neg), epsilon = 1e-12);
    }
}
