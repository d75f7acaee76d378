//! Mark laws on the one-dimensional mark space and their regional
//! moments. The small-jump region is {|y| < radius}; moments restricted
//! to either region have closed forms through incomplete gamma sums for
//! integer orders and Gauss-Legendre quadrature for fractional ones.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{integrate_gl, lower_gamma_int, upper_gamma_int};

/// Normalized probability law of a single mark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarkLaw {
    /// Mixture of an exponential on y > 0 (mean `scale_pos`, weight
    /// `weight_pos`) and a mirrored exponential on y < 0 (mean
    /// `scale_neg`). Asymmetric by default so that signed moments do
    /// not vanish accidentally.
    TwoSidedExp {
        scale_pos: f64,
        scale_neg: f64,
        weight_pos: f64,
    },
}

impl MarkLaw {
    pub fn validate(&self) -> Result<()> {
        let MarkLaw::TwoSidedExp {
            scale_pos,
            scale_neg,
            weight_pos,
        } = self;
        if !(*scale_pos > 0.0) || !(*scale_neg > 0.0) {
            return Err(Error::config(
                "noise.jumps.law.scale",
                "mark scales must be strictly positive",
            ));
        }
        if !(0.0..=1.0).contains(weight_pos) {
            return Err(Error::config(
                "noise.jumps.law.weight_pos",
                "positive-side weight must lie in [0, 1]",
            ));
        }
        Ok(())
    }

    /// Inverse-CDF sampling: a Bernoulli side choice, then an
    /// exponential magnitude.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let MarkLaw::TwoSidedExp {
            scale_pos,
            scale_neg,
            weight_pos,
        } = self;
        let side_pos = rng.gen::<f64>() < *weight_pos;
        let u: f64 = rng.gen();
        let mag = -(1.0 - u).ln();
        if side_pos {
            scale_pos * mag
        } else {
            -scale_neg * mag
        }
    }

    /// P(|y| < r).
    pub fn prob_below(&self, r: f64) -> f64 {
        let MarkLaw::TwoSidedExp {
            scale_pos,
            scale_neg,
            weight_pos,
        } = self;
        if r <= 0.0 {
            return 0.0;
        }
        weight_pos * (1.0 - (-r / scale_pos).exp())
            + (1.0 - weight_pos) * (1.0 - (-r / scale_neg).exp())
    }

    /// E[y^k · 1_{|y| < r}] (signed).
    pub fn signed_moment_below(&self, k: u32, r: f64) -> f64 {
        let MarkLaw::TwoSidedExp {
            scale_pos,
            scale_neg,
            weight_pos,
        } = self;
        if r <= 0.0 {
            return 0.0;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        weight_pos * scale_pos.powi(k as i32) * lower_gamma_int(k, r / scale_pos)
            + sign
                * (1.0 - weight_pos)
                * scale_neg.powi(k as i32)
                * lower_gamma_int(k, r / scale_neg)
    }

    /// E[y^k · 1_{|y| >= r}] (signed).
    pub fn signed_moment_above(&self, k: u32, r: f64) -> f64 {
        let MarkLaw::TwoSidedExp {
            scale_pos,
            scale_neg,
            weight_pos,
        } = self;
        let r = r.max(0.0);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        weight_pos * scale_pos.powi(k as i32) * upper_gamma_int(k, r / scale_pos)
            + sign
                * (1.0 - weight_pos)
                * scale_neg.powi(k as i32)
                * upper_gamma_int(k, r / scale_neg)
    }

    /// E[|y|^p · 1_{|y| < r}] for real p >= 0.
    pub fn abs_moment_below(&self, p: f64, r: f64) -> f64 {
        let MarkLaw::TwoSidedExp {
            scale_pos,
            scale_neg,
            weight_pos,
        } = self;
        if r <= 0.0 {
            return 0.0;
        }
        weight_pos * scale_pos.powf(p) * gamma_piece(p, 0.0, r / scale_pos)
            + (1.0 - weight_pos) * scale_neg.powf(p) * gamma_piece(p, 0.0, r / scale_neg)
    }

    /// E[|y|^p · 1_{|y| >= r}].
    pub fn abs_moment_above(&self, p: f64, r: f64) -> f64 {
        let MarkLaw::TwoSidedExp {
            scale_pos,
            scale_neg,
            weight_pos,
        } = self;
        let r = r.max(0.0);
        weight_pos * scale_pos.powf(p) * gamma_tail(p, r / scale_pos)
            + (1.0 - weight_pos) * scale_neg.powf(p) * gamma_tail(p, r / scale_neg)
    }

    /// E[|y|^p] over the whole mark space.
    pub fn abs_moment(&self, p: f64) -> f64 {
        self.abs_moment_below(p, f64::INFINITY)
    }
}

/// ∫_a^b t^p e^{-t} dt, integer orders through the exact incomplete
/// gamma recursion, fractional ones through quadrature.
fn gamma_piece(p: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if p.fract() == 0.0 && (0.0..=16.0).contains(&p) {
        let k = p as u32;
        if b.is_infinite() {
            return upper_gamma_int(k, a);
        }
        return lower_gamma_int(k, b) - lower_gamma_int(k, a);
    }
    // The integrand decays like e^{-t}: beyond p + 60 the remainder is
    // below 1e-20 relative.
    let cut = (p + 60.0).max(a);
    let b_eff = if b.is_infinite() { cut } else { b.min(cut) };
    if b_eff <= a {
        return 0.0;
    }
    integrate_gl(|t| t.powf(p) * (-t).exp(), a, b_eff, 96)
}

fn gamma_tail(p: f64, a: f64) -> f64 {
    gamma_piece(p, a, f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn law() -> MarkLaw {
        MarkLaw::TwoSidedExp {
            scale_pos: 0.6,
            scale_neg: 0.5,
            weight_pos: 0.7,
        }
    }

    #[test]
    fn validation_guards() {
        assert!(law().validate().is_ok());
        let bad = MarkLaw::TwoSidedExp {
            scale_pos: 0.0,
            scale_neg: 1.0,
            weight_pos: 0.5,
        };
        assert!(bad.validate().is_err());
        let bad = MarkLaw::TwoSidedExp {
            scale_pos: 1.0,
            scale_neg: 1.0,
            weight_pos: 1.5,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn total_mass_and_first_moments_closed_form() {
        let l = law();
        // P(|y| < ∞) = 1 split across regions.
        assert_relative_eq!(
            l.prob_below(1.0) + (l.signed_moment_above(0, 1.0)),
            1.0,
            epsilon = 1e-14
        );
        // E[y] = w₊ s₊ − w₋ s₋ = 0.7·0.6 − 0.3·0.5 = 0.27.
        let mean = l.signed_moment_below(1, f64::INFINITY) + 0.0;
        assert_relative_eq!(mean, 0.27, epsilon = 1e-12);
        // E[y²] = w₊·2s₊² + w₋·2s₋² = 0.7·0.72 + 0.3·0.5 = 0.654.
        assert_relative_eq!(l.abs_moment(2.0), 0.654, epsilon = 1e-12);
        // Below + above = total, for each k.
        for k in 0..=4 {
            let total = l.signed_moment_below(k, f64::INFINITY);
            let split = l.signed_moment_below(k, 1.0) + l.signed_moment_above(k, 1.0);
            assert_relative_eq!(total, split, epsilon = 1e-12);
        }
    }

    #[test]
    fn fractional_moments_match_integer_closed_forms() {
        let l = law();
        for (p, r) in [(1.0, 0.8), (2.0, 1.0), (4.0, 2.5), (8.0, 1.0)] {
            let exact_below = l.abs_moment_below(p, r);
            // Same value through the quadrature route by nudging p off
            // the integer lattice.
            let quad = l.abs_moment_below(p + 1e-12, r);
            assert_relative_eq!(exact_below, quad, max_relative = 1e-9);
        }
    }

    #[test]
    fn sampled_moments_match_analytic() {
        let l = law();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut below = 0usize;
        for _ in 0..n {
            let y = l.sample(&mut rng);
            sum += y;
            sum_sq += y * y;
            if y.abs() < 1.0 {
                below += 1;
            }
        }
        let nf = n as f64;
        // 5σ bands.
        let var = l.abs_moment(2.0) - 0.27f64.powi(2);
        assert!((sum / nf - 0.27).abs() < 5.0 * (var / nf).sqrt());
        let m2 = l.abs_moment(2.0);
        let var2 = l.abs_moment(4.0) - m2 * m2;
        assert!((sum_sq / nf - m2).abs() < 5.0 * (var2 / nf).sqrt());
        let p_below = l.prob_below(1.0);
        let sigma = (p_below * (1.0 - p_below) / nf).sqrt();
        assert!((below as f64 / nf - p_below).abs() < 5.0 * sigma);
    }

    #[test]
    fn moments_nondecreasing_in_region() {
        let l = law();
        for p in [1.0, 2.0, 4.0] {
            let mut prev = 0.0;
            for r in [0.25, 0.5, 1.0, 2.0, 8.0] {
                let m = l.abs_moment_below(p, r);
                assert!(m >= prev);
                prev = m;
            }
            assert!(l.abs_moment(p) >= prev);
        }
    }
}
