//! Numeric helpers shared across the crate: compensated summation,
//! Gauss-Legendre quadrature, incomplete-gamma closed forms, and the
//! text formats used by every exporter.

/// Neumaier-compensated accumulator. Reductions over Monte-Carlo
/// ensembles use this so that serial and parallel runs agree bitwise
/// as long as terms are added in the same order.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums a slice with compensation, in slice order.
pub fn ksum(xs: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Mean and standard error of a sample, compensated.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let m = xs.len();
    if m == 0 {
        return (0.0, 0.0);
    }
    let mean = ksum(xs) / m as f64;
    if m == 1 {
        return (mean, 0.0);
    }
    let mut sq = KahanSum::new();
    for &x in xs {
        let d = x - mean;
        sq.add(d * d);
    }
    let var = sq.value() / (m as f64 - 1.0);
    (mean, (var / m as f64).sqrt())
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, z);
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let pk = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = pk;
    }
    let dp = if n == 0 {
        0.0
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

/// Integrates f over [a, b] with an n-point Gauss-Legendre rule.
pub fn integrate_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let rad = 0.5 * (b - a);
    let mut acc = KahanSum::new();
    for (x, w) in nodes.iter().zip(&weights) {
        acc.add(w * f(mid + rad * x));
    }
    rad * acc.value()
}

/// Lower incomplete gamma at integer shape: ∫_0^x t^k e^{-t} dt
/// = k!·(1 - e^{-x} Σ_{j≤k} x^j/j!).
pub fn lower_gamma_int(k: u32, x: f64) -> f64 {
    factorial(k) - upper_gamma_int(k, x)
}

/// Upper incomplete gamma at integer shape: ∫_x^∞ t^k e^{-t} dt
/// = k!·e^{-x} Σ_{j≤k} x^j/j!.
pub fn upper_gamma_int(k: u32, x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    let mut series = 0.0;
    let mut term = 1.0;
    for j in 0..=k {
        if j > 0 {
            term *= x / j as f64;
        }
        series += term;
    }
    factorial(k) * (-x).exp() * series
}

pub fn factorial(k: u32) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

/// Fixed-width scientific format with 17 significant digits; round-trips f64.
pub fn fmt_g17(x: f64) -> String {
    format!("{:.16e}", x)
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kahan_recovers_cancelled_unit() {
        let xs = [1e16, 1.0, -1e16];
        assert_eq!(ksum(&xs), 1.0);
    }

    #[test]
    fn gauss_legendre_5_matches_reference_nodes() {
        let (nodes, weights) = gauss_legendre(5);
        let ref_nodes = [
            -0.9061798459386640,
            -0.5384693101056831,
            0.0,
            0.5384693101056831,
            0.9061798459386640,
        ];
        let ref_weights = [
            0.2369268850561891,
            0.4786286704993665,
            0.5688888888888889,
            0.4786286704993665,
            0.2369268850561891,
        ];
        for i in 0..5 {
            assert_relative_eq!(nodes[i], ref_nodes[i], epsilon = 1e-14);
            assert_relative_eq!(weights[i], ref_weights[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        // n-point rule is exact through degree 2n-1.
        let v = integrate_gl(|x| x.powi(6), -1.0, 1.0, 4);
        assert_relative_eq!(v, 2.0 / 7.0, epsilon = 1e-14);
        let v = integrate_gl(|x| 3.0 * x * x - x + 2.0, 0.0, 2.0, 2);
        assert_relative_eq!(v, 10.0, epsilon = 1e-13);
    }

    #[test]
    fn incomplete_gamma_frozen_values() {
        // ∫_0^1 t e^{-t} dt = 1 - 2/e, ∫_1^∞ t e^{-t} dt = 2/e.
        assert_relative_eq!(lower_gamma_int(1, 1.0), 0.26424111765711533, epsilon = 1e-15);
        assert_relative_eq!(upper_gamma_int(1, 1.0), 0.7357588823428847, epsilon = 1e-15);
        // ∫_0^1 t² e^{-t} dt = 2 - 5/e.
        assert_relative_eq!(lower_gamma_int(2, 1.0), 0.16060279414278839, epsilon = 1e-15);
    }

    #[test]
    fn incomplete_gamma_splits_total_mass() {
        for k in 0..5u32 {
            for &x in &[0.3, 1.0, 2.7] {
                let total = lower_gamma_int(k, x) + upper_gamma_int(k, x);
                assert_relative_eq!(total, factorial(k), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn incomplete_gamma_matches_quadrature() {
        for k in 0..5u32 {
            let q = integrate_gl(|t| t.powi(k as i32) * (-t).exp(), 0.0, 1.7, 40);
            assert_relative_eq!(lower_gamma_int(k, 1.7), q, epsilon = 1e-13);
        }
    }

    #[test]
    fn g17_round_trips() {
        for &x in &[0.1, -3.25e-17, 1.0 / 3.0, 123456.789] {
            let s = fmt_g17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x);
        }
    }

    #[test]
    fn mean_stderr_basics() {
        let (m, se) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_relative_eq!(m, 2.5, epsilon = 1e-15);
        // sample var = 5/3, stderr = sqrt(5/12)
        assert_relative_eq!(se, (5.0f64 / 12.0).sqrt(), epsilon = 1e-15);
    }
}
