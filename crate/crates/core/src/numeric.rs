//! Internal numerical helpers: stable log-domain primitives, quadrature,
//! and 1-D search.

use gauss_quad::{GaussHermite, GaussLegendre};

/// `log(1 + e^z)` without overflow for any finite `z`.
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `log(1 - e^z)` for `z < 0`; `-inf` at `z == 0`.
pub(crate) fn log1mexp(z: f64) -> f64 {
    debug_assert!(z <= 0.0);
    if z > -std::f64::consts::LN_2 {
        (-z.exp_m1()).ln()
    } else {
        (-z.exp()).ln_1p()
    }
}

/// Logistic CDF `1/(1 + e^{-z})`, exact to full relative precision on the
/// small side of 0.5.
pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Trapezoid rule on a fixed grid of `n >= 2` nodes.
pub(crate) fn trapezoid<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    debug_assert!(n >= 2 && hi > lo);
    let h = (hi - lo) / (n - 1) as f64;
    let mut acc = 0.5 * (f(lo) + f(hi));
    for i in 1..n - 1 {
        acc += f(lo + i as f64 * h);
    }
    acc * h
}

/// Gauss-Legendre rule cached as plain node/weight pairs on [-1, 1].
pub(crate) struct LegendreRule {
    nodes: Vec<(f64, f64)>,
}

impl LegendreRule {
    pub(crate) fn new(degree: usize) -> Self {
        let degree = std::num::NonZeroUsize::new(degree).expect("positive degree");
        let rule = GaussLegendre::new(degree);
        let nodes = rule.as_node_weight_pairs().to_vec();
        Self { nodes }
    }

    /// Integrate `f` over `[a, b]`.
    pub(crate) fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for &(x, w) in &self.nodes {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Composite rule: split `[a, b]` into `panels` equal panels.
    pub(crate) fn integrate_composite<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> f64 {
        let h = (b - a) / panels as f64;
        let mut acc = 0.0;
        for i in 0..panels {
            acc += self.integrate(a + i as f64 * h, a + (i + 1) as f64 * h, &mut f);
        }
        acc
    }
}

/// Gauss-Hermite rule stored as pairs for expectations under a Normal law.
pub(crate) struct HermiteRule {
    nodes: Vec<(f64, f64)>,
}

impl HermiteRule {
    pub(crate) fn new(degree: usize) -> Self {
        let degree = std::num::NonZeroUsize::new(degree).expect("positive degree");
        let rule = GaussHermite::new(degree);
        let nodes = rule.as_node_weight_pairs().to_vec();
        Self { nodes }
    }

    /// `E[f(X)]` for `X ~ Normal(mean, sd^2)`.
    pub(crate) fn expectation<F: FnMut(f64) -> f64>(&self, mean: f64, sd: f64, mut f: F) -> f64 {
        let scale = std::f64::consts::SQRT_2 * sd;
        let norm = std::f64::consts::PI.sqrt();
        let mut acc = 0.0;
        for &(x, w) in &self.nodes {
            acc += w * f(mean + scale * x);
        }
        acc / norm
    }
}

/// Golden-section maximization of `f` on `[lo, hi]` down to a bracket width
/// of `tol`. Returns the bracket midpoint. Assumes `f` unimodal on the
/// bracket; callers are responsible for verifying that.
pub(crate) fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn softplus_matches_naive_in_safe_range() {
        for z in [-20.0, -1.0, 0.0, 1.0, 20.0] {
            assert_abs_diff_eq!(softplus(z), (1.0 + z.exp()).ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn softplus_no_overflow() {
        assert_eq!(softplus(800.0), 800.0);
        assert_eq!(softplus(-800.0), 0.0);
    }

    #[test]
    fn log1mexp_accuracy() {
        // log(1 - e^{-1e-10}) = log(1e-10) + O(1e-10)
        assert_abs_diff_eq!(log1mexp(-1e-10), (1e-10f64).ln(), epsilon = 1e-9);
        assert_abs_diff_eq!(log1mexp(-3.0), (1.0 - (-3.0f64).exp()).ln(), epsilon = 1e-14);
    }

    #[test]
    fn trapezoid_linear_exact() {
        let v = trapezoid(|x| 2.0 * x + 1.0, 0.0, 4.0, 2001);
        assert_abs_diff_eq!(v, 20.0, epsilon = 1e-10);
    }

    #[test]
    fn legendre_polynomial_exact() {
        let rule = LegendreRule::new(16);
        assert_abs_diff_eq!(rule.integrate(0.0, 1.0, |x| x * x), 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            rule.integrate_composite(-2.0, 3.0, 5, |x| x.powi(5)),
            (3.0f64.powi(6) - 2.0f64.powi(6)) / 6.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn hermite_moments() {
        let rule = HermiteRule::new(61);
        // E[X] = mean, E[X^2] = mean^2 + sd^2
        assert_abs_diff_eq!(rule.expectation(1.5, 3.0, |x| x), 1.5, epsilon = 1e-10);
        assert_abs_diff_eq!(rule.expectation(1.5, 3.0, |x| x * x), 1.5 * 1.5 + 9.0, epsilon = 1e-9);
    }

    #[test]
    fn golden_section_quadratic() {
        let x = golden_section_max(|x| -(x - 2.5) * (x - 2.5), 0.0, 10.0, 1e-10);
        assert_abs_diff_eq!(x, 2.5, epsilon = 1e-8);
    }

}
