//! Ratios with removable singularities, evaluated by series near the
//! singular points.

use std::f64::consts::PI;

/// Distance from a singular point below which the series branch is used.
pub const SERIES_THRESHOLD: f64 = 1e-8;

/// Low-order correction so that `PI + PI_LO` carries ~107 bits of π.
const PI_LO: f64 = 1.224_646_799_147_353_2e-16;

/// Reduces `u` modulo π into `[-π/2, π/2]`.
///
/// Uses a two-term π and a fused multiply-add so the remainder keeps full
/// relative precision near multiples of π, where it matters most.
pub fn reduce_mod_pi(u: f64) -> f64 {
    let m = (u / PI).round();
    if m == 0.0 {
        return u;
    }
    (-m).mul_add(PI, u) - m * PI_LO
}

/// `sin(x)/x`, equal to 1 at `x = 0`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < SERIES_THRESHOLD {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `[sin(N u) / sin(u)]²`, equal to `N²` at every `u = mπ`.
pub fn dirichlet_squared(u: f64, n: u32) -> f64 {
    if n == 1 {
        return 1.0;
    }
    let eps = reduce_mod_pi(u);
    let nf = f64::from(n);
    if eps.abs() < SERIES_THRESHOLD {
        let e2 = eps * eps;
        let n2 = nf * nf;
        let ratio = nf * (1.0 - (n2 - 1.0) * e2 / 6.0 + (n2 - 1.0) * (3.0 * n2 - 7.0) * e2 * e2 / 360.0);
        ratio * ratio
    } else {
        let ratio = (nf * eps).sin() / eps.sin();
        ratio * ratio
    }
}

/// `[sin²a + sinh²b] / [a² + b²]`, equal to 1 at `a = b = 0`.
pub fn contrast_bracket(a: f64, b: f64) -> f64 {
    let r2 = a * a + b * b;
    if r2 == 0.0 {
        return 1.0;
    }
    if r2.sqrt() < SERIES_THRESHOLD {
        let (a2, b2) = (a * a, b * b);
        return 1.0 + (b2 - a2) / 3.0 + 2.0 * (a2 * a2 * a2 + b2 * b2 * b2) / (45.0 * r2);
    }
    let (sa, shb) = (a.sin(), b.sinh());
    (sa * sa + shb * shb) / r2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_limits() {
        assert_eq!(sinc(0.0), 1.0);
        assert!((sinc(1e-9) - 1.0).abs() < 1e-17);
        assert!(sinc(PI).abs() < 1e-16);
        // continuity across the threshold
        let below = sinc(0.99 * SERIES_THRESHOLD);
        let above = sinc(1.01 * SERIES_THRESHOLD);
        assert!((below - above).abs() < 1e-15);
    }

    #[test]
    fn reduction_near_multiples() {
        for m in [1.0, 7.0, 313.0, 3000.0] {
            let u = m * PI;
            assert!(reduce_mod_pi(u).abs() < 1e-12 * m);
        }
        assert_eq!(reduce_mod_pi(0.25), 0.25);
        let r = reduce_mod_pi(10.0);
        assert!((r - (10.0 - 3.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn dirichlet_maxima_and_continuity() {
        for n in [2u32, 8, 64] {
            let n2 = f64::from(n * n);
            assert_eq!(dirichlet_squared(0.0, n), n2);
            assert!((dirichlet_squared(5.0 * PI, n) / n2 - 1.0).abs() < 1e-12);
            let eps = SERIES_THRESHOLD;
            let below = dirichlet_squared(0.999 * eps, n);
            let above = dirichlet_squared(1.001 * eps, n);
            assert!((below / above - 1.0).abs() < 1e-10);
        }
        assert_eq!(dirichlet_squared(1.234, 1), 1.0);
    }

    #[test]
    fn bracket_limits() {
        assert_eq!(contrast_bracket(0.0, 0.0), 1.0);
        let (a, b) = (3e-9, 2e-9);
        assert!((contrast_bracket(a, b) - 1.0).abs() < 1e-16);
        // δ-free bracket is the squared sinc
        let a = 1.7;
        assert!((contrast_bracket(a, 0.0) - sinc(a).powi(2)).abs() < 1e-15);
    }
}
