//! Brute-force reference for [`grating_intensity`](super::grating_intensity).
//!
//! Sums one unit phasor per slit and integrates the aperture by composite
//! Gauss–Legendre quadrature. Shares no closed forms with the production
//! path, so agreement between the two is a meaningful check.

use std::f64::consts::PI;
use std::sync::OnceLock;

use super::Grating;

const GL_POINTS: usize = 16;
/// Phase advance per quadrature panel, rad.
const MAX_PANEL_PHASE: f64 = 0.5;
/// Keeps the node count at or above 10⁴ for every angle.
const MIN_PANELS: usize = 625;

const TWO_PI_LO: f64 = 2.449_293_598_294_706_4e-16;

/// Intensity from an explicit phasor sum over slits times the squared mean
/// of `exp(i k sinθ y)` across one aperture.
pub fn phasor_sum_reference(theta: f64, grating: &Grating, wavenumber: f64) -> f64 {
    let q = wavenumber * theta.sin();
    let phase_step = wrap_two_pi(grating.period * q);

    let (mut re, mut im) = (0.0, 0.0);
    for j in 0..grating.num_slits {
        let phi = f64::from(j) * phase_step;
        re += phi.cos();
        im += phi.sin();
    }
    let grating_term = re * re + im * im;

    let (are, aim) = aperture_mean(q, grating.slit_width);
    grating_term * (are * are + aim * aim)
}

/// `(1/s) ∫₀^s exp(i q y) dy`, returned as (re, im).
fn aperture_mean(q: f64, width: f64) -> (f64, f64) {
    let total_phase = (q * width).abs();
    let panels = MIN_PANELS.max((total_phase / MAX_PANEL_PHASE).ceil() as usize);
    let h = width / panels as f64;
    let (nodes, weights) = gauss_legendre();

    let (mut re, mut im) = (0.0, 0.0);
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        let (mut pre, mut pim) = (0.0, 0.0);
        for (x, w) in nodes.iter().zip(weights) {
            let y = mid + 0.5 * h * x;
            let phi = q * y;
            pre += w * phi.cos();
            pim += w * phi.sin();
        }
        re += pre;
        im += pim;
    }
    // each panel integrates to 0.5·h·Σw f; divide by the full width
    let scale = 0.5 * h / width;
    (re * scale, im * scale)
}

/// Wraps `x` into `[-π, π]` using a two-term 2π.
fn wrap_two_pi(x: f64) -> f64 {
    let m = (x / (2.0 * PI)).round();
    if m == 0.0 {
        return x;
    }
    (-m).mul_add(2.0 * PI, x) - m * TWO_PI_LO
}

/// Nodes and weights of the 16-point Gauss–Legendre rule on [-1, 1].
fn gauss_legendre() -> &'static ([f64; GL_POINTS], [f64; GL_POINTS]) {
    static RULE: OnceLock<([f64; GL_POINTS], [f64; GL_POINTS])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let mut nodes = [0.0; GL_POINTS];
        let mut weights = [0.0; GL_POINTS];
        for i in 0..n {
            // Chebyshev initial guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::NM;

    #[test]
    fn rule_integrates_polynomials() {
        let (x, w) = gauss_legendre();
        let sum_w: f64 = w.iter().sum();
        assert!((sum_w - 2.0).abs() < 1e-14);
        // ∫ x^30 = 2/31 is exact for 16 points
        let i30: f64 = x.iter().zip(w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((i30 - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn forward_direction() {
        let g = Grating::new(100.0 * NM, 40.0 * NM, 12).unwrap();
        let v = phasor_sum_reference(0.0, &g, 2.0 * PI / 1e-10);
        assert!((v - 144.0).abs() < 1e-10);
    }

    #[test]
    fn single_slit_is_slit_factor() {
        let g = Grating::new(100.0 * NM, 40.0 * NM, 1).unwrap();
        let k = 2.0 * PI / 1e-10;
        let theta: f64 = 1.3e-3;
        let x = 0.5 * g.slit_width * k * theta.sin();
        let expected = (x.sin() / x).powi(2);
        let v = phasor_sum_reference(theta, &g, k);
        assert!((v / expected - 1.0).abs() < 1e-10);
    }
}
