//! Closed-form grating intensity against the phasor/quadrature reference.

use std::f64::consts::PI;

use matterwave::constants::NM;
use matterwave::model::oracle::phasor_sum_reference;
use matterwave::model::{grating_intensity, Grating};
use matterwave::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Case {
    grating: Grating,
    wavenumber: f64,
    theta: f64,
    at_maximum: bool,
}

fn cases(count: usize, seed: u64) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let period = rng.random_range(50.0..200.0) * NM;
            let slit = rng.random_range(0.05..0.95) * period;
            let grating = Grating::new(period, slit, rng.random_range(1..=64)).unwrap();
            let wavelength = rng.random_range(0.3e-10..3.0e-10);
            let at_maximum = i % 3 == 0;
            let theta = if at_maximum {
                let n: i32 = rng.random_range(-12..=12);
                (f64::from(n) * wavelength / period).asin()
            } else {
                let span = 12.0 * wavelength / period;
                rng.random_range(-span..span).asin()
            };
            Case { grating, wavenumber: 2.0 * PI / wavelength, theta, at_maximum }
        })
        .collect()
}

#[test]
fn closed_form_matches_reference() {
    let cases = cases(400, 7);
    let errors = Execution::default().map(&cases, |c| {
        let a = grating_intensity(c.theta, &c.grating, c.wavenumber);
        let b = phasor_sum_reference(c.theta, &c.grating, c.wavenumber);
        ((a - b).abs() / b.abs(), c.at_maximum)
    });
    for (i, (err, at_max)) in errors.iter().enumerate() {
        let tol = if *at_max { 1e-6 } else { 1e-9 };
        assert!(err <= &tol, "case {i}: relative error {err:e} (at maximum: {at_max})");
    }
}

#[test]
fn reference_is_even_and_non_negative() {
    for c in cases(60, 11) {
        let a = phasor_sum_reference(c.theta, &c.grating, c.wavenumber);
        let b = phasor_sum_reference(-c.theta, &c.grating, c.wavenumber);
        assert!(a >= 0.0 && b >= 0.0);
        assert!((a - b).abs() <= 1e-9 * a.max(1e-300));
    }
}

#[test]
fn principal_maxima_reach_n_squared_grating_factor() {
    // with slit factor divided out, the grating factor at every maximum is N²
    let g = Grating::new(100.0 * NM, 30.0 * NM, 37).unwrap();
    let lambda = 1.1e-10;
    let k = 2.0 * PI / lambda;
    for n in -9..=9 {
        let theta = (f64::from(n) * lambda / g.period).asin();
        let single = Grating { num_slits: 1, ..g };
        let slit = phasor_sum_reference(theta, &single, k);
        let full = grating_intensity(theta, &g, k);
        assert!((full / slit / 1369.0 - 1.0).abs() < 1e-6, "order {n}");
    }
}
