//! Seeded synthetic detector scans.
//!
//! The expected signal is a sum of Gaussian peaks, one per species and
//! diffraction order, centred on the order angle. A peak's height is
//! `exposure · abundance · I_n`, with `I_n` from
//! [`quantum_order_intensity`], so peak areas follow the order intensities
//! and a pure beam with unit amplitude peaks at `exposure` counts in the
//! zeroth order. There is no background.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::model::{quantum_order_intensity, BeamState, Grating, QuantumPeakParams, Species};
use crate::{Error, Execution, Result};

/// FWHM of a Gaussian over its standard deviation, `2√(2 ln 2)`.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

const ABUNDANCE_TOLERANCE: f64 = 1e-9;

/// Peaks further than this many standard deviations outside the window
/// contribute nothing representable and are skipped.
const PEAK_REACH_SIGMAS: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// First bin centre, rad.
    pub angle_min: f64,
    /// Last bin centre, rad.
    pub angle_max: f64,
    pub num_bins: usize,
    /// Angular resolution (FWHM of the instrument response), rad.
    pub angular_resolution_fwhm: f64,
    /// Expected counts at the maximum of a unit zeroth-order peak.
    pub exposure_scale: f64,
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.angle_min.is_finite() && self.angle_max.is_finite() && self.angle_min < self.angle_max) {
            return Err(Error::domain("detector angle_min must be below angle_max"));
        }
        if self.num_bins < 2 {
            return Err(Error::domain("detector needs at least 2 bins"));
        }
        if !(self.angular_resolution_fwhm.is_finite() && self.angular_resolution_fwhm > 0.0) {
            return Err(Error::domain("detector angular resolution must be positive"));
        }
        if !(self.exposure_scale.is_finite() && self.exposure_scale > 0.0) {
            return Err(Error::domain("detector exposure scale must be positive"));
        }
        Ok(())
    }

    pub fn bin_width(&self) -> f64 {
        (self.angle_max - self.angle_min) / (self.num_bins - 1) as f64
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        let w = self.bin_width();
        (0..self.num_bins).map(|i| self.angle_min + i as f64 * w).collect()
    }
}

/// One species in a beam mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub species: Species,
    pub relative_abundance: f64,
    pub peak_params: QuantumPeakParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMetadata {
    /// Beam velocity, m/s.
    pub velocity: f64,
    pub grating: Grating,
    pub seed: u64,
    pub synthetic: bool,
}

/// Angle-resolved counts on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorScan {
    /// rad, strictly increasing and uniformly spaced
    pub bin_centers: Vec<f64>,
    pub counts: Vec<u64>,
    pub metadata: ScanMetadata,
}

impl DetectorScan {
    pub fn new(bin_centers: Vec<f64>, counts: Vec<u64>, metadata: ScanMetadata) -> Result<Self> {
        let scan = DetectorScan { bin_centers, counts, metadata };
        scan.validate()?;
        Ok(scan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bin_centers.len() != self.counts.len() {
            return Err(Error::domain(format!(
                "scan has {} bin centres but {} counts",
                self.bin_centers.len(),
                self.counts.len()
            )));
        }
        if self.bin_centers.len() < 2 {
            return Err(Error::domain("scan needs at least 2 bins"));
        }
        let step = self.bin_width();
        if !(step > 0.0) {
            return Err(Error::domain("scan bin centres must be strictly increasing"));
        }
        let scale = self.bin_centers[0].abs().max(self.bin_centers[self.bin_centers.len() - 1].abs());
        for (i, w) in self.bin_centers.windows(2).enumerate() {
            let d = w[1] - w[0];
            if !(d > 0.0) {
                return Err(Error::domain(format!("scan bin centres not increasing at row {}", i + 1)));
            }
            // spacing agreement relative to the step, allowing for the
            // rounding of the centres themselves
            if (d - step).abs() > 1e-9 * step + 4.0 * f64::EPSILON * scale {
                return Err(Error::domain(format!("scan bins not uniformly spaced at row {}", i + 1)));
            }
        }
        Ok(())
    }

    /// Mean bin spacing, rad.
    pub fn bin_width(&self) -> f64 {
        let n = self.bin_centers.len();
        (self.bin_centers[n - 1] - self.bin_centers[0]) / (n - 1) as f64
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// A Gaussian peak of the expected signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakTerm {
    pub species_index: usize,
    pub order: i32,
    /// rad
    pub center: f64,
    /// Expected counts at the centre.
    pub height: f64,
}

fn validate_mixture(mixture: &[MixtureComponent]) -> Result<()> {
    if mixture.is_empty() {
        return Err(Error::domain("mixture must contain at least one component"));
    }
    let mut total = 0.0;
    for c in mixture {
        c.species.validate()?;
        c.peak_params.validate()?;
        if !(c.relative_abundance.is_finite() && c.relative_abundance >= 0.0) {
            return Err(Error::domain(format!(
                "relative_abundance of {} must be non-negative",
                c.species.name
            )));
        }
        total += c.relative_abundance;
    }
    if (total - 1.0).abs() > ABUNDANCE_TOLERANCE {
        return Err(Error::domain(format!("relative_abundance values must sum to 1, got {total}")));
    }
    Ok(())
}

/// All peaks that can reach the detector window.
pub fn peak_terms(
    mixture: &[MixtureComponent],
    beam_velocity: f64,
    grating: &Grating,
    detector: &DetectorConfig,
) -> Result<Vec<PeakTerm>> {
    validate_mixture(mixture)?;
    grating.validate()?;
    detector.validate()?;

    let width = detector.angular_resolution_fwhm / FWHM_PER_SIGMA;
    let reach = PEAK_REACH_SIGMAS * width;
    let lo = (detector.angle_min - reach).max(-std::f64::consts::FRAC_PI_2);
    let hi = (detector.angle_max + reach).min(std::f64::consts::FRAC_PI_2);

    let mut peaks = Vec::new();
    for (index, component) in mixture.iter().enumerate() {
        let beam = BeamState::new(component.species.clone(), beam_velocity)?;
        let ratio = grating.period / beam.wavelength;
        let n_lo = (lo.sin() * ratio).ceil().max(-ratio.floor()) as i32;
        let n_hi = (hi.sin() * ratio).floor().min(ratio.floor()) as i32;
        for n in n_lo..=n_hi {
            let sin_theta = f64::from(n) * beam.wavelength / grating.period;
            if sin_theta.abs() > 1.0 {
                continue;
            }
            let weight = quantum_order_intensity(n, &component.peak_params, grating.period)?;
            peaks.push(PeakTerm {
                species_index: index,
                order: n,
                center: sin_theta.asin(),
                height: detector.exposure_scale * component.relative_abundance * weight,
            });
        }
    }
    Ok(peaks)
}

/// Noise-free expected counts per bin.
pub fn expected_counts(
    mixture: &[MixtureComponent],
    beam_velocity: f64,
    grating: &Grating,
    detector: &DetectorConfig,
    exec: Execution,
) -> Result<Vec<f64>> {
    let peaks = peak_terms(mixture, beam_velocity, grating, detector)?;
    let sigma = detector.angular_resolution_fwhm / FWHM_PER_SIGMA;
    let inv_two_var = 1.0 / (2.0 * sigma * sigma);
    let centers = detector.bin_centers();
    Ok(exec.map(&centers, |&x| {
        peaks
            .iter()
            .map(|p| {
                let dx = x - p.center;
                p.height * (-dx * dx * inv_two_var).exp()
            })
            .sum()
    }))
}

/// Generates a detector scan. With `noise` every bin is an independent
/// Poisson draw from a ChaCha8 stream seeded with `seed`; without it the
/// expected counts are rounded to the nearest integer.
pub fn synthesize_scan(
    mixture: &[MixtureComponent],
    beam_velocity: f64,
    grating: &Grating,
    detector: &DetectorConfig,
    seed: u64,
    noise: bool,
) -> Result<DetectorScan> {
    synthesize_scan_with(mixture, beam_velocity, grating, detector, seed, noise, Execution::default())
}

pub fn synthesize_scan_with(
    mixture: &[MixtureComponent],
    beam_velocity: f64,
    grating: &Grating,
    detector: &DetectorConfig,
    seed: u64,
    noise: bool,
    exec: Execution,
) -> Result<DetectorScan> {
    let expected = expected_counts(mixture, beam_velocity, grating, detector, exec)?;
    let counts = if noise {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        expected.iter().map(|&mu| poisson_draw(mu, &mut rng)).collect::<Result<Vec<_>>>()?
    } else {
        expected.iter().map(|&mu| mu.round() as u64).collect()
    };
    Ok(DetectorScan {
        bin_centers: detector.bin_centers(),
        counts,
        metadata: ScanMetadata { velocity: beam_velocity, grating: *grating, seed, synthetic: true },
    })
}

fn poisson_draw(mean: f64, rng: &mut ChaCha8Rng) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::Range(format!("poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{MRAD, NM};
    use crate::model::slit_envelope;

    fn grating() -> Grating {
        Grating::new(100.0 * NM, 70.0 * NM, 100).unwrap()
    }

    fn detector() -> DetectorConfig {
        DetectorConfig {
            angle_min: -8.0 * MRAD,
            angle_max: 8.0 * MRAD,
            num_bins: 3201,
            angular_resolution_fwhm: 0.05 * MRAD,
            exposure_scale: 1e6,
        }
    }

    fn pure(species: Species, params: QuantumPeakParams) -> Vec<MixtureComponent> {
        vec![MixtureComponent { species, relative_abundance: 1.0, peak_params: params }]
    }

    #[test]
    fn empty_mixture_is_rejected() {
        let r = synthesize_scan(&[], 1000.0, &grating(), &detector(), 1, false);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn abundances_must_sum_to_one() {
        let p = QuantumPeakParams::envelope_only(60.0 * NM, 1.0);
        let mix = vec![
            MixtureComponent { species: Species::helium_cluster(1), relative_abundance: 0.6, peak_params: p },
            MixtureComponent { species: Species::helium_cluster(2), relative_abundance: 0.3, peak_params: p },
        ];
        let err = synthesize_scan(&mix, 1000.0, &grating(), &detector(), 1, false).unwrap_err();
        assert!(err.to_string().contains("relative_abundance"));
    }

    #[test]
    fn window_without_peaks_is_empty() {
        // far beyond the first order at 1 mrad, between orders 30 and 31
        let det = DetectorConfig { angle_min: 30.3 * MRAD, angle_max: 30.6 * MRAD, ..detector() };
        let p = QuantumPeakParams::envelope_only(60.0 * NM, 1.0);
        let scan = synthesize_scan(&pure(Species::helium_cluster(1), p), 1000.0, &grating(), &det, 3, true).unwrap();
        assert_eq!(scan.total_counts(), 0);
    }

    #[test]
    fn zeroth_peak_height_is_exposure() {
        let p = QuantumPeakParams::envelope_only(60.0 * NM, 1.0);
        let mut det = detector();
        det.num_bins = 3201; // bin at exactly 0
        let e = expected_counts(&pure(Species::helium_cluster(1), p), 1000.0, &grating(), &det, Execution::Sequential)
            .unwrap();
        let mid = e[1600];
        assert!((mid / 1e6 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn peak_areas_follow_envelope() {
        let s_eff = 60.0 * NM;
        let p = QuantumPeakParams::envelope_only(s_eff, 1.0);
        let g = grating();
        let det = detector();
        let peaks = peak_terms(&pure(Species::helium_cluster(1), p), 1000.0, &g, &det).unwrap();
        for t in peaks.iter().filter(|t| t.order.abs() <= 7) {
            let want = det.exposure_scale * slit_envelope(t.order, s_eff, g.period);
            assert!((t.height - want).abs() <= 1e-12 * det.exposure_scale);
        }
    }

    #[test]
    fn dimer_peak_at_half_angle() {
        let p = QuantumPeakParams::envelope_only(60.0 * NM, 1.0);
        let mix = vec![
            MixtureComponent { species: Species::helium_cluster(1), relative_abundance: 0.8, peak_params: p },
            MixtureComponent { species: Species::helium_cluster(2), relative_abundance: 0.2, peak_params: p },
        ];
        let peaks = peak_terms(&mix, 1000.0, &grating(), &detector()).unwrap();
        let first = |i: usize| peaks.iter().find(|t| t.species_index == i && t.order == 1).unwrap().center;
        let ratio = first(0) / first(1);
        assert!((ratio - 2.0).abs() < 1e-6);
    }

    #[test]
    fn same_seed_same_counts() {
        let p = QuantumPeakParams::new(60.0 * NM, 5.0 * NM, 3.0 * NM, 1.0).unwrap();
        let mix = pure(Species::helium_cluster(1), p);
        let a = synthesize_scan(&mix, 1000.0, &grating(), &detector(), 42, true).unwrap();
        let b = synthesize_scan(&mix, 1000.0, &grating(), &detector(), 42, true).unwrap();
        let c = synthesize_scan(&mix, 1000.0, &grating(), &detector(), 43, true).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let p = QuantumPeakParams::new(60.0 * NM, 5.0 * NM, 3.0 * NM, 1.0).unwrap();
        let mix = pure(Species::helium_cluster(1), p);
        let a = expected_counts(&mix, 1000.0, &grating(), &detector(), Execution::Sequential).unwrap();
        let b = expected_counts(&mix, 1000.0, &grating(), &detector(), Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scan_validation() {
        let meta = ScanMetadata { velocity: 1.0, grating: grating(), seed: 0, synthetic: false };
        assert!(DetectorScan::new(vec![0.0, 1.0, 2.0], vec![1, 2], meta.clone()).is_err());
        assert!(DetectorScan::new(vec![0.0, 1.0, 3.0], vec![1, 2, 3], meta.clone()).is_err());
        assert!(DetectorScan::new(vec![0.0, 1.0, 0.5], vec![1, 2, 3], meta.clone()).is_err());
        assert!(DetectorScan::new(vec![0.0, 1.0, 2.0], vec![1, 2, 3], meta).is_ok());
    }
}
