use serde::{Deserialize, Serialize};

use crate::synthesis::DetectorScan;

/// Half-width of an integration window, in units of the local FWHM.
pub const WINDOW_HALF_WIDTH_FWHM: f64 = 3.0;

/// Bins at each window edge used for the background estimate.
const EDGE_BINS: usize = 2;

/// Integrated counts of one diffraction order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderIntensity {
    pub order_n: i32,
    /// Background-subtracted counts in the window.
    pub intensity: f64,
    /// Poisson uncertainty, `sqrt` of the raw counts in the window.
    pub uncertainty: f64,
    /// Set when the window was cut short by a neighbouring order or by the
    /// edge of the scan.
    #[serde(default)]
    pub truncated: bool,
}

/// Integrates counts in `±3·fwhm` windows around the expected order angles.
///
/// Windows of adjacent orders that would overlap are cut at the midpoint
/// between the two centres and flagged. Orders whose window lies entirely
/// outside the scan are left out. The background level is the smaller of the
/// mean counts in the outermost bins on either side of the window.
pub fn extract_order_intensities(scan: &DetectorScan, expected_angles: &[(i32, f64)], fwhm: f64) -> Vec<OrderIntensity> {
    let half = WINDOW_HALF_WIDTH_FWHM * fwhm;
    let mut sorted: Vec<(i32, f64)> = expected_angles.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1));

    let n_bins = scan.bin_centers.len();
    let width = scan.bin_width();
    let scan_lo = scan.bin_centers[0] - 0.5 * width;
    let scan_hi = scan.bin_centers[n_bins - 1] + 0.5 * width;

    let mut out = Vec::with_capacity(sorted.len());
    for (i, &(order, theta)) in sorted.iter().enumerate() {
        let mut lo = theta - half;
        let mut hi = theta + half;
        let mut truncated = false;
        if i > 0 {
            let prev = sorted[i - 1].1;
            if prev + half > lo {
                lo = 0.5 * (prev + theta);
                truncated = true;
            }
        }
        if let Some(&(_, next)) = sorted.get(i + 1) {
            if next - half < hi {
                hi = 0.5 * (theta + next);
                truncated = true;
            }
        }
        if hi <= scan_lo || lo >= scan_hi {
            continue;
        }
        if lo < scan_lo || hi > scan_hi {
            truncated = true;
        }

        // bins with centre in [lo, hi)
        let first = scan.bin_centers.partition_point(|&x| x < lo);
        let last = scan.bin_centers.partition_point(|&x| x < hi);
        let window = &scan.counts[first..last];
        if window.is_empty() {
            continue;
        }
        let total: u64 = window.iter().sum();
        let background = edge_background(window);
        let intensity = (total as f64 - background * window.len() as f64).max(0.0);
        out.push(OrderIntensity { order_n: order, intensity, uncertainty: (total as f64).sqrt(), truncated });
    }
    out.sort_by_key(|o| o.order_n);
    out
}

fn edge_background(window: &[u64]) -> f64 {
    if window.len() < 2 * EDGE_BINS + 1 {
        return 0.0;
    }
    let mean = |s: &[u64]| s.iter().sum::<u64>() as f64 / s.len() as f64;
    let left = mean(&window[..EDGE_BINS]);
    let right = mean(&window[window.len() - EDGE_BINS..]);
    left.min(right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{MRAD, NM};
    use crate::model::{quantum_order_intensity, BeamState, Grating, QuantumPeakParams, Species};
    use crate::synthesis::{synthesize_scan, DetectorConfig, MixtureComponent, ScanMetadata};

    fn setup() -> (Grating, DetectorConfig) {
        let g = Grating::new(100.0 * NM, 70.0 * NM, 100).unwrap();
        let det = DetectorConfig {
            angle_min: -8.0 * MRAD,
            angle_max: 8.0 * MRAD,
            num_bins: 3201,
            angular_resolution_fwhm: 0.05 * MRAD,
            exposure_scale: 1e8,
        };
        (g, det)
    }

    #[test]
    fn noiseless_ratios_match_order_law() {
        let (g, det) = setup();
        let p = QuantumPeakParams::new(60.0 * NM, 5.0 * NM, 3.0 * NM, 1.0).unwrap();
        let mix = vec![MixtureComponent { species: Species::helium_cluster(1), relative_abundance: 1.0, peak_params: p }];
        let scan = synthesize_scan(&mix, 1000.0, &g, &det, 0, false).unwrap();
        let beam = BeamState::new(Species::helium_cluster(1), 1000.0).unwrap();
        let angles = beam.diffraction_angles(&g, 7);
        let orders = extract_order_intensities(&scan, &angles, det.angular_resolution_fwhm);
        assert_eq!(orders.len(), 15);
        let i0 = orders.iter().find(|o| o.order_n == 0).unwrap().intensity;
        for o in &orders {
            assert!(!o.truncated);
            let want = quantum_order_intensity(o.order_n, &p, g.period).unwrap();
            let got = o.intensity / i0;
            assert!((got / want - 1.0).abs() < 1e-3, "order {}: {got} vs {want}", o.order_n);
        }
    }

    #[test]
    fn empty_scan_gives_zero_intensities() {
        let (g, det) = setup();
        let scan = DetectorScan {
            bin_centers: det.bin_centers(),
            counts: vec![0; det.num_bins],
            metadata: ScanMetadata { velocity: 1000.0, grating: g, seed: 0, synthetic: true },
        };
        let angles = vec![(-1, -1e-3), (0, 0.0), (1, 1e-3)];
        let orders = extract_order_intensities(&scan, &angles, det.angular_resolution_fwhm);
        assert_eq!(orders.len(), 3);
        assert!(orders.iter().all(|o| o.intensity == 0.0 && o.uncertainty == 0.0));
    }

    #[test]
    fn outside_orders_are_omitted_and_edges_flagged() {
        let (g, det) = setup();
        let scan = DetectorScan {
            bin_centers: det.bin_centers(),
            counts: vec![1; det.num_bins],
            metadata: ScanMetadata { velocity: 1000.0, grating: g, seed: 0, synthetic: true },
        };
        let angles = vec![(0, 0.0), (8, 8.0 * MRAD), (9, 9.0 * MRAD)];
        let orders = extract_order_intensities(&scan, &angles, det.angular_resolution_fwhm);
        let ns: Vec<i32> = orders.iter().map(|o| o.order_n).collect();
        assert_eq!(ns, vec![0, 8]);
        assert!(orders[1].truncated);
        // flat background is removed
        assert_eq!(orders[0].intensity, 0.0);
        assert!(orders[0].uncertainty > 0.0);
    }

    #[test]
    fn overlapping_windows_split_at_midpoint() {
        let (g, det) = setup();
        let scan = DetectorScan {
            bin_centers: det.bin_centers(),
            counts: vec![1; det.num_bins],
            metadata: ScanMetadata { velocity: 1000.0, grating: g, seed: 0, synthetic: true },
        };
        let fwhm = det.angular_resolution_fwhm;
        let angles = vec![(1, 1.0 * MRAD), (2, 1.0 * MRAD + 2.0 * fwhm)];
        let orders = extract_order_intensities(&scan, &angles, fwhm);
        assert!(orders.iter().all(|o| o.truncated));
        // no bin is counted twice: the windows tile [θ1 - 3w, θ2 + 3w)
        let total: f64 = orders.iter().map(|o| o.uncertainty * o.uncertainty).sum();
        let expected_bins = (8.0 * fwhm / scan.bin_width()).round();
        assert!((total - expected_bins).abs() <= 1.0);
    }

    #[test]
    fn dimer_orders_at_half_angle() {
        let (g, det) = setup();
        let p = QuantumPeakParams::new(60.0 * NM, 2.0 * NM, 1.0 * NM, 1.0).unwrap();
        let mix = vec![
            MixtureComponent { species: Species::helium_cluster(1), relative_abundance: 0.9, peak_params: p },
            MixtureComponent { species: Species::helium_cluster(2), relative_abundance: 0.1, peak_params: p },
        ];
        let scan = synthesize_scan(&mix, 1000.0, &g, &det, 0, false).unwrap();
        let he = BeamState::new(Species::helium_cluster(1), 1000.0).unwrap();
        let he2 = BeamState::new(Species::helium_cluster(2), 1000.0).unwrap();
        let a1 = he.diffraction_angles(&g, 1)[2].1;
        let a2 = he2.diffraction_angles(&g, 1)[2].1;
        assert!((a1 / a2 - 2.0).abs() < 1e-6);
        let orders = extract_order_intensities(&scan, &[(1, a2)], det.angular_resolution_fwhm);
        let want = 0.1 * 1e8 * quantum_order_intensity(1, &p, g.period).unwrap();
        // area of a Gaussian sampled per bin: height · σ√(2π) / bin width
        let sigma = det.angular_resolution_fwhm / crate::synthesis::FWHM_PER_SIGMA;
        let area = want * sigma * (2.0 * std::f64::consts::PI).sqrt() / scan.bin_width();
        assert!((orders[0].intensity / area - 1.0).abs() < 1e-3);
    }
}
