//! Cluster identification from peak angles.
//!
//! At a common beam velocity the de Broglie wavelength of `He_N` is `1/N`
//! of the monomer's, so the `n`-th order of cluster `N` sits near
//! `(n/N)·θ_ref`, where `θ_ref` is the monomer first-order angle.

use serde::{Deserialize, Serialize};

use crate::synthesis::DetectorScan;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// rad
    pub peak_angle: f64,
    pub cluster_size: u32,
    pub order: u32,
    /// `|θ - (n/N)·θ_ref| / θ_ref`
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentReport {
    pub assignments: Vec<ClusterAssignment>,
    pub unassigned: usize,
    /// rad
    pub unassigned_angles: Vec<f64>,
}

/// Labels each peak with the `(N, n)` whose angle ratio `n/N` is nearest to
/// `θ/θ_ref`, for `N ≤ max_cluster` and `n ≤ max_order`.
///
/// Exact ties go to the smallest `N`, then the smallest `n`. Peaks whose best
/// residual exceeds `tolerance` are counted as unassigned. Negative angles
/// are matched by magnitude.
pub fn assign_clusters(
    peak_angles: &[f64],
    reference_first_order: f64,
    max_cluster: u32,
    max_order: u32,
    tolerance: f64,
) -> Result<AssignmentReport> {
    if !(reference_first_order.is_finite() && reference_first_order > 0.0) {
        return Err(Error::domain("reference first-order angle must be positive"));
    }
    if max_cluster < 1 || max_order < 1 {
        return Err(Error::domain("max_cluster and max_order must be at least 1"));
    }
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::domain("assignment tolerance must be positive"));
    }

    let mut report = AssignmentReport { assignments: Vec::new(), unassigned: 0, unassigned_angles: Vec::new() };
    for &theta in peak_angles {
        let ratio = theta.abs() / reference_first_order;
        let mut best: Option<(f64, u32, u32)> = None;
        for size in 1..=max_cluster {
            for order in 1..=max_order {
                let residual = (ratio - f64::from(order) / f64::from(size)).abs();
                if best.is_none_or(|(r, _, _)| residual < r) {
                    best = Some((residual, size, order));
                }
            }
        }
        match best {
            Some((residual, size, order)) if residual <= tolerance => {
                report.assignments.push(ClusterAssignment {
                    peak_angle: theta,
                    cluster_size: size,
                    order,
                    relative_residual: residual,
                });
            }
            _ => {
                report.unassigned += 1;
                report.unassigned_angles.push(theta);
            }
        }
    }
    Ok(report)
}

/// Peak centroids of a scan.
///
/// A bin is a peak when its count reaches `min_fraction` of the scan maximum
/// and is the first maximum within `±half_window` bins. The centroid is taken
/// over that same window.
pub fn find_peaks(scan: &DetectorScan, min_fraction: f64, half_window: usize) -> Vec<f64> {
    let counts = &scan.counts;
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Vec::new();
    }
    let threshold = (min_fraction * max as f64).max(1.0);
    let mut peaks = Vec::new();
    for i in 0..counts.len() {
        let c = counts[i];
        if (c as f64) < threshold {
            continue;
        }
        let lo = i.saturating_sub(half_window);
        let hi = (i + half_window).min(counts.len() - 1);
        let is_max = (lo..=hi).all(|j| if j < i { counts[j] < c } else { counts[j] <= c });
        if !is_max {
            continue;
        }
        let (mut sw, mut swx) = (0.0, 0.0);
        for (&c, &x) in counts[lo..=hi].iter().zip(&scan.bin_centers[lo..=hi]) {
            sw += c as f64;
            swx += c as f64 * x;
        }
        peaks.push(swx / sw);
    }
    peaks
}
