//! Inverse pipeline: from detector scans to physical parameters.
//!
//! - [`extract_order_intensities`] integrates each diffraction order of a scan;
//! - [`fit_order_intensities`] fits `(s_eff, delta, sigma, amplitude)` to them;
//! - [`velocity_sweep_regression`] regresses `s_eff` on `1/sqrt(v)`, whose
//!   intercept is the geometric slit width;
//! - [`dimer_mean_distance`] turns atom/dimer `s_eff` differences into a
//!   mean internuclear distance;
//! - [`assign_clusters`] labels peaks with cluster size and order.

mod dimer;
mod extract;
mod lm;
mod massspec;
mod sweep;

pub use dimer::{dimer_mean_distance, DimerEstimate, DimerPoint, VELOCITY_MATCH_TOLERANCE};
pub use extract::{extract_order_intensities, OrderIntensity, WINDOW_HALF_WIDTH_FWHM};
pub use lm::{fit_order_intensities, fit_order_intensities_with, FitOptions, FitResult, PARAMETER_NAMES};
pub use massspec::{assign_clusters, find_peaks, AssignmentReport, ClusterAssignment};
pub use sweep::{velocity_sweep_regression, SweepFit, SweepPoint};
