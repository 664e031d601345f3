use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fitted effective slit width at one beam velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// m/s
    pub velocity: f64,
    /// m
    pub s_eff: f64,
    /// m
    pub s_eff_uncertainty: f64,
}

impl SweepPoint {
    pub fn inv_sqrt_velocity(&self) -> f64 {
        1.0 / self.velocity.sqrt()
    }
}

/// Straight line `s_eff = intercept + slope / sqrt(v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFit {
    /// The geometric slit width, m.
    pub intercept: f64,
    /// m·(m/s)^½
    pub slope: f64,
    pub intercept_uncertainty: f64,
    pub slope_uncertainty: f64,
    pub intercept_slope_covariance: f64,
    /// `s_eff - model` per input point, m.
    pub residuals: Vec<f64>,
    /// False when all uncertainties were zero and unit weights were used.
    pub weighted: bool,
}

impl SweepFit {
    pub fn predict(&self, velocity: f64) -> f64 {
        self.intercept + self.slope / velocity.sqrt()
    }
}

/// Weighted least squares of `s_eff` against `x = 1/sqrt(v)`.
///
/// Weights are `1/u²`. When every uncertainty is zero, unit weights are used
/// and the parameter covariance is scaled by the residual variance
/// `Σr²/(n-2)`; otherwise the covariance is the inverse of the normal matrix.
pub fn velocity_sweep_regression(points: &[SweepPoint]) -> Result<SweepFit> {
    if points.len() < 3 {
        return Err(Error::insufficient(format!("sweep needs at least 3 points, got {}", points.len())));
    }
    for p in points {
        if !(p.velocity.is_finite() && p.velocity > 0.0) {
            return Err(Error::domain(format!("sweep velocity must be positive, got {}", p.velocity)));
        }
        if !(p.s_eff.is_finite() && p.s_eff_uncertainty.is_finite() && p.s_eff_uncertainty >= 0.0) {
            return Err(Error::domain(format!("invalid s_eff at velocity {}", p.velocity)));
        }
    }
    let zero_errors = points.iter().filter(|p| p.s_eff_uncertainty == 0.0).count();
    let weighted = zero_errors == 0;
    if !weighted && zero_errors != points.len() {
        return Err(Error::domain("sweep uncertainties must be all positive or all zero"));
    }
    let weights: Vec<f64> = points
        .iter()
        .map(|p| if weighted { 1.0 / (p.s_eff_uncertainty * p.s_eff_uncertainty) } else { 1.0 })
        .collect();
    let xs: Vec<f64> = points.iter().map(SweepPoint::inv_sqrt_velocity).collect();

    let sw: f64 = weights.iter().sum();
    let x_mean = weights.iter().zip(&xs).map(|(w, x)| w * x).sum::<f64>() / sw;
    let y_mean = weights.iter().zip(points).map(|(w, p)| w * p.s_eff).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((w, x), p) in weights.iter().zip(&xs).zip(points) {
        let dx = x - x_mean;
        sxx += w * dx * dx;
        sxy += w * dx * (p.s_eff - y_mean);
    }
    if !(sxx > 1e-15 * sw * x_mean * x_mean) {
        return Err(Error::insufficient("sweep velocities must not all be equal"));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let residuals: Vec<f64> = xs.iter().zip(points).map(|(x, p)| p.s_eff - (intercept + slope * x)).collect();

    // covariance of (intercept, slope) for the centred parametrization
    let mut var_slope = 1.0 / sxx;
    let mut var_intercept = 1.0 / sw + x_mean * x_mean / sxx;
    let mut cov = -x_mean / sxx;
    if !weighted {
        let dof = (points.len() - 2) as f64;
        let s2 = residuals.iter().map(|r| r * r).sum::<f64>() / dof;
        var_slope *= s2;
        var_intercept *= s2;
        cov *= s2;
    }

    Ok(SweepFit {
        intercept,
        slope,
        intercept_uncertainty: var_intercept.sqrt(),
        slope_uncertainty: var_slope.sqrt(),
        intercept_slope_covariance: cov,
        residuals,
        weighted,
    })
}
