use serde::{Deserialize, Serialize};

use super::SweepPoint;
use crate::{Error, Result};

/// Relative tolerance for pairing atom and dimer velocities.
pub const VELOCITY_MATCH_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimerPoint {
    /// m/s
    pub velocity: f64,
    /// `2·(s_eff_atom - s_eff_dimer)`, m
    pub r: f64,
    pub r_uncertainty: f64,
    /// Set when `r < 0`, which no physical dimer produces.
    pub negative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimerEstimate {
    /// Mean internuclear distance, m.
    pub r_mean: f64,
    pub r_uncertainty: f64,
    pub per_velocity: Vec<DimerPoint>,
}

impl DimerEstimate {
    pub fn any_negative(&self) -> bool {
        self.per_velocity.iter().any(|p| p.negative)
    }
}

/// Mean internuclear distance from the simplified relation
/// `r/2 = s_eff(atom) - s_eff(dimer)` at equal beam velocity.
///
/// Velocities are paired within [`VELOCITY_MATCH_TOLERANCE`]. The mean is
/// inverse-variance weighted when every pair has a positive uncertainty and
/// a plain average otherwise; uncertainties add in quadrature.
pub fn dimer_mean_distance(atom_points: &[SweepPoint], dimer_points: &[SweepPoint]) -> Result<DimerEstimate> {
    let mut per_velocity = Vec::new();
    for a in atom_points {
        let matched = dimer_points
            .iter()
            .find(|d| (a.velocity - d.velocity).abs() <= VELOCITY_MATCH_TOLERANCE * a.velocity.abs().max(d.velocity.abs()));
        if let Some(d) = matched {
            let r = 2.0 * (a.s_eff - d.s_eff);
            let r_uncertainty = 2.0 * a.s_eff_uncertainty.hypot(d.s_eff_uncertainty);
            per_velocity.push(DimerPoint { velocity: a.velocity, r, r_uncertainty, negative: r < 0.0 });
        }
    }
    if per_velocity.is_empty() {
        return Err(Error::domain("atom and dimer sweeps share no velocity"));
    }

    let (r_mean, r_uncertainty) = if per_velocity.iter().all(|p| p.r_uncertainty > 0.0) {
        let (mut sw, mut swr) = (0.0, 0.0);
        for p in &per_velocity {
            let w = 1.0 / (p.r_uncertainty * p.r_uncertainty);
            sw += w;
            swr += w * p.r;
        }
        (swr / sw, 1.0 / sw.sqrt())
    } else {
        let n = per_velocity.len() as f64;
        let mean = per_velocity.iter().map(|p| p.r).sum::<f64>() / n;
        let var: f64 = per_velocity.iter().map(|p| p.r_uncertainty * p.r_uncertainty).sum();
        (mean, var.sqrt() / n)
    };
    Ok(DimerEstimate { r_mean, r_uncertainty, per_velocity })
}
