//! Closed-form forward physics of a transmission grating.
//!
//! Angles are in radians measured from the incident direction, with the beam
//! normal to the grating. Lengths are in metres.
//!
//! Normalization conventions:
//!
//! - [`grating_intensity`] returns `N²` at `θ = 0`;
//! - [`slit_envelope`] returns 1 for the zeroth order;
//! - [`quantum_order_intensity`] returns `amplitude` for the zeroth order.

pub mod oracle;
pub mod special;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::{HELIUM4_MASS, PLANCK};
use crate::{Error, Execution, Result};

use special::{contrast_bracket, dirichlet_squared, sinc};

/// Largest `|nπδ/d|` accepted before `sinh²` is considered to overflow.
pub const SINH_ARGUMENT_LIMIT: f64 = 700.0;

/// Above this `|nπδ/d|` the intensity is assembled in log space.
const LOG_SPACE_THRESHOLD: f64 = 300.0;

/// Geometry of a transmission grating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grating {
    /// Period `d`, m.
    pub period: f64,
    /// Geometric slit width `s`, m.
    pub slit_width: f64,
    /// Number of illuminated slits `N`.
    pub num_slits: u32,
}

impl Grating {
    pub fn new(period: f64, slit_width: f64, num_slits: u32) -> Result<Self> {
        let g = Grating { period, slit_width, num_slits };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::domain(format!("grating period must be positive, got {}", self.period)));
        }
        if !(self.slit_width > 0.0 && self.slit_width < self.period) {
            return Err(Error::domain(format!(
                "slit width must satisfy 0 < s < d, got s = {} with d = {}",
                self.slit_width, self.period
            )));
        }
        if self.num_slits < 1 {
            return Err(Error::domain("grating needs at least one slit"));
        }
        Ok(())
    }

    /// Slit width over period, `s/d`.
    pub fn open_fraction(&self) -> f64 {
        self.slit_width / self.period
    }
}

/// A particle species: an atom or a cluster of `cluster_size` atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub name: String,
    /// Total mass, kg.
    pub mass: f64,
    pub cluster_size: u32,
}

impl Species {
    pub fn new(name: impl Into<String>, mass: f64, cluster_size: u32) -> Result<Self> {
        let s = Species { name: name.into(), mass, cluster_size };
        s.validate()?;
        Ok(s)
    }

    /// `He_N` built from the ⁴He monomer mass.
    pub fn helium_cluster(size: u32) -> Self {
        let name = if size == 1 { "He".to_string() } else { format!("He{size}") };
        Species { name, mass: f64::from(size) * HELIUM4_MASS, cluster_size: size }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::domain(format!("species {} mass must be positive", self.name)));
        }
        if self.cluster_size < 1 {
            return Err(Error::domain(format!("species {} cluster size must be at least 1", self.name)));
        }
        Ok(())
    }

    /// Mass of one constituent atom.
    pub fn monomer_mass(&self) -> f64 {
        self.mass / f64::from(self.cluster_size)
    }
}

/// A monochromatic beam of one species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamState {
    pub species: Species,
    /// m/s
    pub velocity: f64,
    /// de Broglie wavelength, m.
    pub wavelength: f64,
    /// `2π/λ`, 1/m.
    pub wavenumber: f64,
}

impl BeamState {
    pub fn new(species: Species, velocity: f64) -> Result<Self> {
        species.validate()?;
        let wavelength = de_broglie_wavelength(species.mass, velocity)?;
        Ok(BeamState { species, velocity, wavelength, wavenumber: 2.0 * PI / wavelength })
    }

    pub fn diffraction_angles(&self, grating: &Grating, max_order: u32) -> Vec<(i32, f64)> {
        diffraction_angles(self.wavelength, grating, max_order)
    }
}

/// Parameters of the extended order-intensity law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumPeakParams {
    /// Effective slit width, m.
    pub s_eff: f64,
    /// Contrast length that fills envelope minima, m.
    pub delta: f64,
    /// Gaussian damping length, m.
    pub sigma: f64,
    pub amplitude: f64,
}

impl QuantumPeakParams {
    pub fn new(s_eff: f64, delta: f64, sigma: f64, amplitude: f64) -> Result<Self> {
        let p = QuantumPeakParams { s_eff, delta, sigma, amplitude };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.s_eff.is_finite()
            && self.s_eff > 0.0
            && self.delta.is_finite()
            && self.delta >= 0.0
            && self.sigma.is_finite()
            && self.sigma >= 0.0
            && self.amplitude.is_finite()
            && self.amplitude > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "peak parameters need s_eff > 0, delta >= 0, sigma >= 0, amplitude > 0; got {self:?}"
            )))
        }
    }

    /// Pure slit-envelope parameters: no contrast loss, no damping.
    pub fn envelope_only(s_eff: f64, amplitude: f64) -> Self {
        QuantumPeakParams { s_eff, delta: 0.0, sigma: 0.0, amplitude }
    }
}

/// de Broglie wavelength `h/(m v)`.
pub fn de_broglie_wavelength(mass: f64, velocity: f64) -> Result<f64> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::domain(format!("mass must be positive, got {mass}")));
    }
    if !(velocity.is_finite() && velocity > 0.0) {
        return Err(Error::domain(format!("velocity must be positive, got {velocity}")));
    }
    Ok(PLANCK / (mass * velocity))
}

/// Principal-maximum angles `θ_n = asin(nλ/d)` for `|n| ≤ max_order`.
///
/// Orders with `|nλ/d| > 1` are evanescent and left out. The list is sorted
/// by order, from `-max_order` upwards.
pub fn diffraction_angles(wavelength: f64, grating: &Grating, max_order: u32) -> Vec<(i32, f64)> {
    let m = max_order as i32;
    (-m..=m)
        .filter_map(|n| {
            let sin_theta = f64::from(n) * wavelength / grating.period;
            (sin_theta.abs() <= 1.0).then(|| (n, sin_theta.asin()))
        })
        .collect()
}

/// Far-field intensity behind the grating: grating function times slit
/// function, normalized to `N²` at `θ = 0`.
pub fn grating_intensity(theta: f64, grating: &Grating, wavenumber: f64) -> f64 {
    let q = wavenumber * theta.sin();
    let u = 0.5 * grating.period * q;
    let x = 0.5 * grating.slit_width * q;
    let slit = sinc(x);
    dirichlet_squared(u, grating.num_slits) * slit * slit
}

/// [`grating_intensity`] over a batch of angles.
pub fn intensity_profile(thetas: &[f64], grating: &Grating, wavenumber: f64, exec: Execution) -> Vec<f64> {
    exec.map(thetas, |&t| grating_intensity(t, grating, wavenumber))
}

/// Slit envelope at the `n`-th maximum, `sin²(nπs/d)/(nπs/d)²`.
pub fn slit_envelope(n: i32, slit_width: f64, period: f64) -> f64 {
    let x = f64::from(n) * PI * slit_width / period;
    let v = sinc(x);
    v * v
}

/// Order intensity with effective slit width, contrast length and damping:
///
/// `A · exp(-(2πnσ/d)²) · [sin²(nπ s_eff/d) + sinh²(nπδ/d)] / [(nπ s_eff/d)² + (nπδ/d)²]`
///
/// Returns a range error when `|nπδ/d|` exceeds [`SINH_ARGUMENT_LIMIT`] or
/// the result itself is not representable.
pub fn quantum_order_intensity(n: i32, params: &QuantumPeakParams, period: f64) -> Result<f64> {
    let nf = f64::from(n);
    let a = nf * PI * params.s_eff / period;
    let b = nf * PI * params.delta / period;
    if b.abs() > SINH_ARGUMENT_LIMIT {
        return Err(Error::Range(format!(
            "sinh argument |n·π·δ/d| = {} exceeds {SINH_ARGUMENT_LIMIT}",
            b.abs()
        )));
    }
    let g = 2.0 * PI * nf * params.sigma / period;
    if b.abs() <= LOG_SPACE_THRESHOLD {
        return Ok(params.amplitude * (-g * g).exp() * contrast_bracket(a, b));
    }
    // sinh² alone would overflow; sin² is negligible next to it here
    let b = b.abs();
    let ln_sinh2 = 2.0 * (b + (-(-2.0 * b).exp()).ln_1p() - std::f64::consts::LN_2);
    let ln_value = params.amplitude.ln() - g * g + ln_sinh2 - (a * a + b * b).ln();
    let value = ln_value.exp();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Range(format!("order {n} intensity overflows (ln I = {ln_value})")))
    }
}
