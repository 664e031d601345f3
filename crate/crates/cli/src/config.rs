//! Run configuration, read from a TOML file.
//!
//! Lengths are given in nanometres and angles in milliradians; they are
//! converted to SI on load. Unknown keys are rejected.
//!
//! ```toml
//! [grating]
//! period_nm = 100.0
//! slit_width_nm = 71.2
//! num_slits = 200
//!
//! [detector]
//! angle_min_mrad = -8.0
//! angle_max_mrad = 8.0
//! num_bins = 2401
//! fwhm_mrad = 0.05
//! exposure = 1e5
//!
//! [[species]]
//! name = "He"
//! cluster_size = 1
//! s_eff_nm = 60.0
//! delta_nm = 5.0
//! sigma_nm = 3.0
//!
//! [solver]
//! max_iterations = 200
//! max_order = 7
//!
//! [assignment]
//! max_cluster = 26
//! max_order = 7
//! tolerance = 1e-3
//! ```

use std::path::Path;

use matterwave::constants::{HELIUM4_MASS, MRAD, NM};
use matterwave::fit::FitOptions;
use matterwave::model::{Grating, QuantumPeakParams, Species};
use matterwave::synthesis::DetectorConfig;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    grating: GratingSection,
    detector: DetectorSection,
    species: Vec<SpeciesSection>,
    #[serde(default)]
    solver: SolverSection,
    #[serde(default)]
    assignment: AssignmentSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GratingSection {
    period_nm: f64,
    slit_width_nm: f64,
    num_slits: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectorSection {
    angle_min_mrad: f64,
    angle_max_mrad: f64,
    num_bins: usize,
    fwhm_mrad: f64,
    exposure: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeciesSection {
    name: String,
    #[serde(default = "one")]
    cluster_size: u32,
    monomer_mass_kg: Option<f64>,
    s_eff_nm: Option<f64>,
    #[serde(default)]
    delta_nm: f64,
    #[serde(default)]
    sigma_nm: f64,
    #[serde(default = "unit")]
    amplitude: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SolverSection {
    max_iterations: usize,
    step_tolerance: f64,
    gradient_tolerance: f64,
    uncertainty_floor: f64,
    include_zeroth_order: bool,
    starts: usize,
    max_order: u32,
}

impl Default for SolverSection {
    fn default() -> Self {
        let f = FitOptions::default();
        SolverSection {
            max_iterations: f.max_iterations,
            step_tolerance: f.step_tolerance,
            gradient_tolerance: f.gradient_tolerance,
            uncertainty_floor: f.uncertainty_floor,
            include_zeroth_order: f.include_zeroth_order,
            starts: f.starts,
            max_order: 7,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct AssignmentSection {
    max_cluster: u32,
    max_order: u32,
    tolerance: f64,
    peak_min_fraction: f64,
    peak_half_window: usize,
}

impl Default for AssignmentSection {
    fn default() -> Self {
        AssignmentSection { max_cluster: 26, max_order: 7, tolerance: 1e-3, peak_min_fraction: 1e-3, peak_half_window: 3 }
    }
}

fn one() -> u32 {
    1
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesEntry {
    pub species: Species,
    /// Order-law parameters used when simulating this species.
    pub peak_params: Option<QuantumPeakParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentSettings {
    pub max_cluster: u32,
    pub max_order: u32,
    pub tolerance: f64,
    pub peak_min_fraction: f64,
    pub peak_half_window: usize,
}

impl Default for AssignmentSettings {
    fn default() -> Self {
        let a = AssignmentSection::default();
        AssignmentSettings {
            max_cluster: a.max_cluster,
            max_order: a.max_order,
            tolerance: a.tolerance,
            peak_min_fraction: a.peak_min_fraction,
            peak_half_window: a.peak_half_window,
        }
    }
}

/// Validated configuration in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grating: Grating,
    pub detector: DetectorConfig,
    pub species: Vec<SpeciesEntry>,
    pub fit: FitOptions,
    /// Highest |n| extracted and fitted.
    pub fit_max_order: u32,
    pub assignment: AssignmentSettings,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::invalid(format!("config: {e}")))?;
        file.validate()
    }

    pub fn species(&self, name: &str) -> CliResult<&SpeciesEntry> {
        self.species
            .iter()
            .find(|s| s.species.name == name)
            .ok_or_else(|| CliError::invalid(format!("species `{name}` not in config [[species]] table")))
    }
}

fn positive(field: &str, v: f64) -> CliResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::invalid(format!("{field} must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> CliResult<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(CliError::invalid(format!("{field} must be non-negative, got {v}")))
    }
}

impl ConfigFile {
    fn validate(self) -> CliResult<RunConfig> {
        let g = &self.grating;
        positive("grating.period_nm", g.period_nm)?;
        positive("grating.slit_width_nm", g.slit_width_nm)?;
        if g.slit_width_nm >= g.period_nm {
            return Err(CliError::invalid("grating.slit_width_nm must be smaller than grating.period_nm"));
        }
        if g.num_slits < 1 {
            return Err(CliError::invalid("grating.num_slits must be at least 1"));
        }
        let grating = Grating::new(g.period_nm * NM, g.slit_width_nm * NM, g.num_slits)?;

        let d = &self.detector;
        if !(d.angle_min_mrad.is_finite() && d.angle_max_mrad.is_finite() && d.angle_min_mrad < d.angle_max_mrad) {
            return Err(CliError::invalid("detector.angle_min_mrad must be below detector.angle_max_mrad"));
        }
        if d.num_bins < 2 {
            return Err(CliError::invalid("detector.num_bins must be at least 2"));
        }
        positive("detector.fwhm_mrad", d.fwhm_mrad)?;
        positive("detector.exposure", d.exposure)?;
        let detector = DetectorConfig {
            angle_min: d.angle_min_mrad * MRAD,
            angle_max: d.angle_max_mrad * MRAD,
            num_bins: d.num_bins,
            angular_resolution_fwhm: d.fwhm_mrad * MRAD,
            exposure_scale: d.exposure,
        };

        if self.species.is_empty() {
            return Err(CliError::invalid("at least one [[species]] entry is required"));
        }
        let mut species = Vec::with_capacity(self.species.len());
        for (i, s) in self.species.iter().enumerate() {
            let at = format!("species[{i}] ({})", s.name);
            if s.name.is_empty() {
                return Err(CliError::invalid(format!("species[{i}].name must not be empty")));
            }
            if self.species[..i].iter().any(|o| o.name == s.name) {
                return Err(CliError::invalid(format!("{at}: duplicate species name")));
            }
            if s.cluster_size < 1 {
                return Err(CliError::invalid(format!("{at}.cluster_size must be at least 1")));
            }
            let monomer = s.monomer_mass_kg.unwrap_or(HELIUM4_MASS);
            positive(&format!("{at}.monomer_mass_kg"), monomer)?;
            let peak_params = match s.s_eff_nm {
                Some(s_eff) => {
                    positive(&format!("{at}.s_eff_nm"), s_eff)?;
                    non_negative(&format!("{at}.delta_nm"), s.delta_nm)?;
                    non_negative(&format!("{at}.sigma_nm"), s.sigma_nm)?;
                    positive(&format!("{at}.amplitude"), s.amplitude)?;
                    Some(QuantumPeakParams::new(s_eff * NM, s.delta_nm * NM, s.sigma_nm * NM, s.amplitude)?)
                }
                None => None,
            };
            species.push(SpeciesEntry {
                species: Species::new(s.name.clone(), f64::from(s.cluster_size) * monomer, s.cluster_size)?,
                peak_params,
            });
        }

        let sv = &self.solver;
        if sv.max_iterations < 1 {
            return Err(CliError::invalid("solver.max_iterations must be at least 1"));
        }
        positive("solver.step_tolerance", sv.step_tolerance)?;
        positive("solver.gradient_tolerance", sv.gradient_tolerance)?;
        positive("solver.uncertainty_floor", sv.uncertainty_floor)?;
        if sv.starts < 1 {
            return Err(CliError::invalid("solver.starts must be at least 1"));
        }
        if sv.max_order < 1 {
            return Err(CliError::invalid("solver.max_order must be at least 1"));
        }

        let a = &self.assignment;
        if a.max_cluster < 1 {
            return Err(CliError::invalid("assignment.max_cluster must be at least 1"));
        }
        if a.max_order < 1 {
            return Err(CliError::invalid("assignment.max_order must be at least 1"));
        }
        positive("assignment.tolerance", a.tolerance)?;
        non_negative("assignment.peak_min_fraction", a.peak_min_fraction)?;

        Ok(RunConfig {
            grating,
            detector,
            species,
            fit: FitOptions {
                max_iterations: sv.max_iterations,
                step_tolerance: sv.step_tolerance,
                gradient_tolerance: sv.gradient_tolerance,
                uncertainty_floor: sv.uncertainty_floor,
                include_zeroth_order: sv.include_zeroth_order,
                starts: sv.starts,
            },
            fit_max_order: sv.max_order,
            assignment: AssignmentSettings {
                max_cluster: a.max_cluster,
                max_order: a.max_order,
                tolerance: a.tolerance,
                peak_min_fraction: a.peak_min_fraction,
                peak_half_window: a.peak_half_window,
            },
        })
    }
}
