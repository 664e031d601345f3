use std::path::{Path, PathBuf};

use matterwave::constants::{ANGSTROM, MRAD, NM};
use matterwave::fit::{
    assign_clusters, dimer_mean_distance, extract_order_intensities, find_peaks, fit_order_intensities_with,
    velocity_sweep_regression, ClusterAssignment, OrderIntensity, SweepPoint,
};
use matterwave::model::BeamState;
use matterwave::synthesis::{synthesize_scan, MixtureComponent, ScanMetadata};
use matterwave::Execution;
use serde::{Deserialize, Serialize};

use crate::args::{DimerArgs, FitArgs, MassspecArgs, SimulateArgs, SweepArgs};
use crate::config::{AssignmentSettings, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::{self, ScanSidecar, SCHEMA_VERSION};

/// Parses `He=0.8,He2=0.2`.
pub fn parse_mixture(text: &str) -> CliResult<Vec<(String, f64)>> {
    let mut out: Vec<(String, f64)> = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, frac) = part
            .split_once('=')
            .ok_or_else(|| CliError::invalid(format!("--mixture entry `{part}` is not NAME=FRACTION")))?;
        let frac: f64 = frac
            .trim()
            .parse()
            .map_err(|_| CliError::invalid(format!("--mixture fraction `{}` for {name} is not a number", frac.trim())))?;
        let name = name.trim().to_string();
        if out.iter().any(|(n, _)| *n == name) {
            return Err(CliError::invalid(format!("--mixture lists {name} twice")));
        }
        out.push((name, frac));
    }
    if out.is_empty() {
        return Err(CliError::invalid("--mixture is empty"));
    }
    Ok(out)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let config = RunConfig::load(&args.config)?;
    let mixture_spec = match &args.mixture {
        Some(m) => parse_mixture(m)?,
        None => vec![(config.species[0].species.name.clone(), 1.0)],
    };
    let mut mixture = Vec::with_capacity(mixture_spec.len());
    for (name, fraction) in &mixture_spec {
        let entry = config.species(name)?;
        let peak_params = entry.peak_params.ok_or_else(|| {
            CliError::invalid(format!("species `{name}` needs s_eff_nm in the config to be simulated"))
        })?;
        mixture.push(MixtureComponent { species: entry.species.clone(), relative_abundance: *fraction, peak_params });
    }
    let scan = synthesize_scan(&mixture, args.velocity, &config.grating, &config.detector, args.seed, !args.no_noise)?;
    io::write_scan(&args.output, &scan)?;
    let sidecar = ScanSidecar { schema_version: SCHEMA_VERSION.into(), metadata: scan.metadata.clone(), mixture: mixture_spec };
    io::write_json(&io::sidecar_path(&args.output), &sidecar)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterUncertainties {
    pub s_eff: f64,
    pub delta: f64,
    pub sigma: f64,
    pub amplitude: f64,
}

/// JSON written by `fit`. Lengths in metres; `*_nm` fields repeat them in nm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: String,
    pub species: String,
    pub velocity_mps: f64,
    pub s_eff: f64,
    pub delta: f64,
    pub sigma: f64,
    pub amplitude: f64,
    pub s_eff_nm: f64,
    pub delta_nm: f64,
    pub sigma_nm: f64,
    pub uncertainties: ParameterUncertainties,
    /// Order: s_eff, delta, sigma, amplitude.
    pub covariance: [[f64; 4]; 4],
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    pub relative_gradient: f64,
    pub orders_used: Vec<i32>,
    pub mirror_ambiguous: bool,
    pub order_intensities: Vec<OrderIntensity>,
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let config = RunConfig::load(&args.config)?;
    let file = io::read_scan(&args.scan)?;
    let velocity = match (args.velocity, &file.sidecar) {
        (Some(v), _) => v,
        (None, Some(s)) => s.metadata.velocity,
        (None, None) => {
            return Err(CliError::invalid(format!(
                "beam velocity unknown for {}: pass --velocity or keep {}",
                args.scan.display(),
                io::sidecar_path(&args.scan).display()
            )))
        }
    };
    let entry = match &args.species {
        Some(name) => config.species(name)?,
        None => &config.species[0],
    };
    let max_order = args.max_order.unwrap_or(config.fit_max_order);
    let beam = BeamState::new(entry.species.clone(), velocity)?;
    let angles = beam.diffraction_angles(&config.grating, max_order);

    let seed = file.sidecar.as_ref().map_or(0, |s| s.metadata.seed);
    let synthetic = file.sidecar.is_some();
    let scan = file.into_scan(ScanMetadata { velocity, grating: config.grating, seed, synthetic });
    scan.validate().map_err(|e| CliError::invalid(format!("{}: {e}", args.scan.display())))?;

    let orders = extract_order_intensities(&scan, &angles, config.detector.angular_resolution_fwhm);
    let result = fit_order_intensities_with(&orders, config.grating.period, None, &config.fit, Execution::default())?;
    let u = result.uncertainties();
    let p = result.params;
    let report = FitReport {
        schema_version: SCHEMA_VERSION.into(),
        species: entry.species.name.clone(),
        velocity_mps: velocity,
        s_eff: p.s_eff,
        delta: p.delta,
        sigma: p.sigma,
        amplitude: p.amplitude,
        s_eff_nm: p.s_eff / NM,
        delta_nm: p.delta / NM,
        sigma_nm: p.sigma / NM,
        uncertainties: ParameterUncertainties { s_eff: u[0], delta: u[1], sigma: u[2], amplitude: u[3] },
        covariance: result.covariance,
        residual_norm: result.residual_norm,
        converged: result.converged,
        iterations: result.iterations,
        relative_gradient: result.relative_gradient,
        orders_used: result.orders_used.clone(),
        mirror_ambiguous: result.mirror_ambiguous,
        order_intensities: orders,
    };
    io::write_json(&args.output, &report)?;
    if result.mirror_ambiguous {
        eprintln!(
            "warning: zeroth order not fitted; s_eff and d - s_eff fit equally well, reporting s_eff >= d/2 \
             (set solver.include_zeroth_order = true to resolve)"
        );
    }
    if !result.converged {
        return Err(CliError::NotConverged(format!(
            "{} iterations, relative gradient {:e}; report written to {}",
            result.iterations,
            result.relative_gradient,
            args.output.display()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReportPoint {
    pub velocity_mps: f64,
    pub s_eff: f64,
    pub s_eff_uncertainty: f64,
    pub residual: f64,
    pub source: Option<String>,
}

/// JSON written by `sweep`: `s_eff(v) = intercept + slope / sqrt(v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: String,
    /// m; the geometric slit width the sweep extrapolates to.
    pub intercept: f64,
    pub intercept_nm: f64,
    /// m·(m/s)^½
    pub slope: f64,
    pub intercept_uncertainty: f64,
    pub slope_uncertainty: f64,
    pub intercept_slope_covariance: f64,
    pub weighted: bool,
    pub slope_positive: bool,
    pub points: Vec<SweepReportPoint>,
}

fn parse_point(text: &str) -> CliResult<(f64, PathBuf)> {
    let (v, path) = text
        .split_once('=')
        .ok_or_else(|| CliError::invalid(format!("--point `{text}` is not VELOCITY=PATH")))?;
    let v: f64 = v.trim().parse().map_err(|_| CliError::invalid(format!("--point velocity `{v}` is not a number")))?;
    Ok((v, PathBuf::from(path.trim())))
}

fn reports_in(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.ends_with(".json") && !name.ends_with(".meta.json") {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

pub fn sweep(args: &SweepArgs) -> CliResult<()> {
    let mut inputs: Vec<(Option<f64>, PathBuf)> = Vec::new();
    for p in &args.points {
        let (v, path) = parse_point(p)?;
        inputs.push((Some(v), path));
    }
    if let Some(dir) = &args.dir {
        inputs.extend(reports_in(dir)?.into_iter().map(|p| (None, p)));
    }
    let mut points = Vec::with_capacity(inputs.len());
    let mut sources = Vec::with_capacity(inputs.len());
    for (v, path) in &inputs {
        let report: FitReport = io::read_json(path)?;
        if !report.converged {
            eprintln!("warning: {} is from a fit that did not converge", path.display());
        }
        points.push(SweepPoint {
            velocity: v.unwrap_or(report.velocity_mps),
            s_eff: report.s_eff,
            s_eff_uncertainty: report.uncertainties.s_eff,
        });
        sources.push(path.display().to_string());
    }
    let fit = velocity_sweep_regression(&points)?;
    if fit.slope > 0.0 {
        eprintln!("warning: positive sweep slope {:e}; s_eff is expected to fall toward low velocity", fit.slope);
    }

    let report = SweepReport {
        schema_version: SCHEMA_VERSION.into(),
        intercept: fit.intercept,
        intercept_nm: fit.intercept / NM,
        slope: fit.slope,
        intercept_uncertainty: fit.intercept_uncertainty,
        slope_uncertainty: fit.slope_uncertainty,
        intercept_slope_covariance: fit.intercept_slope_covariance,
        weighted: fit.weighted,
        slope_positive: fit.slope > 0.0,
        points: points
            .iter()
            .zip(&fit.residuals)
            .zip(sources)
            .map(|((p, r), src)| SweepReportPoint {
                velocity_mps: p.velocity,
                s_eff: p.s_eff,
                s_eff_uncertainty: p.s_eff_uncertainty,
                residual: *r,
                source: Some(src),
            })
            .collect(),
    };
    io::write_json(&args.output, &report)?;

    let rows: Vec<[f64; 4]> = points
        .iter()
        .map(|p| [p.inv_sqrt_velocity(), p.s_eff / NM, p.s_eff_uncertainty / NM, fit.predict(p.velocity) / NM])
        .collect();
    let plot = args.plot_csv.clone().unwrap_or_else(|| args.output.with_extension("csv"));
    io::write_sweep_plot(&plot, &rows)?;
    if let Some(path) = &args.points_csv {
        io::write_sweep_points(path, &points)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimerReportPoint {
    pub velocity_mps: f64,
    pub r_m: f64,
    pub r_angstrom: f64,
    pub r_uncertainty_m: f64,
    pub negative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimerReport {
    pub schema_version: String,
    pub r_mean_m: f64,
    pub r_mean_angstrom: f64,
    pub r_uncertainty_m: f64,
    pub r_uncertainty_angstrom: f64,
    pub any_negative: bool,
    pub per_velocity: Vec<DimerReportPoint>,
}

pub fn dimer(args: &DimerArgs) -> CliResult<()> {
    let atom = io::read_sweep_points(&args.atom)?;
    let dimer = io::read_sweep_points(&args.dimer)?;
    let est = dimer_mean_distance(&atom, &dimer)?;
    if est.any_negative() {
        eprintln!("warning: negative r at one or more velocities; the dimer s_eff exceeds the atom's");
    }
    let report = DimerReport {
        schema_version: SCHEMA_VERSION.into(),
        r_mean_m: est.r_mean,
        r_mean_angstrom: est.r_mean / ANGSTROM,
        r_uncertainty_m: est.r_uncertainty,
        r_uncertainty_angstrom: est.r_uncertainty / ANGSTROM,
        any_negative: est.any_negative(),
        per_velocity: est
            .per_velocity
            .iter()
            .map(|p| DimerReportPoint {
                velocity_mps: p.velocity,
                r_m: p.r,
                r_angstrom: p.r / ANGSTROM,
                r_uncertainty_m: p.r_uncertainty,
                negative: p.negative,
            })
            .collect(),
    };
    io::write_json(&args.output, &report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassspecReport {
    pub schema_version: String,
    /// rad
    pub reference_angle: f64,
    pub max_cluster: u32,
    pub max_order: u32,
    pub tolerance: f64,
    pub assignments: Vec<ClusterAssignment>,
    pub unassigned: usize,
    /// rad
    pub unassigned_angles: Vec<f64>,
}

pub fn massspec(args: &MassspecArgs) -> CliResult<()> {
    let base = match &args.config {
        Some(path) => RunConfig::load(path)?.assignment,
        None => AssignmentSettings::default(),
    };
    let settings = AssignmentSettings {
        tolerance: args.tolerance.unwrap_or(base.tolerance),
        max_order: args.max_order.unwrap_or(base.max_order),
        max_cluster: args.max_cluster.unwrap_or(base.max_cluster),
        ..base
    };

    let header = io::csv_header(&args.input)?;
    let peaks = if header == io::PEAK_HEADER {
        io::read_peaks(&args.input)?
    } else {
        let file = io::read_scan(&args.input)?;
        let metadata = match &file.sidecar {
            Some(s) => s.metadata.clone(),
            None => ScanMetadata {
                velocity: 0.0,
                grating: matterwave::model::Grating { period: 0.0, slit_width: 0.0, num_slits: 0 },
                seed: 0,
                synthetic: false,
            },
        };
        let scan = file.into_scan(metadata);
        scan.validate().map_err(|e| CliError::invalid(format!("{}: {e}", args.input.display())))?;
        // positive side only: the pattern is symmetric
        find_peaks(&scan, settings.peak_min_fraction, settings.peak_half_window)
            .into_iter()
            .filter(|&a| a > 0.0)
            .collect()
    };
    let reference = args.reference_angle_mrad * MRAD;
    let result = assign_clusters(&peaks, reference, settings.max_cluster, settings.max_order, settings.tolerance)?;
    let report = MassspecReport {
        schema_version: SCHEMA_VERSION.into(),
        reference_angle: reference,
        max_cluster: settings.max_cluster,
        max_order: settings.max_order,
        tolerance: settings.tolerance,
        assignments: result.assignments,
        unassigned: result.unassigned,
        unassigned_angles: result.unassigned_angles,
    };
    io::write_json(&args.output, &report)
}
