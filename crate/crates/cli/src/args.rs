use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

const SCHEMA_NOTE: &str = "JSON reports carry schema_version 1.0.\n\
Exit codes: 0 success, 1 I/O error, 2 invalid input or insufficient data, 3 fit did not converge.";

#[derive(Debug, Parser)]
#[command(name = "matterwave", version, about = "Matter-wave diffraction from nano-gratings", after_help = SCHEMA_NOTE)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a detector scan for a species mixture.
    #[command(after_help = SCHEMA_NOTE)]
    Simulate(SimulateArgs),
    /// Extract order intensities from a scan and fit the order law.
    #[command(after_help = SCHEMA_NOTE)]
    Fit(FitArgs),
    /// Regress fitted s_eff against 1/sqrt(v) across velocities.
    #[command(after_help = SCHEMA_NOTE)]
    Sweep(SweepArgs),
    /// Mean dimer internuclear distance from atom and dimer sweeps.
    #[command(after_help = SCHEMA_NOTE)]
    Dimer(DimerArgs),
    /// Assign cluster sizes to diffraction peaks.
    #[command(after_help = SCHEMA_NOTE)]
    Massspec(MassspecArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Species fractions, e.g. `He=0.8,He2=0.2`. Defaults to the first species.
    #[arg(long)]
    pub mixture: Option<String>,
    /// Beam velocity, m/s.
    #[arg(long)]
    pub velocity: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scan CSV to write; metadata goes to `<output>.meta.json`.
    #[arg(long)]
    pub output: PathBuf,
    /// Write rounded expected counts instead of Poisson draws.
    #[arg(long)]
    pub no_noise: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub scan: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
    /// Report JSON to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Beam velocity, m/s. Read from the scan's sidecar when omitted.
    #[arg(long)]
    pub velocity: Option<f64>,
    /// Species whose orders are fitted. Defaults to the first in the config.
    #[arg(long)]
    pub species: Option<String>,
    /// Highest |n| to extract; overrides solver.max_order.
    #[arg(long)]
    pub max_order: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// `VELOCITY=REPORT`, velocity in m/s. Repeatable.
    #[arg(long = "point", value_name = "V=PATH")]
    pub points: Vec<String>,
    /// Directory of fit reports; velocities come from the reports.
    #[arg(long)]
    pub dir: Option<PathBuf>,
    /// Sweep report JSON to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Plot CSV; defaults to the output path with a `.csv` extension.
    #[arg(long)]
    pub plot_csv: Option<PathBuf>,
    /// Also write the sweep points (`velocity_mps,s_eff_nm,s_eff_err_nm`).
    #[arg(long)]
    pub points_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DimerArgs {
    /// Atom sweep points CSV.
    #[arg(long)]
    pub atom: PathBuf,
    /// Dimer sweep points CSV.
    #[arg(long)]
    pub dimer: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct MassspecArgs {
    /// Scan CSV (`angle_mrad,counts`) or peak list (`angle_mrad`).
    #[arg(long)]
    pub input: PathBuf,
    /// Monomer first-order angle, mrad.
    #[arg(long)]
    pub reference_angle_mrad: f64,
    /// Optional config; only its [assignment] table is used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_order: Option<u32>,
    #[arg(long)]
    pub max_cluster: Option<u32>,
}
