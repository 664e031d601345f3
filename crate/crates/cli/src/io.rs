//! File formats: scan, peak-list and sweep-point CSVs, and JSON reports.
//!
//! CSV files carry angles in milliradians and lengths in nanometres. JSON
//! reports carry SI values plus a few convenience fields in display units.

use std::path::{Path, PathBuf};

use matterwave::constants::{MRAD, NM};
use matterwave::fit::SweepPoint;
use matterwave::synthesis::{DetectorScan, ScanMetadata};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Version written into every JSON report. Readers accept any `1.x`.
pub const SCHEMA_VERSION: &str = "1.0";
pub const SCHEMA_MAJOR: u32 = 1;

pub const SCAN_HEADER: [&str; 2] = ["angle_mrad", "counts"];
pub const PEAK_HEADER: [&str; 1] = ["angle_mrad"];
pub const SWEEP_POINT_HEADER: [&str; 3] = ["velocity_mps", "s_eff_nm", "s_eff_err_nm"];
pub const SWEEP_PLOT_HEADER: [&str; 4] = ["inv_sqrt_v", "s_eff", "s_eff_err", "model"];

/// Scan metadata stored next to a scan CSV as `<scan>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSidecar {
    pub schema_version: String,
    pub metadata: ScanMetadata,
    pub mixture: Vec<(String, f64)>,
}

pub fn sidecar_path(scan: &Path) -> PathBuf {
    let mut name = scan.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    scan.with_file_name(name)
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))
}

fn csv_reader(path: &Path) -> CliResult<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn check_header(path: &Path, reader: &mut csv::Reader<std::fs::File>, want: &[&str]) -> CliResult<()> {
    let got = reader.headers().map_err(|e| malformed(path, e))?;
    if got.iter().ne(want.iter().copied()) {
        return Err(CliError::invalid(format!(
            "{}: expected header `{}`, found `{}`",
            path.display(),
            want.join(","),
            got.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

fn malformed(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::invalid(format!("{}: malformed CSV: {e}", path.display()))
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: u64, column: &str, raw: &str) -> CliResult<T> {
    raw.parse()
        .map_err(|_| CliError::invalid(format!("{}: line {line}: cannot parse {column} value `{raw}`", path.display())))
}

fn records(path: &Path, reader: &mut csv::Reader<std::fs::File>) -> CliResult<Vec<(u64, csv::StringRecord)>> {
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| malformed(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push((line, rec));
    }
    Ok(out)
}

fn flush(path: &Path, mut w: csv::Writer<std::fs::File>) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_row(path: &Path, w: &mut csv::Writer<std::fs::File>, row: &[String]) -> CliResult<()> {
    w.write_record(row).map_err(|e| CliError::io(path, e))
}

pub fn write_scan(path: &Path, scan: &DetectorScan) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    write_row(path, &mut w, &SCAN_HEADER.map(String::from))?;
    for (theta, count) in scan.bin_centers.iter().zip(&scan.counts) {
        write_row(path, &mut w, &[format!("{}", theta / MRAD), count.to_string()])?;
    }
    flush(path, w)
}

/// Contents of a scan CSV plus its sidecar, if one exists.
#[derive(Debug, Clone)]
pub struct ScanFile {
    pub bin_centers: Vec<f64>,
    pub counts: Vec<u64>,
    pub sidecar: Option<ScanSidecar>,
}

impl ScanFile {
    pub fn into_scan(self, metadata: ScanMetadata) -> DetectorScan {
        DetectorScan { bin_centers: self.bin_centers, counts: self.counts, metadata }
    }
}

pub fn read_scan(path: &Path) -> CliResult<ScanFile> {
    let mut r = csv_reader(path)?;
    check_header(path, &mut r, &SCAN_HEADER)?;
    let mut bin_centers = Vec::new();
    let mut counts = Vec::new();
    for (line, rec) in records(path, &mut r)? {
        let angle: f64 = parse_field(path, line, "angle_mrad", &rec[0])?;
        let count: u64 = parse_field(path, line, "counts", &rec[1])?;
        bin_centers.push(angle * MRAD);
        counts.push(count);
    }
    let side = sidecar_path(path);
    let sidecar = if side.exists() { Some(read_json::<ScanSidecar>(&side)?) } else { None };
    Ok(ScanFile { bin_centers, counts, sidecar })
}

/// Reads a one-column peak list, returning angles in radians.
pub fn read_peaks(path: &Path) -> CliResult<Vec<f64>> {
    let mut r = csv_reader(path)?;
    check_header(path, &mut r, &PEAK_HEADER)?;
    records(path, &mut r)?
        .into_iter()
        .map(|(line, rec)| parse_field::<f64>(path, line, "angle_mrad", &rec[0]).map(|a| a * MRAD))
        .collect()
}

/// Header fields of a CSV, used to tell scans from peak lists.
pub fn csv_header(path: &Path) -> CliResult<Vec<String>> {
    let mut r = csv_reader(path)?;
    Ok(r.headers().map_err(|e| malformed(path, e))?.iter().map(String::from).collect())
}

pub fn write_sweep_points(path: &Path, points: &[SweepPoint]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    write_row(path, &mut w, &SWEEP_POINT_HEADER.map(String::from))?;
    for p in points {
        write_row(
            path,
            &mut w,
            &[p.velocity.to_string(), (p.s_eff / NM).to_string(), (p.s_eff_uncertainty / NM).to_string()],
        )?;
    }
    flush(path, w)
}

pub fn read_sweep_points(path: &Path) -> CliResult<Vec<SweepPoint>> {
    let mut r = csv_reader(path)?;
    check_header(path, &mut r, &SWEEP_POINT_HEADER)?;
    let mut out = Vec::new();
    for (line, rec) in records(path, &mut r)? {
        let velocity: f64 = parse_field(path, line, "velocity_mps", &rec[0])?;
        let s: f64 = parse_field(path, line, "s_eff_nm", &rec[1])?;
        let e: f64 = parse_field(path, line, "s_eff_err_nm", &rec[2])?;
        out.push(SweepPoint { velocity, s_eff: s * NM, s_eff_uncertainty: e * NM });
    }
    Ok(out)
}

/// Plot-ready rows: `1/√v` in (s/m)^½, lengths in nm.
pub fn write_sweep_plot(path: &Path, rows: &[[f64; 4]]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    write_row(path, &mut w, &SWEEP_PLOT_HEADER.map(String::from))?;
    for row in rows {
        write_row(path, &mut w, &row.map(|x| x.to_string()))?;
    }
    flush(path, w)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::invalid(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<String>,
}

/// Parses a JSON report, rejecting unknown schema major versions.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let probe: VersionProbe =
        serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    let version = probe
        .schema_version
        .ok_or_else(|| CliError::invalid(format!("{}: missing schema_version", path.display())))?;
    let major = version.split('.').next().and_then(|m| m.parse::<u32>().ok());
    if major != Some(SCHEMA_MAJOR) {
        return Err(CliError::invalid(format!(
            "{}: unsupported schema_version {version} (this build reads {SCHEMA_MAJOR}.x)",
            path.display()
        )));
    }
    serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("/a/b/scan.csv")), PathBuf::from("/a/b/scan.csv.meta.json"));
    }

    #[test]
    fn rejects_future_major_version() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        std::fs::write(&p, r#"{"schema_version": "2.0", "x": 1}"#).unwrap();
        let err = read_json::<serde_json::Value>(&p).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("2.0"));
        std::fs::write(&p, r#"{"schema_version": "1.7", "x": 1}"#).unwrap();
        assert!(read_json::<serde_json::Value>(&p).is_ok());
    }

    #[test]
    fn sweep_points_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let pts = vec![
            SweepPoint { velocity: 500.0, s_eff: 61.25 * NM, s_eff_uncertainty: 0.5 * NM },
            SweepPoint { velocity: 1000.0, s_eff: 63.0 * NM, s_eff_uncertainty: 0.25 * NM },
        ];
        write_sweep_points(&p, &pts).unwrap();
        let back = read_sweep_points(&p).unwrap();
        for (a, b) in pts.iter().zip(&back) {
            assert_eq!(a.velocity, b.velocity);
            assert!((a.s_eff / b.s_eff - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn bad_rows_are_validation_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("scan.csv");
        std::fs::write(&p, "angle_mrad,counts\n0.0,1\n0.1,abc\n").unwrap();
        let err = read_scan(&p).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("line 3"), "{err}");
        std::fs::write(&p, "theta,counts\n0.0,1\n").unwrap();
        assert_eq!(read_scan(&p).unwrap_err().exit_code(), 2);
        assert_eq!(read_scan(&dir.path().join("missing.csv")).unwrap_err().exit_code(), 1);
    }
}
