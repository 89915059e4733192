//! File formats: potential specs and reports as JSON, sweep results as CSV
//! with a JSON metadata header line, field snapshots as flat binary arrays
//! with JSON sidecars, and diagnostics time series as CSV.

use crate::error::Result;
use crate::gp::GPField;
use crate::grid::PeriodicGrid;
use crate::potentials::{PotentialSpec, ValidationReport};
use crate::scattering::SweepRow;
use num_complex::Complex64;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::Path;

pub fn read_spec(path: &Path) -> Result<PotentialSpec> {
    let text = fs::read_to_string(path)?;
    let spec: PotentialSpec = serde_json::from_str(&text)?;
    spec.check_invariants()?;
    Ok(spec)
}

pub fn write_spec(path: &Path, spec: &PotentialSpec) -> Result<()> {
    write_json(path, spec)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

pub fn write_validation_report(path: &Path, report: &ValidationReport) -> Result<()> {
    write_json(path, report)
}

/// Sweep CSV: a `# `-prefixed JSON metadata line, a header row, then one row
/// per particle number.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow], metadata: &serde_json::Value) -> Result<()> {
    let mut file = fs::File::create(path)?;
    writeln!(file, "# {}", serde_json::to_string(metadata)?)?;
    writeln!(
        file,
        "N,beta1,R_beta,K_beta,a,NVf,NWf,NW,g_L1,g_L3half,g_L2,g_Linf"
    )?;
    for r in rows {
        writeln!(
            file,
            "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.n,
            r.beta1,
            r.r_beta,
            r.k_beta,
            r.a,
            r.nvf,
            r.nwf,
            r.nw,
            r.g_l1,
            r.g_l3half,
            r.g_l2,
            r.g_linf
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SnapshotSidecar {
    dim: usize,
    grid_points: usize,
    box_length: f64,
    time: f64,
    coupling_length: f64,
    format: &'static str,
}

/// Field snapshot: interleaved little-endian `re, im` doubles plus a JSON
/// sidecar with the grid geometry.
pub fn write_snapshot(dir: &Path, index: usize, field: &GPField, coupling: f64) -> Result<()> {
    fs::create_dir_all(dir)?;
    let base = dir.join(format!("snapshot_{index:06}"));
    let mut raw = Vec::with_capacity(field.values.len() * 16);
    for z in &field.values {
        raw.extend_from_slice(&z.re.to_le_bytes());
        raw.extend_from_slice(&z.im.to_le_bytes());
    }
    fs::write(base.with_extension("bin"), raw)?;
    write_json(
        &base.with_extension("json"),
        &SnapshotSidecar {
            dim: field.grid.dim,
            grid_points: field.grid.n,
            box_length: field.grid.box_length,
            time: field.time,
            coupling_length: coupling,
            format: "complex128-interleaved-le",
        },
    )
}

/// Reads a snapshot written by [`write_snapshot`].
pub fn read_snapshot(dir: &Path, index: usize) -> Result<GPField> {
    let base = dir.join(format!("snapshot_{index:06}"));
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(base.with_extension("json"))?)?;
    let grid = PeriodicGrid::new(
        sidecar["dim"].as_u64().unwrap_or(1) as usize,
        sidecar["grid_points"].as_u64().unwrap_or(2) as usize,
        sidecar["box_length"].as_f64().unwrap_or(1.0),
    );
    let raw = fs::read(base.with_extension("bin"))?;
    let mut values = Vec::with_capacity(raw.len() / 16);
    for chunk in raw.chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
        values.push(Complex64::new(re, im));
    }
    Ok(GPField {
        values,
        grid,
        time: sidecar["time"].as_f64().unwrap_or(0.0),
    })
}

/// Plot-ready density CSV: one row per grid point, coordinates then density.
pub fn write_density_csv(path: &Path, field: &GPField) -> Result<()> {
    let mut file = fs::File::create(path)?;
    let cols: Vec<&str> = ["x", "y", "z"][..field.grid.dim].to_vec();
    writeln!(file, "{},density", cols.join(","))?;
    for (i, z) in field.values.iter().enumerate() {
        let x = field.grid.position(i);
        let coords: Vec<String> = (0..field.grid.dim)
            .map(|d| format!("{:.17e}", x[d]))
            .collect();
        writeln!(file, "{},{:.17e}", coords.join(","), z.norm_sqr())?;
    }
    Ok(())
}

/// Generic time-series CSV with a JSON metadata header line.
pub struct TimeSeriesWriter {
    file: fs::File,
}

impl TimeSeriesWriter {
    pub fn create(path: &Path, columns: &[&str], metadata: &serde_json::Value) -> Result<Self> {
        let mut file = fs::File::create(path)?;
        writeln!(file, "# {}", serde_json::to_string(metadata)?)?;
        writeln!(file, "{}", columns.join(","))?;
        Ok(TimeSeriesWriter { file })
    }

    pub fn write_row(&mut self, values: &[f64]) -> Result<()> {
        let row: Vec<String> = values.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(self.file, "{}", row.join(","))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spec.json");
        let spec = PotentialSpec::square(0.25, 0.5, 1.0, 50.0, 1e-4, 0.5).unwrap();
        write_spec(&path, &spec).unwrap();
        let back = read_spec(&path).unwrap();
        assert_eq!(back.r1, spec.r1);
        assert_eq!(back.lambda_minus, spec.lambda_minus);
        assert_eq!(back.vplus_profile, spec.vplus_profile);
    }

    #[test]
    fn snapshot_round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let grid = PeriodicGrid::new(1, 16, 4.0);
        let field = GPField::gaussian(grid, 0.7);
        write_snapshot(dir.path(), 3, &field, 0.25).unwrap();
        let back = read_snapshot(dir.path(), 3).unwrap();
        assert_eq!(back.grid, field.grid);
        assert!(field
            .values
            .iter()
            .zip(&back.values)
            .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
    }

    #[test]
    fn sweep_csv_has_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let rows = vec![SweepRow {
            n: 100,
            beta1: 0.5,
            r_beta: 0.19,
            k_beta: 0.98,
            a: 0.3,
            nvf: 7.5,
            nwf: 7.5,
            nw: 7.7,
            g_l1: 1e-5,
            g_l3half: 1e-4,
            g_l2: 1e-3,
            g_linf: 0.02,
        }];
        write_sweep_csv(&path, &rows, &serde_json::json!({"beta1": 0.5})).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# {"));
        assert!(lines[1].starts_with("N,beta1"));
        assert_eq!(lines.len(), 3);
    }
}
