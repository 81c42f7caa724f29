//! CSV and JSON readers/writers for every emitted artifact.
//!
//! CSV files are comma-separated with a header row, `.` decimal point and LF
//! line endings. Floats are written in shortest round-trip form, so reading a
//! file back reproduces the written values exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dipole::ComplexSeries;
use crate::error::{Error, Result};
use crate::field::TimeGrid;
use crate::harmonics::{SpectrumLine, SpectrumResult};
use crate::quantum_state::ModeDensityMatrix;

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = writer(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new().from_path(path)?;
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Schema {
            file: path.display().to_string(),
            reason: format!("expected columns {header:?}, found {found:?}"),
        });
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleRow {
    pub t: f64,
    pub re_d: f64,
    pub im_d: f64,
}

pub const DIPOLE_HEADER: [&str; 3] = ["t", "re_d", "im_d"];

pub fn write_dipole_csv(path: &Path, series: &ComplexSeries) -> Result<()> {
    write_rows(
        path,
        series
            .grid
            .times()
            .zip(&series.values)
            .map(|(t, d)| DipoleRow { t, re_d: d.re, im_d: d.im }),
    )
}

/// Reads a dipole CSV back into a series; the grid is reconstructed from
/// the first two time stamps.
pub fn read_dipole_csv(path: &Path) -> Result<ComplexSeries> {
    let rows: Vec<DipoleRow> = read_rows(path, &DIPOLE_HEADER)?;
    if rows.len() < 2 {
        return Err(Error::Schema { file: path.display().to_string(), reason: "fewer than two samples".into() });
    }
    let grid = TimeGrid::new(rows[0].t, rows[1].t - rows[0].t, rows.len())?;
    ComplexSeries::new(grid, rows.iter().map(|r| Complex64::new(r.re_d, r.im_d)).collect())
}

pub const SPECTRUM_HEADER: [&str; 2] = ["q", "value"];

pub fn write_spectrum_csv(path: &Path, spectrum: &SpectrumResult) -> Result<()> {
    write_rows(path, spectrum.lines.iter())
}

pub fn read_spectrum_csv(path: &Path) -> Result<Vec<SpectrumLine>> {
    read_rows(path, &SPECTRUM_HEADER)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub n: usize,
    pub m: usize,
    pub re: f64,
    pub im: f64,
}

pub const DENSITY_HEADER: [&str; 4] = ["n", "m", "re", "im"];

/// Writes every entry `(n, m)` in row-major order.
pub fn write_density_csv(path: &Path, rho: &ModeDensityMatrix) -> Result<()> {
    let dim = rho.n_max() + 1;
    write_rows(
        path,
        (0..dim).flat_map(|n| (0..dim).map(move |m| (n, m))).map(|(n, m)| {
            let z = rho.get(n, m);
            DensityRow { n, m, re: z.re, im: z.im }
        }),
    )
}

pub fn read_density_csv(path: &Path, q: u32) -> Result<ModeDensityMatrix> {
    let rows: Vec<DensityRow> = read_rows(path, &DENSITY_HEADER)?;
    let dim = rows.iter().map(|r| r.n.max(r.m) + 1).max().unwrap_or(0);
    if rows.len() != dim * dim {
        return Err(Error::Schema {
            file: path.display().to_string(),
            reason: format!("{} entries do not fill a {dim}x{dim} matrix", rows.len()),
        });
    }
    let mut m = DMatrix::zeros(dim, dim);
    for r in rows {
        m[(r.n, r.m)] = Complex64::new(r.re, r.im);
    }
    ModeDensityMatrix::from_matrix(q, m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HusimiRow {
    pub re_alpha: f64,
    pub im_alpha: f64,
    pub q: f64,
}

pub const HUSIMI_HEADER: [&str; 3] = ["re_alpha", "im_alpha", "q"];

pub fn write_husimi_csv(path: &Path, samples: &[(f64, f64, f64)]) -> Result<()> {
    write_rows(path, samples.iter().map(|&(re_alpha, im_alpha, q)| HusimiRow { re_alpha, im_alpha, q }))
}

pub fn read_husimi_csv(path: &Path) -> Result<Vec<HusimiRow>> {
    read_rows(path, &HUSIMI_HEADER)
}

/// Side-by-side photon distributions of the coherent and phase-averaged
/// harmonic states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonDistributionRow {
    pub q: u32,
    pub n: usize,
    pub coherent: f64,
    pub phase_averaged: f64,
}

pub const PHOTON_DISTRIBUTION_HEADER: [&str; 4] = ["q", "n", "coherent", "phase_averaged"];

pub fn write_photon_distribution_csv(path: &Path, rows: &[PhotonDistributionRow]) -> Result<()> {
    write_rows(path, rows.iter())
}

pub fn read_photon_distribution_csv(path: &Path) -> Result<Vec<PhotonDistributionRow>> {
    read_rows(path, &PHOTON_DISTRIBUTION_HEADER)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockScanRow {
    pub n: u64,
    pub q: u32,
    pub kappa: f64,
    pub value: f64,
    pub closed_form: f64,
}

pub const FOCK_SCAN_HEADER: [&str; 5] = ["n", "q", "kappa", "value", "closed_form"];

pub fn write_fock_scan_csv(path: &Path, rows: &[FockScanRow]) -> Result<()> {
    write_rows(path, rows.iter())
}

pub fn read_fock_scan_csv(path: &Path) -> Result<Vec<FockScanRow>> {
    read_rows(path, &FOCK_SCAN_HEADER)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_state::coherent_mode_state;

    #[test]
    fn density_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rho.csv");
        let rho = coherent_mode_state(3, Complex64::new(0.7, -1.1), 30).unwrap();
        write_density_csv(&path, &rho).unwrap();
        assert_eq!(read_density_csv(&path, 3).unwrap(), rho);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("n,m,re,im\n"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn wrong_header_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "q,power\n1,2.0\n").unwrap();
        match read_spectrum_csv(&path) {
            Err(Error::Schema { reason, .. }) => assert!(reason.contains("power")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
