//! CSV exchange formats for curve data.
//!
//! Two table shapes, both printed with 17 significant digits so that equal
//! runs produce byte-identical files and every value survives a round trip:
//!
//! - sampled curves: the header row holds the grid points, each data row one
//!   curve evaluated on that grid
//! - basis coefficients: header `c1..cd`, each data row one curve's
//!   coefficient vector
//!
//! Everything works over generic readers and writers; path handling and
//! atomic replacement belong to the caller.

use std::io::{Read, Write};

use crate::basis::{project, reconstruct, Curve, DiscreteCurve, FourierBasis, Grid};
use crate::error::{FtsError, Result};
use crate::moments::FtsSample;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> FtsError {
    FtsError::Format(e.to_string())
}

fn parse_field(field: &str, row: usize, col: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| {
        FtsError::Format(format!(
            "row {row}, column {col}: cannot parse {field:?} as a number"
        ))
    })
}

/// Writes sampled curves: grid points as the header, one row per curve.
pub fn write_curves_csv<W: Write>(w: W, grid: &Grid, curves: &[DiscreteCurve]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(grid.points().iter().map(|&p| fmt(p)))
        .map_err(csv_err)?;
    for (row, curve) in curves.iter().enumerate() {
        if curve.values.len() != grid.n() {
            return Err(FtsError::Format(format!(
                "curve row {row} has {} values, grid has {} points",
                curve.values.len(),
                grid.n()
            )));
        }
        wtr.write_record(curve.values.iter().map(|&v| fmt(v)))
            .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads sampled curves written by [`write_curves_csv`].
pub fn read_curves_csv<R: Read>(r: R) -> Result<(Grid, Vec<DiscreteCurve>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(r);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(csv_err)?,
        None => return Err(FtsError::Format("curve CSV is empty".into())),
    };
    let points = header
        .iter()
        .enumerate()
        .map(|(col, f)| parse_field(f, 0, col))
        .collect::<Result<Vec<f64>>>()?;
    let grid = Grid::from_points(points)?;
    let mut curves = Vec::new();
    for (row, rec) in records.enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != grid.n() {
            return Err(FtsError::Format(format!(
                "row {}: expected {} values, found {}",
                row + 1,
                grid.n(),
                rec.len()
            )));
        }
        let values = rec
            .iter()
            .enumerate()
            .map(|(col, f)| parse_field(f, row + 1, col))
            .collect::<Result<Vec<f64>>>()?;
        curves.push(DiscreteCurve::new(values)?);
    }
    Ok((grid, curves))
}

/// Evaluates every curve of a sample on the basis grid and writes the
/// sampled-curve table.
pub fn write_sample_curves_csv<W: Write>(
    w: W,
    basis: &FourierBasis,
    x: &FtsSample,
) -> Result<()> {
    let curves = x
        .curves()
        .iter()
        .map(|c| reconstruct(c, basis))
        .collect::<Result<Vec<DiscreteCurve>>>()?;
    write_curves_csv(w, basis.grid(), &curves)
}

/// Reads a sampled-curve table and projects each row onto the
/// d-dimensional basis carried by the file's own grid.
pub fn read_sample_curves_csv<R: Read>(r: R, d: usize) -> Result<(FourierBasis, FtsSample)> {
    let (grid, rows) = read_curves_csv(r)?;
    let basis = FourierBasis::new(d, grid)?;
    let coeffs = rows
        .iter()
        .map(|c| project(c, &basis))
        .collect::<Result<Vec<Curve>>>()?;
    Ok((basis, FtsSample::new(&coeffs)?))
}

/// Writes basis coefficients: header `c1..cd`, one row per curve.
pub fn write_coeffs_csv<W: Write>(w: W, x: &FtsSample) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record((1..=x.d()).map(|i| format!("c{i}")))
        .map_err(csv_err)?;
    for t in 0..x.len() {
        wtr.write_record(x.data().column(t).iter().map(|&v| fmt(v)))
            .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a coefficient table written by [`write_coeffs_csv`].
pub fn read_coeffs_csv<R: Read>(r: R) -> Result<FtsSample> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(r);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(csv_err)?,
        None => return Err(FtsError::Format("coefficient CSV is empty".into())),
    };
    let d = header.len();
    for (i, field) in header.iter().enumerate() {
        let expect = format!("c{}", i + 1);
        if field.trim() != expect {
            return Err(FtsError::Format(format!(
                "coefficient header column {i} is {field:?}, expected {expect:?}"
            )));
        }
    }
    let mut curves = Vec::new();
    for (row, rec) in records.enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != d {
            return Err(FtsError::Format(format!(
                "row {}: expected {d} coefficients, found {}",
                row + 1,
                rec.len()
            )));
        }
        let values = rec
            .iter()
            .enumerate()
            .map(|(col, f)| parse_field(f, row + 1, col))
            .collect::<Result<Vec<f64>>>()?;
        curves.push(Curve::from_slice(&values)?);
    }
    FtsSample::new(&curves)
}
