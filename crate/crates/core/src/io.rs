//! Long-format CSV artifacts with a `#` configuration header, and sample ingestion.
//!
//! Missing values are written as empty fields and infinities as `inf`; floats use the shortest
//! representation that parses back to the same value, so every artifact re-reads losslessly.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bounds::{BoundSurface, IfBoundCurve, RandomCostCdfBounds};
use crate::error::{Error, Result};
use crate::grid::{EvaluationGrid, GridMatrix};
use crate::inference::ConfidenceBand;
use crate::kernel::ConditionalCdfTable;
use crate::model::ObservationSample;

/// Default lower support bound when the input has no `b_lower` column.
pub const DEFAULT_LOWER_SUPPORT_BOUND: f64 = 0.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub y: f64,
    pub d: u8,
    pub z: f64,
    pub b_lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub y: f64,
    pub z: f64,
    pub f: f64,
    pub f0: f64,
    pub f1: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub y: f64,
    pub z: f64,
    pub clow: Option<f64>,
    pub chigh: Option<f64>,
    pub identified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfCurveRow {
    pub z: f64,
    pub clow: f64,
    pub chigh: f64,
    pub m: f64,
    pub m0b: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostCdfRow {
    pub c: f64,
    pub z: f64,
    pub fl: Option<f64>,
    pub fu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub y: f64,
    pub z: f64,
    #[serde(rename = "Cn")]
    pub cn: Option<f64>,
    pub estimate: Option<f64>,
    pub se: Option<f64>,
    pub critval: f64,
}

/// Writes `rows` as CSV, preceded by `# <json>` when a header is given.
pub fn write_rows<W: Write, R: Serialize>(
    mut out: W,
    header: Option<&serde_json::Value>,
    rows: &[R],
) -> Result<()> {
    if let Some(h) = header {
        writeln!(out, "# {}", serde_json::to_string(h)?)?;
    }
    let mut wtr = csv::Writer::from_writer(out);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_rows<Rd: Read, R: DeserializeOwned>(input: Rd) -> Result<Vec<R>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn write_rows_file<R: Serialize>(
    path: &Path,
    header: Option<&serde_json::Value>,
    rows: &[R],
) -> Result<()> {
    write_rows(File::create(path)?, header, rows)
}

pub fn read_rows_file<R: DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    read_rows(File::open(path)?)
}

/// The JSON echoed on the first `#` line of an artifact, if any.
pub fn read_header(path: &Path) -> Result<Option<serde_json::Value>> {
    let mut first = String::new();
    BufReader::new(File::open(path)?).read_line(&mut first)?;
    match first.strip_prefix('#') {
        Some(rest) => Ok(Some(serde_json::from_str(rest.trim())?)),
        None => Ok(None),
    }
}

/// Pretty JSON written next to a CSV artifact.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

pub fn sample_rows(sample: &ObservationSample<f64>) -> Vec<SampleRow> {
    sample
        .records()
        .map(|r| SampleRow {
            y: r.y,
            d: r.d as u8,
            z: r.z,
            b_lower: sample.lower_support_bound(),
        })
        .collect()
}

fn long_format<T>(grid: &EvaluationGrid<f64>, mut row: impl FnMut(usize, usize) -> T) -> Vec<T> {
    let mut rows = Vec::with_capacity(grid.ny() * grid.nz());
    for iz in 0..grid.nz() {
        for iy in 0..grid.ny() {
            rows.push(row(iy, iz));
        }
    }
    rows
}

pub fn table_rows(table: &ConditionalCdfTable<f64>) -> Vec<TableRow> {
    let (y, z) = (table.grid.y(), table.grid.z());
    long_format(&table.grid, |iy, iz| TableRow {
        y: y[iy],
        z: z[iz],
        f: table.f.get(iy, iz),
        f0: table.f0.get(iy, iz),
        f1: table.f1.get(iy, iz),
        p: table.p[iz],
    })
}

pub fn surface_rows(surface: &BoundSurface<f64>) -> Vec<SurfaceRow> {
    let (y, z) = (surface.grid.y(), surface.grid.z());
    long_format(&surface.grid, |iy, iz| SurfaceRow {
        y: y[iy],
        z: z[iz],
        clow: surface.clow.get(iy, iz),
        chigh: surface.chigh.get(iy, iz),
        identified: surface.identified.get(iy, iz),
    })
}

pub fn if_curve_rows(curve: &IfBoundCurve<f64>) -> Vec<IfCurveRow> {
    (0..curve.z.len())
        .map(|i| IfCurveRow {
            z: curve.z[i],
            clow: curve.clow[i],
            chigh: curve.chigh[i],
            m: curve.m[i],
            m0b: curve.m0b[i],
            p: curve.p[i],
        })
        .collect()
}

pub fn cost_cdf_rows(bounds: &RandomCostCdfBounds<f64>) -> Vec<CostCdfRow> {
    let mut rows = Vec::new();
    for (iz, &z) in bounds.z.iter().enumerate() {
        for (ic, &c) in bounds.cost_grid.iter().enumerate() {
            rows.push(CostCdfRow {
                c,
                z,
                fl: bounds.fl.get(ic, iz),
                fu: bounds.fu.get(ic, iz),
            });
        }
    }
    rows
}

pub fn band_rows(band: &ConfidenceBand<f64>) -> Vec<BandRow> {
    let (y, z) = (band.grid.y(), band.grid.z());
    long_format(&band.grid, |iy, iz| BandRow {
        y: y[iy],
        z: z[iz],
        cn: band.cn.get(iy, iz),
        estimate: band.estimate.get(iy, iz),
        se: band.se.get(iy, iz),
        critval: band.critical_value,
    })
}

fn distinct_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Rebuilds a table from its long-format rows.
pub fn table_from_rows(rows: &[TableRow]) -> Result<ConditionalCdfTable<f64>> {
    let ys = distinct_sorted(rows.iter().map(|r| r.y));
    let zs = distinct_sorted(rows.iter().map(|r| r.z));
    if ys.len() * zs.len() != rows.len() {
        return Err(Error::InvalidGrid(
            "table rows do not form a full grid".into(),
        ));
    }
    let grid = EvaluationGrid::new(ys, zs)?;
    let (ny, nz) = (grid.ny(), grid.nz());
    let mut f = GridMatrix::filled(ny, nz, 0.0);
    let mut f0 = GridMatrix::filled(ny, nz, 0.0);
    let mut f1 = GridMatrix::filled(ny, nz, 0.0);
    let mut p = vec![0.0; nz];
    for r in rows {
        let iy = grid.y().partition_point(|v| *v < r.y);
        let iz = grid.z().partition_point(|v| *v < r.z);
        f.set(iy, iz, r.f);
        f0.set(iy, iz, r.f0);
        f1.set(iy, iz, r.f1);
        p[iz] = r.p;
    }
    Ok(ConditionalCdfTable {
        grid,
        f,
        f0,
        f1,
        p,
        bandwidth: None,
    })
}

fn ingest_error(row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Ingest {
        row,
        column: column.into(),
        message: message.into(),
    }
}

/// Reads a `y, d, z` sample (headers case-insensitive, optional constant `b_lower`).
///
/// Row numbers in diagnostics count data rows from 1.
pub fn ingest_csv(path: &Path) -> Result<ObservationSample<f64>> {
    ingest_reader(File::open(path)?)
}

pub fn ingest_reader<Rd: Read>(input: Rd) -> Result<ObservationSample<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let col = |name: &str| find(name).ok_or_else(|| Error::MissingColumn(name.into()));
    let (iy, id, iz) = (col("y")?, col("d")?, col("z")?);
    let ib = find("b_lower");
    let mut y = Vec::new();
    let mut d = Vec::new();
    let mut z = Vec::new();
    let mut bound: Option<f64> = None;
    for (k, record) in rdr.records().enumerate() {
        let row = k + 1;
        let record = record?;
        let field = |i: usize, name: &str| -> Result<f64> {
            let raw = record
                .get(i)
                .ok_or_else(|| ingest_error(row, name, "missing field"))?;
            let v: f64 = raw.parse().map_err(|_| {
                ingest_error(row, name, format!("cannot parse `{raw}` as a number"))
            })?;
            if !v.is_finite() {
                return Err(ingest_error(row, name, "value is not finite"));
            }
            Ok(v)
        };
        let yv = field(iy, "y")?;
        let zv = field(iz, "z")?;
        let dv = match record.get(id).unwrap_or("") {
            "0" => false,
            "1" => true,
            other => {
                return Err(ingest_error(
                    row,
                    "d",
                    format!("sector indicator must be 0 or 1, got `{other}`"),
                ))
            }
        };
        if let Some(ib) = ib {
            let b = field(ib, "b_lower")?;
            match bound {
                None => bound = Some(b),
                Some(b0) if b0 != b => {
                    return Err(ingest_error(
                        row,
                        "b_lower",
                        format!("differs from the first row ({b0})"),
                    ))
                }
                _ => {}
            }
        }
        let b = bound.unwrap_or(DEFAULT_LOWER_SUPPORT_BOUND);
        if yv < b {
            return Err(ingest_error(
                row,
                "y",
                format!("income {yv} is below the support bound {b}"),
            ));
        }
        y.push(yv);
        d.push(dv);
        z.push(zv);
    }
    if y.is_empty() {
        return Err(Error::InvalidSample("input has no data rows".into()));
    }
    ObservationSample::new(y, d, z, bound.unwrap_or(DEFAULT_LOWER_SUPPORT_BOUND))
}

pub fn write_sample_csv(
    path: &Path,
    header: Option<&serde_json::Value>,
    sample: &ObservationSample<f64>,
) -> Result<()> {
    write_rows_file(path, header, &sample_rows(sample))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ingests_three_rows() {
        let s = ingest_reader("Y,D,Z\n1.5,1,0.1\n2,0,0.2\n0.25,1,0.3\n".as_bytes()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.d(), &[true, false, true]);
        assert_eq!(s.lower_support_bound(), 0.0);
    }

    #[test]
    fn names_the_offending_row() {
        let mut text = String::from("y,d,z\n");
        for i in 1..=10 {
            let d = if i == 7 { 2 } else { i % 2 };
            text.push_str(&format!("{i}.0,{d},0.{i}\n"));
        }
        match ingest_reader(text.as_bytes()) {
            Err(Error::Ingest { row, column, .. }) => {
                assert_eq!(row, 7);
                assert_eq!(column, "d");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn diagnostics_for_bad_inputs() {
        assert!(
            matches!(ingest_reader("y,z\n1,2\n".as_bytes()), Err(Error::MissingColumn(c)) if c == "d")
        );
        assert!(matches!(
            ingest_reader("y,d,z\n1,1,0.1\nabc,0,0.2\n".as_bytes()),
            Err(Error::Ingest { row: 2, .. })
        ));
        assert!(matches!(
            ingest_reader("y,d,z,b_lower\n1,1,0.1,0.5\n0.2,0,0.2,0.5\n".as_bytes()),
            Err(Error::Ingest { row: 2, .. })
        ));
    }

    #[test]
    fn optional_values_round_trip() {
        let rows = vec![
            SurfaceRow {
                y: 0.1,
                z: 0.2,
                clow: None,
                chigh: Some(f64::INFINITY),
                identified: false,
            },
            SurfaceRow {
                y: 1.0 / 3.0,
                z: 0.2,
                clow: Some(1e-300),
                chigh: Some(-0.0),
                identified: true,
            },
        ];
        let mut buf = Vec::new();
        write_rows(&mut buf, Some(&serde_json::json!({"seed": 3})), &rows).unwrap();
        let back: Vec<SurfaceRow> = read_rows(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        assert!(String::from_utf8(buf).unwrap().contains("inf"));
    }
}
