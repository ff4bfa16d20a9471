//! Writing fields as PGM images, ASCII grids and CSV.
//!
//! Rasters are written north row first, i.e. last grid row first.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::HeadField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Pgm,
    AsciiGrid,
    Csv,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Pgm => "pgm",
            ExportFormat::AsciiGrid => "asc",
            ExportFormat::Csv => "csv",
        }
    }
}

/// Plain (`P2`) greymap, maxval 255, min-max normalised. By default bright
/// means high; `invert` flips that. A constant field is all zeros.
pub fn to_pgm(field: &HeadField, invert: bool) -> String {
    let (rows, cols) = field.dims();
    let (lo, hi) = field.min_max();
    let span = hi - lo;
    let mut out = format!("P2\n{cols} {rows}\n255\n");
    for i in (0..rows).rev() {
        let line: Vec<String> = (0..cols)
            .map(|j| {
                let mut px = if span > 0.0 { ((field.get(i, j) - lo) / span * 255.0).round() as u8 } else { 0 };
                if invert && span > 0.0 {
                    px = 255 - px;
                }
                px.to_string()
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// ESRI ASCII grid. Without geo-referencing the lower-left corner is the
/// origin and cells are one unit wide.
pub fn to_ascii_grid(field: &HeadField) -> String {
    let (rows, cols) = field.dims();
    let (xll, yll, cell) = match field.georef() {
        Some(g) => (g.bbox.lon_min, g.bbox.lat_min, g.lat_det),
        None => (0.0, 0.0, 1.0),
    };
    let mut out = String::new();
    let _ = writeln!(out, "ncols {cols}");
    let _ = writeln!(out, "nrows {rows}");
    let _ = writeln!(out, "xllcorner {xll}");
    let _ = writeln!(out, "yllcorner {yll}");
    let _ = writeln!(out, "cellsize {cell}");
    out.push_str("NODATA_value -9999\n");
    for i in (0..rows).rev() {
        let line: Vec<String> = (0..cols).map(|j| field.get(i, j).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// `i,j,lat,lon,value` per cell in row-major order, 12 significant digits.
/// Without geo-referencing `lat` and `lon` are the row and column indices.
pub fn to_csv(field: &HeadField) -> String {
    let (rows, cols) = field.dims();
    let mut out = String::from("i,j,lat,lon,value\n");
    for i in 0..rows {
        for j in 0..cols {
            let (lat, lon) = match field.georef() {
                Some(g) => g.cell_center(i, j),
                None => (i as f64, j as f64),
            };
            let _ = writeln!(out, "{i},{j},{lat:.11e},{lon:.11e},{:.11e}", field.get(i, j));
        }
    }
    out
}

/// Reads back the output of [`to_csv`]. Every cell must appear exactly once.
pub fn read_csv(text: &str) -> Result<HeadField> {
    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || (line == 1 && trimmed.starts_with('i')) {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::Parse { line, token: trimmed.to_string(), message: "expected 5 fields".into() });
        }
        let index = |k: usize| {
            fields[k].parse::<usize>().map_err(|_| Error::Parse {
                line,
                token: fields[k].to_string(),
                message: "invalid index".into(),
            })
        };
        let value = fields[4].parse::<f64>().map_err(|_| Error::Parse {
            line,
            token: fields[4].to_string(),
            message: "invalid value".into(),
        })?;
        cells.push((index(0)?, index(1)?, value));
    }
    if cells.is_empty() {
        return Err(Error::EmptySamples);
    }
    let rows = cells.iter().map(|c| c.0).max().unwrap_or(0) + 1;
    let cols = cells.iter().map(|c| c.1).max().unwrap_or(0) + 1;
    let mut values = vec![f64::NAN; rows * cols];
    for &(i, j, v) in &cells {
        let slot = &mut values[i * cols + j];
        if !slot.is_nan() {
            return Err(Error::InvalidParameter(format!("cell ({i}, {j}) listed twice")));
        }
        *slot = v;
    }
    HeadField::new(rows, cols, values)
}

pub fn render(field: &HeadField, format: ExportFormat, invert: bool) -> String {
    match format {
        ExportFormat::Pgm => to_pgm(field, invert),
        ExportFormat::AsciiGrid => to_ascii_grid(field),
        ExportFormat::Csv => to_csv(field),
    }
}

pub fn export_field(field: &HeadField, format: ExportFormat, invert: bool, path: &Path) -> Result<()> {
    std::fs::write(path, render(field, format, invert))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{GeoBox, GeoGrid};
    use proptest::prelude::*;

    #[test]
    fn pgm_layout_and_normalisation() {
        let f = HeadField::new(2, 3, vec![0.0, 1.0, 2.0, 3.0, 4.0, 10.0]).unwrap();
        assert_eq!(to_pgm(&f, false), "P2\n3 2\n255\n77 102 255\n0 26 51\n");
        assert_eq!(to_pgm(&f, true), "P2\n3 2\n255\n178 153 0\n255 229 204\n");
        assert_eq!(to_pgm(&HeadField::filled(1, 1, 4.0).unwrap(), false), "P2\n1 1\n255\n0\n");
        assert_eq!(to_pgm(&HeadField::filled(2, 2, 4.0).unwrap(), true), "P2\n2 2\n255\n0 0\n0 0\n");
    }

    #[test]
    fn ascii_grid_header() {
        let bbox = GeoBox { lat_min: 36.5, lat_max: 37.0, lon_min: -77.0, lon_max: -76.0 };
        let g = GeoGrid::new(bbox, 0.25, 0.25).unwrap();
        let f = HeadField::from_fn(g.rows, g.cols, |i, _| i as f64).unwrap().with_georef(Some(g));
        let text = to_ascii_grid(&f);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            &lines[..6],
            &["ncols 4", "nrows 2", "xllcorner -77", "yllcorner 36.5", "cellsize 0.25", "NODATA_value -9999"]
        );
        assert_eq!(lines[6], "1 1 1 1");
        assert_eq!(lines[7], "0 0 0 0");
    }

    #[test]
    fn csv_rejects_gaps() {
        assert!(read_csv("i,j,lat,lon,value\n0,0,0,0,1\n1,1,1,1,2\n").is_err());
        assert!(read_csv("i,j,lat,lon,value\n0,x,0,0,1\n").is_err());
        assert!(read_csv("").is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(rows in 1usize..6, cols in 1usize..6, seed in proptest::collection::vec(-1e6f64..1e6, 36)) {
            let f = HeadField::from_fn(rows, cols, |i, j| seed[i * 6 + j]).unwrap();
            let text = to_csv(&f);
            let back = read_csv(&text).unwrap();
            prop_assert_eq!(back.dims(), f.dims());
            prop_assert_eq!(to_csv(&back), text);
            for (a, b) in f.values().iter().zip(back.values()) {
                prop_assert!((a - b).abs() <= 1e-11 * a.abs().max(1e-300));
            }
        }

        #[test]
        fn pgm_endpoints(vals in proptest::collection::vec(-50f64..50.0, 2..30)) {
            let n = vals.len();
            let f = HeadField::new(1, n, vals.clone()).unwrap();
            let text = to_pgm(&f, false);
            let px: Vec<u32> = text.lines().nth(3).unwrap().split(' ').map(|t| t.parse().unwrap()).collect();
            let (lo, hi) = f.min_max();
            for (p, v) in px.iter().zip(&vals) {
                if *v == lo { prop_assert_eq!(*p, 0); }
                if *v == hi && hi > lo { prop_assert_eq!(*p, 255); }
            }
        }
    }
}
