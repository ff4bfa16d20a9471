//! Real-valued fields on rectangular grids.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::ingest::GeoGrid;

/// Hydraulic head (or any scalar) on a `rows x cols` grid, row-major.
///
/// Row 0 is the southern edge when the field is geo-referenced.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadField {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    georef: Option<GeoGrid>,
}

impl HeadField {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::ZeroDimension { rows, cols });
        }
        if values.len() != rows * cols {
            return Err(Error::InvalidParameter(format!("{} values supplied for a {rows}x{cols} field", values.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: k / cols, col: k % cols });
        }
        Ok(Self { rows, cols, values, georef: None })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self::new(rows, cols, values)
    }

    pub fn with_georef(mut self, georef: Option<GeoGrid>) -> Self {
        self.georef = georef;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn georef(&self) -> Option<&GeoGrid> {
        self.georef.as_ref()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.cols + col] = value;
    }

    pub fn is_boundary(&self, row: usize, col: usize) -> bool {
        row == 0 || col == 0 || row + 1 == self.rows || col + 1 == self.cols
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn check_same_dims(&self, other: &HeadField) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), actual: other.dims() });
        }
        Ok(())
    }

    /// Largest absolute cell-wise difference; panics on mismatched dimensions.
    pub fn max_abs_diff(&self, other: &HeadField) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

impl Index<(usize, usize)> for HeadField {
    type Output = f64;

    fn index(&self, (row, col): (usize, usize)) -> &f64 {
        &self.values[row * self.cols + col]
    }
}

impl IndexMut<(usize, usize)> for HeadField {
    fn index_mut(&mut self, (row, col): (usize, usize)) -> &mut f64 {
        &mut self.values[row * self.cols + col]
    }
}

/// Boolean per-cell mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellMask {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl CellMask {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self { rows, cols, cells: vec![false; rows * cols] }
    }

    /// All edge cells set.
    pub fn boundary(rows: usize, cols: usize) -> Self {
        let mut mask = Self::empty(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                if i == 0 || j == 0 || i + 1 == rows || j + 1 == cols {
                    mask.set(i, j, true);
                }
            }
        }
        mask
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, on: bool) {
        self.cells[row * self.cols + col] = on;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.cells
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn covers_boundary(&self) -> bool {
        (0..self.rows).all(|i| {
            (0..self.cols).all(|j| {
                let edge = i == 0 || j == 0 || i + 1 == self.rows || j + 1 == self.cols;
                !edge || self.get(i, j)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_validates() {
        assert!(HeadField::new(2, 2, vec![0.0; 3]).is_err());
        assert!(matches!(
            HeadField::new(2, 2, vec![0.0, 1.0, f64::NAN, 0.0]),
            Err(Error::NonFinite { row: 1, col: 0 })
        ));
        assert!(matches!(HeadField::new(0, 2, vec![]), Err(Error::ZeroDimension { .. })));
        let f = HeadField::from_fn(2, 3, |i, j| (10 * i + j) as f64).unwrap();
        assert_eq!(f[(1, 2)], 12.0);
        assert_eq!(f.min_max(), (0.0, 12.0));
    }

    #[test]
    fn boundary_mask() {
        let m = CellMask::boundary(4, 5);
        assert_eq!(m.count(), 4 * 5 - 2 * 3);
        assert!(m.covers_boundary());
        assert!(!CellMask::empty(3, 3).covers_boundary());
        assert!(CellMask::boundary(1, 1).get(0, 0));
    }
}
