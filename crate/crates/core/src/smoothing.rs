//! Finite-difference partials and damped Taylor-expansion smoothing.
//!
//! The pipeline quantizes the samples, extends them to a gradually varied
//! surface (or falls back to [`algorithm_a_fit`] when the levels are not
//! gradually varied), then repeatedly predicts every cell from its nearest
//! sample with a Taylor expansion and moves it part of the way there.

use rayon::prelude::*;

use crate::domain::GridDomain;
use crate::error::{Error, Result};
use crate::field::HeadField;
use crate::gvf::{
    algorithm_a_fit, feasibility_check, gvf_extend, located_cells, Feasibility, LevelSample, Quantizer,
    ALGORITHM_A_DEFAULT_PASSES,
};
use crate::ingest::GuidingPoint;

pub const DEFAULT_DAMPING: f64 = 0.4;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 500;

/// Second derivatives, per cell unit squared.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondPartials {
    pub fxx: HeadField,
    pub fxy: HeadField,
    pub fyy: HeadField,
}

/// `fx` is the derivative along columns (x), `fy` along rows (y), per cell unit.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialFields {
    pub fx: HeadField,
    pub fy: HeadField,
    pub second: Option<SecondPartials>,
}

/// Derivative of a sampled line with unit spacing.
fn diff_at(len: usize, k: usize, at: impl Fn(usize) -> f64) -> f64 {
    if k == 0 {
        at(1) - at(0)
    } else if k + 1 == len {
        at(k) - at(k - 1)
    } else {
        (at(k + 1) - at(k - 1)) / 2.0
    }
}

fn d_dx(h: &HeadField) -> Result<HeadField> {
    let (rows, cols) = h.dims();
    let mut values = vec![0.0; rows * cols];
    values.par_chunks_mut(cols).enumerate().for_each(|(i, row)| {
        for (j, out) in row.iter_mut().enumerate() {
            *out = diff_at(cols, j, |c| h.get(i, c));
        }
    });
    HeadField::new(rows, cols, values)
}

fn d_dy(h: &HeadField) -> Result<HeadField> {
    let (rows, cols) = h.dims();
    let mut values = vec![0.0; rows * cols];
    values.par_chunks_mut(cols).enumerate().for_each(|(i, row)| {
        for (j, out) in row.iter_mut().enumerate() {
            *out = diff_at(rows, i, |r| h.get(r, j));
        }
    });
    HeadField::new(rows, cols, values)
}

fn check_size(field: &HeadField) -> Result<()> {
    let (rows, cols) = field.dims();
    if rows < 2 || cols < 2 {
        return Err(Error::FieldTooSmall { rows, cols });
    }
    Ok(())
}

/// Central differences inside, one-sided differences at the first and last
/// row/column.
pub fn fd_partials(field: &HeadField) -> Result<PartialFields> {
    check_size(field)?;
    Ok(PartialFields { fx: d_dx(field)?, fy: d_dy(field)?, second: None })
}

/// [`fd_partials`] plus second derivatives obtained by differencing the first.
pub fn fd_partials_second_order(field: &HeadField) -> Result<PartialFields> {
    let mut p = fd_partials(field)?;
    p.second = Some(SecondPartials { fxx: d_dx(&p.fx)?, fxy: d_dy(&p.fx)?, fyy: d_dy(&p.fy)? });
    Ok(p)
}

/// Where a sample's expansion takes its derivatives from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientAnchor {
    /// Mean partials over the cells the sample anchors, with the gradient
    /// length capped at the steepest slope between any two samples.
    #[default]
    RegionMean,
    /// Partials at the sample's own cell.
    GuidingPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothConfig {
    pub damping: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Add the second-order Taylor terms to each prediction.
    pub second_order: bool,
    /// Multilevel refinement; always rejected.
    pub multilevel: bool,
    pub anchor: GradientAnchor,
}

impl Default for SmoothConfig {
    fn default() -> Self {
        Self {
            damping: DEFAULT_DAMPING,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
            second_order: false,
            multilevel: false,
            anchor: GradientAnchor::RegionMean,
        }
    }
}

impl SmoothConfig {
    pub fn validate(&self) -> Result<()> {
        if self.multilevel {
            return Err(Error::Unsupported("multilevel smoothing".into()));
        }
        if !(self.damping > 0.0 && self.damping < 0.5) {
            return Err(Error::InvalidParameter(format!("damping must be in (0, 0.5), got {}", self.damping)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be positive".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParameter(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        Ok(())
    }
}

/// Index of the nearest sample cell for every grid cell (Euclidean index
/// distance, ties to the lowest sample index).
pub fn nearest_samples(rows: usize, cols: usize, cells: &[(usize, usize)]) -> Vec<usize> {
    let mut owner = vec![0usize; rows * cols];
    owner.par_chunks_mut(cols).enumerate().for_each(|(i, row)| {
        for (j, out) in row.iter_mut().enumerate() {
            let mut best = usize::MAX;
            for (k, &(si, sj)) in cells.iter().enumerate() {
                let d = si.abs_diff(i).pow(2) + sj.abs_diff(j).pow(2);
                if d < best {
                    best = d;
                    *out = k;
                }
            }
        }
    });
    owner
}

/// Taylor expansion of one sample.
#[derive(Debug, Clone, Copy)]
struct Expansion {
    row: f64,
    col: f64,
    value: f64,
    gx: f64,
    gy: f64,
    /// `(fxx, fxy, fyy)`
    second: Option<(f64, f64, f64)>,
}

impl Expansion {
    fn predict(&self, i: usize, j: usize) -> f64 {
        let dx = j as f64 - self.col;
        let dy = i as f64 - self.row;
        let mut p = self.value + self.gx * dx + self.gy * dy;
        if let Some((fxx, fxy, fyy)) = self.second {
            p += 0.5 * fxx * dx * dx + fxy * dx * dy + 0.5 * fyy * dy * dy;
        }
        p
    }
}

/// One damped step toward the predictions. Returns the new field.
fn blend(field: &HeadField, expansions: &[Expansion], owner: &[usize], damping: f64) -> Result<HeadField> {
    let (rows, cols) = field.dims();
    let mut values = vec![0.0; rows * cols];
    values.par_chunks_mut(cols).enumerate().for_each(|(i, row)| {
        for (j, out) in row.iter_mut().enumerate() {
            let old = field.get(i, j);
            let pred = expansions[owner[i * cols + j]].predict(i, j);
            *out = old + damping * (pred - old);
        }
    });
    Ok(HeadField::new(rows, cols, values)?.with_georef(field.georef().copied()))
}

fn point_expansions(samples: &[GuidingPoint], cells: &[(usize, usize)], partials: &PartialFields) -> Vec<Expansion> {
    samples
        .iter()
        .zip(cells)
        .map(|(s, &(i, j))| Expansion {
            row: i as f64,
            col: j as f64,
            value: s.value,
            gx: partials.fx.get(i, j),
            gy: partials.fy.get(i, j),
            second: partials.second.as_ref().map(|p| (p.fxx.get(i, j), p.fxy.get(i, j), p.fyy.get(i, j))),
        })
        .collect()
}

/// One smoothing step: every cell moves `damping` of the way toward the
/// first-order (or, with `second_order`, second-order) expansion of its nearest
/// sample, using the partials at that sample's cell. Samples are not re-imposed.
pub fn taylor_correct(
    field: &HeadField,
    partials: &PartialFields,
    samples: &[GuidingPoint],
    cfg: &SmoothConfig,
) -> Result<HeadField> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    field.check_same_dims(&partials.fx)?;
    field.check_same_dims(&partials.fy)?;
    if cfg.second_order && partials.second.is_none() {
        return Err(Error::InvalidParameter("second-order step needs second partials".into()));
    }
    let (rows, cols) = field.dims();
    let cells = located_cells(samples, rows, cols)?;
    let owner = nearest_samples(rows, cols, &cells);
    let mut expansions = point_expansions(samples, &cells, partials);
    if !cfg.second_order {
        expansions.iter_mut().for_each(|e| e.second = None);
    }
    blend(field, &expansions, &owner, cfg.damping)
}

/// Which stage produced the starting surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionStage {
    Gvf,
    AlgorithmA,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothReport {
    pub field: HeadField,
    pub stage: ExtensionStage,
    pub iterations: usize,
    /// Max absolute change of each smoothing iteration.
    pub changes: Vec<f64>,
    pub converged: bool,
}

impl SmoothReport {
    pub fn final_change(&self) -> f64 {
        self.changes.last().copied().unwrap_or(0.0)
    }
}

type Cell = (usize, usize);

/// Drops repeated cells; a repeat with a different value is an error.
fn distinct_points(samples: &[GuidingPoint], cells: &[Cell]) -> Result<(Vec<GuidingPoint>, Vec<Cell>)> {
    let mut points: Vec<GuidingPoint> = Vec::with_capacity(samples.len());
    let mut kept: Vec<(usize, usize)> = Vec::with_capacity(samples.len());
    for (s, &cell) in samples.iter().zip(cells) {
        match kept.iter().position(|&c| c == cell) {
            Some(k) if points[k].value != s.value => {
                return Err(Error::InvalidParameter(format!(
                    "cell ({}, {}) sampled twice with values {} and {}",
                    cell.0, cell.1, points[k].value, s.value
                )));
            }
            Some(_) => {}
            None => {
                points.push(s.clone());
                kept.push(cell);
            }
        }
    }
    Ok((points, kept))
}

/// Steepest slope (head per cell) between any two samples.
fn max_sample_slope(samples: &[GuidingPoint], cells: &[(usize, usize)]) -> f64 {
    let mut slope = 0.0f64;
    for a in 0..samples.len() {
        for b in a + 1..samples.len() {
            let (ai, aj) = cells[a];
            let (bi, bj) = cells[b];
            let d = ((ai.abs_diff(bi).pow(2) + aj.abs_diff(bj).pow(2)) as f64).sqrt();
            slope = slope.max((samples[a].value - samples[b].value).abs() / d);
        }
    }
    slope
}

fn reimpose(field: &mut HeadField, samples: &[GuidingPoint], cells: &[(usize, usize)]) {
    for (s, &(i, j)) in samples.iter().zip(cells) {
        field.set(i, j, s.value);
    }
}

/// Builds the starting surface from the gradually varied extension, or from
/// Algorithm A when the sample levels are not gradually varied.
fn extension_stage(
    domain: &GridDomain,
    samples: &[GuidingPoint],
    cells: &[(usize, usize)],
    owner: &[usize],
    q: &Quantizer,
) -> Result<(HeadField, ExtensionStage)> {
    let (rows, cols) = (domain.rows(), domain.cols());
    let levels: Vec<LevelSample> =
        samples.iter().zip(cells).map(|(s, &(i, j))| LevelSample::new(domain.vertex(i, j), q.level(s.value))).collect();
    match feasibility_check(domain, &levels)? {
        Feasibility::Feasible => {
            let extended = gvf_extend(domain, &levels)?;
            // Each cell sits at its level centre, offset by the quantization
            // residual of the sample that anchors it; a lone sample then gives
            // exactly its own value everywhere.
            let residuals: Vec<f64> = samples.iter().zip(&levels).map(|(s, l)| s.value - q.value(l.level)).collect();
            let values = extended.levels().iter().zip(owner).map(|(&l, &k)| q.value(l) + residuals[k]).collect();
            Ok((HeadField::new(rows, cols, values)?, ExtensionStage::Gvf))
        }
        Feasibility::Infeasible { .. } => {
            let mean = samples.iter().map(|s| s.value).sum::<f64>() / samples.len() as f64;
            let start = HeadField::filled(rows, cols, mean)?;
            let fit = algorithm_a_fit(&start, samples, q.ratio(), ALGORITHM_A_DEFAULT_PASSES)?;
            Ok((fit.field, ExtensionStage::AlgorithmA))
        }
    }
}

/// Full reconstruction: extension, then damped Taylor smoothing until the
/// largest change of an iteration drops below `cfg.tolerance` or
/// `cfg.max_iterations` is reached. Samples hold their exact values after
/// every iteration.
pub fn smooth_fit(
    domain: &GridDomain,
    samples: &[GuidingPoint],
    q: &Quantizer,
    cfg: &SmoothConfig,
) -> Result<SmoothReport> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let (rows, cols) = (domain.rows(), domain.cols());
    let cells = located_cells(samples, rows, cols)?;
    let (samples, cells) = distinct_points(samples, &cells)?;
    let owner = nearest_samples(rows, cols, &cells);

    let (mut field, stage) = extension_stage(domain, &samples, &cells, &owner, q)?;
    reimpose(&mut field, &samples, &cells);

    let mut report = SmoothReport { field, stage, iterations: 0, changes: Vec::new(), converged: true };
    if rows < 2 || cols < 2 {
        return Ok(report);
    }

    let slope_cap = max_sample_slope(&samples, &cells);
    let mut regions: Vec<Vec<usize>> = vec![Vec::new(); samples.len()];
    for (cell, &k) in owner.iter().enumerate() {
        regions[k].push(cell);
    }
    let region_mean = |f: &HeadField, k: usize| -> f64 {
        regions[k].iter().map(|&c| f.values()[c]).sum::<f64>() / regions[k].len() as f64
    };

    report.converged = false;
    for _ in 0..cfg.max_iterations {
        let partials =
            if cfg.second_order { fd_partials_second_order(&report.field)? } else { fd_partials(&report.field)? };
        let mut expansions = point_expansions(&samples, &cells, &partials);
        if cfg.anchor == GradientAnchor::RegionMean {
            for (k, e) in expansions.iter_mut().enumerate() {
                let (gx, gy) = (region_mean(&partials.fx, k), region_mean(&partials.fy, k));
                let norm = gx.hypot(gy);
                let scale = if norm > slope_cap { slope_cap / norm } else { 1.0 };
                e.gx = gx * scale;
                e.gy = gy * scale;
                if let Some(p) = &partials.second {
                    e.second = Some((region_mean(&p.fxx, k), region_mean(&p.fxy, k), region_mean(&p.fyy, k)));
                }
            }
        }
        let mut next = blend(&report.field, &expansions, &owner, cfg.damping)?;
        reimpose(&mut next, &samples, &cells);
        let change = next.max_abs_diff(&report.field);
        report.field = next;
        report.iterations += 1;
        report.changes.push(change);
        if change < cfg.tolerance {
            report.converged = true;
            break;
        }
    }
    Ok(report)
}
