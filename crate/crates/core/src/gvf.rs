//! Gradually varied functions.
//!
//! A level function `F: D -> Z` is gradually varied when adjacent vertices
//! differ by at most one level. Sample levels on `J ⊆ D` extend to such an `F`
//! exactly when every pair of samples satisfies `|f(x) - f(y)| <= d(x, y)`.
//!
//! Real heads enter and leave level space through a [`Quantizer`].
//! [`algorithm_a_fit`] is the real-valued fallback for data that fails the
//! pairwise condition.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::domain::{Domain, DomainGraph, VertexId};
use crate::error::{Error, Result};
use crate::field::HeadField;
use crate::ingest::GuidingPoint;

/// Maps real values to integer levels: `level = floor((v - origin) / ratio) + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    ratio: f64,
    origin: f64,
}

impl Quantizer {
    pub fn new(ratio: f64, origin: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(Error::InvalidParameter(format!("quantizer ratio must be > 0, got {ratio}")));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidParameter(format!("quantizer origin must be finite, got {origin}")));
        }
        Ok(Self { ratio, origin })
    }

    /// Splits `[min, max]` of `values` into `levels` equal steps, origin at the minimum.
    /// Constant data gets ratio 1.
    pub fn spanning(values: &[f64], levels: u32) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySamples);
        }
        if levels == 0 {
            return Err(Error::InvalidParameter("level count must be positive".into()));
        }
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = hi - lo;
        let ratio = if span > 0.0 { span / levels as f64 } else { 1.0 };
        Self::new(ratio, lo)
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn level(&self, value: f64) -> i64 {
        ((value - self.origin) / self.ratio).floor() as i64 + 1
    }

    /// Centre of the level's value interval.
    pub fn value(&self, level: i64) -> f64 {
        self.origin + (level as f64 - 0.5) * self.ratio
    }

    pub fn quantize(&self, values: &[f64]) -> Vec<i64> {
        values.iter().map(|&v| self.level(v)).collect()
    }

    pub fn dequantize(&self, levels: &[i64]) -> Vec<f64> {
        levels.iter().map(|&l| self.value(l)).collect()
    }
}

/// One sampled level `f(x)` at vertex `x ∈ J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LevelSample {
    pub vertex: VertexId,
    pub level: i64,
}

impl LevelSample {
    pub fn new(vertex: VertexId, level: i64) -> Self {
        Self { vertex, level }
    }
}

/// Integer level per vertex of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelField<'d> {
    graph: &'d DomainGraph,
    levels: Vec<i64>,
}

impl<'d> LevelField<'d> {
    pub fn new(graph: &'d DomainGraph, levels: Vec<i64>) -> Result<Self> {
        if levels.len() != graph.vertex_count() {
            return Err(Error::InvalidParameter(format!(
                "{} levels for {} vertices",
                levels.len(),
                graph.vertex_count()
            )));
        }
        Ok(Self { graph, levels })
    }

    pub fn graph(&self) -> &'d DomainGraph {
        self.graph
    }

    pub fn levels(&self) -> &[i64] {
        &self.levels
    }

    pub fn into_levels(self) -> Vec<i64> {
        self.levels
    }

    pub fn level(&self, v: VertexId) -> i64 {
        self.levels[v]
    }

    /// Highest level present (the `n` of `{1..n}` for fields built from positive levels).
    pub fn n(&self) -> i64 {
        self.levels.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    Infeasible { a: LevelSample, b: LevelSample, distance: usize },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GvfVerdict {
    Valid,
    Violated { a: VertexId, b: VertexId },
}

impl GvfVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, GvfVerdict::Valid)
    }
}

/// Drops exact duplicates, rejects conflicting ones, keeps first-occurrence order.
fn distinct_samples(graph: &DomainGraph, samples: &[LevelSample]) -> Result<Vec<LevelSample>> {
    let mut seen: HashMap<VertexId, i64> = HashMap::with_capacity(samples.len());
    let mut out = Vec::with_capacity(samples.len());
    for s in samples {
        graph.check_vertex(s.vertex)?;
        match seen.get(&s.vertex) {
            Some(&level) if level != s.level => {
                return Err(Error::ConflictingSamples { vertex: s.vertex, first: level, second: s.level });
            }
            Some(_) => {}
            None => {
                seen.insert(s.vertex, s.level);
                out.push(*s);
            }
        }
    }
    Ok(out)
}

/// Runs one distance sweep per sample, checking every pair `(i, j > i)` in
/// sample order. `visit` sees each sample's distance vector.
fn sweep_samples<D: Domain + ?Sized>(
    domain: &D,
    samples: &[LevelSample],
    mut visit: impl FnMut(&LevelSample, &[usize]),
) -> Result<Feasibility> {
    for (i, a) in samples.iter().enumerate() {
        let dist = domain.distances_from(a.vertex)?;
        for b in &samples[i + 1..] {
            let d = dist[b.vertex];
            if a.level.abs_diff(b.level) > d as u64 {
                return Ok(Feasibility::Infeasible { a: *a, b: *b, distance: d });
            }
        }
        visit(a, &dist);
    }
    Ok(Feasibility::Feasible)
}

/// Pairwise existence test for a gradually varied extension of `samples`.
///
/// Reports the first violating pair in sample order.
pub fn feasibility_check<D: Domain + ?Sized>(domain: &D, samples: &[LevelSample]) -> Result<Feasibility> {
    let samples = distinct_samples(domain.graph(), samples)?;
    sweep_samples(domain, &samples, |_, _| {})
}

/// Extends feasible samples to a gradually varied field.
///
/// Each vertex takes `floor((L + U) / 2)` where `L = max_s(f(s) - d(x, s))` and
/// `U = min_s(f(s) + d(x, s))`. Both bounds change by at most one across an
/// edge, so the floored midpoint does too, and it equals `f(s)` on samples.
/// Output depends only on level differences and distances: shifting every
/// sample level by `k` shifts the result by `k`.
pub fn gvf_extend<'d, D: Domain + ?Sized>(domain: &'d D, samples: &[LevelSample]) -> Result<LevelField<'d>> {
    let graph = domain.graph();
    let samples = distinct_samples(graph, samples)?;
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = graph.vertex_count();
    let mut lower = vec![i64::MIN; n];
    let mut upper = vec![i64::MAX; n];
    let verdict = sweep_samples(domain, &samples, |s, dist| {
        for v in 0..n {
            let d = dist[v] as i64;
            lower[v] = lower[v].max(s.level - d);
            upper[v] = upper[v].min(s.level + d);
        }
    })?;
    if let Feasibility::Infeasible { a, b, distance } = verdict {
        return Err(Error::Infeasible { a, b, distance });
    }
    let levels: Vec<i64> = lower
        .iter()
        .zip(&upper)
        .map(|(&lo, &hi)| {
            debug_assert!(lo <= hi);
            (lo + hi).div_euclid(2)
        })
        .collect();
    let field = LevelField::new(graph, levels)?;
    debug_assert!(verify_gvf(&field).is_valid());
    Ok(field)
}

/// Checks `|F(a) - F(b)| <= 1` on every edge, reporting the first offending edge.
pub fn verify_gvf(field: &LevelField<'_>) -> GvfVerdict {
    field
        .graph
        .edges()
        .find(|&(a, b)| field.levels[a].abs_diff(field.levels[b]) > 1)
        .map_or(GvfVerdict::Valid, |(a, b)| GvfVerdict::Violated { a, b })
}

/// Sweeps used by [`algorithm_a_fit`] when callers do not choose.
pub const ALGORITHM_A_DEFAULT_PASSES: usize = 10;
/// A pass whose largest correction is below this ends the fit early.
pub const ALGORITHM_A_STOP_CHANGE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmAFit {
    pub field: HeadField,
    pub passes: usize,
    pub last_change: f64,
}

impl AlgorithmAFit {
    pub fn converged(&self) -> bool {
        self.last_change < ALGORITHM_A_STOP_CHANGE
    }
}

/// Sample-contribution correction fit.
///
/// For every cell and every sample, with `distance` the Euclidean distance in
/// index space, `excess = |cell - value| / ratio - distance`. A positive excess
/// pulls the cell toward the sample by `excess * ratio`, leaving it exactly
/// `distance` levels away. Corrections from all samples apply in sample order
/// within one cell visit; a cell's update reads only its own value, so the
/// row-major sweep can run rows in parallel without changing the result.
pub fn algorithm_a_fit(
    field: &HeadField,
    samples: &[GuidingPoint],
    ratio: f64,
    passes: usize,
) -> Result<AlgorithmAFit> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::InvalidParameter(format!("ratio must be > 0, got {ratio}")));
    }
    if passes == 0 {
        return Err(Error::InvalidParameter("passes must be positive".into()));
    }
    let cells = located_cells(samples, field.rows(), field.cols())?;
    let guides: Vec<(f64, f64, f64)> =
        cells.iter().zip(samples).map(|(&(i, j), s)| (i as f64, j as f64, s.value)).collect();

    let cols = field.cols();
    let mut work = field.clone();
    let mut last_change = f64::INFINITY;
    let mut done = 0;
    while done < passes {
        last_change = work
            .values_mut()
            .par_chunks_mut(cols)
            .enumerate()
            .map(|(i, row)| {
                let mut row_change = 0.0f64;
                for (j, cell) in row.iter_mut().enumerate() {
                    let before = *cell;
                    for &(si, sj, value) in &guides {
                        let distance = ((si - i as f64).powi(2) + (sj - j as f64).powi(2)).sqrt();
                        let excess = (*cell - value).abs() / ratio - distance;
                        if excess > 0.0 {
                            if *cell > value {
                                *cell -= excess * ratio;
                            } else {
                                *cell += excess * ratio;
                            }
                        }
                    }
                    row_change = row_change.max((*cell - before).abs());
                }
                row_change
            })
            .reduce(|| 0.0, f64::max);
        done += 1;
        if last_change < ALGORITHM_A_STOP_CHANGE {
            break;
        }
    }
    Ok(AlgorithmAFit { field: work, passes: done, last_change })
}

/// Grid cells of located samples, bounds-checked.
pub(crate) fn located_cells(samples: &[GuidingPoint], rows: usize, cols: usize) -> Result<Vec<(usize, usize)>> {
    samples
        .iter()
        .enumerate()
        .map(|(index, s)| {
            let (row, col) = s.cell.ok_or(Error::Unlocated(index))?;
            if row >= rows || col >= cols {
                return Err(Error::SampleOutOfGrid { index, row, col, rows, cols });
            }
            Ok((row, col))
        })
        .collect()
}
