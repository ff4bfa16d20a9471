//! Discretised groundwater flow on the cell grid.
//!
//! Between two times the head obeys, at every interior cell,
//!
//! ```text
//! (h2 - h1) - alpha * (sum of 4 neighbours of h2 - 4 * h2) + G = 0
//! ```
//!
//! with `h1` the earlier surface and `h2` the later one. Positive `G` is a
//! sink (pumping). [`flow_iterate`] solves this implicit system for `h2` by
//! Jacobi sweeps with Dirichlet cells held by a mask.

use rayon::prelude::*;

use crate::domain::GridDomain;
use crate::error::{Error, Result};
use crate::field::{CellMask, HeadField};
use crate::gvf::{located_cells, Quantizer};
use crate::ingest::GuidingPoint;
use crate::smoothing::{smooth_fit, SmoothConfig, SmoothReport};

/// Per-step source term `G`, in head units.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Uniform(f64),
    Field(HeadField),
}

impl Source {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        match self {
            Source::Uniform(g) => *g,
            Source::Field(f) => f.get(row, col),
        }
    }

    fn check(&self, dims: (usize, usize)) -> Result<()> {
        match self {
            Source::Uniform(g) if !g.is_finite() => Err(Error::InvalidParameter(format!("source {g} is not finite"))),
            Source::Field(f) if f.dims() != dims => Err(Error::DimensionMismatch { expected: dims, actual: f.dims() }),
            _ => Ok(()),
        }
    }
}

/// Aquifer properties from which `alpha` can be derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aquifer {
    pub conductivity: f64,
    pub thickness: f64,
    pub storage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowParams {
    /// Diffusion number; zero only makes sense for the explicit limit.
    pub alpha: f64,
    pub source: Source,
    /// Time step in days.
    pub dt: f64,
    pub aquifer: Option<Aquifer>,
}

impl FlowParams {
    pub fn new(alpha: f64, source: Source, dt: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        if let Source::Uniform(g) = source {
            if !g.is_finite() {
                return Err(Error::InvalidParameter(format!("source {g} is not finite")));
            }
        }
        Ok(Self { alpha, source, dt, aquifer: None })
    }

    pub fn from_aquifer(aquifer: Aquifer, dt: f64, cell: f64, source: Source) -> Result<Self> {
        let alpha = derive_alpha(aquifer.conductivity, aquifer.thickness, aquifer.storage, dt, cell)?;
        let mut p = Self::new(alpha, source, dt)?;
        p.aquifer = Some(aquifer);
        Ok(p)
    }
}

/// `(K * b / S) * dt / cell^2`: hydraulic diffusivity in grid units per step.
pub fn derive_alpha(k: f64, b: f64, s: f64, dt: f64, cell: f64) -> Result<f64> {
    for (name, v) in [("K", k), ("b", b), ("S", s), ("dt", dt), ("cell", cell)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
        }
    }
    Ok(k * b / s * dt / (cell * cell))
}

fn neighbour_sum(h: &HeadField, i: usize, j: usize) -> f64 {
    h.get(i - 1, j) + h.get(i + 1, j) + h.get(i, j - 1) + h.get(i, j + 1)
}

/// Residual of the flow equation at every interior cell; boundary cells get 0.
pub fn flow_residual(h_prev: &HeadField, h_curr: &HeadField, p: &FlowParams) -> Result<HeadField> {
    h_prev.check_same_dims(h_curr)?;
    p.source.check(h_curr.dims())?;
    let (rows, cols) = h_curr.dims();
    let mut values = vec![0.0; rows * cols];
    values.par_chunks_mut(cols).enumerate().for_each(|(i, row)| {
        for (j, out) in row.iter_mut().enumerate() {
            if !h_curr.is_boundary(i, j) {
                let h2 = h_curr.get(i, j);
                *out = (h2 - h_prev.get(i, j)) - p.alpha * (neighbour_sum(h_curr, i, j) - 4.0 * h2) + p.source.at(i, j);
            }
        }
    });
    HeadField::new(rows, cols, values)
}

/// The sum the four neighbours of `cell` must reach for a zero residual there.
pub fn f4_target(h_prev: &HeadField, h_curr: &HeadField, p: &FlowParams, cell: (usize, usize)) -> Result<f64> {
    h_prev.check_same_dims(h_curr)?;
    p.source.check(h_curr.dims())?;
    let (i, j) = cell;
    let (rows, cols) = h_curr.dims();
    if i >= rows || j >= cols {
        return Err(Error::SampleOutOfGrid { index: 0, row: i, col: j, rows, cols });
    }
    if h_curr.is_boundary(i, j) {
        return Err(Error::BoundaryCell { row: i, col: j });
    }
    if p.alpha == 0.0 {
        return Err(Error::InvalidParameter("f4 target needs alpha > 0".into()));
    }
    let h2 = h_curr.get(i, j);
    Ok((h2 - h_prev.get(i, j) + p.source.at(i, j)) / p.alpha + 4.0 * h2)
}

/// What the new surface is coupled to.
#[derive(Debug, Clone, Copy)]
pub enum Coupling<'a> {
    /// Implicit step from the earlier surface.
    Transient(&'a HeadField),
    /// No time derivative: `alpha * laplacian(h) = G`.
    Steady,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateOptions {
    /// Stop once the largest free-cell residual is below this.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Cap on any cell's change in one sweep.
    pub clamp: Option<f64>,
}

impl Default for IterateOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iter: 10_000, clamp: None }
    }
}

impl IterateOptions {
    /// Clamp of three quantization levels per sweep.
    pub fn with_level_clamp(mut self, q: &Quantizer) -> Self {
        self.clamp = Some(3.0 * q.ratio());
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParameter(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        if let Some(c) = self.clamp {
            if c.is_nan() || c <= 0.0 {
                return Err(Error::InvalidParameter(format!("clamp must be > 0, got {c}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub field: HeadField,
    pub iterations: usize,
    /// Largest absolute residual over free cells of `field`.
    pub residual: f64,
}

impl FlowSolution {
    pub fn converged(&self, tolerance: f64) -> bool {
        self.residual < tolerance
    }
}

/// Solves for the later surface by Jacobi sweeps starting from `h_init`.
///
/// Every free cell takes the value that zeroes its own residual with its
/// neighbours held at the previous iterate:
/// `(h1 - G + alpha * sum) / (1 + 4 * alpha)` for a transient step and
/// `(sum - G / alpha) / 4` for the steady problem. Cells in `fixed` are never
/// written. With `alpha == 0` a transient step has the closed form `h1 - G`.
pub fn flow_iterate(
    coupling: Coupling<'_>,
    h_init: &HeadField,
    p: &FlowParams,
    fixed: &CellMask,
    opts: &IterateOptions,
) -> Result<FlowSolution> {
    opts.validate()?;
    let dims = h_init.dims();
    if let Coupling::Transient(h_prev) = coupling {
        h_prev.check_same_dims(h_init)?;
    }
    p.source.check(dims)?;
    if fixed.dims() != dims {
        return Err(Error::DimensionMismatch { expected: dims, actual: fixed.dims() });
    }
    if !fixed.covers_boundary() {
        return Err(Error::InvalidParameter("fixed mask must cover the grid boundary".into()));
    }
    if fixed.count() == dims.0 * dims.1 {
        return Ok(FlowSolution { field: h_init.clone(), iterations: 0, residual: 0.0 });
    }

    let alpha = p.alpha;
    if alpha == 0.0 {
        return match coupling {
            Coupling::Transient(h_prev) => {
                let mut field = h_init.clone();
                for i in 0..dims.0 {
                    for j in 0..dims.1 {
                        if !fixed.get(i, j) {
                            field.set(i, j, h_prev.get(i, j) - p.source.at(i, j));
                        }
                    }
                }
                Ok(FlowSolution { field, iterations: 0, residual: 0.0 })
            }
            Coupling::Steady => Err(Error::InvalidParameter("steady problem needs alpha > 0".into())),
        };
    }

    let cols = dims.1;
    let mask = fixed.as_slice();
    let mut current = h_init.clone();
    let mut next = h_init.clone();
    let mut iterations = 0;
    loop {
        // one pass: residual of `current` and the Jacobi update into `next`
        let residual = next
            .values_mut()
            .par_chunks_mut(cols)
            .enumerate()
            .map(|(i, row)| {
                let mut worst = 0.0f64;
                for (j, out) in row.iter_mut().enumerate() {
                    if mask[i * cols + j] {
                        continue;
                    }
                    let h = current.get(i, j);
                    let sum = neighbour_sum(&current, i, j);
                    let g = p.source.at(i, j);
                    let (r, target) = match coupling {
                        Coupling::Transient(h_prev) => {
                            let h1 = h_prev.get(i, j);
                            ((h - h1) - alpha * (sum - 4.0 * h) + g, (h1 - g + alpha * sum) / (1.0 + 4.0 * alpha))
                        }
                        Coupling::Steady => (-alpha * (sum - 4.0 * h) + g, (sum - g / alpha) / 4.0),
                    };
                    worst = worst.max(r.abs());
                    let step = match opts.clamp {
                        Some(c) => (target - h).clamp(-c, c),
                        None => target - h,
                    };
                    *out = h + step;
                }
                worst
            })
            .reduce(|| 0.0, f64::max);
        if !residual.is_finite() {
            return Err(Error::InvalidParameter("flow iteration produced non-finite values".into()));
        }
        if residual < opts.tolerance || iterations == opts.max_iter {
            return Ok(FlowSolution { field: current, iterations, residual });
        }
        std::mem::swap(&mut current, &mut next);
        iterations += 1;
    }
}

/// One reconstructed time.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceStep {
    pub time_index: u32,
    pub fit: SmoothReport,
    /// Absent for the first snapshot.
    pub flow: Option<FlowSolution>,
}

impl SequenceStep {
    pub fn field(&self) -> &HeadField {
        self.flow.as_ref().map_or(&self.fit.field, |f| &f.field)
    }
}

/// Boundary cells plus the cells of `samples`.
pub fn fixed_cells(rows: usize, cols: usize, samples: &[GuidingPoint]) -> Result<CellMask> {
    let mut mask = CellMask::boundary(rows, cols);
    for (i, j) in located_cells(samples, rows, cols)? {
        mask.set(i, j, true);
    }
    Ok(mask)
}

/// Reconstructs a time series of snapshots. The first is a plain
/// [`smooth_fit`]; each later one starts from its own fit and is then
/// coupled to the previous result by [`flow_iterate`], holding the boundary
/// and its sample cells.
pub fn simulate_sequence(
    snapshots: &[(u32, Vec<GuidingPoint>)],
    domain: &GridDomain,
    p: &FlowParams,
    q: &Quantizer,
    cfg: &SmoothConfig,
    opts: &IterateOptions,
) -> Result<Vec<SequenceStep>> {
    for w in snapshots.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::UnsortedTimes { previous: w[0].0, next: w[1].0 });
        }
    }
    let mut steps: Vec<SequenceStep> = Vec::with_capacity(snapshots.len());
    for (time_index, samples) in snapshots {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        let fit = smooth_fit(domain, samples, q, cfg)?;
        let flow = match steps.last() {
            None => None,
            Some(prev) => {
                let fixed = fixed_cells(domain.rows(), domain.cols(), samples)?;
                Some(flow_iterate(Coupling::Transient(prev.field()), &fit.field, p, &fixed, opts)?)
            }
        };
        steps.push(SequenceStep { time_index: *time_index, fit, flow });
    }
    Ok(steps)
}
