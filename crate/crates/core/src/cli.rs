//! Command-line driver.
//!
//! Exit codes: 0 success, 1 input or configuration error, 2 non-convergence
//! (output still written), 3 infeasible samples (`check` only). Reports go to
//! stdout, progress and diagnostics to stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::domain::GridDomain;
use crate::error::{Error, Result};
use crate::export::{export_field, read_csv, ExportFormat};
use crate::field::HeadField;
use crate::flow::{simulate_sequence, Aquifer, FlowParams, IterateOptions, Source};
use crate::gvf::{algorithm_a_fit, feasibility_check, Feasibility, LevelSample, Quantizer, ALGORITHM_A_DEFAULT_PASSES};
use crate::ingest::{
    bounding_box, determine_resolution, find_coincident_conflict, group_by_time, locate, parse_well_log, GeoGrid,
    GuidingPoint,
};
use crate::smoothing::{smooth_fit, SmoothConfig, DEFAULT_DAMPING, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};

/// Levels used when neither `--ratio` nor `--levels` is given.
pub const DEFAULT_LEVELS: u32 = 16;
pub const DEFAULT_TARGET_CELLS: usize = 10_000;

const EXIT_INPUT: u8 = 1;
const EXIT_NONCONVERGED: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "gvflow", version, about = "Groundwater head surfaces from scattered wells")]
pub struct Cli {
    /// Worker threads for grid sweeps (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test whether the quantized wells admit a gradually varied surface.
    Check(CheckArgs),
    /// Reconstruct one surface.
    Fit(FitArgs),
    /// Reconstruct a time series coupled by the flow equation.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Well log: `value lat lon [time]` per line.
    pub input: PathBuf,

    /// Quantization step in value units (origin at the smallest value).
    #[arg(long, conflicts_with = "levels")]
    pub ratio: Option<f64>,

    /// Number of quantization levels spanning the value range.
    #[arg(long)]
    pub levels: Option<u32>,

    /// Upper bound on rows * cols.
    #[arg(long, default_value_t = DEFAULT_TARGET_CELLS)]
    pub cells: usize,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    /// Gradually varied extension plus Taylor smoothing.
    Smooth,
    /// Sample-contribution correction only.
    A,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Pgm,
    Asciigrid,
    Csv,
}

impl From<Format> for ExportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Pgm => ExportFormat::Pgm,
            Format::Asciigrid => ExportFormat::AsciiGrid,
            Format::Csv => ExportFormat::Csv,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitOptions {
    #[command(flatten)]
    pub grid: GridArgs,

    #[arg(long, default_value_t = DEFAULT_DAMPING)]
    pub damping: f64,

    /// Smoothing stops when no cell changes by this much in one iteration.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,

    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    pub max_iter: usize,

    /// Include second-order Taylor terms.
    #[arg(long)]
    pub second_order: bool,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Bright pixels for low values (PGM only).
    #[arg(long)]
    pub invert: bool,
}

impl FitOptions {
    fn smooth_config(&self) -> SmoothConfig {
        SmoothConfig {
            damping: self.damping,
            max_iterations: self.max_iter,
            tolerance: self.tol,
            second_order: self.second_order,
            ..SmoothConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub fit: FitOptions,

    #[arg(long, value_enum, default_value_t = Algorithm::Smooth)]
    pub algorithm: Algorithm,

    /// Sweeps for `--algorithm a`.
    #[arg(long, default_value_t = ALGORITHM_A_DEFAULT_PASSES)]
    pub passes: usize,

    /// Output file.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("diffusion").required(true).args(["alpha", "k"]))]
pub struct SimulateArgs {
    #[command(flatten)]
    pub fit: FitOptions,

    /// Diffusion number per step.
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Hydraulic conductivity (with --b, --S, --cell).
    #[arg(long = "K", id = "k", requires_all = ["b", "s", "cell"])]
    pub k: Option<f64>,

    /// Aquifer thickness.
    #[arg(long = "b", id = "b", requires = "k")]
    pub b: Option<f64>,

    /// Storage coefficient.
    #[arg(long = "S", id = "s", requires = "k")]
    pub s: Option<f64>,

    /// Cell size in the length unit of K and b.
    #[arg(long, requires = "k")]
    pub cell: Option<f64>,

    /// Time step in days.
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,

    /// Source term per step: a number, or a CSV field file. Positive drains.
    #[arg(long = "G", default_value = "0")]
    pub g: String,

    /// Limit each cell's change per flow sweep to three quantization levels.
    #[arg(long)]
    pub clamp3: bool,

    /// Flow iteration stops when every free-cell residual is below this.
    #[arg(long, default_value_t = 1e-6)]
    pub flow_tol: f64,

    #[arg(long, default_value_t = 10_000)]
    pub flow_max_iter: usize,

    /// Output prefix; files are `<prefix>_t<time>.<ext>`.
    #[arg(short, long)]
    pub output: PathBuf,
}

/// Parsed, gridded and located input.
struct Prepared {
    grid: GeoGrid,
    domain: GridDomain,
    points: Vec<GuidingPoint>,
    quantizer: Quantizer,
}

fn read_points(path: &Path) -> Result<Vec<GuidingPoint>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let points = parse_well_log(&text)?;
    if points.is_empty() {
        return Err(Error::InvalidParameter("no points".into()));
    }
    if let Some((a, b)) = find_coincident_conflict(&points) {
        return Err(Error::InvalidParameter(format!(
            "records {} and {} are the same well and time with different values ({} vs {})",
            a + 1,
            b + 1,
            points[a].value,
            points[b].value
        )));
    }
    Ok(points)
}

fn quantizer_for(args: &GridArgs, points: &[GuidingPoint]) -> Result<Quantizer> {
    let values: Vec<f64> = points.iter().map(|p| p.value).collect();
    match (args.ratio, args.levels) {
        (Some(r), _) => Quantizer::new(r, values.iter().copied().fold(f64::INFINITY, f64::min)),
        (None, Some(l)) => Quantizer::spanning(&values, l),
        (None, None) => Quantizer::spanning(&values, DEFAULT_LEVELS),
    }
}

/// Grids the wells; with `keep_times` false every record joins one snapshot.
fn prepare(args: &GridArgs, keep_times: bool) -> Result<Prepared> {
    let mut points = read_points(&args.input)?;
    if !keep_times {
        points.iter_mut().for_each(|p| p.time_index = None);
    }
    let bbox = bounding_box(&points)?;
    let grid = determine_resolution(&bbox, args.cells)?;
    let domain = GridDomain::new(grid.rows, grid.cols)?;
    let points = locate(&points, &grid)?;
    let quantizer = quantizer_for(args, &points)?;
    eprintln!(
        "grid {}x{} cell {} deg, {} located points, ratio {} origin {}",
        grid.rows,
        grid.cols,
        grid.lat_det,
        points.len(),
        quantizer.ratio(),
        quantizer.origin()
    );
    Ok(Prepared { grid, domain, points, quantizer })
}

fn cmd_check(args: &CheckArgs) -> Result<u8> {
    let prep = prepare(&args.grid, false)?;
    let q = prep.quantizer;
    let samples: Vec<LevelSample> = prep
        .points
        .iter()
        .map(|p| {
            let (i, j) = p.cell.expect("located");
            LevelSample::new(prep.domain.vertex(i, j), q.level(p.value))
        })
        .collect();
    let quantizer = format!("ratio {} origin {}", q.ratio(), q.origin());
    match feasibility_check(&prep.domain, &samples)? {
        Feasibility::Feasible => {
            println!("FEASIBLE ({quantizer})");
            Ok(0)
        }
        Feasibility::Infeasible { a, b, distance } => {
            let (ca, cb) = (prep.domain.cell(a.vertex), prep.domain.cell(b.vertex));
            println!(
                "INFEASIBLE ({quantizer}): cell {:?} level {} and cell {:?} level {} are {} apart",
                ca, a.level, cb, b.level, distance
            );
            Ok(EXIT_INFEASIBLE)
        }
    }
}

fn cmd_fit(args: &FitArgs) -> Result<u8> {
    let opts = &args.fit;
    let prep = prepare(&opts.grid, false)?;
    let (field, converged) = match args.algorithm {
        Algorithm::Smooth => {
            let report = smooth_fit(&prep.domain, &prep.points, &prep.quantizer, &opts.smooth_config())?;
            eprintln!(
                "{:?} extension, {} iterations, final change {:e}",
                report.stage,
                report.iterations,
                report.final_change()
            );
            (report.field, report.converged)
        }
        Algorithm::A => {
            let mean = prep.points.iter().map(|p| p.value).sum::<f64>() / prep.points.len() as f64;
            let start = HeadField::filled(prep.grid.rows, prep.grid.cols, mean)?;
            let fit = algorithm_a_fit(&start, &prep.points, prep.quantizer.ratio(), args.passes)?;
            eprintln!("{} passes, final change {:e}", fit.passes, fit.last_change);
            let converged = fit.converged();
            (fit.field, converged)
        }
    };
    let field = field.with_georef(Some(prep.grid));
    export_field(&field, opts.format.into(), opts.invert, &args.output)?;
    if converged {
        Ok(0)
    } else {
        eprintln!("warning: not converged; output written to {}", args.output.display());
        Ok(EXIT_NONCONVERGED)
    }
}

fn source_from(arg: &str, dims: (usize, usize)) -> Result<Source> {
    if let Ok(g) = arg.parse::<f64>() {
        return Ok(Source::Uniform(g));
    }
    let text = std::fs::read_to_string(arg).map_err(|e| Error::Io(format!("{arg}: {e}")))?;
    let field = read_csv(&text)?;
    if field.dims() != dims {
        return Err(Error::DimensionMismatch { expected: dims, actual: field.dims() });
    }
    Ok(Source::Field(field))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<u8> {
    let opts = &args.fit;
    let prep = prepare(&opts.grid, true)?;
    if prep.points.iter().any(|p| p.time_index.is_none()) {
        return Err(Error::InvalidParameter("simulate needs a time column on every record".into()));
    }
    let snapshots = group_by_time(&prep.points)?;
    let source = source_from(&args.g, (prep.grid.rows, prep.grid.cols))?;
    let params = match (args.alpha, args.k, args.b, args.s, args.cell) {
        (Some(alpha), ..) => FlowParams::new(alpha, source, args.dt)?,
        (None, Some(k), Some(b), Some(s), Some(cell)) => {
            FlowParams::from_aquifer(Aquifer { conductivity: k, thickness: b, storage: s }, args.dt, cell, source)?
        }
        _ => return Err(Error::InvalidParameter("give --alpha or all of --K --b --S --cell".into())),
    };
    eprintln!("alpha {}", params.alpha);
    let mut iterate = IterateOptions { tolerance: args.flow_tol, max_iter: args.flow_max_iter, clamp: None };
    if args.clamp3 {
        iterate = iterate.with_level_clamp(&prep.quantizer);
    }
    let steps = simulate_sequence(&snapshots, &prep.domain, &params, &prep.quantizer, &opts.smooth_config(), &iterate)?;

    let format: ExportFormat = opts.format.into();
    let mut all_converged = true;
    for step in &steps {
        let path = PathBuf::from(format!("{}_t{}.{}", args.output.display(), step.time_index, format.extension()));
        let field = step.field().clone().with_georef(Some(prep.grid));
        export_field(&field, format, opts.invert, &path)?;
        let mut converged = step.fit.converged;
        match &step.flow {
            Some(flow) => {
                converged &= flow.converged(args.flow_tol);
                eprintln!(
                    "t={}: fit {} iterations, flow {} sweeps, residual {:e}",
                    step.time_index, step.fit.iterations, flow.iterations, flow.residual
                );
            }
            None => eprintln!(
                "t={}: fit {} iterations, final change {:e}",
                step.time_index,
                step.fit.iterations,
                step.fit.final_change()
            ),
        }
        if !converged {
            eprintln!("warning: t={} did not converge", step.time_index);
        }
        all_converged &= converged;
    }
    Ok(if all_converged { 0 } else { EXIT_NONCONVERGED })
}

pub fn run(cli: &Cli) -> ExitCode {
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be positive");
            return ExitCode::from(EXIT_INPUT);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    let outcome = match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
