//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 size-guard
//! violation. JSON reports carry a `schema_version` field.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::alloc_probe;
use crate::cost::CostModel;
use crate::diagnostics::{self, relaxation_fit, verify_monotone, ScalingScenario};
use crate::error::Error;
use crate::ingest::{self, Family, ImageMode, SyntheticSpec};
use crate::oracle::{self, SinkhornParams};
use crate::pairwise::{distance_matrix, PairwiseMode};
use crate::problem::{InitMode, MarginalSamples, Problem, SolverConfig};
use crate::solver::{self, Method, RunReport};

pub const SCHEMA_VERSION: u32 = 1;
pub const TRACE_HEADER: [&str; 5] = [
    "sweep",
    "mean_cost",
    "accepted",
    "cumulative_candidates",
    "wall_ms",
];
/// Allowed peak additional heap per sample point during a solve.
pub const MEMORY_BOUND_BYTES_PER_POINT: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Data(Error::UnknownFamily(_)) => 2,
            CliError::Data(Error::TooLarge { .. }) => 4,
            CliError::Data(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(Error::InvalidArgument(e.to_string()))
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "mmot", version, about = "Multi-marginal optimal transport by random pairwise swaps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic samples to CSV.
    Gen(GenArgs),
    /// Solve a K-marginal problem given as CSV files.
    Solve(SolveArgs),
    /// Compare solvers and oracles on a two-marginal problem.
    Compare(CompareArgs),
    /// Distance matrix between all PGM images in a directory.
    Pairwise(PairwiseArgs),
    /// Sweep-time scaling and peak-memory measurements.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long = "np")]
    pub num_points: usize,
    #[arg(long = "n", default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InitArg {
    Identity,
    RandomShuffle,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Relative cost decrease over the window at which a run stops.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 50)]
    pub window: usize,
    #[arg(long, default_value_t = 10_000)]
    pub max_sweeps: usize,
    #[arg(long, default_value_t = 100)]
    pub recompute_interval: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = InitArg::Identity)]
    pub init: InitArg,
    /// Worker threads for delta evaluation (0 = all available).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            tolerance: self.tolerance,
            window: self.window,
            max_sweeps: self.max_sweeps,
            recompute_interval: self.recompute_interval,
            seed: self.seed,
            init: match self.init {
                InitArg::Identity => InitMode::Identity,
                InitArg::RandomShuffle => InitMode::RandomShuffle,
            },
            threads: self.threads,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CostArgs {
    /// Exponent of the pairwise L^p cost.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Weight of each marginal pair (0.5 gives the Gangbo-Swiech cost).
    #[arg(long, default_value_t = 1.0)]
    pub weight: f64,
}

impl CostArgs {
    fn model(&self) -> CliResult<CostModel> {
        Ok(CostModel::pairwise_lp(self.p, self.weight)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Collision,
    Isa,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Collision => Method::Collision,
            MethodArg::Isa => Method::Isa,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Two or more CSV sample files, one per marginal.
    #[arg(required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = MethodArg::Collision)]
    pub method: MethodArg,
    #[command(flatten)]
    pub cost: CostArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Paired samples: one row per joint tuple, K*n columns.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CompareMethod {
    Collision,
    Isa,
    Hungarian,
    Sinkhorn,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(num_args = 2, required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [CompareMethod::Collision, CompareMethod::Hungarian])]
    pub methods: Vec<CompareMethod>,
    #[command(flatten)]
    pub cost: CostArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Sinkhorn regularization strength.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 100_000)]
    pub sinkhorn_max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub sinkhorn_threshold: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PairwiseModeArg {
    Mmot,
    Pairwise2,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ImageModeArg {
    Grid,
    IntensitySampled,
}

#[derive(Debug, Args)]
pub struct PairwiseArgs {
    /// Directory of .pgm images.
    #[arg(long)]
    pub dir: PathBuf,
    /// Samples per image (grid mode uses width*height).
    #[arg(long = "np")]
    pub num_points: Option<usize>,
    #[arg(long, value_enum, default_value_t = PairwiseModeArg::Mmot)]
    pub mode: PairwiseModeArg,
    #[arg(long, value_enum, default_value_t = ImageModeArg::IntensitySampled)]
    pub image_mode: ImageModeArg,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// K x K distance matrix CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Nearest-neighbor lists as JSON.
    #[arg(long)]
    pub neighbors: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Collision)]
    pub method: MethodArg,
    /// Ascending sample counts for the sweep-time scaling measurement.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub sweeps: usize,
    #[arg(long, value_delimiter = ',', default_values_t = ["swiss_roll".to_string(), "normal".to_string()])]
    pub families: Vec<String>,
    #[arg(long = "n", default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sample count for the peak-allocation probe.
    #[arg(long = "memory-np")]
    pub memory_np: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub memory_sweeps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> CliResult<()> {
    match command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a).map(|_| ()),
        Command::Compare(a) => emit(cmd_compare(a)?, a.out.as_deref()),
        Command::Pairwise(a) => cmd_pairwise(a).map(|_| ()),
        Command::Bench(a) => emit(cmd_bench(a)?, a.out.as_deref()),
    }
}

fn emit(value: Value, out: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(&value)?;
    match out {
        Some(path) => fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

pub fn cmd_gen(args: &GenArgs) -> CliResult<()> {
    let family: Family = args.family.parse()?;
    let spec = SyntheticSpec {
        family,
        num_points: args.num_points,
        dim: family.fixed_dim().unwrap_or(args.dim),
        seed: args.seed,
    };
    ingest::save_csv(&args.out, &ingest::sample_synthetic(&spec)?)?;
    Ok(())
}

fn load_inputs(paths: &[PathBuf]) -> CliResult<Vec<MarginalSamples>> {
    paths.iter().map(|p| Ok(ingest::load_csv(p)?)).collect()
}

/// Machine-readable summary of one solver run.
pub fn run_report_json(problem: &Problem, report: &RunReport) -> Value {
    let fit = relaxation_fit(&report.mean_costs()).ok();
    json!({
        "schema_version": SCHEMA_VERSION,
        "method": report.method.name(),
        "seed": report.seed,
        "np": problem.num_points(),
        "k": problem.num_marginals(),
        "n": problem.common_dim(),
        "p": problem.cost().exponent(),
        "mean_cost": report.final_mean_cost,
        "converged": report.converged,
        "sweeps": report.sweeps_run,
        "wall_ms": report.wall_ms,
        "alpha_hat": fit.map(|f| f.alpha_hat),
        "r_squared": fit.map(|f| f.r_squared),
    })
}

pub fn write_trace(path: &Path, report: &RunReport) -> CliResult<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(Error::from)?;
    wtr.write_record(TRACE_HEADER).map_err(Error::from)?;
    for e in &report.trace {
        wtr.write_record([
            e.sweep.to_string(),
            e.mean_cost.to_string(),
            e.accepted.to_string(),
            e.cumulative_candidates.to_string(),
            e.wall_ms.to_string(),
        ])
        .map_err(Error::from)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn cmd_solve(args: &SolveArgs) -> CliResult<Value> {
    if args.inputs.len() < 2 {
        return Err(CliError::Usage("solve needs at least two input files".into()));
    }
    let problem = Problem::new(load_inputs(&args.inputs)?, args.cost.model()?)?;
    let (state, report) = solver::solve(&problem, &args.solver.config(), args.method.into())?;
    debug_assert!(verify_monotone(&report.mean_costs()));
    let value = run_report_json(&problem, &report);
    match &args.report {
        Some(path) => fs::write(path, serde_json::to_string_pretty(&value)? + "\n")?,
        None => println!("{}", serde_json::to_string_pretty(&value)?),
    }
    if let Some(path) = &args.trace {
        write_trace(path, &report)?;
    }
    if let Some(path) = &args.pairs {
        let rows: Vec<Vec<f64>> = (0..problem.num_points())
            .map(|r| {
                problem
                    .marginals()
                    .iter()
                    .zip(state.perms())
                    .flat_map(|(m, perm)| m.point(perm[r]).iter().copied())
                    .collect()
            })
            .collect();
        ingest::write_rows(path, rows.iter().map(Vec::as_slice))?;
    }
    Ok(value)
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodResult {
    pub method: CompareMethod,
    pub mean_cost: f64,
    /// Against the exact reference; absolute error when the reference is 0.
    pub relative_error: Option<f64>,
    pub wall_ms: f64,
    pub converged: bool,
    pub iterations: Option<usize>,
}

/// Relative error `(value - reference) / reference`, falling back to the
/// absolute error for a zero reference.
pub fn relative_error(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        (value - reference).abs()
    } else {
        (value - reference) / reference.abs()
    }
}

pub fn compare_methods(
    x1: &MarginalSamples,
    x2: &MarginalSamples,
    cost: &CostModel,
    methods: &[CompareMethod],
    config: &SolverConfig,
    sinkhorn: &SinkhornParams,
) -> crate::error::Result<Vec<MethodResult>> {
    let mut results = Vec::with_capacity(methods.len());
    for &method in methods {
        let start = Instant::now();
        let (mean_cost, converged, iterations) = match method {
            CompareMethod::Collision | CompareMethod::Isa => {
                let problem = Problem::new(vec![x1.clone(), x2.clone()], cost.clone())?;
                let m = if method == CompareMethod::Isa {
                    Method::Isa
                } else {
                    Method::Collision
                };
                let (_, r) = solver::solve(&problem, config, m)?;
                (r.final_mean_cost, r.converged, Some(r.sweeps_run))
            }
            CompareMethod::Hungarian => {
                let r = oracle::exact_assignment_2m(x1, x2, cost)?;
                (r.mean_cost, true, None)
            }
            CompareMethod::Sinkhorn => {
                let r = oracle::sinkhorn_2m(x1, x2, cost, sinkhorn)?;
                (r.reg_cost, r.converged, Some(r.iterations))
            }
        };
        results.push(MethodResult {
            method,
            mean_cost,
            relative_error: None,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            converged,
            iterations,
        });
    }
    if let Some(reference) = results
        .iter()
        .find(|r| r.method == CompareMethod::Hungarian)
        .map(|r| r.mean_cost)
    {
        for r in &mut results {
            r.relative_error = Some(relative_error(r.mean_cost, reference));
        }
    }
    Ok(results)
}

pub fn cmd_compare(args: &CompareArgs) -> CliResult<Value> {
    let inputs = load_inputs(&args.inputs)?;
    let (x1, x2) = (&inputs[0], &inputs[1]);
    let cost = args.cost.model()?;
    Problem::new(inputs.clone(), cost.clone())?;
    let sinkhorn = SinkhornParams {
        lambda: args.lambda,
        max_iter: args.sinkhorn_max_iter,
        threshold: args.sinkhorn_threshold,
    };
    let results = compare_methods(x1, x2, &cost, &args.methods, &args.solver.config(), &sinkhorn)?;
    let has_ref = results.iter().any(|r| r.method == CompareMethod::Hungarian);
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "np": x1.num_points(),
        "n": x1.dim(),
        "p": args.cost.p,
        "seed": args.solver.seed,
        "reference": has_ref.then_some("hungarian"),
        "results": results,
    }))
}

/// PGM files in `dir`, sorted by file name.
pub fn list_pgm(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn cmd_pairwise(args: &PairwiseArgs) -> CliResult<Value> {
    let files = list_pgm(&args.dir)?;
    if files.len() < 2 {
        return Err(CliError::Data(Error::TooFewMarginals {
            required: 2,
            found: files.len(),
        }));
    }
    let image_mode = match args.image_mode {
        ImageModeArg::Grid => ImageMode::Grid,
        ImageModeArg::IntensitySampled => ImageMode::IntensitySampled,
    };
    let mut marginals = Vec::with_capacity(files.len());
    for (i, path) in files.iter().enumerate() {
        let img = ingest::load_pgm(path)?;
        let np = match (image_mode, args.num_points) {
            (_, Some(np)) => np,
            (ImageMode::Grid, None) => img.width() * img.height(),
            (ImageMode::IntensitySampled, None) => {
                return Err(CliError::Usage("--np is required for intensity-sampled mode".into()))
            }
        };
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        marginals.push(ingest::image_to_samples(
            &img,
            np,
            image_mode,
            args.solver.seed.wrapping_add(i as u64),
            name,
        )?);
    }
    let mode = match args.mode {
        PairwiseModeArg::Mmot => PairwiseMode::Mmot,
        PairwiseModeArg::Pairwise2 => PairwiseMode::Pairwise2,
    };
    let result = distance_matrix(marginals, mode, args.p, &args.solver.config())?;
    ingest::write_rows(&args.out, result.matrix.iter().map(Vec::as_slice))?;
    let value = json!({
        "schema_version": SCHEMA_VERSION,
        "mode": result.mode,
        "from_mmot": result.from_mmot,
        "p": args.p,
        "seed": args.solver.seed,
        "images": result.names,
        "sweeps": result.sweeps,
        "ms_per_sweep": result.ms_per_sweep,
        "wall_ms": result.wall_ms,
        "nearest": result.nearest_neighbors(),
    });
    if let Some(path) = &args.neighbors {
        fs::write(path, serde_json::to_string_pretty(&value)? + "\n")?;
    }
    Ok(value)
}

pub fn cmd_bench(args: &BenchArgs) -> CliResult<Value> {
    if args.sizes.is_empty() && args.memory_np.is_none() {
        return Err(CliError::Usage(
            "nothing to measure: give --sizes and/or --memory-np".into(),
        ));
    }
    let families = args
        .families
        .iter()
        .map(|f| f.parse())
        .collect::<crate::error::Result<Vec<Family>>>()?;
    let scenario = ScalingScenario {
        families,
        dim: args.dim,
        seed: args.seed,
        method: args.method.into(),
        cost: CostModel::squared_euclidean(),
        repeats: args.repeats,
    };
    let scaling = if args.sizes.is_empty() {
        Vec::new()
    } else {
        diagnostics::measure_sweep_scaling(&scenario, &args.sizes, args.sweeps)?
    };
    let ratios: Vec<f64> = scaling
        .windows(2)
        .map(|w| w[1].ms_per_sweep / w[0].ms_per_sweep)
        .collect();
    let memory = match args.memory_np {
        Some(np) => Some(memory_probe(&scenario, np, args.memory_sweeps)?),
        None => None,
    };
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "method": Method::from(args.method).name(),
        "families": args.families,
        "seed": args.seed,
        "sweeps": args.sweeps,
        "repeats": args.repeats,
        "scaling": scaling,
        "ratios": ratios,
        "memory": memory,
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct MemoryProbe {
    pub np: usize,
    pub sweeps: usize,
    pub input_bytes: usize,
    /// `None` when the counting allocator is not installed.
    pub peak_additional_bytes: Option<usize>,
    pub bound_bytes: usize,
    pub within_bound: Option<bool>,
}

/// Peak heap allocated by a collision solve beyond its (already loaded)
/// inputs.
pub fn memory_probe(
    scenario: &ScalingScenario,
    np: usize,
    sweeps: usize,
) -> crate::error::Result<MemoryProbe> {
    let problem = scenario.build(np)?;
    let input_bytes = problem
        .marginals()
        .iter()
        .map(|m| std::mem::size_of_val(m.data()))
        .sum();
    let config = SolverConfig {
        tolerance: 0.0,
        window: sweeps + 1,
        max_sweeps: sweeps,
        seed: scenario.seed,
        threads: 1,
        ..Default::default()
    };
    let (result, peak) = alloc_probe::measure_peak(|| solver::collision_solve(&problem, &config));
    result?;
    let bound_bytes = MEMORY_BOUND_BYTES_PER_POINT * np;
    Ok(MemoryProbe {
        np,
        sweeps,
        input_bytes,
        peak_additional_bytes: peak,
        bound_bytes,
        within_bound: peak.map(|p| p <= bound_bytes),
    })
}
