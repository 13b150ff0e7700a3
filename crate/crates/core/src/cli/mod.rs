//! The `rom-boundary` command line front end.
//!
//! Every command that writes an artifact also writes
//! `<output>.manifest.json` recording the command, its configuration, the
//! SHA-256 of each input and the library version.
//!
//! Exit codes: 0 success, 1 input or schema error, 2 no feasible
//! hyperparameters, 3 solver non-convergence.

mod manifest;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dataset::{
    assemble, load_angles, load_frames, load_manifest, save_angles, subsample, write_extracted_angles, Provenance,
    RomDataset, SubsampleMethod, DEFAULT_SUBSAMPLE_TARGET,
};
use crate::error::{Error, Result};
use crate::kinematics::{extract_sequence, KinematicChain, Side};
use crate::metrics::{
    impairment_index, pair_area, weighted_volume, write_isolines, ImpairmentResult, MetricsReport, PairArea,
    WeightMatrix, DEFAULT_PADDING, REPORT_VERSION,
};
use crate::ocsvm::{train_detailed, OcsvmModel, TrainConfig};
use crate::tuning::{grid_search, AxisRange, GridConfig, InteriorLimit, MEsvConfig, DEFAULT_NEGATIVE_OFFSET};

pub use manifest::{InputHash, RunManifest, RUN_MANIFEST_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rom-boundary", version, about = "Learn and measure arm range-of-motion boundaries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Convert a skeleton frame CSV into a joint-angle CSV.
    Extract(ExtractArgs),
    /// Combine clinical and exploration angle files into one dataset.
    Assemble(AssembleArgs),
    /// Constrained grid search over (nu, sigma).
    Tune(TuneArgs),
    /// Train a model with fixed hyperparameters.
    Train(TrainArgs),
    /// Evaluate a model on query configurations.
    Eval(EvalArgs),
    /// Pair areas, weighted volume and the Impairment Index.
    Metrics(MetricsArgs),
    /// Export the lattice of boundary values of a 2-D model.
    Isolines(IsolineArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ExtractArgs {
    /// Frame CSV.
    #[arg(long)]
    pub frames: PathBuf,
    /// Kinematic chain JSON; defaults to the standard bone names.
    #[arg(long)]
    pub chain: Option<PathBuf>,
    #[arg(long, default_value = "right")]
    pub side: Side,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AssembleArgs {
    #[arg(long, required_unless_present = "manifest")]
    pub clinical: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    pub exploration: Option<PathBuf>,
    /// Dataset manifest JSON instead of the two files.
    #[arg(long, conflicts_with_all = ["clinical", "exploration"])]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub subsample: SubsampleArgs,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SubsampleArgs {
    /// Reduce to this many samples; 0 keeps everything.
    #[arg(long, default_value_t = DEFAULT_SUBSAMPLE_TARGET)]
    pub subsample: usize,
    /// `farthest-point` or `stride`.
    #[arg(long, default_value = "farthest-point")]
    pub subsample_method: String,
}

impl SubsampleArgs {
    fn apply(&self, data: RomDataset) -> Result<RomDataset> {
        if self.subsample == 0 {
            return Ok(data);
        }
        let method: SubsampleMethod = self.subsample_method.parse()?;
        subsample(&data, self.subsample, method)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TuneArgs {
    /// Training angle CSV.
    #[arg(long)]
    pub train: PathBuf,
    /// Held-out angle CSV that must lie inside the boundary.
    #[arg(long)]
    pub test: PathBuf,
    /// Comma-separated 0-based angle columns to use.
    #[arg(long, value_delimiter = ',')]
    pub dofs: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1e-3)]
    pub nu_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub nu_max: f64,
    #[arg(long, default_value_t = 7)]
    pub nu_points: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub sigma_min: f64,
    #[arg(long, default_value_t = 1e3)]
    pub sigma_max: f64,
    #[arg(long, default_value_t = 13)]
    pub sigma_points: usize,
    /// Refinement rounds after the initial grid.
    #[arg(long, default_value_t = 4)]
    pub rounds: usize,
    /// Lattice disagreement below which refinement stops.
    #[arg(long, default_value_t = 0.005)]
    pub change_threshold: f64,
    #[arg(long, default_value_t = 33)]
    pub max_axis_points: usize,
    /// M-ESV ball radius in degrees; defaults to a multiple of the median
    /// nearest-neighbour distance.
    #[arg(long)]
    pub mesv_radius: Option<f64>,
    /// Neighbours allowed on the wrong side of an edge hyperplane.
    #[arg(long, default_value_t = 0)]
    pub mesv_misclassified: usize,
    /// Interior SVs allowed, as a fraction of the SV count.
    #[arg(long, default_value_t = 0.1, conflicts_with = "mesv_max_interior_count")]
    pub mesv_max_interior: f64,
    /// Interior SVs allowed, as an absolute count.
    #[arg(long)]
    pub mesv_max_interior_count: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub mesv_min_neighbors: usize,
    /// Distance past the observed joint limits for negative samples.
    #[arg(long, default_value_t = DEFAULT_NEGATIVE_OFFSET)]
    pub offset: f64,
    #[command(flatten)]
    pub subsample: SubsampleArgs,
    /// Also write the pass/fail matrix of the first round as CSV.
    #[arg(long)]
    pub matrix_csv: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Training angle CSV.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub nu: f64,
    /// Kernel width in degrees.
    #[arg(long)]
    pub sigma: f64,
    /// Comma-separated 0-based angle columns to use.
    #[arg(long, value_delimiter = ',')]
    pub dofs: Option<Vec<usize>>,
    #[arg(long, default_value_t = TrainConfig::DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    #[arg(long, default_value_t = TrainConfig::DEFAULT_MAX_ITERATIONS)]
    pub max_iterations: u64,
    #[command(flatten)]
    pub subsample: SubsampleArgs,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Angle CSV of query configurations.
    #[arg(long)]
    pub query: PathBuf,
    /// Half-width of the band around zero reported as `boundary`.
    #[arg(long, default_value_t = 1e-6)]
    pub band: f64,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MetricsArgs {
    /// 2-D pair models of the healthy (reference) arm.
    #[arg(long, num_args = 1.., required_unless_present = "v_healthy")]
    pub models: Vec<PathBuf>,
    /// 2-D pair models of the impaired arm.
    #[arg(long, num_args = 1..)]
    pub impaired_models: Vec<PathBuf>,
    /// Weight matrix JSON (array of rows); unit weights on every pair by default.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    pub resolution: usize,
    #[arg(long, default_value_t = DEFAULT_PADDING)]
    pub padding: f64,
    /// Healthy volume given directly instead of models.
    #[arg(long, requires = "v_impaired", conflicts_with_all = ["models", "impaired_models", "weights"])]
    pub v_healthy: Option<f64>,
    #[arg(long, requires = "v_healthy")]
    pub v_impaired: Option<f64>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct IsolineArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 256)]
    pub resolution: usize,
    #[arg(long, default_value_t = DEFAULT_PADDING)]
    pub padding: f64,
    #[arg(long, short)]
    pub out: PathBuf,
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::NoFeasible(_) => EXIT_INFEASIBLE,
        Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    let mut manifest = RunManifest::start(command)?;
    match command {
        Command::Extract(a) => extract(a, &mut manifest)?,
        Command::Assemble(a) => assemble_cmd(a, &mut manifest)?,
        Command::Tune(a) => return tune(a, &mut manifest),
        Command::Train(a) => train_cmd(a, &mut manifest)?,
        Command::Eval(a) => eval(a, &mut manifest)?,
        Command::Metrics(a) => metrics(a, &mut manifest)?,
        Command::Isolines(a) => isolines(a, &mut manifest)?,
    }
    manifest.finish()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::from(e).in_file(path))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::from(e).in_file(path))
}

fn load_data(path: &Path, provenance: Provenance, dofs: Option<&[usize]>, m: &mut RunManifest) -> Result<RomDataset> {
    m.input(path)?;
    let data = load_angles(path, provenance)?;
    match dofs {
        Some(d) => data.select_dofs(d).map_err(|e| e.in_file(path)),
        None => Ok(data),
    }
}

fn load_model(path: &Path, m: &mut RunManifest) -> Result<OcsvmModel> {
    m.input(path)?;
    OcsvmModel::load(path)
}

fn extract(a: &ExtractArgs, m: &mut RunManifest) -> Result<()> {
    let chain = match &a.chain {
        Some(p) => {
            m.input(p)?;
            let f = File::open(p).map_err(|e| Error::from(e).in_file(p))?;
            serde_json::from_reader(f).map_err(|e| Error::from(e).in_file(p))?
        }
        None => KinematicChain::default(),
    };
    m.input(&a.frames)?;
    let frames = load_frames(&a.frames)?;
    let angles = extract_sequence(&frames, &chain, a.side).map_err(|e| e.in_file(&a.frames))?;
    write_extracted_angles(create(&a.out)?, &angles).map_err(|e| e.in_file(&a.out))?;
    m.output(&a.out);
    let locked = angles.iter().filter(|x| x.any_gimbal()).count();
    eprintln!("extracted {} frames ({locked} near gimbal lock) -> {}", angles.len(), a.out.display());
    Ok(())
}

fn assemble_cmd(a: &AssembleArgs, m: &mut RunManifest) -> Result<()> {
    let data = match (&a.manifest, &a.clinical, &a.exploration) {
        (Some(p), _, _) => {
            m.input(p)?;
            load_manifest(p)?
        }
        (None, Some(c), Some(e)) => {
            let clinical = load_data(c, Provenance::Clinical, None, m)?;
            let exploration = load_data(e, Provenance::Exploration, None, m)?;
            assemble(&clinical, &exploration)?
        }
        _ => return Err(Error::InvalidInput("give --manifest or both --clinical and --exploration".into())),
    };
    let total = data.len();
    let data = a.subsample.apply(data)?;
    save_angles(&a.out, &data)?;
    m.output(&a.out);
    eprintln!("assembled {total} samples, wrote {} -> {}", data.len(), a.out.display());
    Ok(())
}

fn tune(a: &TuneArgs, m: &mut RunManifest) -> Result<()> {
    let train = a.subsample.apply(load_data(&a.train, Provenance::Exploration, a.dofs.as_deref(), m)?)?;
    let test = load_data(&a.test, Provenance::Test, a.dofs.as_deref(), m)?;
    let grid = GridConfig {
        nu: AxisRange::new(a.nu_min, a.nu_max, a.nu_points),
        sigma: AxisRange::new(a.sigma_min, a.sigma_max, a.sigma_points),
        rounds: a.rounds,
        change_threshold: a.change_threshold,
        max_axis_points: a.max_axis_points,
        ..GridConfig::default()
    };
    let mesv = MEsvConfig {
        radius: a.mesv_radius,
        max_misclassified: a.mesv_misclassified,
        max_interior: match a.mesv_max_interior_count {
            Some(n) => InteriorLimit::Count(n),
            None => InteriorLimit::Fraction(a.mesv_max_interior),
        },
        min_neighbors: a.mesv_min_neighbors,
    };
    let report = grid_search(&train, &test, &grid, &mesv, a.offset)?;
    write_text(&a.out, &report.to_json()?)?;
    m.output(&a.out);
    if let Some(p) = &a.matrix_csv {
        report.write_matrix_csv(create(p)?, 0).map_err(|e| e.in_file(p))?;
        m.output(p);
    }
    m.finish()?;
    let selected = report.selected_or_err()?;
    eprintln!(
        "selected nu = {}, sigma = {} (area {:.1}) from {} cells -> {}",
        selected.nu,
        selected.sigma,
        selected.area,
        report.cells.len(),
        a.out.display()
    );
    Ok(())
}

fn train_cmd(a: &TrainArgs, m: &mut RunManifest) -> Result<()> {
    let data = a.subsample.apply(load_data(&a.data, Provenance::Exploration, a.dofs.as_deref(), m)?)?;
    let mut cfg = TrainConfig::new(a.nu, a.sigma);
    cfg.tolerance = a.tolerance;
    cfg.max_iterations = a.max_iterations;
    let out = train_detailed(&data, &cfg)?;
    out.model.save(&a.out)?;
    m.output(&a.out);
    eprintln!(
        "trained on {} samples: {} support vectors ({:.3}%), {} updates -> {}",
        data.len(),
        out.model.n_support(),
        100.0 * out.model.training().sv_fraction,
        out.iterations,
        a.out.display()
    );
    Ok(())
}

fn eval(a: &EvalArgs, m: &mut RunManifest) -> Result<()> {
    let model = load_model(&a.model, m)?;
    let mut query = load_data(&a.query, Provenance::Test, None, m)?;
    if query.dim() != model.dim() {
        match model.dofs() {
            Some(d) if d.iter().all(|&k| k < query.dim()) => query = query.select_dofs(d)?,
            _ => {
                return Err(Error::DimensionMismatch { expected: model.dim(), found: query.dim() }.in_file(&a.query));
            }
        }
    }
    let gammas = model.gamma_batch(query.samples())?;
    let mut w = csv::Writer::from_writer(create(&a.out)?);
    let mut header = vec!["timestamp".to_string(), "gamma".into(), "class".into()];
    header.extend(query.names.iter().map(|n| format!("dgamma_d{n}")));
    w.write_record(&header)?;
    for ((q, g), t) in query.samples().iter().zip(&gammas).zip(query.timestamps()) {
        let mut rec = vec![t.to_string(), g.value().to_string(), g.region(a.band).to_string()];
        rec.extend(model.gradient(q)?.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::from(e).in_file(&a.out))?;
    m.output(&a.out);
    let inside = gammas.iter().filter(|g| g.value() >= 0.0).count();
    eprintln!("evaluated {} rows, {inside} with gamma >= 0 -> {}", gammas.len(), a.out.display());
    Ok(())
}

/// Output of `metrics` when the volumes are given directly.
#[derive(Debug, Serialize)]
struct DirectImpairment {
    version: u32,
    #[serde(flatten)]
    result: ImpairmentResult,
}

fn pair_areas(paths: &[PathBuf], a: &MetricsArgs, m: &mut RunManifest) -> Result<Vec<PairArea>> {
    paths
        .iter()
        .map(|p| {
            let model = load_model(p, m)?;
            pair_area(&model, a.resolution, a.padding).map_err(|e| e.in_file(p))
        })
        .collect()
}

fn metrics(a: &MetricsArgs, m: &mut RunManifest) -> Result<()> {
    if let (Some(vh), Some(vi)) = (a.v_healthy, a.v_impaired) {
        let result = ImpairmentResult::new(vi, vh)?;
        let text = serde_json::to_string_pretty(&DirectImpairment { version: REPORT_VERSION, result })?;
        write_text(&a.out, &text)?;
        m.output(&a.out);
        eprintln!("II = {:.4} -> {}", result.ii, a.out.display());
        return Ok(());
    }
    let pairs = pair_areas(&a.models, a, m)?;
    let impaired = if a.impaired_models.is_empty() {
        None
    } else {
        Some(pair_areas(&a.impaired_models, a, m)?)
    };
    let weights = match &a.weights {
        Some(p) => {
            m.input(p)?;
            let f = File::open(p).map_err(|e| Error::from(e).in_file(p))?;
            serde_json::from_reader(f).map_err(|e| Error::from(e).in_file(p))?
        }
        None => {
            let n = pairs
                .iter()
                .chain(impaired.iter().flatten())
                .map(|p| p.i.max(p.j) + 1)
                .max()
                .unwrap_or(0);
            WeightMatrix::ones(n)
        }
    };
    let volume = weighted_volume(&pairs, &weights)?;
    let impairment = match &impaired {
        Some(ip) => {
            let vi = weighted_volume(ip, &weights)?;
            Some(ImpairmentResult {
                v_impaired: vi,
                v_healthy: volume,
                ii: impairment_index(vi, volume)?,
            })
        }
        None => None,
    };
    let report = MetricsReport {
        version: REPORT_VERSION,
        pairs,
        weights,
        volume,
        impaired_pairs: impaired,
        impairment,
    };
    write_text(&a.out, &report.to_json()?)?;
    m.output(&a.out);
    match impairment {
        Some(r) => eprintln!("V = {volume:.1}, II = {:.4} -> {}", r.ii, a.out.display()),
        None => eprintln!("V = {volume:.1} -> {}", a.out.display()),
    }
    Ok(())
}

fn isolines(a: &IsolineArgs, m: &mut RunManifest) -> Result<()> {
    let model = load_model(&a.model, m)?;
    let rows = write_isolines(&model, a.resolution, a.padding, create(&a.out)?).map_err(|e| e.in_file(&a.out))?;
    m.output(&a.out);
    eprintln!("wrote {rows} lattice points -> {}", a.out.display());
    Ok(())
}
