//! The `music` command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage, configuration, parse or I/O
//! errors, 3 for numeric-domain errors. Nothing here reads the clock or the
//! OS entropy pool; every stochastic subcommand needs an explicit seed.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::bounds::{self, ClusterReport, CorollaryReport, InghamReport, OracleValues, PerturbationCheck};
use crate::error::{Error, Result};
use crate::experiments::{
    emit_report, phase_transition, run_dir, run_sweep, PhaseMode, PhaseSpec, PhaseTransitionReport, Placement,
    Report, ReportFormat, SweepSpec, TrialSpec,
};
use crate::hankel_subspace::{build_hankel, default_pencil};
use crate::music::{amplitude_solve, music_estimate, scan_profile, DEFAULT_GRID_STEP_RL, DEFAULT_REFINE_TOL};
use crate::signal_model::{add_noise, min_separation, synthesize, ModelFile, NoiseSpec, Signal};

#[derive(Debug, Parser)]
#[command(name = "music", version, about = "Single-snapshot MUSIC frequency estimation, bounds and experiments")]
pub struct Cli {
    /// Worker threads for Monte Carlo runs (default: all cores). Results do
    /// not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a model file at k = 0..M, optionally adding seeded noise.
    Synth(SynthArgs),
    /// Estimate s frequencies from a sample CSV.
    Estimate(EstimateArgs),
    /// Evaluate the singular-value and perturbation bounds.
    Bounds(BoundsArgs),
    /// Run a super-resolution phase-transition grid.
    PhaseTransition(PhaseArgs),
    /// Run an NSR sweep of noisy trials.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Model JSON: {"M", "frequencies", "amplitudes": [[re, im]], "noise"?}.
    #[arg(long)]
    pub model: PathBuf,
    /// Output CSV (k,re,im).
    #[arg(long)]
    pub output: PathBuf,
    /// Noise seed; overrides the seed in the model file.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Sample CSV (k,re,im).
    #[arg(long)]
    pub input: PathBuf,
    /// Number of frequencies.
    #[arg(long)]
    pub s: usize,
    /// Expected M (the CSV must hold M+1 samples).
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Pencil parameter (default M/2).
    #[arg(long = "L")]
    pub l: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP_RL)]
    pub grid_step: f64,
    #[arg(long, default_value_t = DEFAULT_REFINE_TOL)]
    pub refine_tol: f64,
    /// Output JSON (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the correlation profile (omega,r,j) as CSV.
    #[arg(long)]
    pub profile: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long = "L")]
    pub l: usize,
    /// Minimum torus gap; taken from --model when absent.
    #[arg(long)]
    pub q: Option<f64>,
    /// Total length M for the amplitude-level bounds (needs --xmin/--xmax).
    #[arg(long = "M")]
    pub m: Option<usize>,
    #[arg(long)]
    pub xmin: Option<f64>,
    #[arg(long)]
    pub xmax: Option<f64>,
    /// Cluster bound: class count R (with --rho).
    #[arg(long = "R")]
    pub r: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Model JSON; adds oracle values, the cluster report and, when the
    /// model carries noise, the measured perturbation.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output JSON (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
    Svg,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Svg => ReportFormat::Svg,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Root directory; results go to <out-dir>/<spec hash>/.
    #[arg(long, default_value = "runs")]
    pub out_dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "csv,json,svg")]
    pub format: Vec<FormatArg>,
}

/// Separations of the default phase grid, in Rayleigh lengths.
pub const DEFAULT_Q_RL: [f64; 7] = [0.3, 0.4, 0.6, 0.8, 1.2, 1.6, 2.0];

/// Twelve log-spaced NSR values from 1e-5 to 0.5.
pub fn default_nsr_grid() -> Vec<f64> {
    (0..12).map(|k| 1e-5 * (0.5f64 / 1e-5).powf(k as f64 / 11.0)).collect()
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    /// Experiment spec JSON; flags below are ignored when given.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Cluster size R*.
    #[arg(long, default_value_t = 2)]
    pub rstar: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Base seed (required unless the spec file provides one).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "M", default_value_t = 100)]
    pub m: usize,
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Separations in RL (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    /// NSR values (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub nsr: Option<Vec<f64>>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PhaseModeArg {
    RandomComplex,
    RealPositive,
    AlternatingSign,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep spec JSON; flags below are ignored when given.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long = "M", default_value_t = 100)]
    pub m: usize,
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Number of frequencies; when absent the torus is filled with gaps in
    /// [separation, max-separation].
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long, default_value_t = 4.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 5.0)]
    pub max_separation: f64,
    #[arg(long, default_value_t = 10.0)]
    pub dynamic_range: f64,
    #[arg(long, value_enum, default_value = "random-complex")]
    pub phase_mode: PhaseModeArg,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.05, 0.1, 0.15, 0.2])]
    pub nsr: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code. Results go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "music: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be >= 1".into()));
        }
        // a second initialisation in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Synth(a) => synth(a, out),
        Command::Estimate(a) => estimate(a, out),
        Command::Bounds(a) => bounds_cmd(a, out),
        Command::PhaseTransition(a) => phase_cmd(a, out),
        Command::Sweep(a) => sweep_cmd(a, out),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Fails early when `path` cannot be created: its parent must be an
/// existing directory.
fn check_output_path(path: &Path) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "parent directory does not exist"),
        ));
    }
    if path.is_dir() {
        return Err(Error::io(path, std::io::Error::other("is a directory")));
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn emit_json<T: Serialize>(value: &T, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => write_text(p, &text),
        None => out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn synth(a: SynthArgs, out: &mut dyn Write) -> Result<()> {
    let text = read_text(&a.model)?;
    check_output_path(&a.output)?;
    let mut file = ModelFile::from_json(&text)?;
    if let (Some(seed), Some(noise)) = (a.seed, file.noise.as_mut()) {
        noise.seed = seed;
    }
    let model = file.model()?;
    let clean = synthesize(&model, file.m);
    let signal = match &file.noise {
        Some(n) => add_noise(&clean, &NoiseSpec::new(n.sigma, n.seed)?),
        None => clean,
    };
    let comments = [format!("config: {}", serde_json::to_string(&file)?)];
    write_text(&a.output, &signal.to_csv(&comments))?;
    writeln!(out, "{}", a.output.display()).map_err(|e| Error::io("<stdout>", e))
}

#[derive(Serialize)]
struct EstimateConfig<'a> {
    input: &'a Path,
    s: usize,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "L")]
    l: usize,
    grid_step_rl: f64,
    refine_tol: f64,
}

#[derive(Serialize)]
struct EstimateOutput<'a> {
    config: EstimateConfig<'a>,
    frequencies: Vec<f64>,
    minima_values: Vec<f64>,
    insufficient: bool,
    amplitudes: Option<Vec<[f64; 2]>>,
    residual: Option<f64>,
    singular_values: Vec<f64>,
}

fn estimate(a: EstimateArgs, out: &mut dyn Write) -> Result<()> {
    let text = read_text(&a.input)?;
    for p in a.output.iter().chain(a.profile.iter()) {
        check_output_path(p)?;
    }
    let signal = Signal::from_csv(&text)?;
    if let Some(m) = a.m {
        if m != signal.m() {
            return Err(Error::Config(format!("--M {m} but the input holds M = {}", signal.m())));
        }
    }
    let l = a.l.unwrap_or_else(|| default_pencil(signal.m()));
    let config = EstimateConfig {
        input: &a.input,
        s: a.s,
        m: signal.m(),
        l,
        grid_step_rl: a.grid_step,
        refine_tol: a.refine_tol,
    };
    let est = music_estimate(&signal, a.s, l, a.grid_step, a.refine_tol)?;
    let h = build_hankel(&signal, l)?;
    let amplitudes = if est.frequencies.is_empty() {
        None
    } else {
        Some(amplitude_solve(&est.frequencies, &signal)?)
    };
    if let Some(p) = &a.profile {
        let split = crate::hankel_subspace::subspace_split(&h, a.s)?;
        let profile = scan_profile(&split, a.grid_step)?;
        write_text(p, &profile.to_csv(&[format!("config: {}", serde_json::to_string(&config)?)]))?;
    }
    let result = EstimateOutput {
        config,
        frequencies: est.frequencies,
        minima_values: est.minima_values,
        insufficient: est.insufficient,
        amplitudes: amplitudes.as_ref().map(|f| f.amplitudes.iter().map(|z| [z.re, z.im]).collect()),
        residual: amplitudes.as_ref().map(|f| f.residual),
        singular_values: h.singular_values(),
    };
    emit_json(&result, a.output.as_deref(), out)
}

#[derive(Serialize)]
struct BoundsOutput {
    config: serde_json::Value,
    ingham: InghamReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    corollary: Option<CorollaryReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cluster: Option<ClusterReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleValues>,
    #[serde(skip_serializing_if = "Option::is_none")]
    perturbation: Option<PerturbationCheck>,
}

fn bounds_cmd(a: BoundsArgs, out: &mut dyn Write) -> Result<()> {
    let model_file = match &a.model {
        Some(p) => Some(ModelFile::from_json(&read_text(p)?)?),
        None => None,
    };
    if let Some(p) = &a.output {
        check_output_path(p)?;
    }
    let model = model_file.as_ref().map(|f| f.model()).transpose()?;
    let q = match (a.q, &model) {
        (Some(q), _) => q,
        (None, Some(m)) if m.s() > 1 => min_separation(m.frequencies()),
        (None, Some(_)) => 0.5,
        (None, None) => return Err(Error::Config("--q is required without --model".into())),
    };
    let ingham = bounds::ingham_bounds(a.l, q)?;

    let m_total = a.m.or(model_file.as_ref().map(|f| f.m));
    let corollary = match (m_total, a.xmin.or(model.as_ref().map(|m| m.x_min())), a.xmax.or(model.as_ref().map(|m| m.x_max()))) {
        (Some(m), Some(xmin), Some(xmax)) => Some(bounds::corollary_alphas(xmin, xmax, a.l, m, q)?),
        (Some(_), _, _) if a.m.is_some() => {
            return Err(Error::Config("--M needs --xmin and --xmax (or --model)".into()));
        }
        _ => None,
    };
    let cluster = match (a.r, a.rho, &model) {
        (Some(r), Some(rho), model) => {
            let mut c = bounds::cluster_upper_bound(r, rho, a.l)?;
            if let Some(m) = model {
                c.rayleigh_index = Some(bounds::rayleigh_index(m.frequencies(), a.l)?);
            }
            Some(c)
        }
        (None, None, Some(m)) => Some(bounds::cluster_report_for(m.frequencies(), a.l)?),
        (None, None, None) => None,
        _ => return Err(Error::Config("--R and --rho go together".into())),
    };
    let oracle = model
        .as_ref()
        .map(|m| bounds::ingham_lower_oracle(m.frequencies(), a.l))
        .transpose()?;
    let perturbation = match (&model_file, &model) {
        (Some(f), Some(m)) => match &f.noise {
            Some(n) => {
                let noise = NoiseSpec::new(n.sigma, n.seed)?.noise_vector(f.m + 1);
                Some(bounds::perturbation_check(m, f.m, a.l, &noise, DEFAULT_GRID_STEP_RL)?)
            }
            None => None,
        },
        _ => None,
    };
    let config = json!({
        "L": a.l,
        "q": q,
        "M": m_total,
        "xmin": a.xmin,
        "xmax": a.xmax,
        "R": a.r,
        "rho": a.rho,
        "model": model_file,
    });
    let result = BoundsOutput {
        config,
        ingham,
        corollary,
        cluster,
        oracle,
        perturbation,
    };
    emit_json(&result, a.output.as_deref(), out)
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| Error::Config("this subcommand is stochastic: pass --seed".into()))
}

fn write_report(report: &Report, o: &OutputArgs, out: &mut dyn Write) -> Result<()> {
    let formats: Vec<ReportFormat> = o.format.iter().map(|&f| f.into()).collect();
    let paths = emit_report(report, &formats, &run_dir(&o.out_dir, report))?;
    for p in paths {
        writeln!(out, "{}", p.display()).map_err(|e| Error::io("<stdout>", e))?;
    }
    Ok(())
}

/// Creates the run-directory root up front so that an unwritable location
/// fails before any computation.
fn prepare_out_dir(o: &OutputArgs) -> Result<()> {
    std::fs::create_dir_all(&o.out_dir).map_err(|e| Error::io(&o.out_dir, e))
}

fn phase_cmd(a: PhaseArgs, out: &mut dyn Write) -> Result<()> {
    let spec = match &a.spec {
        Some(p) => {
            let mut spec: PhaseSpec = serde_json::from_str(&read_text(p)?)?;
            if let Some(seed) = a.seed {
                spec.base_seed = seed;
            }
            spec
        }
        None => PhaseSpec {
            cluster_size: a.rstar,
            q_values_rl: a.q.clone().unwrap_or_else(|| DEFAULT_Q_RL.to_vec()),
            nsr_values: a.nsr.clone().unwrap_or_else(default_nsr_grid),
            m: a.m,
            l: Some(a.l.unwrap_or(a.m / 2)),
            n_trials: a.trials,
            base_seed: require_seed(a.seed)?,
            grid_step_rl: DEFAULT_GRID_STEP_RL,
            refine_tol: DEFAULT_REFINE_TOL,
        },
    };
    spec.validate()?;
    prepare_out_dir(&a.output)?;
    let grid = phase_transition(&spec)?;
    let report = Report::PhaseTransition(PhaseTransitionReport::new(spec, grid));
    write_report(&report, &a.output, out)
}

fn sweep_cmd(a: SweepArgs, out: &mut dyn Write) -> Result<()> {
    let spec = match &a.spec {
        Some(p) => {
            let mut spec: SweepSpec = serde_json::from_str(&read_text(p)?)?;
            if let Some(seed) = a.seed {
                spec.trials.base_seed = seed;
            }
            spec
        }
        None => {
            let placement = match a.s {
                Some(_) => Placement::MinSeparation,
                None => Placement::Fill {
                    max_separation_rl: a.max_separation,
                },
            };
            SweepSpec {
                trials: TrialSpec {
                    m: a.m,
                    l: Some(a.l.unwrap_or(a.m / 2)),
                    s: a.s.unwrap_or(0),
                    separation_rl: a.separation,
                    dynamic_range: a.dynamic_range,
                    nsr: 0.0,
                    n_trials: a.trials,
                    base_seed: require_seed(a.seed)?,
                    phase_mode: match a.phase_mode {
                        PhaseModeArg::RandomComplex => PhaseMode::RandomComplex,
                        PhaseModeArg::RealPositive => PhaseMode::RealPositive,
                        PhaseModeArg::AlternatingSign => PhaseMode::AlternatingSign,
                    },
                    placement,
                    grid_step_rl: DEFAULT_GRID_STEP_RL,
                    refine_tol: DEFAULT_REFINE_TOL,
                },
                nsr_values: a.nsr.clone(),
            }
        }
    };
    spec.trials.validate()?;
    if spec.nsr_values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::Config("NSR values must be finite and >= 0".into()));
    }
    prepare_out_dir(&a.output)?;
    let report = Report::Sweep(run_sweep(&spec)?);
    write_report(&report, &a.output, out)
}

/// Entry point used by the binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}
