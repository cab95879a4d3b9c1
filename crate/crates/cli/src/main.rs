//! Command-line front end: phantom generation, sinogram simulation,
//! posterior reconstruction, metrics, and convergence traces.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gibbs_bps::ct::{
    self, build_radon, phantom_grains, phantom_shepp_logan, simulate_measurement, NoiseMode,
};
use gibbs_bps::samplers::{
    gibbs_bps_run, gibbs_run, GibbsBpsOptions, GibbsBpsRecord, GibbsChainRecord, InitStrategy,
    TraceRecorder,
};
use gibbs_bps::{io, Error as CoreError, HyperParams, ImageGrid, RngStream};

use config::{resolve, resolve_opt, ConfigEcho, ConfigFile};

/// Exit codes: 0 success, 2 configuration error, 3 capacity error, 4 IO.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Capacity(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Capacity(m) | CliError::Io(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Capacity { .. } => CliError::Capacity(e.to_string()),
            CoreError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "gibbs-bps",
    about = "Bayesian CT reconstruction with a fused L1/2 prior",
    version
)]
struct Cli {
    /// Plain-text `key = value` configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a ground-truth phantom image.
    Phantom(PhantomArgs),
    /// Project a phantom and add measurement noise.
    Sinogram(SinogramArgs),
    /// Run a posterior sampler on a sinogram.
    Reconstruct(ReconstructArgs),
    /// Reconstruct with a mandatory ground truth, emitting a convergence
    /// trace CSV.
    Trace(ReconstructArgs),
    /// Print PSNR/SSIM between two stored images.
    Metrics(MetricsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PhantomKind {
    SheppLogan,
    Grains,
}

impl std::str::FromStr for PhantomKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shepp-logan" => Ok(PhantomKind::SheppLogan),
            "grains" => Ok(PhantomKind::Grains),
            other => Err(format!("unknown phantom kind `{other}`")),
        }
    }
}

#[derive(Args)]
struct PhantomArgs {
    /// shepp-logan | grains
    #[arg(long)]
    kind: Option<PhantomKind>,
    /// Image side length in pixels.
    #[arg(long)]
    d: Option<usize>,
    /// Voronoi cell count for the grains phantom.
    #[arg(long)]
    n_grains: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum NoiseModeArg {
    InfNorm,
    Rms,
}

impl std::str::FromStr for NoiseModeArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inf-norm" => Ok(NoiseModeArg::InfNorm),
            "rms" => Ok(NoiseModeArg::Rms),
            other => Err(format!("unknown noise mode `{other}`")),
        }
    }
}

impl From<NoiseModeArg> for NoiseMode {
    fn from(m: NoiseModeArg) -> Self {
        match m {
            NoiseModeArg::InfNorm => NoiseMode::InfNorm,
            NoiseModeArg::Rms => NoiseMode::Rms,
        }
    }
}

#[derive(Args)]
struct SinogramArgs {
    /// Phantom image (.f64 with .meta sidecar).
    #[arg(long)]
    phantom: Option<PathBuf>,
    /// Projection count; defaults to d/2.
    #[arg(long)]
    n_angles: Option<usize>,
    /// inf-norm | rms
    #[arg(long)]
    noise_mode: Option<NoiseModeArg>,
    #[arg(long)]
    noise_level: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SamplerKind {
    Gibbs,
    GibbsBps,
}

impl std::str::FromStr for SamplerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gibbs" => Ok(SamplerKind::Gibbs),
            "gibbs-bps" => Ok(SamplerKind::GibbsBps),
            other => Err(format!("unknown sampler `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum InitKind {
    Warm,
    Cold,
}

impl std::str::FromStr for InitKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "warm" => Ok(InitKind::Warm),
            "cold" => Ok(InitKind::Cold),
            other => Err(format!("unknown init strategy `{other}`")),
        }
    }
}

#[derive(Args)]
struct ReconstructArgs {
    /// Sinogram (.f64 with .meta sidecar; sigma read from .sigma).
    #[arg(long)]
    sinogram: Option<PathBuf>,
    /// Ground-truth image for metrics and the convergence trace.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// gibbs | gibbs-bps
    #[arg(long)]
    sampler: Option<SamplerKind>,
    /// Gibbs iteration count.
    #[arg(long)]
    iters: Option<usize>,
    /// Gibbs burn-in iterations; defaults to 20% of iters.
    #[arg(long)]
    burn_in: Option<usize>,
    /// Gibbs-BPS event cap.
    #[arg(long)]
    events: Option<u64>,
    /// Gibbs-BPS trajectory length (overrides the event budget when both
    /// are present the run stops at whichever is hit first).
    #[arg(long)]
    traj_time: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    lambda_ref: Option<f64>,
    /// Fraction of the budget discarded as burn-in.
    #[arg(long)]
    burn_in_frac: Option<f64>,
    /// warm | cold chain initialization (gibbs-bps only).
    #[arg(long)]
    init: Option<InitKind>,
    /// Landweber sweeps for the warm start.
    #[arg(long)]
    landweber_iters: Option<usize>,
    /// Override the noise level instead of reading the .sigma sidecar.
    #[arg(long)]
    sigma_obs: Option<f64>,
    #[arg(long)]
    gamma1: Option<u32>,
    #[arg(long)]
    gamma2: Option<u32>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    b1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    #[arg(long)]
    b2: Option<f64>,
    #[arg(long)]
    a3: Option<f64>,
    #[arg(long)]
    b3: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Independent chains run concurrently and merged.
    #[arg(long)]
    chains: Option<usize>,
    /// Trace probe spacing: trajectory time (gibbs-bps) or iterations
    /// (gibbs).
    #[arg(long)]
    probe_interval: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    estimate: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match &cli.config {
        Some(path) => match ConfigFile::load(path) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error: {}", e.message());
                return ExitCode::from(e.code());
            }
        },
        None => ConfigFile::default(),
    };
    let result = match cli.command {
        Command::Phantom(args) => cmd_phantom(&args, &file),
        Command::Sinogram(args) => cmd_sinogram(&args, &file),
        Command::Reconstruct(args) => cmd_reconstruct(&args, &file, false),
        Command::Trace(args) => cmd_reconstruct(&args, &file, true),
        Command::Metrics(args) => cmd_metrics(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn cmd_phantom(args: &PhantomArgs, file: &ConfigFile) -> Result<(), CliError> {
    let kind = resolve(args.kind, file, "phantom_kind", PhantomKind::SheppLogan)?;
    let d = resolve(args.d, file, "d", 64usize)?;
    let n_grains = resolve(args.n_grains, file, "n_grains", 40usize)?;
    let seed = resolve(args.seed, file, "seed", 0u64)?;
    let out = resolve(args.out.clone(), file, "out", PathBuf::from("."))?;
    ensure_dir(&out)?;

    let image = match kind {
        PhantomKind::SheppLogan => phantom_shepp_logan(d)?,
        PhantomKind::Grains => phantom_grains(d, n_grains, seed)?,
    };
    io::write_image(&out.join("phantom.f64"), &image)?;
    io::write_pgm16(&out.join("phantom.pgm"), d, d, image.values())?;

    let mut echo = ConfigEcho::default();
    echo.push(
        "phantom_kind",
        match kind {
            PhantomKind::SheppLogan => "shepp-logan",
            PhantomKind::Grains => "grains",
        },
    );
    echo.push("d", d);
    if kind == PhantomKind::Grains {
        echo.push("n_grains", n_grains);
    }
    echo.push("seed", seed);
    echo.push("out", out.display());
    echo.write(&out)?;
    println!("wrote {}", out.join("phantom.f64").display());
    Ok(())
}

fn cmd_sinogram(args: &SinogramArgs, file: &ConfigFile) -> Result<(), CliError> {
    let phantom_path = resolve_opt(args.phantom.clone(), file, "phantom")?
        .ok_or_else(|| CliError::Config("sinogram needs --phantom".into()))?;
    let truth = io::read_image(&phantom_path)?;
    let d = truth.side();
    let n_angles = resolve(args.n_angles, file, "n_angles", (d / 2).max(1))?;
    let noise_mode = resolve(args.noise_mode, file, "noise_mode", NoiseModeArg::InfNorm)?;
    let noise_level = resolve(args.noise_level, file, "noise_level", 0.01)?;
    let seed = resolve(args.seed, file, "seed", 0u64)?;
    let out = resolve(args.out.clone(), file, "out", PathBuf::from("."))?;
    ensure_dir(&out)?;

    let mut model = build_radon(d, n_angles)?;
    let mut rng = RngStream::from_seed(seed);
    let sino = simulate_measurement(
        &mut model,
        &truth,
        noise_mode.into(),
        noise_level,
        n_angles,
        &mut rng,
    )?;
    io::write_f64_matrix(&out.join("sinogram.f64"), sino.n_angles, sino.n_detectors, &sino.y)?;
    io::write_pgm16(&out.join("sinogram.pgm"), sino.n_detectors, sino.n_angles, &sino.y)?;
    let sigma_path = out.join("sinogram.sigma");
    std::fs::write(&sigma_path, format!("{:.17e}\n", sino.sigma_obs))
        .map_err(|e| CliError::Io(format!("{}: {e}", sigma_path.display())))?;

    let mut echo = ConfigEcho::default();
    echo.push("phantom", phantom_path.display());
    echo.push("n_angles", n_angles);
    echo.push(
        "noise_mode",
        match noise_mode {
            NoiseModeArg::InfNorm => "inf-norm",
            NoiseModeArg::Rms => "rms",
        },
    );
    echo.push("noise_level", noise_level);
    echo.push("seed", seed);
    echo.push("out", out.display());
    echo.write(&out)?;
    println!(
        "wrote {} (sigma_obs = {:.6e})",
        out.join("sinogram.f64").display(),
        sino.sigma_obs
    );
    Ok(())
}

#[derive(Serialize)]
struct Summary {
    sampler: String,
    d: usize,
    n_angles: usize,
    seed: u64,
    chains: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kept_draws: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    events: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bounces: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    refreshes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shrinkage_updates: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectory_time: Option<f64>,
    wall_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    psnr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ssim: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

fn cmd_reconstruct(
    args: &ReconstructArgs,
    file: &ConfigFile,
    require_truth: bool,
) -> Result<(), CliError> {
    let sinogram_path = resolve_opt(args.sinogram.clone(), file, "sinogram")?
        .ok_or_else(|| CliError::Config("reconstruct needs --sinogram".into()))?;
    let truth_path = resolve_opt(args.truth.clone(), file, "truth")?;
    if require_truth && truth_path.is_none() {
        return Err(CliError::Config("trace needs --truth".into()));
    }
    let sampler = resolve(args.sampler, file, "sampler", SamplerKind::GibbsBps)?;
    let seed = resolve(args.seed, file, "seed", 0u64)?;
    let chains = resolve(args.chains, file, "chains", 1usize)?.max(1);
    let out = resolve(args.out.clone(), file, "out", PathBuf::from("."))?;
    ensure_dir(&out)?;

    let (n_angles, n_detectors, y) = io::read_f64_matrix(&sinogram_path)?;
    let d = n_detectors;
    let sigma_obs = match resolve_opt(args.sigma_obs, file, "sigma_obs")? {
        Some(s) => s,
        None => {
            let sigma_path = sinogram_path.with_extension("sigma");
            let text = std::fs::read_to_string(&sigma_path).map_err(|e| {
                CliError::Io(format!(
                    "{}: {e} (pass --sigma-obs to set the noise level directly)",
                    sigma_path.display()
                ))
            })?;
            text.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("{}: {e}", sigma_path.display())))?
        }
    };
    let truth = truth_path.as_deref().map(io::read_image).transpose()?;
    if let Some(t) = &truth {
        if t.side() != d {
            return Err(CliError::Config(format!(
                "truth is {0}x{0} but the sinogram implies d = {d}",
                t.side()
            )));
        }
    }

    let hyper = HyperParams {
        gamma1: resolve(args.gamma1, file, "gamma1", 1u32)?,
        gamma2: resolve(args.gamma2, file, "gamma2", 1u32)?,
        a1: resolve(args.a1, file, "a1", 1.0)?,
        b1: resolve(args.b1, file, "b1", 1.0)?,
        a2: resolve(args.a2, file, "a2", 1.0)?,
        b2: resolve(args.b2, file, "b2", 1.0)?,
        a3: resolve(args.a3, file, "a3", 1.0)?,
        b3: resolve(args.b3, file, "b3", 1.0)?,
    };
    hyper.validate().map_err(CliError::from)?;

    let mut model = build_radon(d, n_angles)?;
    model.set_measurement(y, sigma_obs)?;

    let started = std::time::Instant::now();
    let root = RngStream::from_seed(seed);
    let mut trace = match (&truth, args.probe_interval, sampler) {
        (Some(t), probe, SamplerKind::GibbsBps) => Some(TraceRecorder::new(
            t.values().to_vec(),
            d,
            resolve(probe, file, "probe_interval", 1.0)?,
        )?),
        (Some(t), probe, SamplerKind::Gibbs) => Some(TraceRecorder::new(
            t.values().to_vec(),
            d,
            resolve(probe, file, "probe_interval", 100.0)?,
        )?),
        (None, _, _) => None,
    };

    let mut echo = ConfigEcho::default();
    echo.push("sinogram", sinogram_path.display());
    echo.push_opt("truth", truth_path.as_ref().map(|p| p.display().to_string()));
    echo.push_opt("probe_interval", trace.as_ref().map(|t| t.probe_interval()));
    echo.push("sigma_obs", format!("{sigma_obs:.17e}"));
    echo.push("seed", seed);
    echo.push("chains", chains);
    echo.push("gamma1", hyper.gamma1);
    echo.push("gamma2", hyper.gamma2);
    for (k, v) in [
        ("a1", hyper.a1),
        ("b1", hyper.b1),
        ("a2", hyper.a2),
        ("b2", hyper.b2),
        ("a3", hyper.a3),
        ("b3", hyper.b3),
    ] {
        echo.push(k, v);
    }
    echo.push("out", out.display());

    let (mean, std, summary) = match sampler {
        SamplerKind::Gibbs => {
            let iters = resolve(args.iters, file, "iters", 2000usize)?;
            let burn_in = resolve(args.burn_in, file, "burn_in", iters / 5)?;
            echo.push("sampler", "gibbs");
            echo.push("iters", iters);
            echo.push("burn_in", burn_in);
            let mut merged: Option<GibbsChainRecord> = None;
            let records = run_chains(
                chains,
                &root,
                |rng| gibbs_run(&model, &hyper, iters, burn_in, rng, trace.as_mut()),
                |rng| gibbs_run(&model, &hyper, iters, burn_in, rng, None),
            )?;
            for record in records {
                match &mut merged {
                    None => merged = Some(record),
                    Some(m) => m.merge(&record)?,
                }
            }
            let record = merged.expect("at least one chain");
            let mean = record.posterior_mean();
            let std = record.posterior_std();
            let summary = Summary {
                sampler: "gibbs".into(),
                d,
                n_angles,
                seed,
                chains,
                iterations: Some(record.iterations),
                kept_draws: Some(record.kept()),
                events: None,
                bounces: None,
                refreshes: None,
                shrinkage_updates: None,
                trajectory_time: None,
                wall_seconds: started.elapsed().as_secs_f64(),
                psnr_db: None,
                ssim: None,
                warnings: Vec::new(),
            };
            (mean, std, summary)
        }
        SamplerKind::GibbsBps => {
            let opts = GibbsBpsOptions {
                traj_time: resolve_opt(args.traj_time, file, "traj_time")?,
                max_events: match resolve_opt(args.events, file, "events")? {
                    Some(e) => Some(e),
                    None => resolve_opt(args.traj_time, file, "traj_time")?
                        .is_none()
                        .then_some(600_000),
                },
                lambda_ref: resolve(args.lambda_ref, file, "lambda_ref", 10.0)?,
                eta: resolve(args.eta, file, "eta", 100.0)?,
                burn_in_frac: resolve(args.burn_in_frac, file, "burn_in_frac", 0.2)?,
                init: match resolve(args.init, file, "init", InitKind::Warm)? {
                    InitKind::Cold => InitStrategy::Cold,
                    InitKind::Warm => InitStrategy::Warm {
                        landweber_iters: resolve(
                            args.landweber_iters,
                            file,
                            "landweber_iters",
                            200,
                        )?,
                    },
                },
            };
            echo.push("sampler", "gibbs-bps");
            echo.push_opt("traj_time", opts.traj_time);
            echo.push_opt("events", opts.max_events);
            echo.push("lambda_ref", opts.lambda_ref);
            echo.push("eta", opts.eta);
            echo.push("burn_in_frac", opts.burn_in_frac);
            match opts.init {
                InitStrategy::Cold => echo.push("init", "cold"),
                InitStrategy::Warm { landweber_iters } => {
                    echo.push("init", "warm");
                    echo.push("landweber_iters", landweber_iters);
                }
            }
            let records: Vec<GibbsBpsRecord> = run_chains(
                chains,
                &root,
                |rng| gibbs_bps_run(&model, &hyper, &opts, rng, trace.as_mut()),
                |rng| gibbs_bps_run(&model, &hyper, &opts, rng, None),
            )?;
            let mut warnings = Vec::new();
            let mut moments = None;
            let (mut events, mut bounces, mut refreshes, mut gibbs_updates) = (0, 0, 0, 0);
            let mut total_time = 0.0;
            for record in &records {
                warnings.extend(record.warnings());
                events += record.events;
                bounces += record.bounces;
                refreshes += record.refreshes;
                gibbs_updates += record.gibbs_updates;
                total_time += record.total_time;
                match &mut moments {
                    None => moments = Some(record.moments.clone()),
                    Some(m) => m.merge(&record.moments)?,
                }
            }
            let moments = moments.expect("at least one chain");
            let (mean, std) = moments.finalize()?;
            let summary = Summary {
                sampler: "gibbs-bps".into(),
                d,
                n_angles,
                seed,
                chains,
                iterations: None,
                kept_draws: None,
                events: Some(events),
                bounces: Some(bounces),
                refreshes: Some(refreshes),
                shrinkage_updates: Some(gibbs_updates),
                trajectory_time: Some(total_time),
                wall_seconds: started.elapsed().as_secs_f64(),
                psnr_db: None,
                ssim: None,
                warnings,
            };
            (mean, std, summary)
        }
    };

    let mean_grid = ImageGrid::new(d, mean)?;
    let std_grid = ImageGrid::new(d, std)?;
    io::write_image(&out.join("mean.f64"), &mean_grid)?;
    io::write_pgm16(&out.join("mean.pgm"), d, d, mean_grid.values())?;
    io::write_image(&out.join("std.f64"), &std_grid)?;
    io::write_pgm16(&out.join("std.pgm"), d, d, std_grid.values())?;

    let mut summary = summary;
    if let Some(t) = &truth {
        summary.psnr_db = Some(ct::psnr(t, &mean_grid)?);
        summary.ssim = ct::ssim(t, &mean_grid).ok();
    }
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    let summary_path = out.join("summary.json");
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Io(format!("{}: {e}", summary_path.display())))?;
    std::fs::write(&summary_path, json)
        .map_err(|e| CliError::Io(format!("{}: {e}", summary_path.display())))?;

    if let Some(trace) = &trace {
        let trace_path = out.join("trace.csv");
        std::fs::write(&trace_path, trace.to_csv())
            .map_err(|e| CliError::Io(format!("{}: {e}", trace_path.display())))?;
    }
    echo.write(&out)?;

    match (summary.psnr_db, summary.ssim) {
        (Some(p), Some(s)) => println!("PSNR {p:.4}  SSIM {s:.4}"),
        (Some(p), None) => println!("PSNR {p:.4}"),
        _ => {}
    }
    println!("wrote {}", out.join("mean.f64").display());
    Ok(())
}

/// Run `chains` independent chains on derived sub-streams. Chain 0 (the
/// only one that may carry the trace recorder) runs on the calling thread;
/// the rest run concurrently. Results come back in chain order so merges
/// are deterministic.
fn run_chains<R, P, W>(
    chains: usize,
    root: &RngStream,
    primary: P,
    worker: W,
) -> Result<Vec<R>, CliError>
where
    R: Send,
    P: FnOnce(&mut RngStream) -> gibbs_bps::Result<R>,
    W: Fn(&mut RngStream) -> gibbs_bps::Result<R> + Sync,
{
    let mut worker_results: Vec<Option<gibbs_bps::Result<R>>> = Vec::new();
    worker_results.resize_with(chains - 1, || None);
    let primary_result = std::thread::scope(|scope| {
        for (i, slot) in worker_results.iter_mut().enumerate() {
            let mut rng = root.substream((i + 1) as u64);
            let worker = &worker;
            scope.spawn(move || {
                *slot = Some(worker(&mut rng));
            });
        }
        let mut rng = root.substream(0);
        primary(&mut rng)
    });
    let mut out = Vec::with_capacity(chains);
    out.push(primary_result.map_err(CliError::from)?);
    for r in worker_results {
        out.push(r.expect("worker chain completed").map_err(CliError::from)?);
    }
    Ok(out)
}

fn cmd_metrics(args: &MetricsArgs) -> Result<(), CliError> {
    let (tw, th, truth) = io::read_f64_matrix(&args.truth)?;
    let (ew, eh, estimate) = io::read_f64_matrix(&args.estimate)?;
    if (tw, th) != (ew, eh) {
        return Err(CliError::Config(format!(
            "shape mismatch: truth is {tw}x{th}, estimate is {ew}x{eh}"
        )));
    }
    let psnr = ct::psnr_slices(&truth, &estimate)?;
    let ssim = ct::ssim_rect(&truth, &estimate, th, tw).unwrap_or(f64::NAN);
    println!("PSNR {psnr:.4}  SSIM {ssim:.4}");
    Ok(())
}
