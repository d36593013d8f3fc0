//! The `buddykit` command-line front end.
//!
//! Every subcommand is also callable as a plain function taking its parsed
//! arguments. JSON reports carry a top-level `"schema": 1` and go to `--out`
//! when given, stdout otherwise.
//!
//! Exit codes: 0 on success, 1 on runtime failure (I/O, decoding, divergence),
//! 2 on invalid input or flags.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::imagekit::{self, bicubic_resample, load_png, save_png, ImageTensor, ResampleSpec};
use crate::lossfns::{
    back_projection_loss, best_buddy_loss, perceptual_loss, ragan_g_loss, IdentityExtractor, LogitBatch, LossParts,
    LossReport, LossWeights,
};
use crate::patchcore::{BuddyProblem, BuddyRecord, BuddySearchConfig, SearchMode};
use crate::regionmask::{apply_mask, compute_mask, MaskConfig};
use crate::synth;
use crate::toylab::{export_toy_plot, run_toy, LossKind, ToyTrainConfig};

#[derive(Debug, Parser)]
#[command(name = "buddykit", version, about = "Best-buddy super-resolution supervision tools")]
pub struct Cli {
    /// Worker threads; 1 gives the reproducibility baseline.
    #[arg(long, global = true, env = "BUDDYKIT_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bicubic resize by an integer factor.
    Resize(ResizeArgs),
    /// Best-buddy search and loss for an SR/HR pair.
    Bbl(BblArgs),
    /// Texture mask and masked image.
    Mask(MaskArgs),
    /// Weighted generator loss report.
    Losses(LossesArgs),
    /// Swiss-roll toy experiment.
    Toy(ToyArgs),
    /// Brute versus accelerated buddy search timings.
    Bench(BenchArgs),
    /// Per-element mean absolute error between two images.
    Mae(MaeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirArg {
    Down,
    Up,
}

#[derive(Debug, Clone, Args)]
pub struct ResizeArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    #[arg(long)]
    pub scale: usize,
    #[arg(long, value_enum, default_value = "down")]
    pub dir: DirArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Brute,
    Fast,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Brute => SearchMode::Brute,
            ModeArg::Fast => SearchMode::Accelerated,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BblArgs {
    #[arg(long)]
    pub sr: PathBuf,
    #[arg(long)]
    pub hr: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, value_enum, default_value = "fast")]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Center-crop both images to the largest size divisible by 12.
    #[arg(long)]
    pub crop: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MaskArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 11)]
    pub k: usize,
    #[arg(long, default_value_t = 0.025)]
    pub delta: f64,
    #[arg(long)]
    pub out_mask: PathBuf,
    #[arg(long)]
    pub out_masked: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LossesArgs {
    #[arg(long)]
    pub sr: PathBuf,
    #[arg(long)]
    pub hr: PathBuf,
    #[arg(long)]
    pub lr: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub scale: usize,
    /// `bb,bp,perceptual,gan`
    #[arg(long, default_value = "0.1,1,1,0.005")]
    pub weights: String,
    /// JSON file `{"real": [...], "fake": [...]}` of discriminator logits.
    #[arg(long)]
    pub logits: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ToyLossArg {
    Mae,
    Mse,
    Bbl,
    All,
}

impl ToyLossArg {
    fn kinds(self) -> Vec<LossKind> {
        match self {
            ToyLossArg::Mae => vec![LossKind::Mae],
            ToyLossArg::Mse => vec![LossKind::Mse],
            ToyLossArg::Bbl => vec![LossKind::Bbl],
            ToyLossArg::All => LossKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ToyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub loss: ToyLossArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchModeArg {
    Brute,
    Fast,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 192)]
    pub size: usize,
    #[arg(long, default_value_t = 5)]
    pub iters: usize,
    #[arg(long, value_enum, default_value = "both")]
    pub mode: BenchModeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MaeArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BblReport {
    pub schema: u32,
    pub alpha: f64,
    pub beta: f64,
    pub height: usize,
    pub width: usize,
    pub candidates: usize,
    pub bb_loss: f64,
    pub matches: Vec<BuddyRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub schema: u32,
    pub size: usize,
    pub iters: usize,
    pub queries: usize,
    pub candidates: usize,
    pub outputs_equal: Option<bool>,
    pub brute_ms: Option<f64>,
    pub fast_ms: Option<f64>,
    pub speedup: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaeReport {
    pub schema: u32,
    pub mae: f64,
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_resize(args: &ResizeArgs) -> Result<ImageTensor> {
    let img = load_png(&args.input)?;
    let spec = match args.dir {
        DirArg::Down => ResampleSpec::down(args.scale),
        DirArg::Up => ResampleSpec::up(args.scale),
    };
    let out = bicubic_resample(&img, spec)?;
    save_png(&out, &args.output)?;
    Ok(out)
}

fn load_pair(sr: &Path, hr: &Path, crop: bool) -> Result<(ImageTensor, ImageTensor)> {
    let (mut sr, mut hr) = (load_png(sr)?, load_png(hr)?);
    imagekit::check_same_shape(&sr, &hr)?;
    if crop {
        sr = sr.crop_to_multiple(12)?;
        hr = hr.crop_to_multiple(12)?;
    }
    Ok((sr, hr))
}

pub fn bbl_report(sr: &ImageTensor, hr: &ImageTensor, cfg: &BuddySearchConfig) -> Result<BblReport> {
    cfg.validate()?;
    let problem = BuddyProblem::new(sr, hr)?;
    let assignment = problem.search(cfg)?;
    Ok(BblReport {
        schema: 1,
        alpha: cfg.alpha,
        beta: cfg.beta,
        height: hr.height(),
        width: hr.width(),
        candidates: problem.db.len(),
        bb_loss: best_buddy_loss(&problem.queries, &assignment, &problem.db)?,
        matches: assignment.records(&problem.db),
    })
}

pub fn cmd_bbl(args: &BblArgs) -> Result<BblReport> {
    let (sr, hr) = load_pair(&args.sr, &args.hr, args.crop)?;
    let cfg = BuddySearchConfig::new(args.alpha, args.beta, args.mode.into());
    let report = bbl_report(&sr, &hr, &cfg)?;
    write_json(&report, args.out.as_deref())?;
    Ok(report)
}

pub fn cmd_mask(args: &MaskArgs) -> Result<()> {
    let cfg = MaskConfig {
        k: args.k,
        delta: args.delta,
    };
    cfg.validate()?;
    let img = load_png(&args.input)?;
    let mask = compute_mask(&img, &cfg)?;
    mask.save_png(&args.out_mask)?;
    if let Some(path) = &args.out_masked {
        save_png(&apply_mask(&img, &mask)?, path)?;
    }
    Ok(())
}

pub fn parse_weights(s: &str) -> Result<LossWeights> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(format!("bad --weights {s:?}: {e}")))?;
    let [lambda_bb, lambda_bp, lambda_p, lambda_g] = vals[..] else {
        return Err(Error::Config(format!("--weights needs four values, got {}", vals.len())));
    };
    let w = LossWeights {
        lambda_bb,
        lambda_bp,
        lambda_p,
        lambda_g,
    };
    w.validate()?;
    Ok(w)
}

/// Best-buddy (alpha = beta = 1), back-projection, identity-feature perceptual
/// and optional RaGAN generator terms.
pub fn loss_report(
    sr: &ImageTensor,
    hr: &ImageTensor,
    lr: &ImageTensor,
    scale: usize,
    weights: LossWeights,
    logits: Option<&LogitBatch>,
) -> Result<LossReport> {
    let problem = BuddyProblem::new(sr, hr)?;
    let assignment = problem.search(&BuddySearchConfig::default())?;
    let parts = LossParts {
        bb: best_buddy_loss(&problem.queries, &assignment, &problem.db)?,
        bp: back_projection_loss(sr, lr, scale)?,
        perceptual: perceptual_loss(sr, hr, &IdentityExtractor::new())?,
        ragan_g: logits.map(ragan_g_loss).transpose()?.unwrap_or(0.0),
    };
    LossReport::new(parts, logits.is_some(), weights)
}

pub fn cmd_losses(args: &LossesArgs) -> Result<LossReport> {
    let weights = parse_weights(&args.weights)?;
    let (sr, hr) = load_pair(&args.sr, &args.hr, false)?;
    let lr = load_png(&args.lr)?;
    let logits = match &args.logits {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let batch: LogitBatch =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            batch.validate()?;
            Some(batch)
        }
        None => None,
    };
    let report = loss_report(&sr, &hr, &lr, args.scale, weights, logits.as_ref())?;
    write_json(&report, args.out.as_deref())?;
    Ok(report)
}

pub fn cmd_toy(args: &ToyArgs) -> Result<()> {
    let base = ToyTrainConfig::new(LossKind::Bbl, args.seed);
    let (data, results) = run_toy(&args.loss.kinds(), &base)?;
    export_toy_plot(&data, &results, args.seed, &args.out_dir)?;
    for r in &results {
        eprintln!("{}: mean curve distance {:.4}", r.kind, r.fit.mean_dist);
    }
    Ok(())
}

fn median_ms(mut times: Vec<f64>) -> f64 {
    times.sort_by(f64::total_cmp);
    let n = times.len();
    if n % 2 == 1 {
        times[n / 2]
    } else {
        0.5 * (times[n / 2 - 1] + times[n / 2])
    }
}

fn time_search(problem: &BuddyProblem, mode: SearchMode, iters: usize) -> Result<f64> {
    let cfg = BuddySearchConfig::new(1.0, 1.0, mode);
    let mut times = Vec::with_capacity(iters);
    for _ in 0..iters {
        let t0 = Instant::now();
        std::hint::black_box(problem.search(&cfg)?);
        times.push(t0.elapsed().as_secs_f64() * 1e3);
    }
    Ok(median_ms(times))
}

/// Median wall times of both search paths on a seeded textured image with a
/// noisy estimate. With `Both`, the two assignments are compared first.
pub fn bench_report(size: usize, iters: usize, mode: BenchModeArg) -> Result<BenchReport> {
    if size == 0 || size % 12 != 0 {
        return Err(Error::Config(format!("--size {size} must be a positive multiple of 12")));
    }
    if iters == 0 {
        return Err(Error::Config("--iters must be positive".into()));
    }
    let hr = synth::textured_image(size, size, 3, 0)?;
    let sr = synth::perturbed(&hr, 0.03, 1)?;
    let problem = BuddyProblem::new(&sr, &hr)?;
    let outputs_equal = match mode {
        BenchModeArg::Both => {
            let brute = problem.search(&BuddySearchConfig::new(1.0, 1.0, SearchMode::Brute))?;
            let fast = problem.search(&BuddySearchConfig::new(1.0, 1.0, SearchMode::Accelerated))?;
            let equal = brute.buddy_indices() == fast.buddy_indices();
            if !equal {
                return Err(Error::Misaligned("accelerated search disagrees with brute force".into()));
            }
            Some(equal)
        }
        _ => None,
    };
    let brute_ms = match mode {
        BenchModeArg::Brute | BenchModeArg::Both => Some(time_search(&problem, SearchMode::Brute, iters)?),
        BenchModeArg::Fast => None,
    };
    let fast_ms = match mode {
        BenchModeArg::Fast | BenchModeArg::Both => Some(time_search(&problem, SearchMode::Accelerated, iters)?),
        BenchModeArg::Brute => None,
    };
    Ok(BenchReport {
        schema: 1,
        size,
        iters,
        queries: problem.queries.len(),
        candidates: problem.db.len(),
        outputs_equal,
        brute_ms,
        fast_ms,
        speedup: brute_ms.zip(fast_ms).map(|(b, f)| b / f),
    })
}

pub fn cmd_bench(args: &BenchArgs) -> Result<BenchReport> {
    let report = bench_report(args.size, args.iters, args.mode)?;
    write_json(&report, args.out.as_deref())?;
    Ok(report)
}

pub fn cmd_mae(args: &MaeArgs) -> Result<f64> {
    let (a, b) = (load_png(&args.a)?, load_png(&args.b)?);
    let mae = imagekit::mae(&a, &b)?;
    write_json(&MaeReport { schema: 1, mae }, None)?;
    Ok(mae)
}

pub fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Resize(a) => cmd_resize(a).map(drop),
        Command::Bbl(a) => cmd_bbl(a).map(drop),
        Command::Mask(a) => cmd_mask(a),
        Command::Losses(a) => cmd_losses(a).map(drop),
        Command::Toy(a) => cmd_toy(a),
        Command::Bench(a) => cmd_bench(a).map(drop),
        Command::Mae(a) => cmd_mae(a).map(drop),
    }
}

pub fn exit_code(err: &Error) -> u8 {
    if err.is_validation() {
        2
    } else {
        1
    }
}

/// Parses `args` (including the program name), runs the subcommand and maps
/// the outcome to an exit code.
pub fn main_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Error::Config("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
            .and_then(|pool| pool.install(|| dispatch(&cli.command))),
        None => dispatch(&cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
