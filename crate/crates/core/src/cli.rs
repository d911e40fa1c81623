//! Command-line frontend: synthesis, kernel estimation, deconvolution, full
//! blind deblurring and evaluation.
//!
//! Every command exits with status 0 only after all of its outputs have been
//! written; files created by a failing command are removed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info};
use serde_json::{json, Map, Value};

use crate::deconv::{deblur_raster, DeconvConfig};
use crate::denoise::{denoise_raster, DenoiserSpec};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::{
    read_image, read_kernel, write_image, write_kernel, BitDepth, ImageReadOptions,
    ImageWriteOptions, KernelReadOptions, Raster,
};
use crate::kernel::Kernel;
use crate::metrics::{
    delta_baseline_rmse, kernel_rmse_registered, psnr_registered, synthesize_blurry, MetricRow,
    NoiseModel,
};
use crate::pyramid::{blind_estimate_observed, BlindConfig};
use crate::rng::CounterRng;

#[derive(Debug, Parser)]
#[command(
    name = "deblur",
    version,
    about = "Noise-robust blind motion deblurring"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for the parallel kernels (all cores when omitted).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Repeat for more detail (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Treat 8/16-bit PNG samples as sRGB encoded.
    #[arg(long, global = true)]
    pub srgb: bool,
    /// Sample depth of PNG outputs.
    #[arg(long, global = true, value_enum, default_value_t = Depth::Eight)]
    pub depth: Depth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Depth {
    #[value(name = "8")]
    Eight,
    #[value(name = "16")]
    Sixteen,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Blur a sharp image with a kernel and add seeded Gaussian noise.
    Synth(SynthArgs),
    /// Estimate the blur kernel of an observation.
    EstimateKernel(EstimateArgs),
    /// Denoise, then deconvolve with a known kernel.
    Deconv(DeconvArgs),
    /// Estimate the kernel, then denoise and deconvolve.
    Deblur(DeblurArgs),
    /// Compare an estimate with its ground truth and print a CSV row.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct KernelFileArgs {
    /// Clamp negative kernel weights to zero and rescale to unit sum.
    #[arg(long)]
    pub normalize_kernel: bool,
    /// Accept negative kernel weights.
    #[arg(long)]
    pub allow_raw: bool,
}

impl KernelFileArgs {
    fn options(&self) -> KernelReadOptions {
        KernelReadOptions {
            normalize: self.normalize_kernel,
            allow_raw: self.allow_raw,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub kernel: PathBuf,
    /// Noise standard deviation as a fraction of the range.
    #[arg(long, default_value_t = 0.0, value_parser = parse_sigma)]
    pub sigma: f64,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub kernel_file: KernelFileArgs,
}

#[derive(Debug, Args)]
pub struct SigmaArgs {
    /// Noise standard deviation as a fraction of the range.
    #[arg(long, value_parser = parse_sigma)]
    pub sigma: Option<f64>,
    /// Estimate sigma from the input when --sigma is not given.
    #[arg(long)]
    pub estimate_sigma: bool,
}

#[derive(Debug, Args)]
pub struct BlindArgs {
    /// Kernel support, `N` or `WxH`, odd sides.
    #[arg(long)]
    pub kernel_size: KernelSize,
    #[arg(long)]
    pub lambda_min: Option<f64>,
    /// Kernel gradient weight, `200 sigma` by default.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub sigma: SigmaArgs,
    #[command(flatten)]
    pub blind: BlindArgs,
    #[arg(long)]
    pub output_kernel: PathBuf,
    /// Also write the final sharp prediction.
    #[arg(long)]
    pub debug_u: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RestoreArgs {
    /// `builtin`, `none`, or `file:PATH` for a pre-denoised image.
    #[arg(long, default_value = "builtin")]
    pub denoiser: DenoiserArg,
    /// Weight of the l1 gradient prior; `max(1e-4, sigma / 10)` by default.
    #[arg(long)]
    pub lambda_tv: Option<f64>,
    /// Restore only the luminance of color inputs.
    #[arg(long)]
    pub luminance_only: bool,
    /// Skip border tapering.
    #[arg(long)]
    pub no_taper: bool,
}

impl RestoreArgs {
    fn config(&self, sigma: f64) -> Result<DeconvConfig> {
        let mut cfg = DeconvConfig::new(
            self.lambda_tv
                .unwrap_or_else(|| DeconvConfig::default_lambda_tv(sigma)),
        );
        cfg.per_channel = !self.luminance_only;
        cfg.taper = !self.no_taper;
        cfg.validate()?;
        Ok(cfg)
    }

    fn denoiser(&self, srgb: bool) -> DenoiserSpec {
        match &self.denoiser {
            DenoiserArg::Builtin => DenoiserSpec::builtin(),
            DenoiserArg::None => DenoiserSpec::identity(),
            DenoiserArg::File(p) => DenoiserSpec::external(p, ImageReadOptions { srgb }),
        }
    }
}

#[derive(Debug, Args)]
pub struct DeconvArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub kernel: PathBuf,
    #[arg(long, default_value_t = 0.0, value_parser = parse_sigma)]
    pub sigma: f64,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub restore: RestoreArgs,
    #[command(flatten)]
    pub kernel_file: KernelFileArgs,
}

#[derive(Debug, Args)]
pub struct DeblurArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub sigma: SigmaArgs,
    #[command(flatten)]
    pub blind: BlindArgs,
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the estimated kernel.
    #[arg(long)]
    pub output_kernel: Option<PathBuf>,
    #[command(flatten)]
    pub restore: RestoreArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EvalKind {
    Kernel,
    Image,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, required_unless_present = "dataset")]
    pub estimated: Option<PathBuf>,
    #[arg(long, required_unless_present = "dataset")]
    pub ground_truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EvalKind::Kernel)]
    pub kind: EvalKind,
    /// Pixels removed from each side before the image PSNR.
    #[arg(long, default_value_t = 0)]
    pub crop: usize,
    /// Label written in the `method` column.
    #[arg(long, default_value = "estimate")]
    pub method: String,
    /// Noise level written in the `sigma` column.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Print the CSV header before the row.
    #[arg(long)]
    pub header: bool,
    /// Aggregate a dataset directory into a per-method, per-sigma table.
    #[arg(long, conflicts_with_all = ["estimated", "ground_truth"])]
    pub dataset: Option<PathBuf>,
    /// With --dataset: first estimate kernels for every blurry image.
    #[arg(long, requires = "dataset")]
    pub run: bool,
}

/// Odd kernel support parsed from `N` or `WxH`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KernelSize {
    pub width: usize,
    pub height: usize,
}

impl FromStr for KernelSize {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad kernel size `{s}`: {e}"))
        };
        let (width, height) = match s.split_once(['x', 'X']) {
            Some((w, h)) => (parse(w)?, parse(h)?),
            None => {
                let n = parse(s)?;
                (n, n)
            }
        };
        if width == 0 || height == 0 || width % 2 == 0 || height % 2 == 0 {
            return Err(format!(
                "kernel sides must be odd and positive, got {width}x{height}"
            ));
        }
        Ok(Self { width, height })
    }
}

fn parse_sigma(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(v >= 0.0) || !v.is_finite() {
        return Err(format!("sigma must be a finite value >= 0, got {s}"));
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq)]
pub enum DenoiserArg {
    Builtin,
    None,
    File(PathBuf),
}

impl FromStr for DenoiserArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "builtin" => Ok(Self::Builtin),
            "none" => Ok(Self::None),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(Self::File(PathBuf::from(p))),
                _ => Err(format!("expected builtin, none or file:PATH, got `{s}`")),
            },
        }
    }
}

/// Noise level from the median absolute deviation of the finest diagonal
/// Haar subband, `median(|HH|) / 0.6745`.
pub fn estimate_noise_sigma(img: &Image) -> f64 {
    let (w, h) = img.dims();
    let mut hh: Vec<f64> = Vec::with_capacity((w / 2) * (h / 2));
    for y in (0..h - h % 2).step_by(2) {
        for x in (0..w - w % 2).step_by(2) {
            let d = img.get(x, y) - img.get(x + 1, y) - img.get(x, y + 1) + img.get(x + 1, y + 1);
            hh.push((0.5 * d).abs());
        }
    }
    if hh.is_empty() {
        return 0.0;
    }
    hh.sort_by(f64::total_cmp);
    let n = hh.len();
    let median = if n % 2 == 1 {
        hh[n / 2]
    } else {
        0.5 * (hh[n / 2 - 1] + hh[n / 2])
    };
    median / 0.6745
}

/// Files a command has started writing; removed unless the command commits.
struct Outputs {
    paths: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    fn new() -> Self {
        Self {
            paths: Vec::new(),
            committed: false,
        }
    }

    fn claim(&mut self, path: &Path) -> PathBuf {
        self.paths.push(path.to_path_buf());
        path.to_path_buf()
    }

    fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.paths {
                let _ = fs::remove_file(p);
            }
        }
    }
}

fn sidecar_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn write_sidecar(path: &Path, fields: Map<String, Value>) -> Result<()> {
    let text = serde_json::to_string_pretty(&Value::Object(fields))
        .map_err(|e| Error::InvariantViolation(format!("sidecar serialization: {e}")))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn path_value(p: &Path) -> Value {
    Value::String(p.display().to_string())
}

struct Context {
    seed: u64,
    read: ImageReadOptions,
    write: ImageWriteOptions,
}

impl Context {
    fn new(g: &GlobalArgs) -> Self {
        let depth = match g.depth {
            Depth::Eight => BitDepth::Eight,
            Depth::Sixteen => BitDepth::Sixteen,
        };
        Self {
            seed: g.seed,
            read: ImageReadOptions { srgb: g.srgb },
            write: ImageWriteOptions {
                depth,
                srgb: g.srgb,
            },
        }
    }
}

fn resolve_sigma(args: &SigmaArgs, observation: &Image) -> Result<(f64, &'static str)> {
    match (args.sigma, args.estimate_sigma) {
        (Some(s), _) => Ok((s, "given")),
        (None, true) => {
            let s = estimate_noise_sigma(observation);
            info!("estimated sigma = {s:.6}");
            Ok((s, "estimated"))
        }
        (None, false) => Err(Error::InvalidConfig(
            "either --sigma or --estimate-sigma is required".into(),
        )),
    }
}

fn blind_config(args: &BlindArgs, sigma: f64) -> Result<BlindConfig> {
    let mut cfg = BlindConfig::for_noise(sigma);
    if let Some(l) = args.lambda_min {
        cfg = cfg.with_lambda_min(l);
    }
    if let Some(g) = args.gamma {
        cfg.gamma = g;
    }
    if let Some(a) = args.alpha {
        cfg.alpha = a;
    }
    cfg.validate()?;
    info!(
        "effective lambda_min = {}, gamma = {}, alpha = {}",
        cfg.lambda_min, cfg.gamma, cfg.alpha
    );
    Ok(cfg)
}

fn estimate(
    v: &Image,
    size: KernelSize,
    cfg: &BlindConfig,
) -> Result<crate::pyramid::BlindEstimate> {
    blind_estimate_observed(v, (size.width, size.height), cfg, |p| {
        debug!(
            "level {} round {}: residual {:.6e}",
            p.level, p.round, p.energy
        );
    })
}

fn cmd_synth(ctx: &Context, a: &SynthArgs) -> Result<()> {
    let u = read_image(&a.input, &ctx.read)?;
    let k = read_kernel(&a.kernel, &a.kernel_file.options())?;
    let base = CounterRng::new(ctx.seed);
    let channels = u
        .channels
        .iter()
        .enumerate()
        .map(|(c, ch)| {
            let seed = if c == 0 {
                ctx.seed
            } else {
                base.fork(c as u64).seed()
            };
            let noise = NoiseModel::new(a.sigma, seed)?;
            synthesize_blurry(ch, &k, &noise)
        })
        .collect::<Result<_>>()?;

    let mut out = Outputs::new();
    write_image(out.claim(&a.output), &Raster { channels }, &ctx.write)?;
    let mut side = Map::new();
    side.insert("input".into(), path_value(&a.input));
    side.insert("kernel".into(), path_value(&a.kernel));
    side.insert("sigma".into(), json!(a.sigma));
    side.insert("seed".into(), json!(ctx.seed));
    side.insert("output".into(), path_value(&a.output));
    write_sidecar(&out.claim(&sidecar_path(&a.output)), side)?;
    out.commit();
    Ok(())
}

fn cmd_estimate_kernel(ctx: &Context, a: &EstimateArgs) -> Result<()> {
    let v = read_image(&a.input, &ctx.read)?.to_luminance();
    let (sigma, _) = resolve_sigma(&a.sigma, &v)?;
    let cfg = blind_config(&a.blind, sigma)?;
    let est = estimate(&v, a.blind.kernel_size, &cfg)?;

    let mut out = Outputs::new();
    write_kernel(out.claim(&a.output_kernel), &est.kernel)?;
    if let Some(p) = &a.debug_u {
        write_image(out.claim(p), &Raster::gray(est.sharp), &ctx.write)?;
    }
    out.commit();
    Ok(())
}

fn cmd_deconv(ctx: &Context, a: &DeconvArgs) -> Result<()> {
    let v = read_image(&a.input, &ctx.read)?;
    let k = read_kernel(&a.kernel, &a.kernel_file.options())?;
    let dcfg = a.restore.config(a.sigma)?;
    info!("lambda_tv = {}", dcfg.lambda_tv);
    let u = deblur_raster(&v, &k, a.sigma, &dcfg, &a.restore.denoiser(ctx.read.srgb))?;

    let mut out = Outputs::new();
    write_image(out.claim(&a.output), &u, &ctx.write)?;
    out.commit();
    Ok(())
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn cmd_deblur(ctx: &Context, a: &DeblurArgs) -> Result<()> {
    let start = Instant::now();
    let v = read_image(&a.input, &ctx.read)?;
    let lum = v.to_luminance();
    let (sigma, sigma_source) = resolve_sigma(&a.sigma, &lum)?;
    let cfg = blind_config(&a.blind, sigma)?;
    let dcfg = a.restore.config(sigma)?;

    let t = Instant::now();
    let est = estimate(&lum, a.blind.kernel_size, &cfg)?;
    let kernel_ms = ms(t);

    let t = Instant::now();
    let denoised = denoise_raster(&v, sigma, &a.restore.denoiser(ctx.read.srgb))?;
    let denoise_ms = ms(t);

    let t = Instant::now();
    let u = deblur_raster(
        &denoised,
        &est.kernel,
        sigma,
        &dcfg,
        &DenoiserSpec::identity(),
    )?;
    let deconv_ms = ms(t);

    eprintln!("kernel estimation: {kernel_ms:.1} ms");
    eprintln!("denoise: {denoise_ms:.1} ms");
    eprintln!("deconvolution: {deconv_ms:.1} ms");

    let mut out = Outputs::new();
    write_image(out.claim(&a.output), &u, &ctx.write)?;
    if let Some(p) = &a.output_kernel {
        write_kernel(out.claim(p), &est.kernel)?;
    }
    let mut side = Map::new();
    side.insert("input".into(), path_value(&a.input));
    side.insert("output".into(), path_value(&a.output));
    side.insert("sigma".into(), json!(sigma));
    side.insert("sigma_source".into(), json!(sigma_source));
    side.insert("seed".into(), json!(ctx.seed));
    side.insert(
        "kernel_size".into(),
        json!(format!(
            "{}x{}",
            a.blind.kernel_size.width, a.blind.kernel_size.height
        )),
    );
    side.insert("lambda_min".into(), json!(cfg.lambda_min));
    side.insert("gamma".into(), json!(cfg.gamma));
    side.insert("alpha".into(), json!(cfg.alpha));
    side.insert("lambda_tv".into(), json!(dcfg.lambda_tv));
    side.insert("kernel_estimation_ms".into(), json!(kernel_ms));
    side.insert("denoise_ms".into(), json!(denoise_ms));
    side.insert("deconvolution_ms".into(), json!(deconv_ms));
    side.insert("total_ms".into(), json!(ms(start)));
    write_sidecar(&out.claim(&sidecar_path(&a.output)), side)?;
    out.commit();
    Ok(())
}

fn eval_row(ctx: &Context, a: &EvalArgs, est: &Path, gt: &Path) -> Result<MetricRow> {
    let mut row = MetricRow {
        method: a.method.clone(),
        sigma: a.sigma,
        ..Default::default()
    };
    match a.kind {
        EvalKind::Kernel => {
            let opts = KernelReadOptions {
                normalize: false,
                allow_raw: true,
            };
            let (rmse, reg) =
                kernel_rmse_registered(&read_kernel(est, &opts)?, &read_kernel(gt, &opts)?);
            row.rmse = Some(rmse);
            row.shift = Some(reg.shift);
        }
        EvalKind::Image => {
            let e = read_image(est, &ctx.read)?.to_luminance();
            let g = read_image(gt, &ctx.read)?.to_luminance();
            let (psnr, reg) = psnr_registered(&e, &g, a.crop)?;
            row.psnr_db = Some(psnr);
            row.shift = Some(reg.shift);
        }
    }
    Ok(row)
}

fn cmd_eval(ctx: &Context, a: &EvalArgs) -> Result<()> {
    if let Some(dir) = &a.dataset {
        if a.run {
            run_dataset(dir)?;
        }
        print!("{}", eval_dataset(dir)?);
        return Ok(());
    }
    let (Some(est), Some(gt)) = (&a.estimated, &a.ground_truth) else {
        return Err(Error::InvalidConfig(
            "--estimated and --ground-truth are required".into(),
        ));
    };
    let row = eval_row(ctx, a, est, gt)?;
    if a.header {
        println!("{}", MetricRow::HEADER);
    }
    println!("{row}");
    Ok(())
}

/// Noise level encoded in a `sigma_XX` directory name, `XX` in percent.
fn sigma_of_dir(name: &str) -> Option<f64> {
    name.strip_prefix("sigma_")?
        .parse::<f64>()
        .ok()
        .map(|p| p / 100.0)
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    v.sort();
    Ok(v)
}

fn file_stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn dir_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Name of the method directory written by `eval --dataset DIR --run`.
pub const DATASET_METHOD: &str = "deblur";

/// Estimates a kernel for every `DIR/blurry/sigma_XX/NAME.{pfm,png}`, sized
/// like `DIR/gt/NAME.txt`, into `DIR/deblur/sigma_XX/NAME.txt`.
pub fn run_dataset(dir: &Path) -> Result<()> {
    let blurry = dir.join("blurry");
    let opts = KernelReadOptions {
        normalize: false,
        allow_raw: true,
    };
    for sdir in sorted_entries(&blurry)? {
        let Some(sigma) = sigma_of_dir(&dir_name(&sdir)) else {
            continue;
        };
        let out_dir = dir.join(DATASET_METHOD).join(dir_name(&sdir));
        fs::create_dir_all(&out_dir)?;
        for img_path in sorted_entries(&sdir)? {
            let name = file_stem(&img_path);
            let gt_path = dir.join("gt").join(format!("{name}.txt"));
            if !gt_path.exists() {
                continue;
            }
            let gt = read_kernel(&gt_path, &opts)?;
            let v = read_image(&img_path, &ImageReadOptions::default())?.to_luminance();
            let size = KernelSize {
                width: gt.width(),
                height: gt.height(),
            };
            let est = estimate(&v, size, &BlindConfig::for_noise(sigma))?;
            write_kernel(out_dir.join(format!("{name}.txt")), &est.kernel)?;
            info!("{name} at sigma {sigma}: done");
        }
    }
    Ok(())
}

/// Mean registered kernel RMSE per method and noise level.
///
/// Layout: ground truth in `DIR/gt/NAME.txt`; estimates of each method in
/// `DIR/METHOD/sigma_XX/NAME.txt`. The `delta` row is the centered-delta
/// baseline over every ground-truth kernel.
pub fn eval_dataset(dir: &Path) -> Result<String> {
    let opts = KernelReadOptions {
        normalize: false,
        allow_raw: true,
    };
    let mut gts = BTreeMap::new();
    for p in sorted_entries(&dir.join("gt"))? {
        if p.extension().is_some_and(|e| e == "txt") {
            gts.insert(file_stem(&p), read_kernel(&p, &opts)?);
        }
    }
    if gts.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no ground-truth kernels in {}",
            dir.join("gt").display()
        )));
    }

    // method -> sigma key -> (sigma, rmse values)
    let mut table: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    let mut sigmas: BTreeMap<String, f64> = BTreeMap::new();
    for mdir in sorted_entries(dir)? {
        let method = dir_name(&mdir);
        if !mdir.is_dir() || method == "gt" || method == "blurry" {
            continue;
        }
        for sdir in sorted_entries(&mdir)? {
            let key = dir_name(&sdir);
            let Some(sigma) = sigma_of_dir(&key) else {
                continue;
            };
            for kp in sorted_entries(&sdir)? {
                let Some(gt) = gts.get(&file_stem(&kp)) else {
                    continue;
                };
                let est: Kernel = read_kernel(&kp, &opts)?;
                let (rmse, _) = kernel_rmse_registered(&est, gt);
                table
                    .entry(method.clone())
                    .or_default()
                    .entry(key.clone())
                    .or_default()
                    .push(rmse);
                sigmas.insert(key.clone(), sigma);
            }
        }
    }

    let mut cols: Vec<(String, f64)> = sigmas.into_iter().collect();
    cols.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut csv = String::from("method");
    for (_, s) in &cols {
        csv.push_str(&format!(",sigma={}%", s * 100.0));
    }
    csv.push('\n');
    let baseline = gts.values().map(delta_baseline_rmse).sum::<f64>() / gts.len() as f64;
    csv.push_str("delta");
    for _ in &cols {
        csv.push_str(&format!(",{baseline:.6}"));
    }
    csv.push('\n');
    for (method, per_sigma) in &table {
        csv.push_str(method);
        for (key, _) in &cols {
            match per_sigma.get(key) {
                Some(v) => csv.push_str(&format!(",{:.6}", v.iter().sum::<f64>() / v.len() as f64)),
                None => csv.push(','),
            }
        }
        csv.push('\n');
    }
    Ok(csv)
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .format_target(false)
        .try_init();
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(Error::InvalidConfig("--threads must be >= 1".into()));
        }
        // A pool may already exist when called twice in one process.
        if rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .is_err()
        {
            debug!("global thread pool already initialized");
        }
    }
    let ctx = Context::new(&cli.global);
    match &cli.command {
        Command::Synth(a) => cmd_synth(&ctx, a),
        Command::EstimateKernel(a) => cmd_estimate_kernel(&ctx, a),
        Command::Deconv(a) => cmd_deconv(&ctx, a),
        Command::Deblur(a) => cmd_deblur(&ctx, a),
        Command::Eval(a) => cmd_eval(&ctx, a),
    }
}

/// Entry point of the `deblur` binary.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.global.verbose);
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
