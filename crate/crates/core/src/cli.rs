//! The `softedge` command line.
//!
//! Every subcommand reads its inputs completely, computes, and then writes all
//! outputs through a staging step (temporary files renamed into place), so a
//! failing command leaves no partial results. Generating commands also write a
//! JSON Lines manifest next to their outputs; evaluation commands write a
//! JSON report.
//!
//! Exit codes: `0` success, `1` usage error, `2` data, format or I/O error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::curation::{
    green_composite, make_depth_training_pair, make_view_training_sequence, DepthPairParams,
    ViewSequenceParams,
};
use crate::error::{Error, FormatError};
use crate::imagecore::{
    BinaryMask, CameraIntrinsics, DepthConvention, FlowField, ImageRgb, RigidPose, ScalarMap,
};
use crate::losses::{
    color_fuse_loss, evaluate_loss, loss_gradient, LossKind, LossParams, MaskNormalization,
};
use crate::mapio::{
    mask_from_gray, read_flo, read_pfm, read_pfm_with_endianness, read_pnm, write_flo,
    write_manifest, write_pfm, write_pgm_mask, write_ppm, Endianness, PnmImage, SampleKind,
    SampleManifest,
};
use crate::metrics::{
    absrel_delta1, dbe, depth_edges, edge_pr, psnr, rmse, siou_standin, ssim, Report, RmseScale,
};
use crate::paintfuse::{anaglyph, masked_color_fuse, pushpull_inpaint};
use crate::pipeline::{stereo_pipeline, DisparityModel, StereoOptions};
use crate::refine::{gated_residual, oracle_gate_and_residual, refinement_region};
use crate::warp::{
    depth_to_disparity, forward_warp_disparity, forward_warp_flow, inverse_depth_to_disparity,
    reproject_warp, SplatConfig,
};

#[derive(Debug, Parser)]
#[command(name = "softedge", version, about = "Soft-boundary depth refinement and view synthesis toolkit")]
struct Cli {
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true, env = "GOTH_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build depth-refinement training pairs from a matte and two depth maps.
    CurateDepth(CurateDepthArgs),
    /// Build a view-synthesis training sequence from a matted foreground.
    CurateViews(CurateViewsArgs),
    /// Composite a foreground over pure green for an external depth model.
    GreenComposite(GreenCompositeArgs),
    /// Forward-warp an image to the right stereo view.
    WarpStereo(WarpStereoArgs),
    /// Forward-warp an image along an optical flow field.
    WarpFlow(WarpFlowArgs),
    /// Render an image from a new camera pose using metric depth.
    Reproject(ReprojectArgs),
    /// Apply gated-residual refinement to a depth map.
    Refine(RefineArgs),
    /// Fill uncovered pixels with push-pull inpainting.
    Inpaint(InpaintArgs),
    /// Blend a warped image with an inpainted one.
    Fuse(FuseArgs),
    /// Red-cyan anaglyph of a stereo pair.
    Anaglyph(AnaglyphArgs),
    /// AbsRel and delta1 of a depth prediction.
    EvalDepth(EvalDepthArgs),
    /// Depth boundary metrics (DBE, edge precision and recall).
    EvalBoundary(EvalBoundaryArgs),
    /// Pixel and edge-overlap metrics of a synthesized view.
    EvalStereo(EvalStereoArgs),
    /// Evaluate a training loss and optionally its gradient.
    Loss(LossArgs),
    /// Full monocular-to-stereo conversion.
    PipelineStereo(PipelineStereoArgs),
}

#[derive(Debug, Args)]
struct CurateDepthArgs {
    /// Alpha matte (PFM or PGM).
    #[arg(long)]
    alpha: PathBuf,
    /// Inverse depth of the green-composited foreground.
    #[arg(long)]
    fg_depth: PathBuf,
    /// Inverse depth of the background.
    #[arg(long)]
    bg_depth: PathBuf,
    #[arg(long)]
    d_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Samples to generate with seeds `seed, seed+1, ...`; more than one puts
    /// each sample in its own subdirectory.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0.02)]
    alpha_min: f64,
    #[arg(long, default_value_t = 0.98)]
    alpha_max: f64,
    #[arg(long, default_value_t = 0.5)]
    sigma_lo: f64,
    #[arg(long, default_value_t = 3.0)]
    sigma_hi: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CurateViewsArgs {
    #[arg(long)]
    fg: PathBuf,
    #[arg(long)]
    alpha: PathBuf,
    /// Background frames, first one is the source view.
    #[arg(long, num_args = 1.., required = true)]
    bg_frames: Vec<PathBuf>,
    /// Flows from background frame 0 to each frame.
    #[arg(long, num_args = 1.., required = true)]
    bg_flows: Vec<PathBuf>,
    #[arg(long)]
    displacement_max: f64,
    #[arg(long, default_value_t = 0.02)]
    alpha_th: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GreenCompositeArgs {
    #[arg(long)]
    fg: PathBuf,
    #[arg(long)]
    alpha: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Clone)]
struct SplatArgs {
    #[arg(long, default_value_t = 1e-3)]
    z_epsilon: f64,
    #[arg(long, default_value_t = 0.25)]
    coverage_min: f64,
    /// Source rows per parallel tile (default: whole image).
    #[arg(long)]
    tile_rows: Option<usize>,
}

impl SplatArgs {
    fn config(&self) -> SplatConfig {
        SplatConfig {
            z_epsilon: self.z_epsilon,
            coverage_min: self.coverage_min,
            tile_rows: self.tile_rows,
        }
    }

    fn record(&self, m: SampleManifest) -> SampleManifest {
        let m = m
            .with_param("z_epsilon", self.z_epsilon)
            .with_param("coverage_min", self.coverage_min);
        match self.tile_rows {
            Some(t) => m.with_param("tile_rows", t as f64),
            None => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConventionArg {
    Inverse,
    Metric,
}

impl ConventionArg {
    fn convention(self) -> DepthConvention {
        match self {
            ConventionArg::Inverse => DepthConvention::InverseDepth,
            ConventionArg::Metric => DepthConvention::MetricDepth,
        }
    }
}

#[derive(Debug, Args, Clone)]
struct DisparityArgs {
    /// Convention of the depth map.
    #[arg(long, value_enum, default_value_t = ConventionArg::Inverse)]
    convention: ConventionArg,
    /// Focal length times baseline, for metric depth.
    #[arg(long = "fb")]
    f_b: Option<f64>,
    /// Disparity per unit of inverse depth.
    #[arg(long)]
    scale: Option<f64>,
}

impl DisparityArgs {
    fn model(&self) -> Result<DisparityModel, Failure> {
        match (self.convention, self.f_b, self.scale) {
            (ConventionArg::Metric, Some(f_b), None) => Ok(DisparityModel::Metric { f_b }),
            (ConventionArg::Inverse, None, Some(scale)) => Ok(DisparityModel::InverseScale { scale }),
            (ConventionArg::Metric, _, _) => Err(usage("metric depth needs --fb (and no --scale)")),
            (ConventionArg::Inverse, _, _) => Err(usage("inverse depth needs --scale (and no --fb)")),
        }
    }
}

fn record_model(m: SampleManifest, model: DisparityModel) -> SampleManifest {
    match model {
        DisparityModel::Metric { f_b } => m.with_param("fb", f_b),
        DisparityModel::InverseScale { scale } => m.with_param("scale", scale),
    }
}

#[derive(Debug, Args)]
struct WarpStereoArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    depth: PathBuf,
    #[command(flatten)]
    disparity: DisparityArgs,
    #[command(flatten)]
    splat: SplatArgs,
    #[arg(long)]
    out: PathBuf,
    /// Also write the coverage mask (PGM).
    #[arg(long)]
    coverage: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct WarpFlowArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    flow: PathBuf,
    /// Occlusion priority, larger is nearer (PFM).
    #[arg(long)]
    priority: Option<PathBuf>,
    #[command(flatten)]
    splat: SplatArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    coverage: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReprojectArgs {
    #[arg(long)]
    image: PathBuf,
    /// Metric depth (PFM).
    #[arg(long)]
    depth: PathBuf,
    /// `fx,fy,cx,cy` of the source camera.
    #[arg(long, value_delimiter = ',', num_args = 4, allow_negative_numbers = true)]
    intrinsics: Vec<f64>,
    /// `fx,fy,cx,cy` of the target camera (default: source).
    #[arg(long, value_delimiter = ',', num_args = 4, allow_negative_numbers = true)]
    intrinsics_out: Option<Vec<f64>>,
    /// Row-major 3x3 rotation, nine comma-separated values (default: identity).
    #[arg(long, value_delimiter = ',', num_args = 9, allow_negative_numbers = true)]
    rotation: Option<Vec<f64>>,
    /// `tx,ty,tz` applied after the rotation.
    #[arg(long, value_delimiter = ',', num_args = 3, allow_negative_numbers = true, default_value = "0,0,0")]
    translation: Vec<f64>,
    #[command(flatten)]
    splat: SplatArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    coverage: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RefineArgs {
    #[arg(long)]
    d_in: PathBuf,
    /// Gate map in [0, 1]; requires --residual.
    #[arg(long)]
    gate: Option<PathBuf>,
    /// Residual depth; requires --gate.
    #[arg(long)]
    residual: Option<PathBuf>,
    /// Derive gate and residual from a ground-truth matte (with --d-gt).
    #[arg(long)]
    oracle_alpha: Option<PathBuf>,
    #[arg(long)]
    d_gt: Option<PathBuf>,
    #[arg(long, default_value_t = 0.02)]
    alpha_min: f64,
    #[arg(long, default_value_t = 0.98)]
    alpha_max: f64,
    #[arg(long, value_enum, default_value_t = ConventionArg::Inverse)]
    convention: ConventionArg,
    #[arg(long)]
    out: PathBuf,
    /// Also write the refinement region (PGM).
    #[arg(long)]
    region: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InpaintArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    coverage: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FuseArgs {
    #[arg(long)]
    warped: PathBuf,
    #[arg(long)]
    inpainted: PathBuf,
    #[arg(long)]
    coverage: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    feather_sigma: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AnaglyphArgs {
    #[arg(long)]
    left: PathBuf,
    #[arg(long)]
    right: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalDepthArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Valid pixels (default: positive ground truth).
    #[arg(long)]
    valid: Option<PathBuf>,
    /// Least-squares scale and shift alignment before scoring.
    #[arg(long)]
    align: bool,
    /// Restrict to the refinement region of this gate map.
    #[arg(long)]
    gate: Option<PathBuf>,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Debug, Args)]
struct EvalBoundaryArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    edge_threshold: f64,
    #[arg(long, default_value_t = 10.0)]
    cap: f64,
    #[arg(long, default_value_t = 1.0)]
    tol: f64,
    /// Keep only edges inside the refinement region of this gate map.
    #[arg(long)]
    gate: Option<PathBuf>,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScaleArg {
    Unit,
    #[value(name = "8bit")]
    EightBit,
}

#[derive(Debug, Args)]
struct EvalStereoArgs {
    #[arg(long)]
    gen: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, value_enum, default_value_t = ScaleArg::EightBit)]
    rmse_scale: ScaleArg,
    #[arg(long, default_value_t = 1)]
    dilate: usize,
    /// Restrict RMSE to the refinement region of this gate map.
    #[arg(long)]
    gate: Option<PathBuf>,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NormArg {
    All,
    Masked,
}

#[derive(Debug, Args)]
struct LossArgs {
    /// l1, gradient, laplacian, matting, stage1, stage2 or color_fuse.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Restricts l1; the soft mask of stage1.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    levels: usize,
    #[arg(long, value_enum, default_value_t = NormArg::All)]
    normalization: NormArg,
    /// Externally computed perceptual distance, for color_fuse.
    #[arg(long)]
    perceptual: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    /// Write the gradient with respect to the prediction (PFM).
    #[arg(long)]
    gradient_out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PipelineStereoArgs {
    #[arg(long)]
    left: PathBuf,
    #[arg(long)]
    depth: PathBuf,
    #[command(flatten)]
    disparity: DisparityArgs,
    #[arg(long)]
    gate: Option<PathBuf>,
    #[arg(long)]
    residual: Option<PathBuf>,
    /// Painter override.
    #[arg(long)]
    inpainted: Option<PathBuf>,
    /// Fuser override.
    #[arg(long)]
    fused: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    feather_sigma: f64,
    #[command(flatten)]
    splat: SplatArgs,
    #[arg(long)]
    out: PathBuf,
    /// Write every intermediate into this directory.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
    /// Ground-truth right view; with --report, scores the output.
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(Error),
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e.root() {
            Error::InvalidParameter { .. } | Error::UnknownLoss(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e),
        }
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Failure::Data(e.into())
    }
}

type CmdResult = Result<(), Failure>;

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.threads {
        Some(0) => Err(usage("--threads must be positive")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cli.command)),
            Err(e) => Err(Failure::Data(Error::InvalidValue(format!("thread pool: {e}")))),
        },
        None => execute(cli.command),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cmd: Command) -> CmdResult {
    match cmd {
        Command::CurateDepth(a) => curate_depth(a),
        Command::CurateViews(a) => curate_views(a),
        Command::GreenComposite(a) => green(a),
        Command::WarpStereo(a) => warp_stereo(a),
        Command::WarpFlow(a) => warp_flow(a),
        Command::Reproject(a) => reproject(a),
        Command::Refine(a) => refine(a),
        Command::Inpaint(a) => inpaint(a),
        Command::Fuse(a) => fuse(a),
        Command::Anaglyph(a) => anaglyph_cmd(a),
        Command::EvalDepth(a) => eval_depth(a),
        Command::EvalBoundary(a) => eval_boundary(a),
        Command::EvalStereo(a) => eval_stereo(a),
        Command::Loss(a) => loss(a),
        Command::PipelineStereo(a) => pipeline_stereo(a),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads input files and remembers their content hashes.
#[derive(Default)]
struct Inputs {
    hashes: BTreeMap<String, String>,
}

impl Inputs {
    fn bytes(&mut self, path: &Path) -> Result<Vec<u8>, Failure> {
        let bytes = fs::read(path).map_err(|e| {
            Failure::Data(Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            )))
        })?;
        self.hashes.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }

    fn scalar(&mut self, path: &Path) -> Result<ScalarMap, Failure> {
        decode_scalar(&self.bytes(path)?)
    }

    fn depth(&mut self, path: &Path, convention: DepthConvention) -> Result<ScalarMap, Failure> {
        Ok(self.scalar(path)?.with_convention(convention)?)
    }

    fn image(&mut self, path: &Path) -> Result<ImageRgb, Failure> {
        match read_pnm(&self.bytes(path)?)? {
            PnmImage::Rgb(img) => Ok(img),
            PnmImage::Gray(g) => Ok(ImageRgb::from_fn(g.width(), g.height(), |x, y| [g.get(x, y); 3])?),
        }
    }

    fn mask(&mut self, path: &Path) -> Result<BinaryMask, Failure> {
        Ok(mask_from_gray(&self.scalar(path)?))
    }

    fn flow(&mut self, path: &Path) -> Result<FlowField, Failure> {
        Ok(read_flo(&self.bytes(path)?)?)
    }

    fn json(&self) -> Value {
        Value::Object(
            self.hashes
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect(),
        )
    }
}

/// PFM or P5, sniffed from the magic bytes.
fn decode_scalar(bytes: &[u8]) -> Result<ScalarMap, Failure> {
    if bytes.starts_with(b"P5") {
        match read_pnm(bytes)? {
            PnmImage::Gray(m) => Ok(m),
            PnmImage::Rgb(_) => unreachable!("P5 decodes to gray"),
        }
    } else {
        Ok(read_pfm(bytes)?)
    }
}

fn pfm(map: &ScalarMap) -> Result<Vec<u8>, Failure> {
    Ok(write_pfm(map, Endianness::Little)?)
}

/// Output files written together: all to temporaries first, then renamed.
#[derive(Default)]
struct Staged {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Staged {
    fn add(&mut self, path: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((path.into(), bytes));
    }

    fn commit(self) -> Result<(), Failure> {
        let mut temps: Vec<(PathBuf, &Path)> = Vec::new();
        let result = (|| -> std::io::Result<()> {
            for (path, bytes) in &self.files {
                let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
                fs::create_dir_all(dir)?;
                let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
                let mut f = fs::File::create(&tmp)?;
                temps.push((tmp, path.as_path()));
                f.write_all(bytes)?;
                f.sync_all()?;
            }
            for (tmp, path) in &temps {
                fs::rename(tmp, path)?;
            }
            Ok(())
        })();
        if let Err(e) = result {
            for (tmp, _) in &temps {
                let _ = fs::remove_file(tmp);
            }
            return Err(Failure::Data(e.into()));
        }
        Ok(())
    }
}

/// Path of `target` as seen from `dir` when it lives there, else as given.
fn relative(dir: &Path, target: &Path) -> String {
    match (target.parent(), target.file_name()) {
        (Some(p), Some(name)) if p == dir || (p.as_os_str().is_empty() && dir == Path::new("")) => {
            name.to_string_lossy().into_owned()
        }
        _ => target.display().to_string(),
    }
}

fn manifest_path_for(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.manifest.jsonl"))
}

/// Adds the manifest of a derived (non-curation) output set: the primary
/// output `out` plus any extra `(role, path)` files already staged.
fn stage_derived(
    staged: &mut Staged,
    command: &str,
    out: &Path,
    roles: &[(&str, &Path)],
    inputs: &Inputs,
    params: impl FnOnce(SampleManifest) -> SampleManifest,
) -> Result<(), Failure> {
    let manifest_path = manifest_path_for(out);
    let dir = manifest_path.parent().unwrap_or(Path::new("")).to_path_buf();
    let mut hasher = Sha256::new();
    for (_, bytes) in &staged.files {
        hasher.update(bytes);
    }
    let digest = hex::encode(hasher.finalize());
    let mut m = SampleManifest::new(format!("{command}-{}", &digest[..16]), SampleKind::Derived, 0);
    for (role, path) in roles {
        m = m.with_path(role, &relative(&dir, path));
    }
    let mut m = params(m);
    m.extra.insert("command".into(), Value::String(command.into()));
    m.extra.insert("inputs".into(), inputs.json());
    let mut line = write_manifest(&m)?;
    line.push('\n');
    staged.add(manifest_path, line.into_bytes());
    Ok(())
}

fn curate_depth(a: CurateDepthArgs) -> CmdResult {
    if a.count == 0 {
        return Err(usage("--count must be positive"));
    }
    let mut inputs = Inputs::default();
    let alpha = inputs.scalar(&a.alpha)?;
    let d_fg = inputs.depth(&a.fg_depth, DepthConvention::InverseDepth)?;
    let d_bg = inputs.depth(&a.bg_depth, DepthConvention::InverseDepth)?;
    let seeds: Vec<u64> = (0..a.count as u64).map(|i| a.seed.wrapping_add(i)).collect();
    let samples: Vec<_> = seeds
        .par_iter()
        .map(|seed| {
            let params = DepthPairParams {
                alpha_min: a.alpha_min,
                alpha_max: a.alpha_max,
                d_max: a.d_max,
                sigma_lo: a.sigma_lo,
                sigma_hi: a.sigma_hi,
                seed: *seed,
            };
            make_depth_training_pair(&alpha, &d_fg, &d_bg, &params)
        })
        .collect::<Result<_, _>>()?;

    let mut staged = Staged::default();
    let mut lines = String::new();
    for pair in samples {
        let sub = if a.count > 1 { pair.manifest.sample_id.clone() } else { String::new() };
        let dir = a.out.join(&sub);
        let mut m = pair.manifest;
        for (role, bytes) in [
            ("d_in", pfm(&pair.d_in)?),
            ("d_gt", pfm(&pair.d_gt)?),
            ("m_soft", write_pgm_mask(&pair.m_soft)),
        ] {
            let file = m.paths[role].clone();
            staged.add(dir.join(&file), bytes);
            if !sub.is_empty() {
                m.paths.insert(role.into(), format!("{sub}/{file}"));
            }
        }
        m.extra.insert("inputs".into(), inputs.json());
        lines.push_str(&write_manifest(&m)?);
        lines.push('\n');
    }
    staged.add(a.out.join("manifest.jsonl"), lines.into_bytes());
    staged.commit()
}

fn curate_views(a: CurateViewsArgs) -> CmdResult {
    if a.bg_frames.len() != a.bg_flows.len() {
        return Err(usage(format!(
            "{} background frames but {} flows",
            a.bg_frames.len(),
            a.bg_flows.len()
        )));
    }
    let mut inputs = Inputs::default();
    let fg = inputs.image(&a.fg)?;
    let alpha = inputs.scalar(&a.alpha)?;
    let frames = a.bg_frames.iter().map(|p| inputs.image(p)).collect::<Result<Vec<_>, _>>()?;
    let flows = a.bg_flows.iter().map(|p| inputs.flow(p)).collect::<Result<Vec<_>, _>>()?;
    let mut params = ViewSequenceParams::new(a.displacement_max, frames.len(), a.seed);
    params.alpha_th = a.alpha_th;
    let seq = make_view_training_sequence(&fg, &alpha, &frames, &flows, &params)?;

    let mut staged = Staged::default();
    let m = &seq.manifest;
    staged.add(a.out.join(&m.paths["source"]), write_ppm(&seq.source));
    for (k, f) in seq.frames.iter().enumerate() {
        staged.add(a.out.join(&m.paths[&format!("flow_{k}")]), write_flo(&f.flow)?);
        staged.add(a.out.join(&m.paths[&format!("gt_{k}")]), write_ppm(&f.gt));
        staged.add(a.out.join(&m.paths[&format!("warped_{k}")]), write_ppm(&f.warped));
        staged.add(a.out.join(&m.paths[&format!("mask_{k}")]), write_pgm_mask(&f.coverage));
    }
    let mut m = seq.manifest.clone();
    m.extra.insert("inputs".into(), inputs.json());
    let mut line = write_manifest(&m)?;
    line.push('\n');
    staged.add(a.out.join("manifest.jsonl"), line.into_bytes());
    staged.commit()
}

fn green(a: GreenCompositeArgs) -> CmdResult {
    let mut inputs = Inputs::default();
    let fg = inputs.image(&a.fg)?;
    let alpha = inputs.scalar(&a.alpha)?;
    let out = green_composite(&fg, &alpha)?;
    let mut staged = Staged::default();
    staged.add(&a.out, write_ppm(&out));
    stage_derived(&mut staged, "green-composite", &a.out, &[("composite", &a.out)], &inputs, |m| m)?;
    staged.commit()
}

fn stage_warp(
    staged: &mut Staged,
    command: &str,
    out: &Path,
    coverage_out: Option<&PathBuf>,
    warped: &crate::warp::Warped,
    inputs: &Inputs,
    params: impl FnOnce(SampleManifest) -> SampleManifest,
) -> Result<(), Failure> {
    staged.add(out, write_ppm(&warped.image));
    let mut roles: Vec<(&str, &Path)> = vec![("warped", out)];
    if let Some(c) = coverage_out {
        staged.add(c, write_pgm_mask(&warped.coverage));
        roles.push(("coverage", c));
    }
    stage_derived(staged, command, out, &roles, inputs, params)
}

fn warp_stereo(a: WarpStereoArgs) -> CmdResult {
    let model = a.disparity.model()?;
    let mut inputs = Inputs::default();
    let img = inputs.image(&a.image)?;
    let depth = inputs.depth(&a.depth, a.disparity.convention.convention())?;
    let (disp, zbuf) = match model {
        DisparityModel::Metric { f_b } => (
            depth_to_disparity(&depth, f_b)?,
            depth.map_unchecked(DepthConvention::Unitless, |d| 1.0 / d),
        ),
        DisparityModel::InverseScale { scale } => (inverse_depth_to_disparity(&depth, scale)?, depth.clone()),
    };
    let warped = forward_warp_disparity(&img, &disp, &zbuf, &a.splat.config())?;
    let mut staged = Staged::default();
    stage_warp(&mut staged, "warp-stereo", &a.out, a.coverage.as_ref(), &warped, &inputs, |m| {
        a.splat.record(record_model(m, model))
    })?;
    staged.commit()
}

fn warp_flow(a: WarpFlowArgs) -> CmdResult {
    let mut inputs = Inputs::default();
    let img = inputs.image(&a.image)?;
    let flow = inputs.flow(&a.flow)?;
    let prio = a.priority.as_ref().map(|p| inputs.scalar(p)).transpose()?;
    let warped = forward_warp_flow(&img, &flow, prio.as_ref(), &a.splat.config())?;
    let mut staged = Staged::default();
    stage_warp(&mut staged, "warp-flow", &a.out, a.coverage.as_ref(), &warped, &inputs, |m| a.splat.record(m))?;
    staged.commit()
}

fn intrinsics(v: &[f64]) -> Result<CameraIntrinsics, Failure> {
    Ok(CameraIntrinsics::new(v[0], v[1], v[2], v[3])?)
}

fn reproject(a: ReprojectArgs) -> CmdResult {
    let k = intrinsics(&a.intrinsics)?;
    let k_out = match &a.intrinsics_out {
        Some(v) => intrinsics(v)?,
        None => k,
    };
    let rotation = match &a.rotation {
        Some(r) => nalgebra::Matrix3::from_row_slice(r),
        None => nalgebra::Matrix3::identity(),
    };
    let t = nalgebra::Vector3::new(a.translation[0], a.translation[1], a.translation[2]);
    let pose = RigidPose::new(rotation, t)?;
    let mut inputs = Inputs::default();
    let img = inputs.image(&a.image)?;
    let depth = inputs.depth(&a.depth, DepthConvention::MetricDepth)?;
    let warped = reproject_warp(&img, &depth, &k, &pose, &k_out, &a.splat.config())?;
    let mut staged = Staged::default();
    stage_warp(&mut staged, "reproject", &a.out, a.coverage.as_ref(), &warped, &inputs, |m| {
        let mut m = a.splat.record(m);
        for (i, v) in a.translation.iter().enumerate() {
            m = m.with_param(&format!("t{i}"), *v);
        }
        m
    })?;
    staged.commit()
}

fn refine(a: RefineArgs) -> CmdResult {
    let conv = a.convention.convention();
    let mut inputs = Inputs::default();
    let d_in_bytes = inputs.bytes(&a.d_in)?;
    let (d_in, endian) = read_pfm_with_endianness(&d_in_bytes)?;
    let d_in = d_in.with_convention(conv)?;
    let (gate, residual) = match (&a.gate, &a.residual, &a.oracle_alpha, &a.d_gt) {
        (Some(g), Some(r), None, None) => (inputs.scalar(g)?, inputs.depth(r, conv)?),
        (None, None, Some(al), Some(gt)) => {
            let alpha = inputs.scalar(al)?;
            let d_gt = inputs.depth(gt, conv)?;
            oracle_gate_and_residual(&alpha, &d_gt, a.alpha_min, a.alpha_max)?
        }
        (Some(_), None, _, _) | (None, Some(_), _, _) => {
            return Err(usage("--gate and --residual must be given together"))
        }
        _ => return Err(usage("give either --gate with --residual, or --oracle-alpha with --d-gt")),
    };
    let d_hat = gated_residual(&d_in, &residual, &gate)?;
    let mut staged = Staged::default();
    staged.add(&a.out, write_pfm(&d_hat, endian)?);
    let mut roles: Vec<(&str, &Path)> = vec![("d_hat", &a.out)];
    if let Some(r) = &a.region {
        staged.add(r, write_pgm_mask(&refinement_region(&gate, 1.0)));
        roles.push(("region", r));
    }
    stage_derived(&mut staged, "refine", &a.out, &roles, &inputs, |m| {
        if a.oracle_alpha.is_some() {
            m.with_param("alpha_min", a.alpha_min).with_param("alpha_max", a.alpha_max)
        } else {
            m
        }
    })?;
    staged.commit()
}

fn inpaint(a: InpaintArgs) -> CmdResult {
    let mut inputs = Inputs::default();
    let img = inputs.image(&a.image)?;
    let cov = inputs.mask(&a.coverage)?;
    let out = pushpull_inpaint(&img, &cov)?;
    let mut staged = Staged::default();
    staged.add(&a.out, write_ppm(&out));
    stage_derived(&mut staged, "inpaint", &a.out, &[("inpainted", &a.out)], &inputs, |m| m)?;
    staged.commit()
}

fn fuse(a: FuseArgs) -> CmdResult {
    let mut inputs = Inputs::default();
    let warped = inputs.image(&a.warped)?;
    let inpainted = inputs.image(&a.inpainted)?;
    let cov = inputs.mask(&a.coverage)?;
    let out = masked_color_fuse(&warped, &inpainted, &cov, a.feather_sigma)?;
    let mut staged = Staged::default();
    staged.add(&a.out, write_ppm(&out));
    stage_derived(&mut staged, "fuse", &a.out, &[("fused", &a.out)], &inputs, |m| {
        m.with_param("feather_sigma", a.feather_sigma)
    })?;
    staged.commit()
}

fn anaglyph_cmd(a: AnaglyphArgs) -> CmdResult {
    let mut inputs = Inputs::default();
    let left = inputs.image(&a.left)?;
    let right = inputs.image(&a.right)?;
    let out = anaglyph(&left, &right)?;
    let mut staged = Staged::default();
    staged.add(&a.out, write_ppm(&out));
    stage_derived(&mut staged, "anaglyph", &a.out, &[("anaglyph", &a.out)], &inputs, |m| m)?;
    staged.commit()
}

fn write_report(path: &Path, mut report: Report, inputs: &Inputs) -> CmdResult {
    report.inputs = inputs.hashes.clone();
    let mut staged = Staged::default();
    let mut text = report.to_json()?;
    text.push('\n');
    staged.add(path, text.into_bytes());
    staged.commit()
}

fn region_of(inputs: &mut Inputs, gate: Option<&PathBuf>) -> Result<Option<BinaryMask>, Failure> {
    gate.map(|g| inputs.scalar(g).map(|g| refinement_region(&g, 1.0))).transpose()
}

fn eval_depth(a: EvalDepthArgs) -> CmdResult {
    let mut inputs = Inputs::default();
    let pred = inputs.scalar(&a.pred)?;
    let gt = inputs.scalar(&a.gt)?;
    let mut valid = match &a.valid {
        Some(v) => inputs.mask(v)?,
        None => BinaryMask::from_fn(gt.width(), gt.height(), |x, y| gt.get(x, y) > 0.0),
    };
    if let Some(region) = region_of(&mut inputs, a.gate.as_ref())? {
        valid = valid.and(&region)?;
    }
    let (absrel, delta1) = absrel_delta1(&pred, &gt, &valid, a.align)?;
    let mut r = Report::default();
    r.metric("absrel", absrel)
        .metric("delta1", delta1)
        .param("align", if a.align { 1.0 } else { 0.0 })
        .param("valid_pixels", valid.count() as f64);
    write_report(&a.report, r, &inputs)
}

fn eval_boundary(a: EvalBoundaryArgs) -> CmdResult {
    let mut inputs = Inputs::default();
    let pred = inputs.scalar(&a.pred)?;
    let gt = inputs.scalar(&a.gt)?;
    let mut pe = depth_edges(&pred, a.edge_threshold);
    let mut ge = depth_edges(&gt, a.edge_threshold);
    if let Some(region) = region_of(&mut inputs, a.gate.as_ref())? {
        pe = pe.and(&region)?;
        ge = ge.and(&region)?;
    }
    let (acc, comp) = dbe(&pe, &ge, a.cap)?;
    let (ep, er) = edge_pr(&pe, &ge, a.tol)?;
    let mut r = Report::default();
    r.metric("dbe_acc", acc)
        .metric("dbe_comp", comp)
        .metric("ep", ep)
        .metric("er", er)
        .param("edge_threshold", a.edge_threshold)
        .param("cap", a.cap)
        .param("tol", a.tol);
    write_report(&a.report, r, &inputs)
}

fn rmse_scale(s: ScaleArg) -> RmseScale {
    match s {
        ScaleArg::Unit => RmseScale::Unit,
        ScaleArg::EightBit => RmseScale::EightBit,
    }
}

fn stereo_report(gen: &ImageRgb, gt: &ImageRgb, scale: RmseScale, dilate: usize, region: Option<&BinaryMask>) -> Result<Report, Failure> {
    let mut r = Report::default();
    r.metric("psnr", psnr(gen, gt)?)
        .metric("ssim", ssim(gen, gt)?)
        .metric("rmse", rmse(gen, gt, region, scale)?)
        .metric("siou_standin", siou_standin(gen, gt, dilate)?)
        .param("rmse_scale", scale.factor())
        .param("dilate", dilate as f64);
    Ok(r)
}

fn eval_stereo(a: EvalStereoArgs) -> CmdResult {
    let mut inputs = Inputs::default();
    let gen = inputs.image(&a.gen)?;
    let gt = inputs.image(&a.gt)?;
    let region = region_of(&mut inputs, a.gate.as_ref())?;
    let r = stereo_report(&gen, &gt, rmse_scale(a.rmse_scale), a.dilate, region.as_ref())?;
    write_report(&a.report, r, &inputs)
}

fn loss(a: LossArgs) -> CmdResult {
    let mut inputs = Inputs::default();
    let mut report = Report::default();
    let value;
    let mut staged = Staged::default();
    if a.kind == "color_fuse" {
        let perceptual = a.perceptual.ok_or_else(|| usage("color_fuse needs --perceptual"))?;
        if a.gradient_out.is_some() {
            return Err(usage("color_fuse has no gradient output"));
        }
        let pred = inputs.image(&a.pred)?;
        let gt = inputs.image(&a.gt)?;
        value = color_fuse_loss(&pred, &gt, perceptual, a.lambda)?;
        report.param("lambda", a.lambda).param("perceptual", perceptual);
    } else {
        let kind: LossKind = a.kind.parse()?;
        let pred = inputs.scalar(&a.pred)?;
        let gt = inputs.scalar(&a.gt)?;
        let params = LossParams {
            levels: a.levels,
            mask: a.mask.as_ref().map(|m| inputs.mask(m)).transpose()?,
            normalization: match a.normalization {
                NormArg::All => MaskNormalization::AllPixels,
                NormArg::Masked => MaskNormalization::MaskedPixels,
            },
        };
        value = evaluate_loss(kind, &pred, &gt, &params)?;
        report.param("levels", a.levels as f64);
        if let Some(path) = &a.gradient_out {
            let g = loss_gradient(kind, &pred, &gt, &params)?;
            staged.add(path, pfm(&g)?);
            stage_derived(&mut staged, "loss", path, &[("gradient", path)], &inputs, |m| {
                m.with_param("levels", a.levels as f64)
            })?;
        }
    }
    report.metric(&a.kind, value);
    println!("{} {value}", a.kind);
    if let Some(path) = &a.report {
        report.inputs = inputs.hashes.clone();
        let mut text = report.to_json()?;
        text.push('\n');
        staged.add(path, text.into_bytes());
    }
    staged.commit()
}

fn pipeline_stereo(a: PipelineStereoArgs) -> CmdResult {
    let model = a.disparity.model()?;
    let mut inputs = Inputs::default();
    let conv = a.disparity.convention.convention();
    let left = inputs.image(&a.left)?;
    let depth = inputs.depth(&a.depth, conv)?;
    let refine = match (&a.gate, &a.residual) {
        (Some(g), Some(r)) => Some((inputs.scalar(g)?, inputs.depth(r, conv)?)),
        (None, None) => None,
        _ => return Err(usage("--gate and --residual must be given together")),
    };
    if a.report.is_some() != a.gt.is_some() {
        return Err(usage("--gt and --report must be given together"));
    }
    let mut opts = StereoOptions::new(model);
    opts.refine = refine;
    opts.inpainted = a.inpainted.as_ref().map(|p| inputs.image(p)).transpose()?;
    opts.fused = a.fused.as_ref().map(|p| inputs.image(p)).transpose()?;
    opts.splat = a.splat.config();
    opts.feather_sigma = a.feather_sigma;
    let gt = a.gt.as_ref().map(|p| inputs.image(p)).transpose()?;

    let out = stereo_pipeline(&left, &depth, &opts)?;
    let mut staged = Staged::default();
    staged.add(&a.out, write_ppm(&out.right));
    let mut dumped: Vec<(&str, PathBuf)> = Vec::new();
    if let Some(dir) = &a.dump_dir {
        let files: [(&str, &str, Vec<u8>); 5] = [
            ("depth", "depth.pfm", pfm(&out.depth)?),
            ("disparity", "disparity.pfm", pfm(&out.disparity)?),
            ("warped", "warped.ppm", write_ppm(&out.warped)),
            ("coverage", "coverage.pgm", write_pgm_mask(&out.coverage)),
            ("inpainted", "inpainted.ppm", write_ppm(&out.inpainted)),
        ];
        for (role, name, bytes) in files {
            let p = dir.join(name);
            staged.add(&p, bytes);
            dumped.push((role, p));
        }
    }
    let mut roles: Vec<(&str, &Path)> = vec![("right", &a.out)];
    roles.extend(dumped.iter().map(|(r, p)| (*r, p.as_path())));
    stage_derived(&mut staged, "pipeline-stereo", &a.out, &roles, &inputs, |m| {
        let m = a.splat.record(record_model(m, model)).with_param("feather_sigma", a.feather_sigma);
        m.with_param("refined", if opts.refine.is_some() { 1.0 } else { 0.0 })
    })?;
    if let (Some(gt), Some(path)) = (&gt, &a.report) {
        let mut r = stereo_report(&out.right, gt, RmseScale::EightBit, 1, None)?;
        r.inputs = inputs.hashes.clone();
        let mut text = r.to_json()?;
        text.push('\n');
        staged.add(path, text.into_bytes());
    }
    staged.commit()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_tree_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["softedge", "no-such-command"]), 1);
        assert_eq!(run(["softedge", "refine", "--out", "x.pfm"]), 1);
        assert_eq!(run(["softedge", "--help"]), 0);
    }

    #[test]
    fn manifest_next_to_output() {
        assert_eq!(manifest_path_for(Path::new("a/b/right.ppm")), PathBuf::from("a/b/right.manifest.jsonl"));
        assert_eq!(relative(Path::new("a/b"), Path::new("a/b/x.pgm")), "x.pgm");
        assert_eq!(relative(Path::new("a/b"), Path::new("c/x.pgm")), "c/x.pgm");
    }

    #[test]
    fn hash_is_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
