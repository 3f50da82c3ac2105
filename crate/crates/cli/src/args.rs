//! Flag definitions. Angles are degrees here and nowhere else; `ops`
//! converts to radians immediately.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use panocanon::topo::PaddingMode;
use panocanon::{CameraIntrinsics, CameraPose, Result};

#[derive(Debug, Parser)]
#[command(
    name = "panocanon",
    about = "Canonical-space 360-degree panorama toolkit",
    version,
    arg_required_else_help = true
)]
pub struct Cli {
    /// JSON object supplying defaults for this subcommand's flags
    /// (keys are long flag names without dashes); explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Splat a perspective image onto an equirectangular canvas
    #[command(allow_negative_numbers = true, args_override_self = true)]
    Project(ProjectArgs),
    /// Render a perspective crop out of an equirectangular panorama
    #[command(allow_negative_numbers = true, args_override_self = true)]
    Render(RenderArgs),
    /// Level a panorama whose camera pitch/roll are known
    #[command(allow_negative_numbers = true, args_override_self = true)]
    Canonicalize(CanonicalizeArgs),
    /// Circularly shift panorama columns (exact, lossless)
    #[command(allow_negative_numbers = true, args_override_self = true)]
    Roll(RollArgs),
    /// Emit the analytic leveling flow field for a known pose
    #[command(allow_negative_numbers = true, args_override_self = true)]
    GtFlow(GtFlowArgs),
    /// Estimate pitch/roll from a dense leveling flow field
    #[command(allow_negative_numbers = true, args_override_self = true)]
    Level(LevelArgs),
    /// Estimate pitch/roll from a flow field and level a panorama with it
    #[command(allow_negative_numbers = true, args_override_self = true)]
    WarpCanonical(WarpCanonicalArgs),
    /// Draw posed perspective crops plus targets from a panorama
    #[command(allow_negative_numbers = true, args_override_self = true)]
    SampleDataset(SampleDatasetArgs),
    /// Train the toy denoiser on procedural data
    #[command(allow_negative_numbers = true, args_override_self = true)]
    TrainToy(TrainToyArgs),
    /// Run ancestral sampling with trained toy-denoiser weights
    #[command(allow_negative_numbers = true, args_override_self = true)]
    SampleToy(SampleToyArgs),
    /// Measure how far a seeded toy net is from circular shift equivariance
    #[command(allow_negative_numbers = true, args_override_self = true)]
    CheckEquivariance(CheckEquivarianceArgs),
    /// Image, flow and pose quality metrics (single-line JSON on stdout)
    Metrics {
        #[command(subcommand)]
        command: MetricsCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum MetricsCommand {
    /// Wrap-seam discontinuity statistics of a panorama
    #[command(allow_negative_numbers = true, args_override_self = true)]
    Seam(SeamArgs),
    /// Peak signal-to-noise ratio between two same-shape panoramas
    #[command(allow_negative_numbers = true, args_override_self = true)]
    Psnr(PsnrArgs),
    /// Mean endpoint error between two flow fields
    #[command(allow_negative_numbers = true, args_override_self = true)]
    FlowEpe(FlowEpeArgs),
    /// Geodesic angle between two pitch/roll attitudes
    #[command(allow_negative_numbers = true, args_override_self = true)]
    RotationError(RotationErrorArgs),
}

/// Full camera attitude; yaw in [-180, 180), pitch in [-90, 90],
/// roll in [-180, 180).
#[derive(Debug, Args)]
pub struct PoseArgs {
    /// Camera yaw in degrees (rotation about the vertical axis)
    #[arg(long, default_value_t = 0.0)]
    pub yaw_deg: f64,
    /// Camera pitch in degrees (positive looks up)
    #[arg(long, default_value_t = 0.0)]
    pub pitch_deg: f64,
    /// Camera roll in degrees (in-plane rotation)
    #[arg(long, default_value_t = 0.0)]
    pub roll_deg: f64,
}

impl PoseArgs {
    pub fn pose(&self) -> Result<CameraPose> {
        CameraPose::new(
            self.yaw_deg.to_radians(),
            self.pitch_deg.to_radians(),
            self.roll_deg.to_radians(),
        )
    }
}

/// Pinhole frustum shape. When `--aspect` is omitted it defaults to the
/// raster's width/height ratio (square pixels).
#[derive(Debug, Args)]
pub struct FovArgs {
    /// Vertical field of view in degrees, inside (0, 180)
    #[arg(long)]
    pub vfov_deg: f64,
    /// Field-of-view width/height ratio; defaults to raster aspect
    #[arg(long)]
    pub aspect: Option<f64>,
}

impl FovArgs {
    pub fn intrinsics(&self, width_px: u32, height_px: u32) -> Result<CameraIntrinsics> {
        let aspect = self
            .aspect
            .unwrap_or(f64::from(width_px) / f64::from(height_px));
        panocanon::sphere::intrinsics_from_fov(
            self.vfov_deg.to_radians(),
            aspect,
            width_px,
            height_px,
        )
    }
}

/// Candidate-grid and soft-selection parameters of the rigid solver.
#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Half-width of the initial pitch/roll search window, degrees
    #[arg(long, default_value_t = 45.0)]
    pub search_deg: f64,
    /// Candidate count per axis of the search grid
    #[arg(long, default_value_t = 9)]
    pub grid: u32,
    /// Softmax temperature in squared pixels
    #[arg(long, default_value_t = 0.5)]
    pub temperature: f64,
    /// Number of re-centered refinement stages
    #[arg(long, default_value_t = 3)]
    pub stages: u32,
    /// Window shrink factor per refinement stage
    #[arg(long, default_value_t = 0.2)]
    pub shrink: f64,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Input perspective PNG
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub pose: PoseArgs,
    #[command(flatten)]
    pub fov: FovArgs,
    /// Output panorama height in pixels
    #[arg(long)]
    pub erp_height: u32,
    /// Output panorama width in pixels; defaults to twice the height
    #[arg(long)]
    pub erp_width: Option<u32>,
    /// Output panorama PNG (splatted content)
    #[arg(long)]
    pub out_erp: PathBuf,
    /// Optional output coverage-mask PNG
    #[arg(long)]
    pub out_mask: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Input equirectangular PNG (width must be twice the height)
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub pose: PoseArgs,
    #[command(flatten)]
    pub fov: FovArgs,
    /// Output crop width in pixels
    #[arg(long)]
    pub width: u32,
    /// Output crop height in pixels
    #[arg(long)]
    pub height: u32,
    /// Uniform supersampling factor per output pixel
    #[arg(long, default_value_t = 1)]
    pub supersample: u32,
    /// Output perspective PNG
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct CanonicalizeArgs {
    /// Input equirectangular PNG
    #[arg(long)]
    pub input: PathBuf,
    /// Known camera pitch in degrees
    #[arg(long, default_value_t = 0.0)]
    pub pitch_deg: f64,
    /// Known camera roll in degrees
    #[arg(long, default_value_t = 0.0)]
    pub roll_deg: f64,
    /// Output leveled panorama PNG
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RollArgs {
    /// Input equirectangular PNG
    #[arg(long)]
    pub input: PathBuf,
    /// Column shift; positive moves content toward larger column indices
    #[arg(long)]
    pub delta: i64,
    /// Output panorama PNG
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct GtFlowArgs {
    /// Flow raster width in pixels
    #[arg(long)]
    pub width: u32,
    /// Flow raster height in pixels
    #[arg(long)]
    pub height: u32,
    #[command(flatten)]
    pub pose: PoseArgs,
    #[command(flatten)]
    pub fov: FovArgs,
    /// Output flow field (GFLW)
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct LevelArgs {
    /// Input flow field (GFLW)
    #[arg(long)]
    pub flow: PathBuf,
    #[command(flatten)]
    pub fov: FovArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Reference pitch in degrees; adds rotation_error_deg to the report
    #[arg(long, requires = "ref_roll_deg")]
    pub ref_pitch_deg: Option<f64>,
    /// Reference roll in degrees; adds rotation_error_deg to the report
    #[arg(long, requires = "ref_pitch_deg")]
    pub ref_roll_deg: Option<f64>,
}

#[derive(Debug, Args)]
pub struct WarpCanonicalArgs {
    /// Input equirectangular PNG to be leveled
    #[arg(long)]
    pub input: PathBuf,
    /// Input flow field (GFLW) the attitude is estimated from
    #[arg(long)]
    pub flow: PathBuf,
    #[command(flatten)]
    pub fov: FovArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output leveled panorama PNG
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleDatasetArgs {
    /// Source equirectangular PNG (alternative: --toy-seed)
    #[arg(long, conflicts_with = "toy_seed")]
    pub input: Option<PathBuf>,
    /// Generate the source panorama procedurally from this seed
    #[arg(long)]
    pub toy_seed: Option<u64>,
    /// Height of the procedural source panorama
    #[arg(long, default_value_t = 64)]
    pub toy_height: u32,
    /// Number of records to draw
    #[arg(long)]
    pub count: u32,
    /// Master seed; record i uses a stream derived from (seed, i)
    #[arg(long)]
    pub seed: u64,
    /// Output directory (created if absent)
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Worker threads; record outputs are independent of this value
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Crop raster height in pixels (width follows the drawn aspect)
    #[arg(long, default_value_t = 64)]
    pub crop_height: u32,
    /// Comma-separated aspect-ratio choices, e.g. "1,1.3333,1.5,1.7778"
    #[arg(long)]
    pub aspects: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainToyArgs {
    /// Training seed (network init and batch order)
    #[arg(long)]
    pub seed: u64,
    /// Gradient-descent steps
    #[arg(long, default_value_t = 500)]
    pub steps: u32,
    /// Learning rate
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Items per gradient step
    #[arg(long, default_value_t = 4)]
    pub batch_size: usize,
    /// Hidden channel count of the toy net
    #[arg(long, default_value_t = 32)]
    pub hidden: u32,
    /// Horizontal padding of every convolution
    #[arg(long, value_enum, default_value_t = PaddingArg::Circular)]
    pub padding: PaddingArg,
    /// Feed the net an absolute-position input channel
    #[arg(long, action = clap::ArgAction::Set, default_value_t = false)]
    pub pos_channel: bool,
    /// Weight of the shift-consistency term
    #[arg(long, default_value_t = 0.5)]
    pub lambda_shift: f64,
    /// Weight of the flow-supervision term
    #[arg(long, default_value_t = 0.1)]
    pub lambda_flow: f64,
    /// Seed of the procedural training set
    #[arg(long, default_value_t = 0)]
    pub dataset_seed: u64,
    /// Item count of the procedural training set
    #[arg(long, default_value_t = 64)]
    pub dataset_size: usize,
    /// Latent height (width is twice the height)
    #[arg(long, default_value_t = 32)]
    pub latent_height: u32,
    /// Output weight checkpoint (GTOY)
    #[arg(long)]
    pub out_weights: PathBuf,
    /// Optional per-step loss log (tab-separated)
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleToyArgs {
    /// Weight checkpoint (GTOY)
    #[arg(long)]
    pub weights: PathBuf,
    /// Sampling seed (noise stream, and shift schedule when rolling)
    #[arg(long)]
    pub seed: u64,
    /// Seed of the procedural set the conditioning item is taken from
    #[arg(long, default_value_t = 0)]
    pub dataset_seed: u64,
    /// Index of the conditioning item
    #[arg(long, default_value_t = 0)]
    pub item: usize,
    /// Latent height (width is twice the height)
    #[arg(long, default_value_t = 32)]
    pub latent_height: u32,
    /// Roll latents by a random offset each step, realigning at the end
    #[arg(long, action = clap::ArgAction::Set, default_value_t = false)]
    pub rolling: bool,
    /// Diffusion steps of the sampling schedule
    #[arg(long, default_value_t = 100)]
    pub schedule_steps: u32,
    /// Noise-variance schedule start
    #[arg(long, default_value_t = 1e-4)]
    pub beta_start: f64,
    /// Noise-variance schedule end
    #[arg(long, default_value_t = 2e-2)]
    pub beta_end: f64,
    /// Output panorama PNG of the sampled latent
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct CheckEquivarianceArgs {
    /// Horizontal padding of the probed net
    #[arg(long, value_enum)]
    pub padding: PaddingArg,
    /// Network init seed
    #[arg(long)]
    pub seed: u64,
    /// Hidden channel count of the probed net
    #[arg(long, default_value_t = 6)]
    pub hidden: u32,
    /// Latent height (width is twice the height)
    #[arg(long, default_value_t = 16)]
    pub latent_height: u32,
    /// Probe item count from the procedural set
    #[arg(long, default_value_t = 2)]
    pub probes: usize,
    /// Seed of the procedural probe set
    #[arg(long, default_value_t = 0)]
    pub dataset_seed: u64,
    /// Comma-separated shift offsets; defaults to every 1..width-1
    #[arg(long)]
    pub deltas: Option<String>,
    /// Comma-separated diffusion timesteps to probe
    #[arg(long, default_value = "1,50")]
    pub timesteps: String,
}

#[derive(Debug, Args)]
pub struct SeamArgs {
    /// Input equirectangular PNG
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct PsnrArgs {
    /// Input equirectangular PNG
    #[arg(long)]
    pub input: PathBuf,
    /// Reference equirectangular PNG of the same shape
    #[arg(long)]
    pub reference: PathBuf,
}

#[derive(Debug, Args)]
pub struct FlowEpeArgs {
    /// Input flow field (GFLW)
    #[arg(long)]
    pub flow: PathBuf,
    /// Reference flow field (GFLW) of the same shape
    #[arg(long)]
    pub reference: PathBuf,
}

#[derive(Debug, Args)]
pub struct RotationErrorArgs {
    /// Pitch of the evaluated attitude, degrees
    #[arg(long, default_value_t = 0.0)]
    pub pitch_deg: f64,
    /// Roll of the evaluated attitude, degrees
    #[arg(long, default_value_t = 0.0)]
    pub roll_deg: f64,
    /// Pitch of the reference attitude, degrees
    #[arg(long, default_value_t = 0.0)]
    pub ref_pitch_deg: f64,
    /// Roll of the reference attitude, degrees
    #[arg(long, default_value_t = 0.0)]
    pub ref_roll_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PaddingArg {
    /// Wrap columns across the seam (topologically closed)
    Circular,
    /// Pad with zeros (breaks the closed loop)
    Zero,
}

impl From<PaddingArg> for PaddingMode {
    fn from(p: PaddingArg) -> Self {
        match p {
            PaddingArg::Circular => PaddingMode::Circular,
            PaddingArg::Zero => PaddingMode::Zero,
        }
    }
}

/// Parses a comma-separated numeric list flag.
pub fn parse_list<T: std::str::FromStr>(flag: &str, raw: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|s| {
            s.trim().parse::<T>().map_err(|_| {
                panocanon::Error::Config(format!("--{flag}: cannot parse element {s:?}"))
            })
        })
        .collect()
}
