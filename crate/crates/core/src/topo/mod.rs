//! Circularly periodic latent-space toolkit.
//!
//! Everything in this module treats the horizontal axis of a latent grid as
//! topologically closed: column `w - 1` is adjacent to column `0`. That single
//! assumption drives the whole design —
//!
//! * [`roll_latent`] implements the exact cyclic column shift (the group
//!   action of the circle on the grid);
//! * [`circular_conv2d`] pads horizontally by wrapping, which makes
//!   convolution commute with [`roll_latent`] bit-for-bit;
//! * [`ToyDenoiser`] stacks such convolutions (plus timestep conditioning)
//!   into a small noise-prediction network whose output inherits that
//!   equivariance when every layer wraps;
//! * [`shift_loss`] measures, in training, how far a network deviates from
//!   commuting with the shift, and [`total_loss`] mixes it into the ordinary
//!   denoising objective;
//! * [`sample_with_rolling`] exploits equivariance at inference time by
//!   rotating the latent to a fresh anchor column every step, spreading any
//!   residual seam bias around the full circumference;
//! * [`shifted_pos_encoding`] + [`ToyAttention`] show how content-based
//!   global mixing stays compatible with the shift once positional channels
//!   are rotated alongside the data.
//!
//! The toy data lives on a 2:1 grid in `[-1, 1]` (see [`make_toy_dataset`])
//! so that wrap-around continuity is real, not assumed.

mod attention;
mod denoiser;
mod latent;
mod losses;
mod sampling;
mod schedule;
mod toy;
mod train;

pub use attention::{shifted_pos_encoding, PosEncodingGrid, ToyAttention};
pub use denoiser::{
    circular_conv2d, read_gtoy, time_embedding, write_gtoy, ConvKernel, ConvLayer, DenoiserGrad,
    LayerGrad, PaddingMode, ToyDenoiser,
};
pub use latent::{concat_channels, roll_latent, LatentTensor};
pub use losses::{ldm_loss, shift_loss, shift_residual, total_loss, LossBreakdown};
pub use sampling::{sample_plain, sample_with_rolling, sample_with_shifts};
pub use schedule::{ddpm_schedule, DiffusionSchedule};
pub use toy::{
    latent_to_unit_erp, make_toy_dataset, make_toy_panorama, unit_erp_to_latent, ToyPanorama,
    ToySample,
};
pub use train::{train_toy, LossRecord, TrainConfig, TrainOutcome};
