//! Canonical-space 360° panorama toolkit.
//!
//! The crate is organized around the stages of a panorama completion
//! pipeline that operates in a gravity-aligned ("canonical") spherical frame:
//!
//! - [`sphere`] — coordinate conventions, perspective ↔ equirectangular
//!   projections under arbitrary rotation, and exact/resampled ERP transforms.
//! - [`leveling`] — analytic leveling flow fields, the soft-argmin rigid
//!   solver that collapses a dense flow into a 3-DOF pose estimate, its
//!   analytic gradient, and the canonicalizing warp.
//! - [`topo`] — circularly periodic latent operators, a toy denoiser with
//!   manual gradients, the Siamese shift-consistency objective, and the
//!   rolling inference sampler.
//! - [`sampler`] — mixture-distribution pose/intrinsics sampling,
//!   yaw-invariant centering, and full training-sample assembly.
//! - [`metrics`] — wrap-seam statistics, rotation error, and flow endpoint
//!   error.
//! - [`io`] — PNG raster I/O for ERP and perspective images.
//!
//! All angles are radians internally; CLI front-ends convert from degrees at
//! the boundary. The ERP horizontal axis is periodic everywhere: column
//! arithmetic is mod `W` by contract.

pub mod error;
pub mod io;
pub mod leveling;
pub mod metrics;
pub mod sampler;
pub mod seeds;
pub mod sphere;
pub mod topo;

pub use error::{Error, Result};
pub use leveling::{CandidateGrid, DenseFlowField, RigidEstimate, SoftArgminConfig};
pub use sampler::{GaussianUniformMix, PoseSamplerConfig, SampleRecord};
pub use sphere::{CameraIntrinsics, CameraPose, ErpImage, PerspectiveImage, Rotation, UnitRay};
pub use topo::{DiffusionSchedule, LatentTensor, ToyDenoiser, TrainConfig};
