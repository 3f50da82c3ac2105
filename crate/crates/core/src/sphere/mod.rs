//! Spherical image geometry: coordinate conventions, perspective and
//! equirectangular projections under arbitrary rotation, and exact or
//! resampled transforms of equirectangular rasters.
//!
//! # Conventions
//!
//! * World and camera frames are right-handed with **y up, z forward, x
//!   right**. Equirectangular longitude 0 faces +z.
//! * Equirectangular (ERP) rasters map longitude θ ∈ [−π, π) left-to-right
//!   and latitude φ ∈ [−π/2, π/2] top-to-bottom (row 0 is the north-pole
//!   edge). The horizontal axis is periodic: column arithmetic is mod `W`
//!   everywhere, and the left/right image borders are physically adjacent.
//!   The vertical axis clamps at the poles.
//! * Euler order is intrinsic yaw → pitch → roll about camera axes:
//!   `R = R_y(yaw) · R_x(pitch) · R_z(roll)`, mapping camera-frame rays to
//!   world-frame rays. Positive pitch tilts the optical axis toward the
//!   zenith; roll rotates about the optical axis.
//! * Pixel centers sit at `index + 0.5` in both image domains, so integer
//!   pixel `(u, v)` samples the continuous domain at `(u + 0.5, v + 0.5)`.
//!
//! # Typical pipeline
//!
//! ```text
//! PerspectiveImage --project_perspective_to_erp--> (ErpImage, mask)
//! ErpImage        --render_perspective_from_erp--> PerspectiveImage
//! ErpImage        --rotate_erp / roll_erp--------> ErpImage
//! ```
//!
//! Resampling is bilinear throughout; [`roll_erp`] is the one exact
//! (lossless) transform and is used wherever a whole-column circular shift
//! suffices.

mod image;
mod project;
mod types;

pub use image::{roll_erp, ErpImage, PerspectiveImage};
pub use project::{
    erp_pixel_to_ray, persp_pixel_to_ray, project_perspective_to_erp, ray_to_erp_pixel,
    ray_to_persp_pixel, render_perspective_from_erp, render_perspective_supersampled, rotate_erp,
};
pub use types::{
    geodesic_distance, intrinsics_from_fov, pose_to_rotation, rotation_to_pose, wrap_angle,
    CameraIntrinsics, CameraPose, Rotation, UnitRay,
};
