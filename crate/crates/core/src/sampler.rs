//! Camera sampling and training-record assembly for panoramic crops.
//!
//! This module turns a ground-truth equirectangular panorama into
//! perspective training samples. Each sample pairs a rendered crop with
//! everything needed to supervise and replay it: the camera intrinsics,
//! the residual pose after yaw centering, the dense rigid leveling flow,
//! the crop's footprint mask on the panorama, and the centered panorama
//! itself.
//!
//! Poses are drawn from configurable Gaussian-or-uniform mixtures so that
//! most cameras are mildly tilted while a heavy uniform branch still
//! exercises strong tilt. Yaw is uniform over the full circle and is then
//! removed up to a sub-pixel residual by rolling the panorama columns —
//! an exact permutation — so downstream consumers see an azimuth-centered
//! panorama and a near-zero yaw. Samples whose leveling flow loses too
//! much of the crop, or whose footprint covers too little of its frustum,
//! are rejected and redrawn a bounded number of times.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::leveling::{gt_leveling_flow, DenseFlowField};
use crate::sphere::{
    intrinsics_from_fov, project_perspective_to_erp, render_perspective_from_erp, roll_erp,
    rotate_erp, CameraIntrinsics, CameraPose, ErpImage, PerspectiveImage, Rotation,
};

/// Hard validity window for any sampled vertical field of view, radians.
/// Gaussian draws outside it are rejected and redrawn.
const VFOV_FLOOR: f64 = 5.0 * PI / 180.0;
const VFOV_CEIL: f64 = 175.0 * PI / 180.0;

/// Consecutive rejected draws before [`make_training_sample`] gives up.
const MAX_DRAW_ATTEMPTS: u32 = 20;

/// A sample must keep at least this fraction of crop pixels valid under
/// the ground-truth leveling flow...
const MIN_FLOW_FRACTION: f64 = 0.25;
/// ...and its panorama footprint must cover at least this fraction of the
/// frustum's solid angle (guards against footprints lost to coarse
/// panorama rasters).
const MIN_MASK_FRACTION: f64 = 0.25;

/// Zero-mean draw that is Gaussian with probability `p_gauss` and uniform
/// on `[-bound, bound)` otherwise. Gaussian draws falling outside the
/// bound are rejected and redrawn, so every draw lands in
/// `[-bound, bound]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianUniformMix {
    /// Probability of taking the Gaussian branch, in `[0, 1]`.
    pub p_gauss: f64,
    /// Standard deviation of the Gaussian branch, radians, `> 0`.
    pub sigma: f64,
    /// Symmetric hard bound, radians, `> 0`: support of the uniform
    /// branch and rejection window of the Gaussian branch.
    pub bound: f64,
}

impl GaussianUniformMix {
    fn validate(&self, name: &str) -> Result<()> {
        if !(self.p_gauss.is_finite() && (0.0..=1.0).contains(&self.p_gauss)) {
            return Err(Error::Config(format!(
                "{name} mixture weight {} outside [0, 1]",
                self.p_gauss
            )));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Config(format!(
                "{name} sigma {} must be positive and finite",
                self.sigma
            )));
        }
        if !(self.bound.is_finite() && self.bound > 0.0) {
            return Err(Error::Config(format!(
                "{name} bound {} must be positive and finite",
                self.bound
            )));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        if rng.random::<f64>() < self.p_gauss {
            loop {
                let g: f64 = rng.sample(StandardNormal);
                let x = self.sigma * g;
                if x.abs() <= self.bound {
                    return x;
                }
            }
        } else {
            rng.random_range(-self.bound..self.bound)
        }
    }
}

/// Configuration for drawing camera poses and intrinsics.
///
/// All angles are radians. The defaults favor mild pitch (Gaussian sigma
/// 15 degrees, weight 0.7) and milder roll (sigma 5 degrees, weight 0.8),
/// both hard-bounded at 45 degrees, with a vertical field of view around
/// 60 degrees and a uniform wide branch up to 100 degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSamplerConfig {
    /// Pitch mixture (elevation of the optical axis).
    pub pitch: GaussianUniformMix,
    /// Roll mixture (rotation about the optical axis).
    pub roll: GaussianUniformMix,
    /// Probability of the Gaussian vertical-fov branch, in `[0, 1]`.
    pub vfov_p_gauss: f64,
    /// Mean of the Gaussian vertical-fov branch, radians.
    pub vfov_mean: f64,
    /// Standard deviation of the Gaussian vertical-fov branch, radians.
    pub vfov_sigma: f64,
    /// Uniform vertical-fov branch lower edge, radians.
    pub vfov_lo: f64,
    /// Uniform vertical-fov branch upper edge, radians.
    pub vfov_hi: f64,
    /// Discrete width/height aspect-ratio choices, drawn uniformly.
    pub aspects: Vec<f64>,
    /// Crop raster height in pixels; width follows the drawn aspect.
    pub crop_height: u32,
    /// Perspective variations to draw per source panorama when assembling
    /// a dataset (consumed by dataset drivers, not by single-sample calls).
    pub variations: u32,
    /// Master seed from which dataset drivers derive per-record streams.
    pub seed: u64,
}

impl Default for PoseSamplerConfig {
    fn default() -> Self {
        let deg = PI / 180.0;
        PoseSamplerConfig {
            pitch: GaussianUniformMix {
                p_gauss: 0.7,
                sigma: 15.0 * deg,
                bound: 45.0 * deg,
            },
            roll: GaussianUniformMix {
                p_gauss: 0.8,
                sigma: 5.0 * deg,
                bound: 45.0 * deg,
            },
            vfov_p_gauss: 5.0 / 7.0,
            vfov_mean: 60.0 * deg,
            vfov_sigma: 10.0 * deg,
            vfov_lo: 45.0 * deg,
            vfov_hi: 100.0 * deg,
            aspects: vec![1.0, 4.0 / 3.0, 3.0 / 2.0, 16.0 / 9.0],
            crop_height: 64,
            variations: 3,
            seed: 0,
        }
    }
}

impl PoseSamplerConfig {
    /// Checks the configuration for internal consistency.
    pub fn validate(&self) -> Result<()> {
        self.pitch.validate("pitch")?;
        self.roll.validate("roll")?;
        if self.pitch.bound > PI / 2.0 {
            return Err(Error::Config(format!(
                "pitch bound {} exceeds pi/2",
                self.pitch.bound
            )));
        }
        if self.roll.bound >= PI {
            return Err(Error::Config(format!(
                "roll bound {} must stay below pi",
                self.roll.bound
            )));
        }
        if !(self.vfov_p_gauss.is_finite() && (0.0..=1.0).contains(&self.vfov_p_gauss)) {
            return Err(Error::Config(format!(
                "vfov mixture weight {} outside [0, 1]",
                self.vfov_p_gauss
            )));
        }
        if !(self.vfov_sigma.is_finite() && self.vfov_sigma > 0.0) {
            return Err(Error::Config(format!(
                "vfov sigma {} must be positive and finite",
                self.vfov_sigma
            )));
        }
        if !(self.vfov_mean.is_finite()
            && self.vfov_mean > VFOV_FLOOR
            && self.vfov_mean < VFOV_CEIL)
        {
            return Err(Error::Config(format!(
                "vfov mean {} outside the usable window ({VFOV_FLOOR:.4}, {VFOV_CEIL:.4})",
                self.vfov_mean
            )));
        }
        if !(self.vfov_lo.is_finite()
            && self.vfov_hi.is_finite()
            && self.vfov_lo < self.vfov_hi
            && self.vfov_lo > VFOV_FLOOR
            && self.vfov_hi < VFOV_CEIL)
        {
            return Err(Error::Config(format!(
                "vfov uniform range [{}, {}] must be increasing and inside \
                 ({VFOV_FLOOR:.4}, {VFOV_CEIL:.4})",
                self.vfov_lo, self.vfov_hi
            )));
        }
        if self.aspects.is_empty() {
            return Err(Error::Config("aspect list is empty".into()));
        }
        for &a in &self.aspects {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::Config(format!("aspect ratio {a} must be positive")));
            }
        }
        if self.crop_height < 4 {
            return Err(Error::Config(format!(
                "crop height {} must be at least 4",
                self.crop_height
            )));
        }
        if self.variations == 0 {
            return Err(Error::Config("variation count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Draws one camera pose and matching intrinsics from `cfg`.
///
/// The draw order — yaw, pitch, roll, vertical fov, aspect — is part of
/// the replay contract: the same seeded stream and configuration always
/// reproduce the same pose.
pub fn sample_pose(
    rng: &mut impl Rng,
    cfg: &PoseSamplerConfig,
) -> Result<(CameraPose, CameraIntrinsics)> {
    cfg.validate()?;
    let yaw = rng.random_range(-PI..PI);
    let pitch = cfg.pitch.draw(rng);
    let roll = cfg.roll.draw(rng);
    let vfov = if rng.random::<f64>() < cfg.vfov_p_gauss {
        loop {
            let g: f64 = rng.sample(StandardNormal);
            let x = cfg.vfov_mean + cfg.vfov_sigma * g;
            if x > VFOV_FLOOR && x < VFOV_CEIL {
                break x;
            }
        }
    } else {
        rng.random_range(cfg.vfov_lo..cfg.vfov_hi)
    };
    let aspect = cfg.aspects[rng.random_range(0..cfg.aspects.len())];
    let width = ((f64::from(cfg.crop_height) * aspect).round() as u32).max(1);
    let pose = CameraPose::new(yaw, pitch, roll)?;
    let intr = intrinsics_from_fov(vfov, aspect, width, cfg.crop_height)?;
    Ok((pose, intr))
}

/// Rolls the panorama so that viewing azimuth `yaw` lands on the center
/// column, returning the rolled panorama and the residual yaw.
///
/// The roll is an exact column permutation; the residual is the sub-column
/// remainder (at most half a column width, `pi / width`). A zero yaw
/// returns a bit-identical copy and a residual of exactly `0.0`.
pub fn yaw_center(erp: &ErpImage, yaw: f64) -> (ErpImage, f64) {
    let w = f64::from(erp.width());
    let k = (-yaw * w / TAU).round();
    let centered = roll_erp(erp, k as i64);
    let residual = yaw + TAU * k / w;
    (centered, residual)
}

/// Undoes a known pitch/roll tilt, resampling the panorama into its
/// gravity-aligned orientation. Yaw is deliberately ignored: azimuth
/// carries no leveling information.
///
/// An exactly level pose returns a lossless copy.
pub fn canonicalize_panorama(erp: &ErpImage, pose: &CameraPose) -> ErpImage {
    let upright = Rotation::pitch(pose.pitch).mul(&Rotation::roll(pose.roll));
    rotate_erp(erp, &upright)
}

/// One perspective training sample with full replay provenance.
///
/// `pose` holds the residual yaw left after centering (sub-column) along
/// with the drawn pitch and roll; `crop` is rendered from `erp` (the
/// centered panorama) at exactly that pose, so re-rendering from the
/// stored fields reproduces `crop` bit for bit.
#[derive(Debug, Clone)]
pub struct SampleRecord {
    /// Rendered perspective crop.
    pub crop: PerspectiveImage,
    /// Pinhole intrinsics used for the crop.
    pub intrinsics: CameraIntrinsics,
    /// Residual-yaw pose of the crop relative to `erp`.
    pub pose: CameraPose,
    /// Dense rigid leveling flow for the crop (a pure function of
    /// intrinsics, pitch and roll).
    pub flow: DenseFlowField,
    /// Binary footprint of the leveled frustum on the centered panorama.
    pub mask: ErpImage,
    /// The yaw-centered panorama the crop was rendered from.
    pub erp: ErpImage,
    /// Caller-supplied identifier of the source panorama.
    pub source_id: String,
    /// Seed of the stream this record was drawn from.
    pub seed: u64,
}

/// Solid angle of a pinhole frustum, steradians.
fn frustum_solid_angle(intr: &CameraIntrinsics) -> f64 {
    let half_v = intr.vfov / 2.0;
    let half_h = (intr.aspect * half_v.tan()).atan();
    4.0 * (half_h.sin() * half_v.sin()).asin()
}

/// Solid angle covered by the panorama pixels where `mask > 0.5`.
fn mask_solid_angle(mask: &ErpImage) -> f64 {
    let (w, h) = (mask.width(), mask.height());
    let cell = (TAU / f64::from(w)) * (PI / f64::from(h));
    let mut total = 0.0;
    for v in 0..h {
        let phi = PI / 2.0 - PI * (f64::from(v) + 0.5) / f64::from(h);
        let weight = phi.cos() * cell;
        for u in 0..w {
            if mask.get(u, v, 0) > 0.5 {
                total += weight;
            }
        }
    }
    total
}

/// Assembles a record for a fixed pose, returning it together with its
/// flow-validity fraction and frustum-footprint coverage fraction.
fn build_record(
    erp_gt: &ErpImage,
    pose: &CameraPose,
    intr: &CameraIntrinsics,
    source_id: &str,
    seed: u64,
) -> Result<(SampleRecord, f64, f64)> {
    let (erp_c, residual) = yaw_center(erp_gt, pose.yaw);
    let pose_c = CameraPose::new(residual, pose.pitch, pose.roll)?;
    let crop = render_perspective_from_erp(&erp_c, intr, &pose_c);
    let flow = gt_leveling_flow(intr, &pose_c);
    let flow_fraction = flow.valid_fraction();
    // The footprint records where the *leveled* crop lands: after leveling
    // the frustum sits at the residual azimuth with zero pitch and roll.
    let leveled = CameraPose::new(residual, 0.0, 0.0)?;
    let ones = PerspectiveImage::from_fn(intr.width_px, intr.height_px, 1, |_, _, _| 1.0)?;
    let (_, mask) =
        project_perspective_to_erp(&ones, intr, &leveled, erp_gt.width(), erp_gt.height())?;
    let mask_fraction = mask_solid_angle(&mask) / frustum_solid_angle(intr);
    let record = SampleRecord {
        crop,
        intrinsics: *intr,
        pose: pose_c,
        flow,
        mask,
        erp: erp_c,
        source_id: source_id.to_string(),
        seed,
    };
    Ok((record, flow_fraction, mask_fraction))
}

/// Draws poses until one yields a usable training sample, or fails with
/// a diagnostic after a bounded number of rejected attempts.
///
/// A draw is rejected when the ground-truth leveling flow keeps fewer
/// than a quarter of crop pixels valid, or when the painted footprint
/// covers less than a quarter of the frustum's solid angle.
pub fn make_training_sample(
    erp_gt: &ErpImage,
    rng: &mut impl Rng,
    cfg: &PoseSamplerConfig,
    source_id: &str,
    seed: u64,
) -> Result<SampleRecord> {
    cfg.validate()?;
    let mut last = String::from("no attempt recorded");
    for _ in 0..MAX_DRAW_ATTEMPTS {
        let (pose, intr) = sample_pose(rng, cfg)?;
        match build_record(erp_gt, &pose, &intr, source_id, seed) {
            Ok((record, flow_fraction, mask_fraction)) => {
                if flow_fraction >= MIN_FLOW_FRACTION && mask_fraction >= MIN_MASK_FRACTION {
                    return Ok(record);
                }
                last = format!(
                    "flow fraction {flow_fraction:.3}, footprint coverage {mask_fraction:.3} \
                     (pitch {:.1} deg, roll {:.1} deg, vfov {:.1} deg)",
                    pose.pitch.to_degrees(),
                    pose.roll.to_degrees(),
                    intr.vfov.to_degrees()
                );
            }
            // An empty footprint projection is a rejection, not a failure.
            Err(Error::Degenerate(msg)) => {
                last = format!("projection degenerate: {msg}");
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::Degenerate(format!(
        "{MAX_DRAW_ATTEMPTS} consecutive draws rejected on a {}x{} panorama \
         (crop height {}); last rejection: {last}",
        erp_gt.width(),
        erp_gt.height(),
        cfg.crop_height
    )))
}
