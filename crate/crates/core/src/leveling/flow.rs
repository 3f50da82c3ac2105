//! Dense leveling-flow fields and their analytic construction.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::sphere::{
    persp_pixel_to_ray, ray_to_persp_pixel, CameraIntrinsics, CameraPose, Rotation, UnitRay,
};

/// A per-pixel 2D correspondence field with validity flags.
///
/// `dx`/`dy` are displacements in pixels from a tilted view toward its
/// leveled rendering. Displacements are only meaningful (and guaranteed
/// finite) where `valid` is set; invalid pixels are excluded from every
/// reduction. Values are held in `f64`; the on-disk format stores `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseFlowField {
    width: u32,
    height: u32,
    dx: Vec<f64>,
    dy: Vec<f64>,
    valid: Vec<bool>,
}

impl DenseFlowField {
    /// Creates an all-invalid, zero-displacement field.
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain("flow dimensions must be >= 1".into()));
        }
        let n = (width * height) as usize;
        Ok(DenseFlowField {
            width,
            height,
            dx: vec![0.0; n],
            dy: vec![0.0; n],
            valid: vec![false; n],
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Flat index of pixel `(u, v)`.
    #[inline]
    pub fn index(&self, u: u32, v: u32) -> usize {
        (v * self.width + u) as usize
    }

    /// Displacement at pixel `(u, v)`; meaningful only where valid.
    #[inline]
    pub fn get(&self, u: u32, v: u32) -> (f64, f64) {
        let i = self.index(u, v);
        (self.dx[i], self.dy[i])
    }

    #[inline]
    pub fn is_valid(&self, u: u32, v: u32) -> bool {
        self.valid[self.index(u, v)]
    }

    /// Sets pixel `(u, v)` to a valid displacement.
    #[inline]
    pub fn set(&mut self, u: u32, v: u32, dx: f64, dy: f64) {
        let i = self.index(u, v);
        self.dx[i] = dx;
        self.dy[i] = dy;
        self.valid[i] = true;
    }

    /// Marks pixel `(u, v)` invalid (displacement reset to zero).
    #[inline]
    pub fn clear(&mut self, u: u32, v: u32) {
        let i = self.index(u, v);
        self.dx[i] = 0.0;
        self.dy[i] = 0.0;
        self.valid[i] = false;
    }

    pub fn dx(&self) -> &[f64] {
        &self.dx
    }

    pub fn dy(&self) -> &[f64] {
        &self.dy
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    /// Number of valid pixels.
    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Fraction of pixels that are valid.
    pub fn valid_fraction(&self) -> f64 {
        self.valid_count() as f64 / (self.width * self.height) as f64
    }

    /// True if every valid displacement is finite.
    pub fn all_finite(&self) -> bool {
        self.valid
            .iter()
            .enumerate()
            .all(|(i, &ok)| !ok || (self.dx[i].is_finite() && self.dy[i].is_finite()))
    }
}

/// Magic bytes of the flow file format.
const GFLW_MAGIC: &[u8; 4] = b"GFLW";

/// Writes a flow field: magic `GFLW`, little-endian `u32` width and height,
/// row-major interleaved `f32` (dx, dy) pairs, then a row-major `u8`
/// validity plane (0/1). Round trips are bit-exact at `f32` precision.
pub fn write_gflw(flow: &DenseFlowField, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(12 + flow.dx.len() * 9);
    buf.write_all(GFLW_MAGIC)?;
    buf.write_u32::<LittleEndian>(flow.width)?;
    buf.write_u32::<LittleEndian>(flow.height)?;
    for i in 0..flow.dx.len() {
        buf.write_f32::<LittleEndian>(flow.dx[i] as f32)?;
        buf.write_f32::<LittleEndian>(flow.dy[i] as f32)?;
    }
    for &v in &flow.valid {
        buf.write_u8(u8::from(v))?;
    }
    std::fs::write(path, buf)?;
    Ok(())
}

/// Reads a flow field written by [`write_gflw`], validating magic,
/// dimensions, body length, and the 0/1 validity bytes.
pub fn read_gflw(path: &Path) -> Result<DenseFlowField> {
    let bytes = std::fs::read(path)?;
    let mut cur = std::io::Cursor::new(&bytes);
    let mut magic = [0u8; 4];
    cur.read_exact(&mut magic)
        .map_err(|_| Error::Format("flow file shorter than its header".into()))?;
    if &magic != GFLW_MAGIC {
        return Err(Error::Format(format!(
            "bad flow magic {magic:?}, expected {GFLW_MAGIC:?}"
        )));
    }
    let width = cur
        .read_u32::<LittleEndian>()
        .map_err(|_| Error::Format("flow file shorter than its header".into()))?;
    let height = cur
        .read_u32::<LittleEndian>()
        .map_err(|_| Error::Format("flow file shorter than its header".into()))?;
    if width == 0 || height == 0 {
        return Err(Error::Format(format!(
            "flow dimensions {width}x{height} are invalid"
        )));
    }
    let n = width as usize * height as usize;
    let expected = 12 + n * 8 + n;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "flow body is {} bytes, expected {expected} for {width}x{height}",
            bytes.len()
        )));
    }
    let mut flow = DenseFlowField::new(width, height)?;
    for i in 0..n {
        flow.dx[i] = cur.read_f32::<LittleEndian>().unwrap() as f64;
        flow.dy[i] = cur.read_f32::<LittleEndian>().unwrap() as f64;
    }
    for i in 0..n {
        match cur.read_u8().unwrap() {
            0 => flow.valid[i] = false,
            1 => flow.valid[i] = true,
            other => {
                return Err(Error::Format(format!(
                    "validity byte at pixel {i} is {other}, expected 0 or 1"
                )))
            }
        }
    }
    Ok(flow)
}

/// Precomputed per-pixel camera rays for one set of intrinsics, so that
/// candidate-grid searches pay the projection trigonometry once.
#[derive(Debug, Clone)]
pub struct RigidFlowModel {
    intr: CameraIntrinsics,
    rays: Vec<UnitRay>,
}

impl RigidFlowModel {
    /// Builds the ray table for `intr` (one ray per pixel center).
    pub fn new(intr: &CameraIntrinsics) -> Self {
        let mut rays = Vec::with_capacity((intr.width_px * intr.height_px) as usize);
        for v in 0..intr.height_px {
            for u in 0..intr.width_px {
                rays.push(persp_pixel_to_ray(u as f64, v as f64, intr));
            }
        }
        RigidFlowModel {
            intr: *intr,
            rays,
        }
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.intr
    }

    /// The leveling rotation induced by a pose: pitch then roll, with yaw
    /// cancelled exactly (the flow construction conjugates away the
    /// yaw-only component).
    fn leveling_rotation(pose: &CameraPose) -> Rotation {
        Rotation::pitch(pose.pitch).mul(&Rotation::roll(pose.roll))
    }

    /// Dense flow from a tilted view at `pose` to its leveled rendering.
    ///
    /// An exactly level pose short-circuits to the all-zero field: its
    /// leveling map is the identity, so no round-trip arithmetic may leak
    /// sub-ulp residue into the zeros.
    pub fn flow_for(&self, pose: &CameraPose) -> DenseFlowField {
        let m = Self::leveling_rotation(pose);
        let (w, h) = (self.intr.width_px, self.intr.height_px);
        let mut flow = DenseFlowField::new(w, h).expect("validated dimensions");
        if m == Rotation::identity() {
            for v in 0..h {
                for u in 0..w {
                    flow.set(u, v, 0.0, 0.0);
                }
            }
            return flow;
        }
        for v in 0..h {
            for u in 0..w {
                let d_level = m.apply_ray(self.rays[(v * w + u) as usize]);
                let (lu, lv, valid) = ray_to_persp_pixel(&d_level, &self.intr);
                if valid {
                    flow.set(u, v, lu - u as f64, lv - v as f64);
                }
            }
        }
        flow
    }

    /// Mean squared residual between `flow` and the rigid flow of `pose`,
    /// over jointly valid pixels, together with the joint-valid count.
    ///
    /// Equivalent to `reprojection_error(flow, self.flow_for(pose))` but
    /// without materializing the candidate field. Accumulation follows the
    /// fixed row-major pixel order, so results are bit-stable.
    pub fn residual_error(&self, flow: &DenseFlowField, pose: &CameraPose) -> (f64, usize) {
        let m = Self::leveling_rotation(pose);
        let (w, h) = (self.intr.width_px, self.intr.height_px);
        debug_assert_eq!((flow.width(), flow.height()), (w, h));
        let mut acc = 0.0f64;
        let mut n = 0usize;
        for v in 0..h {
            for u in 0..w {
                let i = (v * w + u) as usize;
                if !flow.valid[i] {
                    continue;
                }
                let d_level = m.apply_ray(self.rays[i]);
                let (lu, lv, valid) = ray_to_persp_pixel(&d_level, &self.intr);
                if !valid {
                    continue;
                }
                let rx = flow.dx[i] - (lu - u as f64);
                let ry = flow.dy[i] - (lv - v as f64);
                acc += rx * rx + ry * ry;
                n += 1;
            }
        }
        if n == 0 {
            (f64::INFINITY, 0)
        } else {
            (acc / n as f64, n)
        }
    }
}

/// Analytic ground-truth leveling flow for a tilted camera.
///
/// For each pixel `p`: lift to a camera ray, rotate to the world frame by
/// the full pose, rotate back by the yaw-only pose (the yaw components
/// cancel, leaving pitch·roll), and reproject. `flow(p) = p_leveled − p`
/// where the reprojection is valid. `pose.yaw` is therefore ignored.
pub fn gt_leveling_flow(intr: &CameraIntrinsics, pose: &CameraPose) -> DenseFlowField {
    RigidFlowModel::new(intr).flow_for(pose)
}

/// Rigid flow for a candidate pose — by construction the identical
/// computation as [`gt_leveling_flow`].
pub fn rigid_flow(intr: &CameraIntrinsics, candidate: &CameraPose) -> DenseFlowField {
    gt_leveling_flow(intr, candidate)
}

/// Leveling flow evaluated at a single (possibly fractional) pixel;
/// `None` where the leveled reprojection is invalid.
///
/// Agrees with [`gt_leveling_flow`] at shared integer pixels, which makes
/// subsampled evaluation consistent with the dense field.
pub fn leveling_flow_at(
    intr: &CameraIntrinsics,
    pose: &CameraPose,
    u: f64,
    v: f64,
) -> Option<(f64, f64)> {
    let m = Rotation::pitch(pose.pitch).mul(&Rotation::roll(pose.roll));
    if m == Rotation::identity() {
        return Some((0.0, 0.0));
    }
    let d_level = m.apply_ray(persp_pixel_to_ray(u, v, intr));
    let (lu, lv, valid) = ray_to_persp_pixel(&d_level, intr);
    valid.then_some((lu - u, lv - v))
}

/// Mean squared flow residual over jointly valid pixels (pixels²).
///
/// Errors when the fields disagree in shape or share no valid pixel.
pub fn reprojection_error(flow: &DenseFlowField, candidate_flow: &DenseFlowField) -> Result<f64> {
    if (flow.width, flow.height) != (candidate_flow.width, candidate_flow.height) {
        return Err(Error::Config(format!(
            "flow dimensions {}x{} vs {}x{} do not match",
            flow.width, flow.height, candidate_flow.width, candidate_flow.height
        )));
    }
    let mut acc = 0.0f64;
    let mut n = 0usize;
    for i in 0..flow.dx.len() {
        if flow.valid[i] && candidate_flow.valid[i] {
            let rx = flow.dx[i] - candidate_flow.dx[i];
            let ry = flow.dy[i] - candidate_flow.dy[i];
            acc += rx * rx + ry * ry;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Degenerate(
            "no jointly valid pixels between the flow fields".into(),
        ));
    }
    Ok(acc / n as f64)
}

/// Smooth-L1 loss between two flow fields with transition point β = 1:
/// `0.5·d²` for `|d| < 1`, else `|d| − 0.5`, averaged over both components
/// of every jointly valid pixel.
pub fn smooth_l1_flow_loss(pred: &DenseFlowField, gt: &DenseFlowField) -> Result<f64> {
    if (pred.width, pred.height) != (gt.width, gt.height) {
        return Err(Error::Config(format!(
            "flow dimensions {}x{} vs {}x{} do not match",
            pred.width, pred.height, gt.width, gt.height
        )));
    }
    let huber = |d: f64| {
        let a = d.abs();
        if a < 1.0 {
            0.5 * d * d
        } else {
            a - 0.5
        }
    };
    let mut acc = 0.0f64;
    let mut n = 0usize;
    for i in 0..pred.dx.len() {
        if pred.valid[i] && gt.valid[i] {
            acc += huber(pred.dx[i] - gt.dx[i]) + huber(pred.dy[i] - gt.dy[i]);
            n += 2;
        }
    }
    if n == 0 {
        return Err(Error::Degenerate(
            "no jointly valid pixels between the flow fields".into(),
        ));
    }
    Ok(acc / n as f64)
}
