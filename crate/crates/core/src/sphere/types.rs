//! Rotations, camera poses, intrinsics, and unit rays.

use crate::error::{Error, Result};

/// Numerical tolerance for the orthonormality check in
/// [`Rotation::from_matrix`].
const ORTHONORMALITY_TOL: f64 = 1e-9;

/// A 3×3 rotation matrix, row-major.
///
/// Instances are orthonormal with determinant +1 by construction: the only
/// public constructors are the identity, the single-axis rotations, products
/// of existing rotations, and [`Rotation::from_matrix`], which validates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    m: [[f64; 3]; 3],
}

impl Rotation {
    /// Identity rotation.
    pub fn identity() -> Self {
        Rotation {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Rotation by `angle` radians about the +y (up) axis: yaw.
    ///
    /// A positive yaw turns the forward direction (+z) toward +x.
    pub fn yaw(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation {
            m: [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
        }
    }

    /// Rotation by `angle` radians about the +x (right) axis: pitch.
    ///
    /// A positive pitch tilts the forward direction (+z) toward +y (zenith).
    pub fn pitch(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation {
            m: [[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]],
        }
    }

    /// Rotation by `angle` radians about the +z (forward) axis: roll.
    pub fn roll(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation {
            m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Builds a rotation from an explicit matrix, validating orthonormality
    /// (`‖RᵀR − I‖∞ < 1e−9`) and `det(R) ≈ +1`.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self> {
        let r = Rotation { m };
        let rtr = r.transpose().mul(&r);
        let mut max_dev: f64 = 0.0;
        for (i, row) in rtr.m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                max_dev = max_dev.max((v - target).abs());
            }
        }
        if !max_dev.is_finite() || max_dev >= ORTHONORMALITY_TOL {
            return Err(Error::Domain(format!(
                "matrix is not orthonormal (max |R'R - I| = {max_dev:.3e})"
            )));
        }
        if (r.det() - 1.0).abs() >= ORTHONORMALITY_TOL {
            return Err(Error::Domain(format!(
                "matrix is not a proper rotation (det = {:.6})",
                r.det()
            )));
        }
        Ok(r)
    }

    /// Matrix entry at `(row, col)`.
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.m[row][col]
    }

    /// The underlying row-major matrix.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.m
    }

    /// Matrix product `self · other` (apply `other` first).
    pub fn mul(&self, other: &Rotation) -> Rotation {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Rotation { m: out }
    }

    /// Transpose; for a rotation this is also the inverse.
    pub fn transpose(&self) -> Rotation {
        let m = &self.m;
        Rotation {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    /// Inverse rotation (alias for [`Rotation::transpose`]).
    pub fn inverse(&self) -> Rotation {
        self.transpose()
    }

    /// Applies the rotation to a raw 3-vector.
    #[inline]
    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.m;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    /// Applies the rotation to a unit ray; the result stays unit-length
    /// because rotations are isometries.
    #[inline]
    pub fn apply_ray(&self, r: UnitRay) -> UnitRay {
        let [x, y, z] = self.apply([r.x, r.y, r.z]);
        UnitRay { x, y, z }
    }

    /// Determinant.
    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Trace (sum of diagonal entries).
    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }
}

/// A unit-length direction in 3-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitRay {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitRay {
    /// Normalizes `(x, y, z)` into a unit ray.
    ///
    /// Errors on the zero vector and on non-finite components.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n2 = x * x + y * y + z * z;
        if !n2.is_finite() {
            return Err(Error::NonFinite("ray components must be finite".into()));
        }
        if n2 == 0.0 {
            return Err(Error::Domain("cannot normalize the zero vector".into()));
        }
        let inv = 1.0 / n2.sqrt();
        Ok(UnitRay {
            x: x * inv,
            y: y * inv,
            z: z * inv,
        })
    }

    /// Dot product with another ray; clamped to [−1, 1] it is the cosine of
    /// the angle between them.
    #[inline]
    pub fn dot(&self, other: &UnitRay) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }
}

/// Camera orientation as yaw/pitch/roll Euler angles (radians).
///
/// Ranges: `yaw ∈ [−π, π)`, `pitch ∈ [−π/2, π/2]`, `roll ∈ [−π, π)`.
/// The corresponding rotation is `R_y(yaw) · R_x(pitch) · R_z(roll)`; see
/// [`pose_to_rotation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl CameraPose {
    /// A pose with all three angles zero (canonical orientation).
    pub fn level() -> Self {
        CameraPose {
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
        }
    }

    /// Builds a pose, validating the documented angle ranges.
    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Result<Self> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let pi = std::f64::consts::PI;
        if !(yaw.is_finite() && pitch.is_finite() && roll.is_finite()) {
            return Err(Error::NonFinite("pose angles must be finite".into()));
        }
        if !(-pi..pi).contains(&yaw) {
            return Err(Error::Domain(format!("yaw {yaw} outside [-pi, pi)")));
        }
        if !(-half_pi..=half_pi).contains(&pitch) {
            return Err(Error::Domain(format!(
                "pitch {pitch} outside [-pi/2, pi/2]"
            )));
        }
        if !(-pi..pi).contains(&roll) {
            return Err(Error::Domain(format!("roll {roll} outside [-pi, pi)")));
        }
        Ok(CameraPose { yaw, pitch, roll })
    }

    /// The same pose with yaw replaced by zero (pitch/roll component only).
    pub fn without_yaw(&self) -> CameraPose {
        CameraPose {
            yaw: 0.0,
            ..*self
        }
    }
}

/// Perspective camera intrinsics.
///
/// Construct via [`intrinsics_from_fov`], which derives the normalized focal
/// lengths `f_y = 1 / tan(vfov/2)` and `f_x = f_y / aspect`. A point at the
/// vertical image edge then subtends exactly `vfov/2` from the optical axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    /// Vertical field of view, radians, strictly inside (0, π).
    pub vfov: f64,
    /// Width / height ratio of the field of view, > 0.
    pub aspect: f64,
    /// Raster width in pixels, ≥ 1.
    pub width_px: u32,
    /// Raster height in pixels, ≥ 1.
    pub height_px: u32,
    /// Normalized horizontal focal length (derived).
    pub f_x: f64,
    /// Normalized vertical focal length (derived).
    pub f_y: f64,
}

/// Builds [`CameraIntrinsics`] from a vertical field of view and aspect
/// ratio.
///
/// `f_y = 1 / tan(vfov/2)`, `f_x = f_y / aspect`.
pub fn intrinsics_from_fov(
    vfov: f64,
    aspect: f64,
    width_px: u32,
    height_px: u32,
) -> Result<CameraIntrinsics> {
    if !(vfov.is_finite() && aspect.is_finite()) {
        return Err(Error::NonFinite("vfov and aspect must be finite".into()));
    }
    if vfov <= 0.0 || vfov >= std::f64::consts::PI {
        return Err(Error::Domain(format!(
            "vfov {vfov} rad outside the open interval (0, pi)"
        )));
    }
    if aspect <= 0.0 {
        return Err(Error::Domain(format!("aspect {aspect} must be > 0")));
    }
    if width_px == 0 || height_px == 0 {
        return Err(Error::Domain("pixel counts must be >= 1".into()));
    }
    let f_y = 1.0 / (vfov / 2.0).tan();
    let f_x = f_y / aspect;
    Ok(CameraIntrinsics {
        vfov,
        aspect,
        width_px,
        height_px,
        f_x,
        f_y,
    })
}

/// Converts a pose to its rotation matrix
/// `R = R_y(yaw) · R_x(pitch) · R_z(roll)`, mapping camera-frame rays to
/// world-frame rays.
pub fn pose_to_rotation(pose: &CameraPose) -> Rotation {
    Rotation::yaw(pose.yaw)
        .mul(&Rotation::pitch(pose.pitch))
        .mul(&Rotation::roll(pose.roll))
}

/// Recovers yaw/pitch/roll from a rotation matrix; inverse of
/// [`pose_to_rotation`].
///
/// At gimbal lock (`|pitch| = π/2`, where yaw and roll act about the same
/// world axis) roll is reported as 0 and yaw absorbs the free angle.
pub fn rotation_to_pose(r: &Rotation) -> CameraPose {
    // From the composed matrix: R[1][2] = sin(pitch),
    // (R[0][2], R[2][2]) = cos(pitch)·(sin(yaw), cos(yaw)),
    // (R[1][0], R[1][1]) = cos(pitch)·(sin(roll), cos(roll)).
    let sp = r.at(1, 2).clamp(-1.0, 1.0);
    let pitch = sp.asin();
    let cos_pitch = (r.at(1, 0) * r.at(1, 0) + r.at(1, 1) * r.at(1, 1)).sqrt();
    if cos_pitch < 1e-12 {
        // Gimbal lock: with sin(pitch) = ±1 the top row reduces to
        // R[0][0] = cos(yaw ± roll), R[2][0] = −sin(yaw ± roll); report the
        // combined angle entirely as yaw.
        return CameraPose {
            yaw: (-r.at(2, 0)).atan2(r.at(0, 0)),
            pitch,
            roll: 0.0,
        };
    }
    CameraPose {
        yaw: r.at(0, 2).atan2(r.at(2, 2)),
        pitch,
        roll: r.at(1, 0).atan2(r.at(1, 1)),
    }
}

/// Geodesic distance on SO(3) between two rotations, radians:
/// `arccos((trace(R1ᵀ·R2) − 1) / 2)`, clamped against roundoff.
pub fn geodesic_distance(r1: &Rotation, r2: &Rotation) -> f64 {
    let t = r1.transpose().mul(r2).trace();
    ((t - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

/// Wraps an angle into [−π, π).
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = (a + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    // rem_euclid can return exactly two_pi for inputs just below -pi due to
    // rounding; fold the right endpoint back.
    if w >= std::f64::consts::PI {
        w -= two_pi;
    }
    w
}
