//! Projections between pixel grids and unit rays, and the image-level
//! warps built from them.
//!
//! `erp_pixel_to_ray` / `ray_to_erp_pixel` map the 2:1 equirectangular grid
//! to directions on the sphere; `persp_pixel_to_ray` / `ray_to_persp_pixel`
//! do the same for a pinhole camera. The image-level operations compose
//! them per pixel with bilinear resampling.

use std::f64::consts::{FRAC_PI_2, PI};

use super::image::{ErpImage, PerspectiveImage};
use super::types::{pose_to_rotation, CameraIntrinsics, CameraPose, Rotation, UnitRay};
use crate::error::{Error, Result};

/// Converts a (fractional) ERP pixel coordinate to a world-frame unit ray.
///
/// Longitude `θ = 2π(u + 0.5)/W − π`, latitude `φ = π/2 − π(v + 0.5)/H`,
/// direction `(cosφ·sinθ, sinφ, cosφ·cosθ)`. `u` may be any real; it wraps
/// mod `W` by the periodicity of the azimuth.
pub fn erp_pixel_to_ray(u: f64, v: f64, w_e: u32, h_e: u32) -> UnitRay {
    let theta = 2.0 * PI * (u + 0.5) / w_e as f64 - PI;
    let phi = FRAC_PI_2 - PI * (v + 0.5) / h_e as f64;
    let (sin_t, cos_t) = theta.sin_cos();
    let (sin_p, cos_p) = phi.sin_cos();
    UnitRay {
        x: cos_p * sin_t,
        y: sin_p,
        z: cos_p * cos_t,
    }
}

/// Converts a world-frame unit ray to fractional ERP pixel coordinates.
///
/// Inverse of [`erp_pixel_to_ray`]; `u` is reported in `[−0.5, W − 0.5)`
/// (callers index mod `W`). At the exact poles the longitude is undefined;
/// the `atan2(0, 0) = 0` convention pins it deterministically.
pub fn ray_to_erp_pixel(d: &UnitRay, w_e: u32, h_e: u32) -> (f64, f64) {
    let theta = d.x.atan2(d.z);
    let phi = d.y.clamp(-1.0, 1.0).asin();
    let mut u = (theta + PI) / (2.0 * PI) * w_e as f64 - 0.5;
    // theta = pi maps to the same column as theta = -pi.
    if u >= w_e as f64 - 0.5 {
        u -= w_e as f64;
    }
    let v = (FRAC_PI_2 - phi) / PI * h_e as f64 - 0.5;
    (u, v)
}

/// Converts a (fractional) perspective pixel coordinate to a camera-frame
/// unit ray.
///
/// `x_ndc = 2(u + 0.5)/W − 1`, `y_ndc = 1 − 2(v + 0.5)/H`, direction
/// `normalize(x_ndc/f_x, y_ndc/f_y, 1)`.
pub fn persp_pixel_to_ray(u: f64, v: f64, intr: &CameraIntrinsics) -> UnitRay {
    let x_ndc = 2.0 * (u + 0.5) / intr.width_px as f64 - 1.0;
    let y_ndc = 1.0 - 2.0 * (v + 0.5) / intr.height_px as f64;
    let x = x_ndc / intr.f_x;
    let y = y_ndc / intr.f_y;
    let inv = 1.0 / (x * x + y * y + 1.0).sqrt();
    UnitRay {
        x: x * inv,
        y: y * inv,
        z: inv,
    }
}

/// Projects a camera-frame unit ray to perspective pixel coordinates.
///
/// Inverse of [`persp_pixel_to_ray`]. `valid` iff the ray points in front
/// of the camera (`z > 0`) and the projection lands inside
/// `[−0.5, W − 0.5) × [−0.5, H − 0.5)`; coordinates are only meaningful
/// when `valid`.
pub fn ray_to_persp_pixel(d: &UnitRay, intr: &CameraIntrinsics) -> (f64, f64, bool) {
    if d.z <= 0.0 {
        return (0.0, 0.0, false);
    }
    let x_ndc = intr.f_x * d.x / d.z;
    let y_ndc = intr.f_y * d.y / d.z;
    let w = intr.width_px as f64;
    let h = intr.height_px as f64;
    let u = (x_ndc + 1.0) * w / 2.0 - 0.5;
    let v = (1.0 - y_ndc) * h / 2.0 - 0.5;
    let valid = (-0.5..w - 0.5).contains(&u) && (-0.5..h - 0.5).contains(&v);
    (u, v, valid)
}

/// Projects a perspective image onto an ERP canvas at the given pose.
///
/// For every ERP pixel the world ray is rotated into the camera frame by
/// `R⁻¹` and projected; where the projection is valid the perspective image
/// is bilinearly sampled and the 1-channel mask is set to 1 (else both
/// stay 0). Returns `(erp, mask)`.
///
/// The perspective raster dimensions must match `intr.width_px` ×
/// `intr.height_px`.
pub fn project_perspective_to_erp(
    persp: &PerspectiveImage,
    intr: &CameraIntrinsics,
    pose: &CameraPose,
    w_e: u32,
    h_e: u32,
) -> Result<(ErpImage, ErpImage)> {
    if persp.width() != intr.width_px || persp.height() != intr.height_px {
        return Err(Error::Config(format!(
            "perspective image is {}x{} but intrinsics expect {}x{}",
            persp.width(),
            persp.height(),
            intr.width_px,
            intr.height_px
        )));
    }
    let mut erp = ErpImage::new(w_e, h_e, persp.channels())?;
    let mut mask = ErpImage::new(w_e, h_e, 1)?;
    let r_inv = pose_to_rotation(pose).inverse();
    let mut sample = vec![0.0f32; persp.channels() as usize];
    for v in 0..h_e {
        for u in 0..w_e {
            let d_world = erp_pixel_to_ray(u as f64, v as f64, w_e, h_e);
            let d_cam = r_inv.apply_ray(d_world);
            let (pu, pv, valid) = ray_to_persp_pixel(&d_cam, intr);
            if valid {
                persp.bilinear_sample_clamp_into(pu, pv, &mut sample);
                for (c, &s) in sample.iter().enumerate() {
                    erp.set(u, v, c as u32, s);
                }
                mask.set(u, v, 0, 1.0);
            }
        }
    }
    Ok((erp, mask))
}

/// Renders a perspective view of an ERP panorama at the given pose.
///
/// For every perspective pixel the camera ray is rotated into the world
/// frame by `R` and the panorama is sampled bilinearly (wrapping in
/// azimuth).
pub fn render_perspective_from_erp(
    erp: &ErpImage,
    intr: &CameraIntrinsics,
    pose: &CameraPose,
) -> PerspectiveImage {
    render_with_offsets(erp, intr, pose, &[0.0])
}

/// [`render_perspective_from_erp`] with `factor × factor` uniform
/// supersampling per output pixel (anti-aliasing for resolution-mismatch
/// tests). `factor = 1` reproduces the plain render exactly.
pub fn render_perspective_supersampled(
    erp: &ErpImage,
    intr: &CameraIntrinsics,
    pose: &CameraPose,
    factor: u32,
) -> Result<PerspectiveImage> {
    if factor == 0 {
        return Err(Error::Config("supersampling factor must be >= 1".into()));
    }
    let offsets: Vec<f64> = (0..factor)
        .map(|i| (i as f64 + 0.5) / factor as f64 - 0.5)
        .collect();
    Ok(render_with_offsets(erp, intr, pose, &offsets))
}

fn render_with_offsets(
    erp: &ErpImage,
    intr: &CameraIntrinsics,
    pose: &CameraPose,
    offsets: &[f64],
) -> PerspectiveImage {
    let r = pose_to_rotation(pose);
    let channels = erp.channels();
    let mut out = PerspectiveImage::new(intr.width_px, intr.height_px, channels)
        .expect("intrinsics guarantee positive dimensions");
    let mut sample = vec![0.0f32; channels as usize];
    let mut acc = vec![0.0f64; channels as usize];
    let norm = 1.0 / (offsets.len() * offsets.len()) as f64;
    for v in 0..intr.height_px {
        for u in 0..intr.width_px {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for dv in offsets {
                for du in offsets {
                    let d_cam = persp_pixel_to_ray(u as f64 + du, v as f64 + dv, intr);
                    let d_world = r.apply_ray(d_cam);
                    let (eu, ev) = ray_to_erp_pixel(&d_world, erp.width(), erp.height());
                    erp.bilinear_sample_wrap_into(eu, ev, &mut sample);
                    for (a, &s) in acc.iter_mut().zip(sample.iter()) {
                        *a += s as f64;
                    }
                }
            }
            for (c, a) in acc.iter().enumerate() {
                out.set(u, v, c as u32, (a * norm) as f32);
            }
        }
    }
    out
}

/// Rotates an ERP panorama: `out(p) = in(R⁻¹ · ray(p))`, resampled
/// bilinearly.
///
/// Composition runs right-to-left: `rotate_erp(rotate_erp(x, A), B)`
/// equals `rotate_erp(x, B·A)` up to resampling. The exact identity
/// rotation short-circuits to a lossless copy.
pub fn rotate_erp(erp: &ErpImage, r: &Rotation) -> ErpImage {
    if *r == Rotation::identity() {
        return erp.clone();
    }
    let r_inv = r.inverse();
    let (w, h, c) = (erp.width(), erp.height(), erp.channels());
    let mut out = ErpImage::new(w, h, c).expect("same validated shape");
    let mut sample = vec![0.0f32; c as usize];
    for v in 0..h {
        for u in 0..w {
            let d = erp_pixel_to_ray(u as f64, v as f64, w, h);
            let d_src = r_inv.apply_ray(d);
            let (su, sv) = ray_to_erp_pixel(&d_src, w, h);
            erp.bilinear_sample_wrap_into(su, sv, &mut sample);
            for (ch, &s) in sample.iter().enumerate() {
                out.set(u, v, ch as u32, s);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::image::roll_erp;
    use crate::sphere::types::intrinsics_from_fov;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Smooth wrap-periodic test panorama: a few integer-frequency
    /// cosines, so column 0 continues column W-1 seamlessly.
    fn smooth_panorama(w: u32, h: u32) -> ErpImage {
        ErpImage::from_fn(w, h, 1, |u, v, _| {
            let th = 2.0 * PI * (u as f64 + 0.5) / w as f64;
            let ph = PI * (v as f64 + 0.5) / h as f64;
            let val = 0.5
                + 0.2 * (th + 0.7 * ph).cos()
                + 0.15 * (2.0 * th - ph + 1.0).cos()
                + 0.1 * (3.0 * th + 0.5).sin() * ph.sin();
            val as f32
        })
        .unwrap()
    }

    fn psnr(a: &ErpImage, b: &ErpImage, mask: Option<&ErpImage>) -> f64 {
        let mut se = 0.0f64;
        let mut n = 0usize;
        for v in 0..a.height() {
            for u in 0..a.width() {
                if let Some(m) = mask {
                    if m.get(u, v, 0) < 0.5 {
                        continue;
                    }
                }
                for c in 0..a.channels() {
                    let d = a.get(u, v, c) as f64 - b.get(u, v, c) as f64;
                    se += d * d;
                    n += 1;
                }
            }
        }
        let mse = se / n as f64;
        10.0 * (1.0 / mse).log10()
    }

    #[test]
    fn erp_corner_pixel_points_along_negative_x() {
        // W=2, H=1: pixel (0,0) has theta = -pi/2, phi = 0.
        let d = erp_pixel_to_ray(0.0, 0.0, 2, 1);
        assert!((d.x + 1.0).abs() < 1e-12 && d.y.abs() < 1e-12 && d.z.abs() < 1e-12);
    }

    #[test]
    fn erp_center_faces_forward() {
        for h in [1u32, 8, 64] {
            let w = 2 * h;
            let d = erp_pixel_to_ray(w as f64 / 2.0 - 0.5, h as f64 / 2.0 - 0.5, w, h);
            assert!(d.x.abs() < 1e-12 && d.y.abs() < 1e-12 && (d.z - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_ray_maps_to_center_column() {
        let d = UnitRay::new(0.0, 0.0, 1.0).unwrap();
        let (u, _) = ray_to_erp_pixel(&d, 64, 32);
        assert!((u - 31.5).abs() < 1e-12, "theta=0 lands at W/2 - 0.5");
    }

    #[test]
    fn zenith_has_deterministic_longitude() {
        let d = UnitRay::new(0.0, 1.0, 0.0).unwrap();
        let (u, v) = ray_to_erp_pixel(&d, 64, 32);
        assert!((v + 0.5).abs() < 1e-12, "zenith sits at v = -0.5");
        // atan2(0, 0) := 0 pins the (arbitrary) longitude.
        assert!((u - 31.5).abs() < 1e-12);
    }

    #[test]
    fn erp_round_trip_over_grid_sweep() {
        let (w, h) = (128u32, 64u32);
        for v in 0..h {
            for u in 0..w {
                let d = erp_pixel_to_ray(u as f64, v as f64, w, h);
                let (ru, rv) = ray_to_erp_pixel(&d, w, h);
                assert!(
                    (ru - u as f64).abs() < 1e-9 && (rv - v as f64).abs() < 1e-9,
                    "pixel ({u},{v}) -> ray -> ({ru},{rv})"
                );
            }
        }
    }

    #[test]
    fn ray_round_trip_away_from_poles() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
        let (w, h) = (512u32, 256u32);
        for _ in 0..2000 {
            let phi = rng.random_range(-89f64.to_radians()..89f64.to_radians());
            let theta = rng.random_range(-PI..PI);
            let d = UnitRay {
                x: phi.cos() * theta.sin(),
                y: phi.sin(),
                z: phi.cos() * theta.cos(),
            };
            let (u, v) = ray_to_erp_pixel(&d, w, h);
            let back = erp_pixel_to_ray(u, v, w, h);
            assert!(
                (back.x - d.x).abs() < 1e-9
                    && (back.y - d.y).abs() < 1e-9
                    && (back.z - d.z).abs() < 1e-9
            );
        }
    }

    #[test]
    fn persp_center_and_top_follow_the_fov() {
        let intr = intrinsics_from_fov(FRAC_PI_2, 1.0, 64, 64).unwrap();
        let center = persp_pixel_to_ray(31.5, 31.5, &intr);
        assert!(center.x.abs() < 1e-12 && center.y.abs() < 1e-12 && (center.z - 1.0).abs() < 1e-12);
        // Top-center pixel: within half a pixel of +45 deg elevation.
        let top = persp_pixel_to_ray(31.5, 0.0, &intr);
        let elevation = top.y.atan2(top.z);
        let half_pixel = FRAC_PI_2 / 64.0 / 2.0;
        assert!((elevation - 45f64.to_radians()).abs() < half_pixel);
    }

    #[test]
    fn persp_round_trip_over_grid() {
        let intr = intrinsics_from_fov(1.2, 16.0 / 9.0, 96, 54).unwrap();
        for v in 0..54u32 {
            for u in 0..96u32 {
                let d = persp_pixel_to_ray(u as f64, v as f64, &intr);
                let (ru, rv, valid) = ray_to_persp_pixel(&d, &intr);
                assert!(valid, "in-frame pixel projects as valid");
                assert!((ru - u as f64).abs() < 1e-9 && (rv - v as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn behind_camera_and_out_of_fov_rays_are_invalid() {
        let intr = intrinsics_from_fov(FRAC_PI_2, 1.0, 64, 64).unwrap();
        let behind = UnitRay::new(0.0, 0.0, -1.0).unwrap();
        assert!(!ray_to_persp_pixel(&behind, &intr).2);
        // A ray just past the vertical FOV edge.
        let eps = 1e-4;
        let grazing = UnitRay::new(0.0, (FRAC_PI_2 / 2.0 + eps).sin(), (FRAC_PI_2 / 2.0 + eps).cos())
            .unwrap();
        assert!(!ray_to_persp_pixel(&grazing, &intr).2);
    }

    #[test]
    fn mask_area_matches_monte_carlo_solid_angle() {
        let intr = intrinsics_from_fov(FRAC_PI_2, 1.0, 64, 64).unwrap();
        let persp = PerspectiveImage::from_fn(64, 64, 1, |_, _, _| 1.0).unwrap();
        let (_, mask) =
            project_perspective_to_erp(&persp, &intr, &CameraPose::level(), 512, 256).unwrap();

        // Solid-angle-weighted mask area: each ERP pixel covers
        // cos(phi) * (2pi/W) * (pi/H) steradians.
        let (w, h) = (512u32, 256u32);
        let cell = (2.0 * PI / w as f64) * (PI / h as f64);
        let mut area = 0.0f64;
        for v in 0..h {
            let phi = FRAC_PI_2 - PI * (v as f64 + 0.5) / h as f64;
            for u in 0..w {
                if mask.get(u, v, 0) > 0.5 {
                    area += phi.cos() * cell;
                }
            }
        }
        let mask_fraction = area / (4.0 * PI);

        // Independent Monte Carlo oracle: fraction of uniform random
        // directions that fall inside the frustum.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
        let n = 200_000;
        let mut hits = 0u32;
        for _ in 0..n {
            let z: f64 = rng.random_range(-1.0..1.0);
            let t: f64 = rng.random_range(0.0..2.0 * PI);
            let r = (1.0 - z * z).sqrt();
            let d = UnitRay {
                x: r * t.cos(),
                y: r * t.sin(),
                z,
            };
            if ray_to_persp_pixel(&d, &intr).2 {
                hits += 1;
            }
        }
        let mc_fraction = hits as f64 / n as f64;
        assert!(
            (mask_fraction - mc_fraction).abs() < 0.01 * mc_fraction.max(0.01),
            "mask fraction {mask_fraction:.4} vs Monte Carlo {mc_fraction:.4}"
        );
        // vfov=90, aspect=1 has a closed form: 4*asin(sin^2(45 deg))/(4pi) = 1/6.
        assert!((mask_fraction - 1.0 / 6.0).abs() < 0.002);
    }

    #[test]
    fn yaw_translates_the_mask_by_whole_columns() {
        let intr = intrinsics_from_fov(1.1, 4.0 / 3.0, 48, 36).unwrap();
        let persp = PerspectiveImage::from_fn(48, 36, 1, |_, _, _| 1.0).unwrap();
        let (w_e, h_e) = (256u32, 128u32);
        let (_, mask0) =
            project_perspective_to_erp(&persp, &intr, &CameraPose::level(), w_e, h_e).unwrap();
        let k = 37i64;
        let yaw = 2.0 * PI * k as f64 / w_e as f64;
        let pose = CameraPose {
            yaw,
            pitch: 0.0,
            roll: 0.0,
        };
        let (_, mask_yaw) = project_perspective_to_erp(&persp, &intr, &pose, w_e, h_e).unwrap();
        let rolled = roll_erp(&mask0, k);
        let differing = (0..h_e)
            .flat_map(|v| (0..w_e).map(move |u| (u, v)))
            .filter(|&(u, v)| (mask_yaw.get(u, v, 0) - rolled.get(u, v, 0)).abs() > 0.5)
            .count();
        assert_eq!(differing, 0, "yaw by 2*pi*k/W shifts the mask by k columns");
    }

    #[test]
    fn mask_reflects_under_roll_sign_flip() {
        let intr = intrinsics_from_fov(1.0, 16.0 / 9.0, 64, 36).unwrap();
        let persp = PerspectiveImage::from_fn(64, 36, 1, |_, _, _| 1.0).unwrap();
        let (w_e, h_e) = (256u32, 128u32);
        let mk = |roll: f64| {
            let pose = CameraPose {
                yaw: 0.0,
                pitch: 0.0,
                roll,
            };
            project_perspective_to_erp(&persp, &intr, &pose, w_e, h_e)
                .unwrap()
                .1
        };
        let pos = mk(0.4);
        let neg = mk(-0.4);
        // Left-right mirror about the forward column: u -> W-1-u.
        let differing = (0..h_e)
            .flat_map(|v| (0..w_e).map(move |u| (u, v)))
            .filter(|&(u, v)| (pos.get(u, v, 0) - neg.get(w_e - 1 - u, v, 0)).abs() > 0.5)
            .count();
        assert_eq!(differing, 0);
    }

    #[test]
    fn constant_panorama_renders_constant() {
        let erp = ErpImage::from_fn(64, 32, 3, |_, _, c| 0.25 * (c + 1) as f32).unwrap();
        let intr = intrinsics_from_fov(1.0, 1.5, 30, 20).unwrap();
        let pose = CameraPose {
            yaw: 1.0,
            pitch: 0.3,
            roll: -0.2,
        };
        let out = render_perspective_from_erp(&erp, &intr, &pose);
        for v in 0..20 {
            for u in 0..30 {
                for c in 0..3 {
                    assert!((out.get(u, v, c) - 0.25 * (c + 1) as f32).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn render_then_project_round_trip_is_faithful_inside_the_mask() {
        let erp = smooth_panorama(256, 128);
        let intr = intrinsics_from_fov(FRAC_PI_2, 1.0, 128, 128).unwrap();
        let pose = CameraPose {
            yaw: 0.8,
            pitch: 0.15,
            roll: -0.1,
        };
        let crop = render_perspective_supersampled(&erp, &intr, &pose, 2).unwrap();
        let (reproj, mask) = project_perspective_to_erp(&crop, &intr, &pose, 256, 128).unwrap();
        let db = psnr(&erp, &reproj, Some(&mask));
        assert!(db >= 35.0, "round-trip PSNR {db:.2} dB < 35 dB");
    }

    #[test]
    fn yaw_only_render_equals_roll_then_render() {
        let erp = smooth_panorama(128, 64);
        let intr = intrinsics_from_fov(1.0, 1.0, 40, 40).unwrap();
        let k = 11i64;
        let yaw = 2.0 * PI * k as f64 / 128.0;
        let direct = render_perspective_from_erp(
            &erp,
            &intr,
            &CameraPose {
                yaw,
                pitch: 0.0,
                roll: 0.0,
            },
        );
        // Rolling the panorama right by k columns moves content previously
        // at yaw = 2*pi*k/W to the forward column.
        let rolled = render_perspective_from_erp(&roll_erp(&erp, -k), &intr, &CameraPose::level());
        for v in 0..40 {
            for u in 0..40 {
                assert!(
                    (direct.get(u, v, 0) - rolled.get(u, v, 0)).abs() < 1e-6,
                    "pixel ({u},{v})"
                );
            }
        }
    }

    #[test]
    fn identity_rotation_is_lossless() {
        let erp = smooth_panorama(64, 32);
        let out = rotate_erp(&erp, &Rotation::identity());
        assert_eq!(out, erp);
    }

    #[test]
    fn rotate_round_trip_preserves_smooth_content() {
        let erp = smooth_panorama(256, 128);
        let r = pose_to_rotation(&CameraPose {
            yaw: 0.0,
            pitch: 0.3,
            roll: -0.2,
        });
        let back = rotate_erp(&rotate_erp(&erp, &r), &r.inverse());
        let db = psnr(&erp, &back, None);
        assert!(db >= 32.0, "double-resample PSNR {db:.2} dB < 32 dB");
    }

    #[test]
    fn whole_column_yaw_rotation_matches_roll() {
        let erp = smooth_panorama(128, 64);
        let k = 23i64;
        let r = Rotation::yaw(2.0 * PI * k as f64 / 128.0);
        let rotated = rotate_erp(&erp, &r);
        let rolled = roll_erp(&erp, k);
        for v in 0..64 {
            for u in 0..128 {
                assert!(
                    (rotated.get(u, v, 0) - rolled.get(u, v, 0)).abs() < 1e-6,
                    "pixel ({u},{v})"
                );
            }
        }
    }

    #[test]
    fn horizon_line_straightens_only_in_the_canonical_pose() {
        // A perspective image whose center row is bright: under the level
        // pose its ink must concentrate on the ERP equator; under pitch it
        // must bend across rows.
        let (pw, ph) = (65u32, 65u32);
        let persp = PerspectiveImage::from_fn(pw, ph, 1, |_, v, _| if v == 32 { 1.0 } else { 0.0 })
            .unwrap();
        let intr = intrinsics_from_fov(FRAC_PI_2, 1.0, pw, ph).unwrap();
        let (w_e, h_e) = (256u32, 128u32);

        let centroid_rows = |pose: &CameraPose| -> Vec<f64> {
            let (ink, mask) = project_perspective_to_erp(&persp, &intr, pose, w_e, h_e).unwrap();
            let mut rows = Vec::new();
            for u in 0..w_e {
                let (mut wsum, mut vsum) = (0.0f64, 0.0f64);
                for v in 0..h_e {
                    if mask.get(u, v, 0) > 0.5 {
                        let val = ink.get(u, v, 0) as f64;
                        wsum += val;
                        vsum += val * v as f64;
                    }
                }
                if wsum > 1e-6 {
                    rows.push(vsum / wsum);
                }
            }
            rows
        };

        let level_rows = centroid_rows(&CameraPose::level());
        let equator = h_e as f64 / 2.0 - 0.5;
        assert!(!level_rows.is_empty());
        for r in &level_rows {
            assert!(
                (r - equator).abs() < 0.5,
                "level horizon row {r} deviates from the equator {equator}"
            );
        }

        let tilted_rows = centroid_rows(&CameraPose {
            yaw: 0.0,
            pitch: 20f64.to_radians(),
            roll: 0.0,
        });
        let spread = tilted_rows
            .iter()
            .cloned()
            .fold(f64::MIN, f64::max)
            - tilted_rows.iter().cloned().fold(f64::MAX, f64::min);
        assert!(
            spread > 2.0,
            "pitched horizon should bend across rows, spread = {spread}"
        );
    }
}
