//! Procedural toy data: band-limited panoramas and (latent, mask,
//! conditioning) triplets for desk-scale training runs.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::latent::LatentTensor;
use crate::error::{Error, Result};
use crate::seeds;
use crate::sphere::{intrinsics_from_fov, project_perspective_to_erp, CameraPose, ErpImage,
    PerspectiveImage};

/// A sum of eight low-frequency cosine terms over the sphere's
/// (azimuth, colatitude) parameterization. Azimuthal frequencies are
/// integers, so the raster is exactly periodic across the wrap seam.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyPanorama {
    /// `(amplitude, azimuthal frequency, latitudinal frequency, phase)`.
    terms: [(f64, i32, i32, f64); 8],
}

impl ToyPanorama {
    pub fn seeded(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = [(0.0, 0, 0, 0.0); 8];
        for (k, t) in terms.iter_mut().enumerate() {
            // Distinct nonzero latitudinal frequencies keep the
            // row-averaged column-difference magnitude nearly uniform in
            // azimuth, so no column pair (the wrap pair included) stands
            // out statistically.
            *t = (
                rng.random_range(0.25..1.0),
                rng.random_range(1..=4),
                k as i32 + 1,
                rng.random_range(0.0..TAU),
            );
        }
        ToyPanorama { terms }
    }

    /// Raw (un-normalized) field value at fractional pixel coordinates
    /// `(u, v)` of a `width × height` raster. Periodic in `u` with period
    /// `width` by construction.
    pub fn value(&self, u: f64, v: f64, width: u32, height: u32) -> f64 {
        let theta = TAU * (u + 0.5) / width as f64;
        let phi = PI * (v + 0.5) / height as f64;
        self.terms
            .iter()
            .map(|&(a, n, m, phase)| a * (n as f64 * theta + m as f64 * phi + phase).cos())
            .sum()
    }
}

/// Renders a seeded [`ToyPanorama`] to a 1-channel ERP raster normalized
/// to `[0, 1]` with spatial mean `0.5`.
pub fn make_toy_panorama(seed: u64, height: u32, width: u32) -> Result<ErpImage> {
    if width != 2 * height || height == 0 {
        return Err(Error::Config(format!(
            "panorama must be 2:1, got {width}x{height}"
        )));
    }
    let spec = ToyPanorama::seeded(seed);
    let mut raw = vec![0.0f64; (width * height) as usize];
    for v in 0..height {
        for u in 0..width {
            raw[(v * width + u) as usize] = spec.value(u as f64, v as f64, width, height);
        }
    }
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let max_dev = raw
        .iter()
        .fold(0.0f64, |m, &x| m.max((x - mean).abs()))
        .max(1e-12);
    ErpImage::from_fn(width, height, 1, |u, v, _| {
        (0.5 + (raw[(v * width + u) as usize] - mean) / (2.0 * max_dev)) as f32
    })
}

/// One training item: clean latent `z0` in `[−1, 1]`, a binary
/// conditioning mask, and the masked conditioning latent `z0 ⊙ mask`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToySample {
    pub z0: LatentTensor,
    pub mask: LatentTensor,
    pub cond: LatentTensor,
}

/// Amplitude of the fixed `cos(azimuth)` component shared by every
/// dataset item, on the raw (pre-normalization) field scale.
const ANCHOR_AMPLITUDE: f64 = 2.0;

/// Scale applied to each item's private random harmonics. The full-scale
/// harmonic sum has a standard deviation near 1.3; shrinking it keeps the
/// shared `cos(azimuth)` component dominant, so most of the predictable
/// structure in a dataset item sits at a fixed absolute azimuth.
const HARMONIC_SCALE: f64 = 0.4;

/// Builds `count` toy samples at `height × width` latent resolution.
///
/// Each item derives two private seeds from `(seed, index)`: one for its
/// panorama harmonics, one for the frustum pose whose projection
/// footprint becomes the conditioning mask. Items are therefore
/// independent of each other and of the iteration order.
///
/// On top of its (down-scaled) private random harmonics, every item
/// carries the same dominant fixed-phase `cos(azimuth)` component. The
/// shared component makes absolute azimuth genuinely predictive of the
/// clean latent, so a position-aware network can lower its denoising loss
/// by reading its position input instead of staying shift-equivariant —
/// exactly the trade-off the shift-consistency objective exists to
/// police. The component uses an integer azimuthal frequency, so the data
/// itself remains perfectly continuous across the wrap seam.
pub fn make_toy_dataset(
    seed: u64,
    count: usize,
    height: u32,
    width: u32,
) -> Result<Vec<ToySample>> {
    if count == 0 {
        return Err(Error::Config("dataset size must be >= 1".into()));
    }
    if width != 2 * height || height == 0 {
        return Err(Error::Config(format!(
            "latents must be 2:1, got {width}x{height}"
        )));
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let pano_seed = seeds::derive(seed, 2 * i as u64);
        let pose_seed = seeds::derive(seed, 2 * i as u64 + 1);
        let spec = ToyPanorama::seeded(pano_seed);
        let mut raw = vec![0.0f64; (width * height) as usize];
        for v in 0..height {
            for u in 0..width {
                let theta = TAU * (u as f64 + 0.5) / width as f64;
                raw[(v * width + u) as usize] =
                    HARMONIC_SCALE * spec.value(u as f64, v as f64, width, height)
                        + ANCHOR_AMPLITUDE * theta.cos();
            }
        }
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        let max_dev = raw
            .iter()
            .fold(0.0f64, |m, &x| m.max((x - mean).abs()))
            .max(1e-12);
        let z0 = LatentTensor::from_fn(1, height, width, |_, y, x| {
            (raw[(y * width + x) as usize] - mean) / max_dev
        })?;

        let mut rng = ChaCha8Rng::seed_from_u64(pose_seed);
        let pose = CameraPose {
            yaw: rng.random_range(-PI..PI),
            pitch: rng.random_range(-15f64.to_radians()..15f64.to_radians()),
            roll: rng.random_range(-10f64.to_radians()..10f64.to_radians()),
        };
        let vfov = rng.random_range(60f64.to_radians()..90f64.to_radians());
        let intr = intrinsics_from_fov(vfov, 1.0, 24, 24)?;
        let ones = PerspectiveImage::from_fn(24, 24, 1, |_, _, _| 1.0)?;
        let (_, mask_erp) = project_perspective_to_erp(&ones, &intr, &pose, width, height)?;
        let mask = LatentTensor::from_fn(1, height, width, |_, y, x| {
            if mask_erp.get(x, y, 0) > 0.5 {
                1.0
            } else {
                0.0
            }
        })?;

        let mut cond = z0.clone();
        for (c, m) in cond.data_mut().iter_mut().zip(mask.data()) {
            *c *= m;
        }
        out.push(ToySample { z0, mask, cond });
    }
    Ok(out)
}

/// Converts a `[0, 1]` raster into a `[−1, 1]` latent (`2v − 1`).
pub fn unit_erp_to_latent(img: &ErpImage) -> LatentTensor {
    LatentTensor::from_fn(img.channels(), img.height(), img.width(), |c, y, x| {
        2.0 * img.get(x, y, c) as f64 - 1.0
    })
    .expect("image dims are nonzero")
}

/// Converts a `[−1, 1]` latent back to a `[0, 1]` ERP raster
/// (`(v + 1)/2`, clamped). The latent must be 2:1.
pub fn latent_to_unit_erp(z: &LatentTensor) -> Result<ErpImage> {
    ErpImage::from_fn(z.width(), z.height(), z.channels(), |u, v, c| {
        (0.5 * (z.get(c, v, u) + 1.0)).clamp(0.0, 1.0) as f32
    })
}
