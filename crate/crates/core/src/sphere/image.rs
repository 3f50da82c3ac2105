//! Raster containers for the two image domains.
//!
//! Values are stored as `f32`, row-major and channel-interleaved
//! (`data[(v * width + u) * channels + c]`); sampling arithmetic runs in
//! `f64`. [`ErpImage`] enforces the 2:1 equirectangular shape and owns the
//! periodic-width semantics; [`PerspectiveImage`] is a plain bounded grid.

use crate::error::{Error, Result};

/// An equirectangular raster on the sphere.
///
/// Invariants: `width == 2 * height`, `channels >= 1`. The horizontal axis
/// is periodic — column arithmetic is mod `width` everywhere — while rows
/// clamp at the poles.
#[derive(Debug, Clone, PartialEq)]
pub struct ErpImage {
    width: u32,
    height: u32,
    channels: u32,
    data: Vec<f32>,
}

/// A perspective (pinhole) raster: a bounded Euclidean grid with no
/// wraparound semantics.
#[derive(Debug, Clone, PartialEq)]
pub struct PerspectiveImage {
    width: u32,
    height: u32,
    channels: u32,
    data: Vec<f32>,
}

impl ErpImage {
    /// Creates a zero-filled ERP raster, validating the 2:1 shape.
    pub fn new(width: u32, height: u32, channels: u32) -> Result<Self> {
        if height == 0 || width != 2 * height {
            return Err(Error::Domain(format!(
                "ERP shape must be 2:1 with height >= 1, got {width}x{height}"
            )));
        }
        if channels == 0 {
            return Err(Error::Domain("channel count must be >= 1".into()));
        }
        Ok(ErpImage {
            width,
            height,
            channels,
            data: vec![0.0; (width * height * channels) as usize],
        })
    }

    /// Creates an ERP raster by evaluating `f(u, v, c)` at every sample.
    pub fn from_fn(
        width: u32,
        height: u32,
        channels: u32,
        mut f: impl FnMut(u32, u32, u32) -> f32,
    ) -> Result<Self> {
        let mut img = ErpImage::new(width, height, channels)?;
        for v in 0..height {
            for u in 0..width {
                for c in 0..channels {
                    let i = img.index(u, v, c);
                    img.data[i] = f(u, v, c);
                }
            }
        }
        Ok(img)
    }

    /// Wraps existing interleaved data, validating the buffer length.
    pub fn from_data(width: u32, height: u32, channels: u32, data: Vec<f32>) -> Result<Self> {
        let shell = ErpImage::new(width, height, channels)?;
        if data.len() != shell.data.len() {
            return Err(Error::Domain(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(ErpImage {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u32 {
        self.channels
    }

    /// Flat index of sample `(u, v, c)`.
    #[inline]
    pub fn index(&self, u: u32, v: u32, c: u32) -> usize {
        ((v * self.width + u) * self.channels + c) as usize
    }

    /// Value at integer pixel `(u, v)`, channel `c`.
    #[inline]
    pub fn get(&self, u: u32, v: u32, c: u32) -> f32 {
        self.data[self.index(u, v, c)]
    }

    /// Sets the value at integer pixel `(u, v)`, channel `c`.
    #[inline]
    pub fn set(&mut self, u: u32, v: u32, c: u32, value: f32) {
        let i = self.index(u, v, c);
        self.data[i] = value;
    }

    /// Read-only view of the interleaved sample buffer.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Mutable view of the interleaved sample buffer.
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// Bilinear sample at continuous `(u, v)` (pixel centers at index + 0.5
    /// are addressed by integer coordinates, i.e. `sample(u, v)` with
    /// integer `u, v` returns pixel `(u, v)` exactly).
    ///
    /// Horizontal neighbors wrap mod `width`; vertical neighbors clamp to
    /// the top/bottom rows. One value per channel is written to `out`.
    pub fn bilinear_sample_wrap_into(&self, u: f64, v: f64, out: &mut [f32]) {
        debug_assert_eq!(out.len(), self.channels as usize);
        let w = self.width as i64;
        let h = self.height as i64;

        let u0f = u.floor();
        let v0f = v.floor();
        let fu = u - u0f;
        let fv = v - v0f;

        let u0 = (u0f as i64).rem_euclid(w);
        let u1 = (u0 + 1).rem_euclid(w);
        let v0 = (v0f as i64).clamp(0, h - 1);
        let v1 = (v0f as i64 + 1).clamp(0, h - 1);

        let w00 = (1.0 - fu) * (1.0 - fv);
        let w10 = fu * (1.0 - fv);
        let w01 = (1.0 - fu) * fv;
        let w11 = fu * fv;

        let c = self.channels as usize;
        let base00 = ((v0 * w + u0) as usize) * c;
        let base10 = ((v0 * w + u1) as usize) * c;
        let base01 = ((v1 * w + u0) as usize) * c;
        let base11 = ((v1 * w + u1) as usize) * c;
        for (ch, slot) in out.iter_mut().enumerate() {
            let acc = w00 * self.data[base00 + ch] as f64
                + w10 * self.data[base10 + ch] as f64
                + w01 * self.data[base01 + ch] as f64
                + w11 * self.data[base11 + ch] as f64;
            *slot = acc as f32;
        }
    }

    /// Allocating convenience wrapper around
    /// [`ErpImage::bilinear_sample_wrap_into`].
    pub fn bilinear_sample_wrap(&self, u: f64, v: f64) -> Vec<f32> {
        let mut out = vec![0.0; self.channels as usize];
        self.bilinear_sample_wrap_into(u, v, &mut out);
        out
    }
}

impl PerspectiveImage {
    /// Creates a zero-filled perspective raster.
    pub fn new(width: u32, height: u32, channels: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain("image dimensions must be >= 1".into()));
        }
        if channels == 0 {
            return Err(Error::Domain("channel count must be >= 1".into()));
        }
        Ok(PerspectiveImage {
            width,
            height,
            channels,
            data: vec![0.0; (width * height * channels) as usize],
        })
    }

    /// Creates a perspective raster by evaluating `f(u, v, c)` everywhere.
    pub fn from_fn(
        width: u32,
        height: u32,
        channels: u32,
        mut f: impl FnMut(u32, u32, u32) -> f32,
    ) -> Result<Self> {
        let mut img = PerspectiveImage::new(width, height, channels)?;
        for v in 0..height {
            for u in 0..width {
                for c in 0..channels {
                    let i = img.index(u, v, c);
                    img.data[i] = f(u, v, c);
                }
            }
        }
        Ok(img)
    }

    /// Wraps existing interleaved data, validating the buffer length.
    pub fn from_data(width: u32, height: u32, channels: u32, data: Vec<f32>) -> Result<Self> {
        let shell = PerspectiveImage::new(width, height, channels)?;
        if data.len() != shell.data.len() {
            return Err(Error::Domain(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(PerspectiveImage {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u32 {
        self.channels
    }

    /// Flat index of sample `(u, v, c)`.
    #[inline]
    pub fn index(&self, u: u32, v: u32, c: u32) -> usize {
        ((v * self.width + u) * self.channels + c) as usize
    }

    /// Value at integer pixel `(u, v)`, channel `c`.
    #[inline]
    pub fn get(&self, u: u32, v: u32, c: u32) -> f32 {
        self.data[self.index(u, v, c)]
    }

    /// Sets the value at integer pixel `(u, v)`, channel `c`.
    #[inline]
    pub fn set(&mut self, u: u32, v: u32, c: u32, value: f32) {
        let i = self.index(u, v, c);
        self.data[i] = value;
    }

    /// Read-only view of the interleaved sample buffer.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Mutable view of the interleaved sample buffer.
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// Bilinear sample with edge clamping on both axes (no wraparound).
    pub fn bilinear_sample_clamp_into(&self, u: f64, v: f64, out: &mut [f32]) {
        debug_assert_eq!(out.len(), self.channels as usize);
        let w = self.width as i64;
        let h = self.height as i64;

        let u0f = u.floor();
        let v0f = v.floor();
        let fu = u - u0f;
        let fv = v - v0f;

        let u0 = (u0f as i64).clamp(0, w - 1);
        let u1 = (u0f as i64 + 1).clamp(0, w - 1);
        let v0 = (v0f as i64).clamp(0, h - 1);
        let v1 = (v0f as i64 + 1).clamp(0, h - 1);

        let w00 = (1.0 - fu) * (1.0 - fv);
        let w10 = fu * (1.0 - fv);
        let w01 = (1.0 - fu) * fv;
        let w11 = fu * fv;

        let c = self.channels as usize;
        let base00 = ((v0 * w + u0) as usize) * c;
        let base10 = ((v0 * w + u1) as usize) * c;
        let base01 = ((v1 * w + u0) as usize) * c;
        let base11 = ((v1 * w + u1) as usize) * c;
        for (ch, slot) in out.iter_mut().enumerate() {
            let acc = w00 * self.data[base00 + ch] as f64
                + w10 * self.data[base10 + ch] as f64
                + w01 * self.data[base01 + ch] as f64
                + w11 * self.data[base11 + ch] as f64;
            *slot = acc as f32;
        }
    }
}

/// Circularly shifts an ERP raster right by `delta` columns:
/// `out[v, u] = in[v, (u − delta) mod W]`. Exact and lossless; the group
/// action of `Z/WZ` on the periodic axis.
pub fn roll_erp(erp: &ErpImage, delta: i64) -> ErpImage {
    let w = erp.width as i64;
    let c = erp.channels as usize;
    let shift = delta.rem_euclid(w) as usize;
    let mut out = erp.clone();
    if shift == 0 {
        return out;
    }
    let row_len = erp.width as usize * c;
    let split = row_len - shift * c;
    for v in 0..erp.height as usize {
        let src = &erp.data[v * row_len..(v + 1) * row_len];
        let dst = &mut out.data[v * row_len..(v + 1) * row_len];
        // Column u of the output reads column (u - shift) mod W: the last
        // `shift` source columns land at the row start.
        dst[..shift * c].copy_from_slice(&src[split..]);
        dst[shift * c..].copy_from_slice(&src[..split]);
    }
    out
}
