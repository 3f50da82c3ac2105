//! PNG raster I/O for both image domains.
//!
//! Supported layouts: 8- and 16-bit grayscale (1 channel), RGB (3) and RGBA
//! (4). Samples are stored in files as integers and exchanged with the
//! in-memory `f32` representation on a linear [0, 1] scale (value / 255 or
//! value / 65535); no gamma conversion is applied in either direction.
//! Values outside [0, 1] are clamped on write.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageReader, Luma, Rgb, Rgba};

use crate::error::{Error, Result};
use crate::sphere::{ErpImage, PerspectiveImage};

/// Sample depth for PNG output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PngDepth {
    /// 8 bits per sample.
    Eight,
    /// 16 bits per sample.
    Sixteen,
}

/// Writes an ERP raster as a PNG file (1, 3 or 4 channels).
pub fn write_erp_png(img: &ErpImage, path: &Path, depth: PngDepth) -> Result<()> {
    write_png(img.width(), img.height(), img.channels(), img.data(), path, depth)
}

/// Writes a perspective raster as a PNG file (1, 3 or 4 channels).
pub fn write_persp_png(img: &PerspectiveImage, path: &Path, depth: PngDepth) -> Result<()> {
    write_png(img.width(), img.height(), img.channels(), img.data(), path, depth)
}

/// Reads a PNG file as an ERP raster, validating the 2:1 shape.
pub fn read_erp_png(path: &Path) -> Result<ErpImage> {
    let (w, h, c, data) = read_png(path)?;
    ErpImage::from_data(w, h, c, data)
}

/// Reads a PNG file as a perspective raster.
pub fn read_persp_png(path: &Path) -> Result<PerspectiveImage> {
    let (w, h, c, data) = read_png(path)?;
    PerspectiveImage::from_data(w, h, c, data)
}

fn write_png(
    width: u32,
    height: u32,
    channels: u32,
    data: &[f32],
    path: &Path,
    depth: PngDepth,
) -> Result<()> {
    if !matches!(channels, 1 | 3 | 4) {
        return Err(Error::Config(format!(
            "PNG output supports 1, 3 or 4 channels, got {channels}"
        )));
    }
    match depth {
        PngDepth::Eight => {
            let buf: Vec<u8> = data
                .iter()
                .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
                .collect();
            save_buffer(width, height, channels, buf, path)
        }
        PngDepth::Sixteen => {
            let buf: Vec<u16> = data
                .iter()
                .map(|&v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
                .collect();
            save_buffer16(width, height, channels, buf, path)
        }
    }
}

fn save_buffer(width: u32, height: u32, channels: u32, buf: Vec<u8>, path: &Path) -> Result<()> {
    let ok = match channels {
        1 => ImageBuffer::<Luma<u8>, _>::from_raw(width, height, buf)
            .map(|b| b.save(path))
            .transpose()?,
        3 => ImageBuffer::<Rgb<u8>, _>::from_raw(width, height, buf)
            .map(|b| b.save(path))
            .transpose()?,
        4 => ImageBuffer::<Rgba<u8>, _>::from_raw(width, height, buf)
            .map(|b| b.save(path))
            .transpose()?,
        _ => unreachable!("channel count validated above"),
    };
    ok.map(|_| ())
        .ok_or_else(|| Error::Format("buffer length mismatch while encoding PNG".into()))
}

fn save_buffer16(width: u32, height: u32, channels: u32, buf: Vec<u16>, path: &Path) -> Result<()> {
    let ok = match channels {
        1 => ImageBuffer::<Luma<u16>, _>::from_raw(width, height, buf)
            .map(|b| b.save(path))
            .transpose()?,
        3 => ImageBuffer::<Rgb<u16>, _>::from_raw(width, height, buf)
            .map(|b| b.save(path))
            .transpose()?,
        4 => ImageBuffer::<Rgba<u16>, _>::from_raw(width, height, buf)
            .map(|b| b.save(path))
            .transpose()?,
        _ => unreachable!("channel count validated above"),
    };
    ok.map(|_| ())
        .ok_or_else(|| Error::Format("buffer length mismatch while encoding PNG".into()))
}

fn read_png(path: &Path) -> Result<(u32, u32, u32, Vec<f32>)> {
    let dynimg = ImageReader::open(path)?.decode()?;
    let (w, h) = (dynimg.width(), dynimg.height());
    let (channels, data): (u32, Vec<f32>) = match dynimg {
        DynamicImage::ImageLuma8(b) => (1, scale8(b.into_raw())),
        DynamicImage::ImageRgb8(b) => (3, scale8(b.into_raw())),
        DynamicImage::ImageRgba8(b) => (4, scale8(b.into_raw())),
        DynamicImage::ImageLuma16(b) => (1, scale16(b.into_raw())),
        DynamicImage::ImageRgb16(b) => (3, scale16(b.into_raw())),
        DynamicImage::ImageRgba16(b) => (4, scale16(b.into_raw())),
        // Gray+alpha and other exotic layouts: convert through RGBA rather
        // than rejecting the file.
        other => (4, scale8(other.to_rgba8().into_raw())),
    };
    Ok((w, h, channels, data))
}

fn scale8(raw: Vec<u8>) -> Vec<f32> {
    raw.into_iter().map(|v| v as f32 / 255.0).collect()
}

fn scale16(raw: Vec<u16>) -> Vec<f32> {
    raw.into_iter().map(|v| v as f32 / 65535.0).collect()
}
