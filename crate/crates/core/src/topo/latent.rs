//! Planar latent tensors with a circularly periodic width axis.

use crate::error::{Error, Result};

/// A `C × H × W` tensor of `f64` values stored planar row-major
/// (`index = (c·H + y)·W + x`). The width axis is topologically a circle:
/// all horizontal index arithmetic in this crate is taken mod `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTensor {
    channels: u32,
    height: u32,
    width: u32,
    data: Vec<f64>,
}

impl LatentTensor {
    /// All-zero tensor.
    pub fn zeros(channels: u32, height: u32, width: u32) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Config(format!(
                "latent dims {channels}x{height}x{width} must all be nonzero"
            )));
        }
        Ok(LatentTensor {
            channels,
            height,
            width,
            data: vec![0.0; (channels * height * width) as usize],
        })
    }

    /// Builds a tensor by evaluating `f(c, y, x)` at every element.
    pub fn from_fn(
        channels: u32,
        height: u32,
        width: u32,
        mut f: impl FnMut(u32, u32, u32) -> f64,
    ) -> Result<Self> {
        let mut z = Self::zeros(channels, height, width)?;
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    let i = z.index(c, y, x);
                    z.data[i] = f(c, y, x);
                }
            }
        }
        Ok(z)
    }

    /// Wraps an existing planar buffer.
    pub fn from_data(channels: u32, height: u32, width: u32, data: Vec<f64>) -> Result<Self> {
        if data.len() != (channels * height * width) as usize {
            return Err(Error::Config(format!(
                "buffer of {} elements does not match {channels}x{height}x{width}",
                data.len()
            )));
        }
        let mut z = Self::zeros(channels, height, width)?;
        z.data = data;
        Ok(z)
    }

    /// Zero tensor with the same shape as `self`.
    pub fn zeros_like(&self) -> Self {
        LatentTensor {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: vec![0.0; self.data.len()],
        }
    }

    pub fn channels(&self) -> u32 {
        self.channels
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn shape(&self) -> (u32, u32, u32) {
        (self.channels, self.height, self.width)
    }

    /// Flat index of `(c, y, x)`.
    #[inline]
    pub fn index(&self, c: u32, y: u32, x: u32) -> usize {
        ((c * self.height + y) * self.width + x) as usize
    }

    #[inline]
    pub fn get(&self, c: u32, y: u32, x: u32) -> f64 {
        self.data[self.index(c, y, x)]
    }

    #[inline]
    pub fn set(&mut self, c: u32, y: u32, x: u32, v: f64) {
        let i = self.index(c, y, x);
        self.data[i] = v;
    }

    /// One row of one channel plane as a contiguous slice.
    #[inline]
    pub fn row(&self, c: u32, y: u32) -> &[f64] {
        let start = self.index(c, y, 0);
        &self.data[start..start + self.width as usize]
    }

    #[inline]
    pub fn row_mut(&mut self, c: u32, y: u32) -> &mut [f64] {
        let start = self.index(c, y, 0);
        let w = self.width as usize;
        &mut self.data[start..start + w]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest absolute element.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Elementwise `self + s·other`; shapes must match.
    pub fn axpy(&mut self, other: &LatentTensor, s: f64) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Config(format!(
                "shape {:?} does not match {:?}",
                self.shape(),
                other.shape()
            )));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }
}

/// Circular shift along the width axis: `out[c, y, x] = z[c, y, (x−δ) mod w]`.
///
/// Exact (a pure permutation of stored values), so the group laws hold
/// bit-for-bit: `roll(z, 0) = z`, `roll(z, w) = z`, and
/// `roll(roll(z, a), b) = roll(z, a + b)`.
pub fn roll_latent(z: &LatentTensor, delta: i64) -> LatentTensor {
    let w = z.width() as usize;
    let shift = (delta.rem_euclid(w as i64)) as usize;
    let mut out = z.clone();
    if shift == 0 {
        return out;
    }
    for c in 0..z.channels() {
        for y in 0..z.height() {
            let src = z.row(c, y);
            let dst = out.row_mut(c, y);
            // dst[x] = src[(x - shift) mod w]: the tail of src lands at the
            // head of dst and vice versa.
            dst[shift..].copy_from_slice(&src[..w - shift]);
            dst[..shift].copy_from_slice(&src[w - shift..]);
        }
    }
    out
}

/// Concatenates tensors along the channel axis; spatial dims must agree.
pub fn concat_channels(parts: &[&LatentTensor]) -> Result<LatentTensor> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Config("cannot concatenate zero tensors".into()))?;
    let (h, w) = (first.height(), first.width());
    let mut channels = 0;
    for p in parts {
        if (p.height(), p.width()) != (h, w) {
            return Err(Error::Config(format!(
                "spatial dims {}x{} do not match {h}x{w}",
                p.height(),
                p.width()
            )));
        }
        channels += p.channels();
    }
    let mut data = Vec::with_capacity((channels * h * w) as usize);
    for p in parts {
        data.extend_from_slice(p.data());
    }
    LatentTensor::from_data(channels, h, w, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_latent(seed: u64, c: u32, h: u32, w: u32) -> LatentTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LatentTensor::from_fn(c, h, w, |_, _, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn layout_is_planar_row_major() {
        let z = LatentTensor::from_fn(2, 3, 4, |c, y, x| (c * 100 + y * 10 + x) as f64).unwrap();
        assert_eq!(z.index(1, 2, 3), ((1 * 3 + 2) * 4 + 3) as usize);
        assert_eq!(z.get(1, 2, 3), 123.0);
        assert_eq!(z.row(1, 2), &[120.0, 121.0, 122.0, 123.0]);
    }

    #[test]
    fn zero_dims_are_rejected() {
        assert!(LatentTensor::zeros(0, 2, 2).is_err());
        assert!(LatentTensor::zeros(1, 0, 2).is_err());
        assert!(LatentTensor::from_data(1, 2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn roll_zero_and_full_width_are_identity() {
        let z = random_latent(1, 3, 4, 8);
        assert_eq!(roll_latent(&z, 0), z);
        assert_eq!(roll_latent(&z, 8), z);
        assert_eq!(roll_latent(&z, -8), z);
    }

    #[test]
    fn roll_moves_columns_in_the_documented_direction() {
        let z = LatentTensor::from_fn(1, 1, 5, |_, _, x| x as f64).unwrap();
        let r = roll_latent(&z, 2);
        // out[x] = in[(x-2) mod 5]
        assert_eq!(r.data(), &[3.0, 4.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn roll_composition_law_is_bit_exact() {
        let z = random_latent(2, 2, 5, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let a = rng.random_range(-40i64..40);
            let b = rng.random_range(-40i64..40);
            assert_eq!(roll_latent(&roll_latent(&z, a), b), roll_latent(&z, a + b));
            assert_eq!(roll_latent(&roll_latent(&z, a), -a), z);
        }
    }

    #[test]
    fn concat_stacks_channels_in_order() {
        let a = LatentTensor::from_fn(1, 2, 2, |_, y, x| (y * 2 + x) as f64).unwrap();
        let b = LatentTensor::from_fn(2, 2, 2, |c, _, _| 10.0 + c as f64).unwrap();
        let cat = concat_channels(&[&a, &b]).unwrap();
        assert_eq!(cat.shape(), (3, 2, 2));
        assert_eq!(cat.get(0, 1, 1), 3.0);
        assert_eq!(cat.get(1, 0, 0), 10.0);
        assert_eq!(cat.get(2, 1, 0), 11.0);
        assert!(concat_channels(&[&a, &random_latent(0, 1, 3, 2)]).is_err());
        assert!(concat_channels(&[]).is_err());
    }

    #[test]
    fn axpy_adds_scaled_elementwise() {
        let mut a = LatentTensor::from_fn(1, 1, 3, |_, _, x| x as f64).unwrap();
        let b = LatentTensor::from_fn(1, 1, 3, |_, _, _| 2.0).unwrap();
        a.axpy(&b, 0.5).unwrap();
        assert_eq!(a.data(), &[1.0, 2.0, 3.0]);
        assert!(a.axpy(&LatentTensor::zeros(1, 1, 4).unwrap(), 1.0).is_err());
    }
}
