//! Toy noise-prediction network: a small stack of 3×3 convolutions with
//! switchable horizontal padding, SiLU nonlinearities, timestep-embedding
//! biases, and hand-written backpropagation in `f64`.

use std::io::Cursor;
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::Rng;

use super::latent::{concat_channels, LatentTensor};
use crate::error::{Error, Result};

/// How the horizontal axis is extended at the left/right edges of a
/// convolution. The vertical axis is always zero-extended: the latent is a
/// cylinder, periodic in width only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaddingMode {
    /// Neighbors taken mod `w`; preserves shift equivariance exactly.
    Circular,
    /// Out-of-range neighbors read as zero; severs the wrap seam.
    Zero,
}

/// Dense convolution weights `[out][in][ky][kx]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    pub out_ch: u32,
    pub in_ch: u32,
    pub kh: u32,
    pub kw: u32,
    pub data: Vec<f64>,
}

impl ConvKernel {
    pub fn zeros(out_ch: u32, in_ch: u32, kh: u32, kw: u32) -> Result<Self> {
        if out_ch == 0 || in_ch == 0 {
            return Err(Error::Config("kernel channel counts must be nonzero".into()));
        }
        if kh % 2 == 0 || kw % 2 == 0 {
            return Err(Error::Config(format!(
                "kernel extents {kh}x{kw} must be odd so the output grid aligns with the input"
            )));
        }
        Ok(ConvKernel {
            out_ch,
            in_ch,
            kh,
            kw,
            data: vec![0.0; (out_ch * in_ch * kh * kw) as usize],
        })
    }

    pub fn from_fn(
        out_ch: u32,
        in_ch: u32,
        kh: u32,
        kw: u32,
        mut f: impl FnMut(u32, u32, u32, u32) -> f64,
    ) -> Result<Self> {
        let mut k = Self::zeros(out_ch, in_ch, kh, kw)?;
        for o in 0..out_ch {
            for i in 0..in_ch {
                for ky in 0..kh {
                    for kx in 0..kw {
                        let idx = k.index(o, i, ky, kx);
                        k.data[idx] = f(o, i, ky, kx);
                    }
                }
            }
        }
        Ok(k)
    }

    /// A kernel that reproduces its input (center tap 1 on the diagonal).
    pub fn identity(channels: u32, kh: u32, kw: u32) -> Result<Self> {
        Self::from_fn(channels, channels, kh, kw, |o, i, ky, kx| {
            if o == i && ky == kh / 2 && kx == kw / 2 {
                1.0
            } else {
                0.0
            }
        })
    }

    #[inline]
    pub fn index(&self, o: u32, i: u32, ky: u32, kx: u32) -> usize {
        (((o * self.in_ch + i) * self.kh + ky) * self.kw + kx) as usize
    }

    #[inline]
    pub fn get(&self, o: u32, i: u32, ky: u32, kx: u32) -> f64 {
        self.data[self.index(o, i, ky, kx)]
    }
}

/// `out[x] += k · in[x + dx]` over one row, with out-of-range source
/// columns wrapped (circular) or dropped (zero).
#[inline]
fn add_shifted_row(out: &mut [f64], inp: &[f64], dx: i64, k: f64, mode: PaddingMode) {
    let w = out.len() as i64;
    let lo = (-dx).max(0);
    let hi = (w - dx).min(w).max(lo);
    for x in lo..hi {
        out[x as usize] += k * inp[(x + dx) as usize];
    }
    if mode == PaddingMode::Circular {
        for x in (0..lo).chain(hi..w) {
            out[x as usize] += k * inp[(x + dx).rem_euclid(w) as usize];
        }
    }
}

/// `Σ_x a[x] · b[x + dx]` with the same edge semantics as
/// [`add_shifted_row`].
#[inline]
fn dot_shifted_row(a: &[f64], b: &[f64], dx: i64, mode: PaddingMode) -> f64 {
    let w = a.len() as i64;
    let lo = (-dx).max(0);
    let hi = (w - dx).min(w).max(lo);
    let mut acc = 0.0;
    for x in lo..hi {
        acc += a[x as usize] * b[(x + dx) as usize];
    }
    if mode == PaddingMode::Circular {
        for x in (0..lo).chain(hi..w) {
            acc += a[x as usize] * b[(x + dx).rem_euclid(w) as usize];
        }
    }
    acc
}

/// Same-size 2D convolution with vertical zero extension and the chosen
/// horizontal edge rule. Under `Circular` the operation commutes with
/// [`super::roll_latent`] bit-for-bit, because each output element sums
/// identical operands in an identical order either way.
pub fn circular_conv2d(
    z: &LatentTensor,
    kernel: &ConvKernel,
    horizontal_mode: PaddingMode,
) -> Result<LatentTensor> {
    if kernel.in_ch != z.channels() {
        return Err(Error::Config(format!(
            "kernel expects {} input channels, tensor has {}",
            kernel.in_ch,
            z.channels()
        )));
    }
    if kernel.kh % 2 == 0 || kernel.kw % 2 == 0 {
        return Err(Error::Config(format!(
            "kernel extents {}x{} must be odd",
            kernel.kh, kernel.kw
        )));
    }
    let (h, w) = (z.height(), z.width());
    let mut out = LatentTensor::zeros(kernel.out_ch, h, w)?;
    let (cy, cx) = (kernel.kh / 2, kernel.kw / 2);
    for o in 0..kernel.out_ch {
        for i in 0..kernel.in_ch {
            for ky in 0..kernel.kh {
                let dy = ky as i64 - cy as i64;
                for y in 0..h {
                    let ys = y as i64 + dy;
                    if ys < 0 || ys >= h as i64 {
                        continue;
                    }
                    for kx in 0..kernel.kw {
                        let k = kernel.get(o, i, ky, kx);
                        add_shifted_row(
                            out.row_mut(o, y),
                            z.row(i, ys as u32),
                            kx as i64 - cx as i64,
                            k,
                            horizontal_mode,
                        );
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Sinusoidal timestep embedding: interleaved `sin`/`cos` at `dim/2`
/// geometric frequencies (`ω_k = 10000^{−k/(dim/2)}`), matching the usual
/// transformer recipe. `dim` must be even and ≥ 2.
pub fn time_embedding(t: u32, dim: usize) -> Vec<f64> {
    assert!(dim >= 2 && dim % 2 == 0, "embedding dim {dim} must be even and >= 2");
    let half = dim / 2;
    let mut out = Vec::with_capacity(dim);
    for k in 0..half {
        let omega = 10_000f64.powf(-(k as f64) / half as f64);
        let angle = t as f64 * omega;
        out.push(angle.sin());
        out.push(angle.cos());
    }
    out
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

#[inline]
fn silu_deriv(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

/// One network layer: convolution plus per-channel bias plus a linear
/// projection of the timestep embedding (one scalar per output channel),
/// optionally followed by SiLU.
///
/// Fields are public plain data: tests and experiments may mutate weights
/// directly. `time_w` is `[out][time_dim]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub kernel: ConvKernel,
    pub bias: Vec<f64>,
    pub time_w: Vec<f64>,
    pub time_dim: usize,
    pub padding: PaddingMode,
    pub activation: bool,
}

impl ConvLayer {
    /// Uniform init in `±(9·in_ch)^{−1/2}` for conv taps and
    /// `±time_dim^{−1/2}` for the time projection; biases start at zero.
    pub fn seeded(
        out_ch: u32,
        in_ch: u32,
        padding: PaddingMode,
        activation: bool,
        time_dim: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let s = 1.0 / ((9 * in_ch) as f64).sqrt();
        let kernel = ConvKernel::from_fn(out_ch, in_ch, 3, 3, |_, _, _, _| {
            rng.random_range(-s..s)
        })?;
        let st = 1.0 / (time_dim as f64).sqrt();
        let time_w = (0..out_ch as usize * time_dim)
            .map(|_| rng.random_range(-st..st))
            .collect();
        Ok(ConvLayer {
            kernel,
            bias: vec![0.0; out_ch as usize],
            time_w,
            time_dim,
            padding,
            activation,
        })
    }

    pub fn out_ch(&self) -> u32 {
        self.kernel.out_ch
    }

    pub fn in_ch(&self) -> u32 {
        self.kernel.in_ch
    }

    /// Pre-activation response: conv + bias + time projection.
    fn forward_pre(&self, x: &LatentTensor, temb: &[f64]) -> Result<LatentTensor> {
        let mut pre = circular_conv2d(x, &self.kernel, self.padding)?;
        for o in 0..self.out_ch() {
            let mut shift = self.bias[o as usize];
            for (k, e) in temb.iter().enumerate() {
                shift += self.time_w[o as usize * self.time_dim + k] * e;
            }
            for y in 0..pre.height() {
                for v in pre.row_mut(o, y) {
                    *v += shift;
                }
            }
        }
        Ok(pre)
    }
}

/// Per-layer forward state retained for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct LayerCache {
    input: LatentTensor,
    pre: LatentTensor,
}

/// Gradient buffers mirroring one layer's weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub d_weight: Vec<f64>,
    pub d_bias: Vec<f64>,
    pub d_time_w: Vec<f64>,
}

/// Gradient buffers mirroring a whole network.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserGrad {
    pub layers: Vec<LayerGrad>,
}

impl DenoiserGrad {
    pub fn zeros_like(net: &ToyDenoiser) -> Self {
        DenoiserGrad {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    d_weight: vec![0.0; l.kernel.data.len()],
                    d_bias: vec![0.0; l.bias.len()],
                    d_time_w: vec![0.0; l.time_w.len()],
                })
                .collect(),
        }
    }

    /// `self += s · other` elementwise.
    pub fn axpy(&mut self, other: &DenoiserGrad, s: f64) {
        assert_eq!(self.layers.len(), other.layers.len());
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.d_weight.iter_mut().zip(&b.d_weight) {
                *x += s * y;
            }
            for (x, y) in a.d_bias.iter_mut().zip(&b.d_bias) {
                *x += s * y;
            }
            for (x, y) in a.d_time_w.iter_mut().zip(&b.d_time_w) {
                *x += s * y;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.d_weight.iter().all(|v| v.is_finite())
                && l.d_bias.iter().all(|v| v.is_finite())
                && l.d_time_w.iter().all(|v| v.is_finite())
        })
    }
}

/// The toy denoiser: four 3×3 conv layers (SiLU between, linear last)
/// mapping the channel concatenation `(z_t, mask, conditioning[, position])`
/// to a noise prediction with `latent_channels` channels.
///
/// With every horizontal padding circular and the position channel off the
/// network commutes with circular width shifts exactly; the position
/// channel — a sinusoidal absolute-azimuth encoding, `cos` of the column's
/// angle — deliberately breaks that symmetry: it stays put while the
/// content shifts, so any learned dependence on it is an equivariance
/// violation.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyDenoiser {
    pub layers: Vec<ConvLayer>,
    pub pos_channel: bool,
    pub latent_channels: u32,
    pub time_dim: usize,
}

impl ToyDenoiser {
    /// Standard 4-layer architecture seeded from `rng`.
    pub fn seeded_from_rng(
        latent_channels: u32,
        hidden: u32,
        padding: PaddingMode,
        pos_channel: bool,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if latent_channels == 0 || hidden == 0 {
            return Err(Error::Config("channel counts must be nonzero".into()));
        }
        let time_dim = 8;
        let in0 = 2 * latent_channels + 1 + if pos_channel { 1 } else { 0 };
        let layers = vec![
            ConvLayer::seeded(hidden, in0, padding, true, time_dim, rng)?,
            ConvLayer::seeded(hidden, hidden, padding, true, time_dim, rng)?,
            ConvLayer::seeded(hidden, hidden, padding, true, time_dim, rng)?,
            ConvLayer::seeded(latent_channels, hidden, padding, false, time_dim, rng)?,
        ];
        Ok(ToyDenoiser {
            layers,
            pos_channel,
            latent_channels,
            time_dim,
        })
    }

    /// Convenience wrapper seeding its own generator.
    pub fn seeded(
        latent_channels: u32,
        hidden: u32,
        padding: PaddingMode,
        pos_channel: bool,
        seed: u64,
    ) -> Result<Self> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Self::seeded_from_rng(latent_channels, hidden, padding, pos_channel, &mut rng)
    }

    /// Sets every weight, bias, and time projection to zero.
    pub fn zero_weights(&mut self) {
        for l in &mut self.layers {
            l.kernel.data.iter_mut().for_each(|v| *v = 0.0);
            l.bias.iter_mut().for_each(|v| *v = 0.0);
            l.time_w.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Builds the network input: `(z_t, mask, cond[, position])`
    /// concatenated along channels. The position channel encodes each
    /// column's absolute azimuth as `cos(2π(x + 0.5)/w)` — periodic over
    /// the wrap (the encoding is well defined on the circle) yet fixed in
    /// the frame, unlike the content, which shifts.
    fn assemble_input(
        &self,
        z_t: &LatentTensor,
        mask: &LatentTensor,
        cond: &LatentTensor,
    ) -> Result<LatentTensor> {
        if z_t.channels() != self.latent_channels || cond.channels() != self.latent_channels {
            return Err(Error::Config(format!(
                "latent/conditioning channels ({}, {}) must equal {}",
                z_t.channels(),
                cond.channels(),
                self.latent_channels
            )));
        }
        if mask.channels() != 1 {
            return Err(Error::Config(format!(
                "mask must have 1 channel, got {}",
                mask.channels()
            )));
        }
        if z_t.shape().1 != mask.shape().1
            || z_t.shape().2 != mask.shape().2
            || z_t.shape().1 != cond.shape().1
            || z_t.shape().2 != cond.shape().2
        {
            return Err(Error::Config(
                "latent, mask, and conditioning spatial dims must match".into(),
            ));
        }
        let (h, w) = (z_t.height(), z_t.width());
        if self.pos_channel {
            let pos = LatentTensor::from_fn(1, h, w, |_, _, x| {
                (std::f64::consts::TAU * (x as f64 + 0.5) / w as f64).cos()
            })?;
            concat_channels(&[z_t, mask, cond, &pos])
        } else {
            concat_channels(&[z_t, mask, cond])
        }
    }

    /// Predicts the noise component of `z_t` given the mask and
    /// conditioning channels at timestep `t ≥ 1`.
    pub fn forward(
        &self,
        z_t: &LatentTensor,
        mask: &LatentTensor,
        cond: &LatentTensor,
        t: u32,
    ) -> Result<LatentTensor> {
        let (out, _) = self.forward_cached(z_t, mask, cond, t)?;
        Ok(out)
    }

    pub(crate) fn forward_cached(
        &self,
        z_t: &LatentTensor,
        mask: &LatentTensor,
        cond: &LatentTensor,
        t: u32,
    ) -> Result<(LatentTensor, Vec<LayerCache>)> {
        if t < 1 {
            return Err(Error::Config("timestep must be >= 1".into()));
        }
        let input = self.assemble_input(z_t, mask, cond)?;
        if input.channels() != self.layers[0].in_ch() {
            return Err(Error::Config(format!(
                "assembled input has {} channels but layer 0 expects {}",
                input.channels(),
                self.layers[0].in_ch()
            )));
        }
        let temb = time_embedding(t, self.time_dim);
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut x = input;
        for layer in &self.layers {
            let pre = layer.forward_pre(&x, &temb)?;
            let out = if layer.activation {
                let mut a = pre.clone();
                a.data_mut().iter_mut().for_each(|v| *v = silu(*v));
                a
            } else {
                pre.clone()
            };
            caches.push(LayerCache { input: x, pre });
            x = out;
        }
        Ok((x, caches))
    }

    /// Backpropagates `d_out` (gradient of a scalar loss with respect to
    /// the network output) through the cached forward pass, accumulating
    /// `scale ×` the weight gradients into `grad` and returning the
    /// gradient with respect to the assembled input.
    pub(crate) fn backward(
        &self,
        caches: &[LayerCache],
        d_out: &LatentTensor,
        t: u32,
        grad: &mut DenoiserGrad,
        scale: f64,
    ) -> LatentTensor {
        let temb = time_embedding(t, self.time_dim);
        let mut d = d_out.clone();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let cache = &caches[li];
            // Through the activation.
            let mut d_pre = d;
            if layer.activation {
                for (g, p) in d_pre.data_mut().iter_mut().zip(cache.pre.data()) {
                    *g *= silu_deriv(*p);
                }
            }
            let lg = &mut grad.layers[li];
            let (h, _w) = (d_pre.height(), d_pre.width());
            // Bias and time-projection gradients share the per-channel sum.
            for o in 0..layer.out_ch() {
                let mut sum = 0.0;
                for y in 0..h {
                    sum += d_pre.row(o, y).iter().sum::<f64>();
                }
                lg.d_bias[o as usize] += scale * sum;
                for (k, e) in temb.iter().enumerate() {
                    lg.d_time_w[o as usize * layer.time_dim + k] += scale * sum * e;
                }
            }
            // Weight gradients: correlate d_pre with the cached input.
            let kernel = &layer.kernel;
            for o in 0..kernel.out_ch {
                for i in 0..kernel.in_ch {
                    for ky in 0..kernel.kh {
                        let dy = ky as i64 - (kernel.kh / 2) as i64;
                        for kx in 0..kernel.kw {
                            let dx = kx as i64 - (kernel.kw / 2) as i64;
                            let mut acc = 0.0;
                            for y in 0..h {
                                let ys = y as i64 + dy;
                                if ys < 0 || ys >= h as i64 {
                                    continue;
                                }
                                acc += dot_shifted_row(
                                    d_pre.row(o, y),
                                    cache.input.row(i, ys as u32),
                                    dx,
                                    layer.padding,
                                );
                            }
                            lg.d_weight[kernel.index(o, i, ky, kx)] += scale * acc;
                        }
                    }
                }
            }
            // Gradient with respect to the layer input (transposed conv).
            let mut d_in = cache.input.zeros_like();
            for o in 0..kernel.out_ch {
                for i in 0..kernel.in_ch {
                    for ky in 0..kernel.kh {
                        let dy = ky as i64 - (kernel.kh / 2) as i64;
                        for kx in 0..kernel.kw {
                            let dx = kx as i64 - (kernel.kw / 2) as i64;
                            let k = kernel.get(o, i, ky, kx);
                            for y in 0..h {
                                let ys = y as i64 + dy;
                                if ys < 0 || ys >= h as i64 {
                                    continue;
                                }
                                add_shifted_row(
                                    d_in.row_mut(i, ys as u32),
                                    d_pre.row(o, y),
                                    -dx,
                                    k,
                                    layer.padding,
                                );
                            }
                        }
                    }
                }
            }
            d = d_in;
        }
        d
    }

    /// `weights += step_scale · grad` across every layer (pass a negative
    /// `step_scale` for gradient descent).
    pub fn apply_grad(&mut self, grad: &DenoiserGrad, step_scale: f64) {
        assert_eq!(self.layers.len(), grad.layers.len());
        for (l, g) in self.layers.iter_mut().zip(&grad.layers) {
            for (w, d) in l.kernel.data.iter_mut().zip(&g.d_weight) {
                *w += step_scale * d;
            }
            for (b, d) in l.bias.iter_mut().zip(&g.d_bias) {
                *b += step_scale * d;
            }
            for (tw, d) in l.time_w.iter_mut().zip(&g.d_time_w) {
                *tw += step_scale * d;
            }
        }
    }
}

const GTOY_MAGIC: &[u8; 4] = b"GTOY";

/// Serializes a network to the `GTOY` checkpoint format:
/// magic `GTOY`; little-endian `u32` layer count, net flags (bit 0 =
/// position channel), latent channel count; then per layer six `u32`
/// dims (`out, in, kh, kw, time_dim, layer_flags` with bit 0 = circular
/// padding and bit 1 = activation) followed by `f32` conv weights, biases,
/// and time-projection weights in declaration order.
///
/// Weights are quantized to `f32` on disk; `write(read(p))` reproduces the
/// file bytes exactly.
pub fn write_gtoy(net: &ToyDenoiser, path: &Path) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(GTOY_MAGIC);
    buf.write_u32::<LittleEndian>(net.layers.len() as u32)?;
    buf.write_u32::<LittleEndian>(if net.pos_channel { 1 } else { 0 })?;
    buf.write_u32::<LittleEndian>(net.latent_channels)?;
    for l in &net.layers {
        buf.write_u32::<LittleEndian>(l.kernel.out_ch)?;
        buf.write_u32::<LittleEndian>(l.kernel.in_ch)?;
        buf.write_u32::<LittleEndian>(l.kernel.kh)?;
        buf.write_u32::<LittleEndian>(l.kernel.kw)?;
        buf.write_u32::<LittleEndian>(l.time_dim as u32)?;
        let mut flags = 0u32;
        if l.padding == PaddingMode::Circular {
            flags |= 1;
        }
        if l.activation {
            flags |= 2;
        }
        buf.write_u32::<LittleEndian>(flags)?;
        for &w in &l.kernel.data {
            buf.write_f32::<LittleEndian>(w as f32)?;
        }
        for &b in &l.bias {
            buf.write_f32::<LittleEndian>(b as f32)?;
        }
        for &tw in &l.time_w {
            buf.write_f32::<LittleEndian>(tw as f32)?;
        }
    }
    std::fs::write(path, buf)?;
    Ok(())
}

/// Reads a `GTOY` checkpoint written by [`write_gtoy`].
pub fn read_gtoy(path: &Path) -> Result<ToyDenoiser> {
    let bytes = std::fs::read(path)?;
    let mut cur = Cursor::new(&bytes);
    let mut magic = [0u8; 4];
    std::io::Read::read_exact(&mut cur, &mut magic)
        .map_err(|_| Error::Format("checkpoint shorter than its magic bytes".into()))?;
    if &magic != GTOY_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {magic:?}, expected {GTOY_MAGIC:?}"
        )));
    }
    let truncated = |_| Error::Format("checkpoint truncated".into());
    let layer_count = cur.read_u32::<LittleEndian>().map_err(truncated)?;
    if layer_count == 0 || layer_count > 1024 {
        return Err(Error::Format(format!("implausible layer count {layer_count}")));
    }
    let net_flags = cur.read_u32::<LittleEndian>().map_err(truncated)?;
    let latent_channels = cur.read_u32::<LittleEndian>().map_err(truncated)?;
    let mut layers = Vec::with_capacity(layer_count as usize);
    let mut time_dim_net = None;
    for _ in 0..layer_count {
        let out_ch = cur.read_u32::<LittleEndian>().map_err(truncated)?;
        let in_ch = cur.read_u32::<LittleEndian>().map_err(truncated)?;
        let kh = cur.read_u32::<LittleEndian>().map_err(truncated)?;
        let kw = cur.read_u32::<LittleEndian>().map_err(truncated)?;
        let time_dim = cur.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        let flags = cur.read_u32::<LittleEndian>().map_err(truncated)?;
        let mut kernel = ConvKernel::zeros(out_ch, in_ch, kh, kw)
            .map_err(|e| Error::Format(format!("bad layer dims: {e}")))?;
        for w in kernel.data.iter_mut() {
            *w = cur.read_f32::<LittleEndian>().map_err(truncated)? as f64;
        }
        let mut bias = vec![0.0f64; out_ch as usize];
        for b in bias.iter_mut() {
            *b = cur.read_f32::<LittleEndian>().map_err(truncated)? as f64;
        }
        let mut time_w = vec![0.0f64; out_ch as usize * time_dim];
        for tw in time_w.iter_mut() {
            *tw = cur.read_f32::<LittleEndian>().map_err(truncated)? as f64;
        }
        if *time_dim_net.get_or_insert(time_dim) != time_dim {
            return Err(Error::Format("layers disagree on time embedding dim".into()));
        }
        layers.push(ConvLayer {
            kernel,
            bias,
            time_w,
            time_dim,
            padding: if flags & 1 != 0 {
                PaddingMode::Circular
            } else {
                PaddingMode::Zero
            },
            activation: flags & 2 != 0,
        });
    }
    if cur.position() != bytes.len() as u64 {
        return Err(Error::Format(format!(
            "{} trailing bytes after the last layer",
            bytes.len() as u64 - cur.position()
        )));
    }
    Ok(ToyDenoiser {
        layers,
        pos_channel: net_flags & 1 != 0,
        latent_channels,
        time_dim: time_dim_net.unwrap_or(8),
    })
}
