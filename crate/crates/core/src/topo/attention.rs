//! A minimal attention block used to demonstrate that circularly
//! re-indexing positional encodings is equivalent to physically rolling
//! the input — the permutation-equivariance route to shift equivariance
//! for token-based models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::latent::LatentTensor;
use crate::error::{Error, Result};

/// Per-position encoding vectors on an `(x, y)` grid, `dim` values each,
/// stored `[y][x][d]`. Two grids built with equal parameters are equal.
#[derive(Debug, Clone, PartialEq)]
pub struct PosEncodingGrid {
    width: u32,
    height: u32,
    dim: u32,
    data: Vec<f64>,
}

impl PosEncodingGrid {
    /// Deterministic sinusoidal grid: the first `dim/2` values encode `x`
    /// with integer circular frequencies (`sin/cos` of `2π·f·x/w`), the
    /// rest encode `y` (`sin/cos` of `π·f·(y+1/2)/h`). `dim` must be a
    /// positive multiple of 4.
    pub fn sinusoidal(width: u32, height: u32, dim: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config("grid dims must be nonzero".into()));
        }
        if dim == 0 || dim % 4 != 0 {
            return Err(Error::Config(format!(
                "encoding dim {dim} must be a positive multiple of 4"
            )));
        }
        let mut data = Vec::with_capacity((width * height * dim) as usize);
        let pairs = dim / 4;
        for y in 0..height {
            for x in 0..width {
                for f in 1..=pairs {
                    let a = std::f64::consts::TAU * f as f64 * x as f64 / width as f64;
                    data.push(a.sin());
                    data.push(a.cos());
                }
                for f in 1..=pairs {
                    let a = std::f64::consts::PI * f as f64 * (y as f64 + 0.5) / height as f64;
                    data.push(a.sin());
                    data.push(a.cos());
                }
            }
        }
        Ok(PosEncodingGrid {
            width,
            height,
            dim,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// Arbitrary deterministic grid from a per-component function.
    pub fn from_fn(
        width: u32,
        height: u32,
        dim: u32,
        mut f: impl FnMut(u32, u32, u32) -> f64,
    ) -> Result<Self> {
        if width == 0 || height == 0 || dim == 0 {
            return Err(Error::Config("grid dims must be nonzero".into()));
        }
        let mut data = Vec::with_capacity((width * height * dim) as usize);
        for y in 0..height {
            for x in 0..width {
                for d in 0..dim {
                    data.push(f(x, y, d));
                }
            }
        }
        Ok(PosEncodingGrid {
            width,
            height,
            dim,
            data,
        })
    }

    /// The encoding vector at `(x, y)`.
    pub fn get(&self, x: u32, y: u32) -> &[f64] {
        let start = ((y * self.width + x) * self.dim) as usize;
        &self.data[start..start + self.dim as usize]
    }
}

/// Circularly re-indexes the `x` axis: `out(x, y) = grid((x + δ) mod w, y)`.
///
/// The sign is fixed so that feeding a rolled image together with the
/// *unshifted* grid equals rolling the output of the shifted grid:
/// `ε(Roll_δ X, P) = Roll_δ(ε(X, shifted_pos_encoding(P, δ)))`. Under the
/// roll convention `Roll_δ(z)[x] = z[(x−δ) mod w]`, the token that lands
/// at position `x` originated at `x−δ`, so the shifted grid must hand
/// position `x−δ` the encoding `P(x)` — i.e. read the grid at `x+δ`. The
/// sign is pinned by the equivalence test below, not assumed.
pub fn shifted_pos_encoding(grid: &PosEncodingGrid, delta: i64) -> PosEncodingGrid {
    let w = grid.width as i64;
    let mut out = grid.clone();
    let d = grid.dim as usize;
    for y in 0..grid.height {
        for x in 0..grid.width as i64 {
            let src = (x + delta).rem_euclid(w) as u32;
            let dst_start = ((y * grid.width) as usize + x as usize) * d;
            out.data[dst_start..dst_start + d].copy_from_slice(grid.get(src, y));
        }
    }
    out
}

/// Single-head scaled dot-product attention over all grid positions,
/// with seeded random projection matrices. Tokens are channel vectors of
/// a [`LatentTensor`] plus their positional encoding; the block exists
/// for the positional-shift equivalence property, not for training.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyAttention {
    dim: u32,
    w_q: Vec<f64>,
    w_k: Vec<f64>,
    w_v: Vec<f64>,
}

impl ToyAttention {
    pub fn seeded(dim: u32, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("attention dim must be nonzero".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = 1.0 / (dim as f64).sqrt();
        let mut mat = || -> Vec<f64> {
            (0..(dim * dim) as usize)
                .map(|_| rng.random_range(-s..s))
                .collect()
        };
        Ok(ToyAttention {
            dim,
            w_q: mat(),
            w_k: mat(),
            w_v: mat(),
        })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    fn matvec(m: &[f64], v: &[f64], dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (r, o) in out.iter_mut().enumerate() {
            let row = &m[r * dim..(r + 1) * dim];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// Runs attention over every `(x, y)` position of `tokens` (channel
    /// count must equal both the attention dim and the encoding dim).
    pub fn apply(&self, tokens: &LatentTensor, pos: &PosEncodingGrid) -> Result<LatentTensor> {
        if tokens.channels() != self.dim || pos.dim() != self.dim {
            return Err(Error::Config(format!(
                "token/encoding dims ({}, {}) must equal the attention dim {}",
                tokens.channels(),
                pos.dim(),
                self.dim
            )));
        }
        if tokens.width() != pos.width() || tokens.height() != pos.height() {
            return Err(Error::Config(
                "token grid and encoding grid dims must match".into(),
            ));
        }
        let d = self.dim as usize;
        let (h, w) = (tokens.height(), tokens.width());
        let n = (h * w) as usize;
        // Assemble tokens (+ encodings) and their projections.
        let mut q = Vec::with_capacity(n);
        let mut k = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for y in 0..h {
            for x in 0..w {
                let mut tok = Vec::with_capacity(d);
                for c in 0..self.dim {
                    tok.push(tokens.get(c, y, x));
                }
                for (t, p) in tok.iter_mut().zip(pos.get(x, y)) {
                    *t += p;
                }
                q.push(Self::matvec(&self.w_q, &tok, d));
                k.push(Self::matvec(&self.w_k, &tok, d));
                v.push(Self::matvec(&self.w_v, &tok, d));
            }
        }
        let scale = 1.0 / (d as f64).sqrt();
        let mut out = tokens.zeros_like();
        for (i, qi) in q.iter().enumerate() {
            let mut scores: Vec<f64> = k
                .iter()
                .map(|kj| qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * scale)
                .collect();
            let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for s in scores.iter_mut() {
                *s = (*s - m).exp();
                z += *s;
            }
            let (y, x) = (i as u32 / w, i as u32 % w);
            for c in 0..d {
                let mut acc = 0.0;
                for (j, vj) in v.iter().enumerate() {
                    acc += scores[j] * vj[c];
                }
                out.set(c as u32, y, x, acc / z);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topo::latent::roll_latent;

    fn random_tokens(seed: u64, c: u32, h: u32, w: u32) -> LatentTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LatentTensor::from_fn(c, h, w, |_, _, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    fn max_abs_diff(a: &LatentTensor, b: &LatentTensor) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn equal_parameters_build_equal_grids() {
        let a = PosEncodingGrid::sinusoidal(8, 4, 4).unwrap();
        let b = PosEncodingGrid::sinusoidal(8, 4, 4).unwrap();
        assert_eq!(a, b);
        assert!(PosEncodingGrid::sinusoidal(8, 4, 6).is_err());
        assert!(PosEncodingGrid::sinusoidal(0, 4, 4).is_err());
    }

    #[test]
    fn shifting_by_zero_or_a_round_trip_is_identity() {
        let p = PosEncodingGrid::sinusoidal(8, 4, 4).unwrap();
        assert_eq!(shifted_pos_encoding(&p, 0), p);
        for delta in [1i64, 3, 7, 12, -5] {
            assert_eq!(
                shifted_pos_encoding(&shifted_pos_encoding(&p, delta), -delta),
                p
            );
        }
    }

    #[test]
    fn successive_shifts_compose_additively() {
        let p = PosEncodingGrid::sinusoidal(8, 4, 8).unwrap();
        for (a, b) in [(1i64, 2i64), (3, 7), (5, 5), (-2, 6)] {
            assert_eq!(
                shifted_pos_encoding(&shifted_pos_encoding(&p, a), b),
                shifted_pos_encoding(&p, a + b)
            );
        }
    }

    #[test]
    fn single_token_output_is_its_value_projection() {
        let attn = ToyAttention::seeded(4, 61).unwrap();
        let tokens = random_tokens(62, 4, 1, 1);
        let pos = PosEncodingGrid::sinusoidal(1, 1, 4).unwrap();
        let out = attn.apply(&tokens, &pos).unwrap();
        let mut tok: Vec<f64> = (0..4).map(|c| tokens.get(c, 0, 0)).collect();
        for (t, p) in tok.iter_mut().zip(pos.get(0, 0)) {
            *t += p;
        }
        let expected = ToyAttention::matvec(&attn.w_v, &tok, 4);
        for c in 0..4 {
            assert!((out.get(c, 0, 0) - expected[c as usize]).abs() < 1e-12);
        }
    }

    #[test]
    fn joint_permutation_of_tokens_and_encodings_permutes_outputs() {
        // Apply one seeded shuffle of the (x, y) positions to both the
        // tokens and the encoding vectors; outputs must shuffle the same
        // way (attention never looks at position order, only content).
        let attn = ToyAttention::seeded(4, 63).unwrap();
        let tokens = random_tokens(64, 4, 3, 8);
        let pos = PosEncodingGrid::sinusoidal(8, 3, 4).unwrap();
        let base = attn.apply(&tokens, &pos).unwrap();

        let n = 3 * 8usize;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let at = |i: usize| ((i / 8) as u32, (i % 8) as u32); // (y, x)
        let perm_tokens = LatentTensor::from_fn(4, 3, 8, |c, y, x| {
            let (sy, sx) = at(perm[(y * 8 + x) as usize]);
            tokens.get(c, sy, sx)
        })
        .unwrap();
        let perm_pos = PosEncodingGrid::from_fn(8, 3, 4, |x, y, d| {
            let (sy, sx) = at(perm[(y * 8 + x) as usize]);
            pos.get(sx, sy)[d as usize]
        })
        .unwrap();
        let out = attn.apply(&perm_tokens, &perm_pos).unwrap();
        for i in 0..n {
            let (dy, dx) = at(i);
            let (sy, sx) = at(perm[i]);
            for c in 0..4 {
                assert!((out.get(c, dy, dx) - base.get(c, sy, sx)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn positional_shift_equals_physical_roll() {
        let attn = ToyAttention::seeded(4, 65).unwrap();
        let tokens = random_tokens(66, 4, 4, 8);
        let pos = PosEncodingGrid::sinusoidal(8, 4, 4).unwrap();
        for delta in 1..8i64 {
            let lhs = attn.apply(&roll_latent(&tokens, delta), &pos).unwrap();
            let shifted = shifted_pos_encoding(&pos, delta);
            let rhs = roll_latent(&attn.apply(&tokens, &shifted).unwrap(), delta);
            let resid = max_abs_diff(&lhs, &rhs);
            assert!(resid < 1e-6, "delta {delta}: residual {resid:.3e}");
        }
        // Two successive shifts behave like their sum.
        let (d1, d2) = (3i64, 4i64);
        let twice = attn
            .apply(
                &tokens,
                &shifted_pos_encoding(&shifted_pos_encoding(&pos, d1), d2),
            )
            .unwrap();
        let once = attn
            .apply(&tokens, &shifted_pos_encoding(&pos, d1 + d2))
            .unwrap();
        assert!(max_abs_diff(&twice, &once) < 1e-12);
    }

    #[test]
    fn mismatched_dims_are_rejected() {
        let attn = ToyAttention::seeded(4, 67).unwrap();
        let tokens = random_tokens(68, 3, 2, 4);
        let pos = PosEncodingGrid::sinusoidal(4, 2, 4).unwrap();
        assert!(attn.apply(&tokens, &pos).is_err());
        let tokens4 = random_tokens(69, 4, 2, 4);
        let pos_wrong = PosEncodingGrid::sinusoidal(4, 3, 4).unwrap();
        assert!(attn.apply(&tokens4, &pos_wrong).is_err());
    }
}
