//! Training objectives: noise-prediction loss, the Siamese shift
//! (equivariance) loss, and their weighted combination, all returning
//! manually backpropagated weight gradients.
//!
//! RNG draw contract (the basis of every decomposition test): a loss
//! function draws, for each batch item in order, the timestep `t` first
//! and then the noise tensor elementwise in `(c, y, x)` order.
//! [`total_loss`] draws the shared shift offset `δ` once, before any
//! per-item draws, and only when `λ_shift > 0`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::denoiser::{DenoiserGrad, ToyDenoiser};
use super::latent::{roll_latent, LatentTensor};
use super::schedule::DiffusionSchedule;
use super::toy::ToySample;
use super::train::TrainConfig;
use crate::error::{Error, Result};

/// Component values of one combined-training-loss evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub l_ldm: f64,
    pub l_shift: f64,
    pub l_flow: f64,
}

fn check_batch(batch: &[ToySample]) -> Result<(u32, u32)> {
    let first = batch
        .first()
        .ok_or_else(|| Error::Config("loss batch must be nonempty".into()))?;
    let (_, h, w) = first.z0.shape();
    for s in batch {
        if s.z0.shape() != first.z0.shape() {
            return Err(Error::Config("batch items must share one shape".into()));
        }
    }
    Ok((h, w))
}

/// Draws `(t, ε)` and mixes `z_t = √ᾱ_t·z0 + √(1−ᾱ_t)·ε`.
fn draw_noised(
    sample: &ToySample,
    schedule: &DiffusionSchedule,
    rng: &mut impl Rng,
) -> (u32, LatentTensor, LatentTensor) {
    let t = rng.random_range(1..=schedule.steps());
    let eps = LatentTensor::from_fn(
        sample.z0.channels(),
        sample.z0.height(),
        sample.z0.width(),
        |_, _, _| StandardNormal.sample(rng),
    )
    .expect("shape matches an existing tensor");
    let (sa, sn) = (schedule.sqrt_alpha_bar(t), schedule.sqrt_one_minus_alpha_bar(t));
    let mut z_t = eps.clone();
    for (z, (e, x0)) in z_t
        .data_mut()
        .iter_mut()
        .zip(eps.data().iter().zip(sample.z0.data()))
    {
        *z = sa * x0 + sn * e;
    }
    (t, z_t, eps)
}

/// Mean-squared noise-prediction loss over a batch, with weight gradients.
///
/// Per item: sample `t` and `ε`, form `z_t`, predict `ε̂`, and score
/// `mean‖ε̂ − ε‖²`; the batch loss is the item mean.
pub fn ldm_loss(
    batch: &[ToySample],
    net: &ToyDenoiser,
    schedule: &DiffusionSchedule,
    rng: &mut impl Rng,
) -> Result<(f64, DenoiserGrad)> {
    check_batch(batch)?;
    let mut grad = DenoiserGrad::zeros_like(net);
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for sample in batch {
        let (t, z_t, eps) = draw_noised(sample, schedule, rng);
        let (out, caches) = net.forward_cached(&z_t, &sample.mask, &sample.cond, t)?;
        let n = out.data().len() as f64;
        let mut d_out = out.clone();
        let mut item = 0.0;
        for (d, e) in d_out.data_mut().iter_mut().zip(eps.data()) {
            let r = *d - e;
            item += r * r;
            *d = 2.0 * r / n;
        }
        loss += scale * item / n;
        net.backward(&caches, &d_out, t, &mut grad, scale);
    }
    Ok((loss, grad))
}

/// Raw shift-consistency residual for one already-noised input:
/// `mean‖Roll_δ(f(X)) − f(Roll_δ(X))‖²` with `X = (z_t, mask, cond)`.
///
/// This is the deterministic core of [`shift_loss`], exposed so
/// properties of the objective itself (for instance its invariance under
/// `(X, δ) → (Roll_δ X, w−δ)`, which holds for any network because
/// `Roll` is an isometry) can be checked without touching an RNG.
pub fn shift_residual(
    net: &ToyDenoiser,
    z_t: &LatentTensor,
    mask: &LatentTensor,
    cond: &LatentTensor,
    t: u32,
    delta: i64,
) -> Result<f64> {
    let base = net.forward(z_t, mask, cond, t)?;
    let shifted = net.forward(
        &roll_latent(z_t, delta),
        &roll_latent(mask, delta),
        &roll_latent(cond, delta),
        t,
    )?;
    let rolled = roll_latent(&base, delta);
    let n = base.data().len() as f64;
    Ok(rolled
        .data()
        .iter()
        .zip(shifted.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

/// Siamese shift loss over a batch, with gradients through both passes.
///
/// Each item shares one `(t, ε)` draw between the plain pass and the pass
/// on `δ`-rolled inputs; the loss compares the rolled base prediction to
/// the shifted-input prediction. `δ` must lie in `[1, w−1]`.
pub fn shift_loss(
    batch: &[ToySample],
    net: &ToyDenoiser,
    schedule: &DiffusionSchedule,
    delta: i64,
    rng: &mut impl Rng,
) -> Result<(f64, DenoiserGrad)> {
    let (_, w) = check_batch(batch)?;
    if delta < 1 || delta >= w as i64 {
        return Err(Error::Config(format!(
            "shift offset {delta} outside [1, {}]",
            w - 1
        )));
    }
    let mut grad = DenoiserGrad::zeros_like(net);
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for sample in batch {
        let (t, z_t, _eps) = draw_noised(sample, schedule, rng);
        loss += scale * shift_item(net, sample, &z_t, t, delta, &mut grad, scale)?;
    }
    Ok((loss, grad))
}

/// One item's shift term: forward both branches, backpropagate the
/// squared difference through each, and accumulate `scale ×` gradients.
fn shift_item(
    net: &ToyDenoiser,
    sample: &ToySample,
    z_t: &LatentTensor,
    t: u32,
    delta: i64,
    grad: &mut DenoiserGrad,
    scale: f64,
) -> Result<f64> {
    let (out_b, cache_b) = net.forward_cached(z_t, &sample.mask, &sample.cond, t)?;
    let m_s = roll_latent(&sample.mask, delta);
    let c_s = roll_latent(&sample.cond, delta);
    let z_s = roll_latent(z_t, delta);
    let (out_s, cache_s) = net.forward_cached(&z_s, &m_s, &c_s, t)?;

    let rolled_b = roll_latent(&out_b, delta);
    let n = out_s.data().len() as f64;
    let mut item = 0.0;
    let mut d_shift = out_s.clone();
    let mut d_rolled = rolled_b.clone();
    for i in 0..d_shift.data().len() {
        let diff = rolled_b.data()[i] - out_s.data()[i];
        item += diff * diff;
        d_shift.data_mut()[i] = -2.0 * diff / n;
        d_rolled.data_mut()[i] = 2.0 * diff / n;
    }
    let d_base = roll_latent(&d_rolled, -delta);
    net.backward(&cache_s, &d_shift, t, grad, scale);
    net.backward(&cache_b, &d_base, t, grad, scale);
    Ok(item / n)
}

/// The combined objective `L_ldm + λ_shift·L_shift + λ_flow·L_flow` with
/// λ defaults 0.5 and 0.1.
///
/// At toy scale no trainable flow source participates, so `L_flow = 0`;
/// the term and its weight are carried so the log format and the weighted
/// sum keep their full shape. One `δ` is drawn per call (per training
/// step) and shared by every item; per-item `(t, ε)` draws are shared
/// between the noise-prediction term and the shift term's base pass.
pub fn total_loss(
    batch: &[ToySample],
    net: &ToyDenoiser,
    schedule: &DiffusionSchedule,
    cfg: &TrainConfig,
    rng: &mut impl Rng,
) -> Result<(LossBreakdown, DenoiserGrad)> {
    cfg.validate()?;
    let (_, w) = check_batch(batch)?;
    let delta = if cfg.lambda_shift > 0.0 {
        if w < 2 {
            return Err(Error::Config(
                "shift loss needs latent width >= 2".into(),
            ));
        }
        Some(rng.random_range(1..w as i64))
    } else {
        None
    };
    let mut grad = DenoiserGrad::zeros_like(net);
    let scale = 1.0 / batch.len() as f64;
    let mut l_ldm = 0.0;
    let mut l_shift = 0.0;
    for sample in batch {
        let (t, z_t, eps) = draw_noised(sample, schedule, rng);
        let (out, caches) = net.forward_cached(&z_t, &sample.mask, &sample.cond, t)?;
        let n = out.data().len() as f64;
        let mut d_out = out.clone();
        let mut item = 0.0;
        for (d, e) in d_out.data_mut().iter_mut().zip(eps.data()) {
            let r = *d - e;
            item += r * r;
            *d = 2.0 * r / n;
        }
        l_ldm += scale * item / n;
        net.backward(&caches, &d_out, t, &mut grad, scale);
        if let Some(d) = delta {
            l_shift +=
                scale * shift_item(net, sample, &z_t, t, d, &mut grad, cfg.lambda_shift * scale)?;
        }
    }
    let l_flow = 0.0;
    Ok((
        LossBreakdown {
            total: l_ldm + cfg.lambda_shift * l_shift + cfg.lambda_flow * l_flow,
            l_ldm,
            l_shift,
            l_flow,
        },
        grad,
    ))
}
