//! Ancestral DDPM samplers: a plain reverse loop and a seam-randomizing
//! variant that circularly shifts the working latent at every step.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::denoiser::ToyDenoiser;
use super::latent::{roll_latent, LatentTensor};
use super::schedule::DiffusionSchedule;
use crate::error::{Error, Result};

fn check_inputs(
    net: &ToyDenoiser,
    mask: &LatentTensor,
    cond: &LatentTensor,
) -> Result<(u32, u32, u32)> {
    if cond.channels() != net.latent_channels {
        return Err(Error::Config(format!(
            "conditioning has {} channels, net expects {}",
            cond.channels(),
            net.latent_channels
        )));
    }
    if mask.channels() != 1
        || mask.height() != cond.height()
        || mask.width() != cond.width()
    {
        return Err(Error::Config(
            "mask must be a 1-channel tensor matching the conditioning dims".into(),
        ));
    }
    Ok((net.latent_channels, cond.height(), cond.width()))
}

fn draw_standard_normal(
    c: u32,
    h: u32,
    w: u32,
    rng: &mut impl Rng,
) -> LatentTensor {
    LatentTensor::from_fn(c, h, w, |_, _, _| StandardNormal.sample(rng))
        .expect("dims validated by caller")
}

/// One posterior-mean update `z ← (z − β_t/√(1−ᾱ_t)·ε̂)/√α_t`.
fn reverse_step(z: &mut LatentTensor, eps_hat: &LatentTensor, schedule: &DiffusionSchedule, t: u32) {
    let coef = schedule.beta(t) / schedule.sqrt_one_minus_alpha_bar(t);
    let inv_sqrt_alpha = 1.0 / schedule.alpha(t).sqrt();
    for (zv, ev) in z.data_mut().iter_mut().zip(eps_hat.data()) {
        *zv = (*zv - coef * ev) * inv_sqrt_alpha;
    }
}

/// Plain ancestral sampling from pure noise, conditioned on
/// `(mask, cond)`.
///
/// RNG draw order: the initial `z_T` elementwise in `(c, y, x)` order,
/// then after each step with `t > 1` the step noise `η`, also elementwise.
pub fn sample_plain(
    net: &ToyDenoiser,
    schedule: &DiffusionSchedule,
    mask: &LatentTensor,
    cond: &LatentTensor,
    rng: &mut impl Rng,
) -> Result<LatentTensor> {
    let (c, h, w) = check_inputs(net, mask, cond)?;
    let mut z = draw_standard_normal(c, h, w, rng);
    for t in (1..=schedule.steps()).rev() {
        let eps_hat = net.forward(&z, mask, cond, t)?;
        reverse_step(&mut z, &eps_hat, schedule, t);
        if t > 1 {
            let eta = draw_standard_normal(c, h, w, rng);
            z.axpy(&eta, schedule.beta(t).sqrt())?;
        }
    }
    if !z.all_finite() {
        return Err(Error::NonFinite("sampled latent is not finite".into()));
    }
    Ok(z)
}

/// Ancestral sampling with an explicit per-step circular shift sequence
/// (`shifts[0]` applied at `t = T`, the last entry at `t = 1`).
///
/// Every noise tensor is drawn in the canonical (unshifted) frame with
/// exactly the order of [`sample_plain`], then rolled into the working
/// frame; the conditioning channels are rolled by the running cumulative
/// offset; the final latent is rolled back by the total. With all shifts
/// zero this function reproduces `sample_plain` bit-for-bit, and for a
/// fully circular network any shift sequence yields the identical result
/// because every operation commutes with the roll.
pub fn sample_with_shifts(
    net: &ToyDenoiser,
    schedule: &DiffusionSchedule,
    mask: &LatentTensor,
    cond: &LatentTensor,
    shifts: &[i64],
    rng: &mut impl Rng,
) -> Result<LatentTensor> {
    let (c, h, w) = check_inputs(net, mask, cond)?;
    if shifts.len() != schedule.steps() as usize {
        return Err(Error::Config(format!(
            "{} shifts supplied for {} steps",
            shifts.len(),
            schedule.steps()
        )));
    }
    let mut z = draw_standard_normal(c, h, w, rng);
    let mut total: i64 = 0;
    for (idx, t) in (1..=schedule.steps()).rev().enumerate() {
        let delta = shifts[idx];
        if delta != 0 {
            z = roll_latent(&z, delta);
        }
        total += delta;
        let mask_r = roll_latent(mask, total);
        let cond_r = roll_latent(cond, total);
        let eps_hat = net.forward(&z, &mask_r, &cond_r, t)?;
        reverse_step(&mut z, &eps_hat, schedule, t);
        if t > 1 {
            let eta = draw_standard_normal(c, h, w, rng);
            let eta_r = if total != 0 {
                roll_latent(&eta, total)
            } else {
                eta
            };
            z.axpy(&eta_r, schedule.beta(t).sqrt())?;
        }
    }
    if total != 0 {
        z = roll_latent(&z, -total);
    }
    if !z.all_finite() {
        return Err(Error::NonFinite("sampled latent is not finite".into()));
    }
    Ok(z)
}

/// Seam-randomizing sampler: draws one uniform shift `δ_t ∈ [0, w)` per
/// step up front, then runs [`sample_with_shifts`].
///
/// Drawing the whole shift sequence before any noise keeps the noise
/// stream aligned with an explicit-shift run given the same generator
/// state after the shift block.
pub fn sample_with_rolling(
    net: &ToyDenoiser,
    schedule: &DiffusionSchedule,
    mask: &LatentTensor,
    cond: &LatentTensor,
    rng: &mut impl Rng,
) -> Result<LatentTensor> {
    let (_, _, w) = check_inputs(net, mask, cond)?;
    let shifts: Vec<i64> = (0..schedule.steps())
        .map(|_| rng.random_range(0..w as i64))
        .collect();
    sample_with_shifts(net, schedule, mask, cond, &shifts, rng)
}
