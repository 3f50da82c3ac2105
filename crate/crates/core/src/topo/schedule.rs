//! Linear-β DDPM noise schedule.

use crate::error::{Error, Result};

/// Forward-diffusion schedule: per-step noise rates `β_t`, retention rates
/// `α_t = 1 − β_t`, and cumulative products `ᾱ_t = Π_{s≤t} α_s`.
///
/// Steps are 1-indexed (`t ∈ [1, T]`) to match the usual convention that
/// `z_0` is clean data and `z_T` is (nearly) pure noise. The mixing rule
/// `z_t = √ᾱ_t·z_0 + √(1−ᾱ_t)·ε` keeps unit marginal variance for
/// unit-variance data at every `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

/// Builds a schedule with `β` linearly interpolated from `beta_start` at
/// `t = 1` to `beta_end` at `t = T`.
pub fn ddpm_schedule(steps: u32, beta_start: f64, beta_end: f64) -> Result<DiffusionSchedule> {
    if steps < 2 {
        return Err(Error::Config(format!("step count {steps} must be >= 2")));
    }
    if !(beta_start > 0.0 && beta_start < beta_end && beta_end < 1.0) {
        return Err(Error::Config(format!(
            "beta range ({beta_start}, {beta_end}) must satisfy 0 < start < end < 1"
        )));
    }
    let mut betas = Vec::with_capacity(steps as usize);
    let mut alphas = Vec::with_capacity(steps as usize);
    let mut alpha_bars = Vec::with_capacity(steps as usize);
    let mut prod = 1.0f64;
    for t in 0..steps {
        let beta = beta_start + (beta_end - beta_start) * t as f64 / (steps - 1) as f64;
        let alpha = 1.0 - beta;
        prod *= alpha;
        betas.push(beta);
        alphas.push(alpha);
        alpha_bars.push(prod);
    }
    Ok(DiffusionSchedule {
        betas,
        alphas,
        alpha_bars,
    })
}

impl DiffusionSchedule {
    /// The stock toy schedule: T = 100, β from 1e−4 to 2e−2.
    pub fn default_toy() -> Self {
        ddpm_schedule(100, 1e-4, 2e-2).expect("static parameters are valid")
    }

    pub fn steps(&self) -> u32 {
        self.betas.len() as u32
    }

    fn check_t(&self, t: u32) -> usize {
        assert!(
            t >= 1 && t <= self.steps(),
            "timestep {t} outside [1, {}]",
            self.steps()
        );
        (t - 1) as usize
    }

    pub fn beta(&self, t: u32) -> f64 {
        self.betas[self.check_t(t)]
    }

    pub fn alpha(&self, t: u32) -> f64 {
        self.alphas[self.check_t(t)]
    }

    pub fn alpha_bar(&self, t: u32) -> f64 {
        self.alpha_bars[self.check_t(t)]
    }

    pub fn sqrt_alpha_bar(&self, t: u32) -> f64 {
        self.alpha_bar(t).sqrt()
    }

    pub fn sqrt_one_minus_alpha_bar(&self, t: u32) -> f64 {
        (1.0 - self.alpha_bar(t)).sqrt()
    }
}
