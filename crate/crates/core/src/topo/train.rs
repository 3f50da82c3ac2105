//! Deterministic gradient-descent training of the toy denoiser.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::denoiser::{PaddingMode, ToyDenoiser};
use super::losses::total_loss;
use super::schedule::DiffusionSchedule;
use super::toy::ToySample;
use crate::error::{Error, Result};

/// Training configuration.
///
/// `lambda_shift` weights the Siamese shift loss (default 0.5) and
/// `lambda_flow` the flow-supervision term (default 0.1; identically zero
/// at toy scale where no trainable flow source exists). The remaining
/// fields pin the optimizer (plain SGD), the architecture of the freshly
/// seeded network, and the per-step shift-offset distribution (uniform
/// integer in `[1, w−1]`, drawn inside the loss).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lambda_shift: f64,
    pub lambda_flow: f64,
    pub lr: f64,
    pub steps: u32,
    pub seed: u64,
    pub batch_size: usize,
    pub hidden: u32,
    pub padding: PaddingMode,
    pub pos_channel: bool,
    /// When set, the per-step loss curve is written here, one
    /// `step\tl_ldm\tl_shift\tl_flow\ttotal` line per step.
    pub log_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda_shift: 0.5,
            lambda_flow: 0.1,
            lr: 1e-3,
            steps: 500,
            seed: 0,
            batch_size: 4,
            hidden: 32,
            padding: PaddingMode::Circular,
            pos_channel: false,
            log_path: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_shift >= 0.0 && self.lambda_shift.is_finite()) {
            return Err(Error::Config(format!(
                "lambda_shift {} must be finite and >= 0",
                self.lambda_shift
            )));
        }
        if !(self.lambda_flow >= 0.0 && self.lambda_flow.is_finite()) {
            return Err(Error::Config(format!(
                "lambda_flow {} must be finite and >= 0",
                self.lambda_flow
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be > 0", self.lr)));
        }
        if self.steps == 0 {
            return Err(Error::Config("step count must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden width must be >= 1".into()));
        }
        Ok(())
    }
}

/// One logged training step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub step: u32,
    pub l_ldm: f64,
    pub l_shift: f64,
    pub l_flow: f64,
    pub total: f64,
}

/// A finished training run: the trained network plus its loss curve.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: ToyDenoiser,
    pub history: Vec<LossRecord>,
}

/// Trains a freshly seeded toy denoiser on `dataset` with plain SGD.
///
/// A single ChaCha stream seeded with `cfg.seed` drives everything in a
/// fixed order — network init first, then the per-step loss draws — so
/// identical inputs give bit-identical weights. Mini-batches walk the
/// dataset round-robin (`index = (step·B + i) mod n`). Training aborts
/// with a step-stamped divergence error the moment the loss or any
/// gradient stops being finite.
pub fn train_toy(dataset: &[ToySample], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let first = dataset
        .first()
        .ok_or_else(|| Error::Config("training dataset must be nonempty".into()))?;
    for s in dataset {
        if s.z0.shape() != first.z0.shape() {
            return Err(Error::Config("dataset items must share one shape".into()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = ToyDenoiser::seeded_from_rng(
        first.z0.channels(),
        cfg.hidden,
        cfg.padding,
        cfg.pos_channel,
        &mut rng,
    )?;
    let schedule = DiffusionSchedule::default_toy();
    let mut history = Vec::with_capacity(cfg.steps as usize);
    let n = dataset.len();
    for step in 0..cfg.steps {
        let batch: Vec<ToySample> = (0..cfg.batch_size)
            .map(|i| dataset[(step as usize * cfg.batch_size + i) % n].clone())
            .collect();
        let (bd, grad) = total_loss(&batch, &net, &schedule, cfg, &mut rng)?;
        if !bd.total.is_finite() || !grad.all_finite() {
            return Err(Error::Diverged(format!(
                "loss became non-finite at step {step} (total {})",
                bd.total
            )));
        }
        net.apply_grad(&grad, -cfg.lr);
        history.push(LossRecord {
            step,
            l_ldm: bd.l_ldm,
            l_shift: bd.l_shift,
            l_flow: bd.l_flow,
            total: bd.total,
        });
    }
    if let Some(path) = &cfg.log_path {
        let mut log = String::new();
        for r in &history {
            log.push_str(&format!(
                "{}\t{:.9e}\t{:.9e}\t{:.9e}\t{:.9e}\n",
                r.step, r.l_ldm, r.l_shift, r.l_flow, r.total
            ));
        }
        std::fs::write(path, log)?;
    }
    Ok(TrainOutcome { net, history })
}
