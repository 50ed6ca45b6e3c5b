//! Mini-batch training with Adam, warmup plus cosine decay and global
//! gradient-norm clipping.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::augment::{geometric_augment, spec_augment, GeoAugSpec, SpecAugSpec};
use super::model::{Mode, MotionConformer};
use crate::metrics::MetricError;
use crate::motion_data::{center_window, DataError, ForecastWindow};
use crate::noise_lab::{perturb_in_place, NoiseSpec};
use crate::tensor::Mat;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(&'static str),
    #[error("no training windows")]
    EmptyTrain,
    #[error("no validation windows")]
    EmptyVal,
    #[error("window shape does not match the model config")]
    Shape,
    #[error("loss became non-finite at epoch {epoch}, step {step}; last finite parameters kept")]
    Diverged { epoch: usize, step: usize, history: TrainHistory },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Stops after this many optimizer steps when set, even mid-epoch.
    pub max_steps: Option<usize>,
    /// Fraction of the total steps spent in linear warmup.
    pub warmup_fraction: f64,
    /// Final learning rate as a fraction of `learning_rate`.
    pub min_lr_fraction: f64,
    pub grad_clip_norm: f64,
    pub geo_aug: GeoAugSpec,
    pub spec_aug: SpecAugSpec,
    /// Gaussian corruption of each training sample (seed field unused; the
    /// training seed drives it).
    pub input_noise: Option<NoiseSpec>,
    /// Also corrupt targets with an independent draw.
    pub noise_targets: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 16,
            epochs: 10,
            seed: 0,
            max_steps: None,
            warmup_fraction: 0.05,
            min_lr_fraction: 0.01,
            grad_clip_norm: 1.0,
            geo_aug: GeoAugSpec::default(),
            spec_aug: SpecAugSpec::default(),
            input_noise: None,
            noise_targets: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(TrainError::Config("learning_rate must be finite and non-negative"));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch_size must be positive"));
        }
        if !(0.0..=1.0).contains(&self.warmup_fraction) || !(0.0..=1.0).contains(&self.min_lr_fraction) {
            return Err(TrainError::Config("warmup_fraction and min_lr_fraction must lie in [0, 1]"));
        }
        if !(self.grad_clip_norm > 0.0) {
            return Err(TrainError::Config("grad_clip_norm must be positive"));
        }
        let [lo, hi] = self.geo_aug.scale_range;
        if self.geo_aug.enabled && !(lo > 0.0 && lo <= hi) {
            return Err(TrainError::Config("geo_aug.scale_range must be positive and ordered"));
        }
        if let Some(n) = &self.input_noise {
            n.validate().map_err(|_| TrainError::Config("input_noise is invalid"))?;
        }
        Ok(())
    }
}

/// Learning rate at optimizer step `step` (0-based) of `total`.
pub fn scheduled_lr(cfg: &TrainConfig, step: usize, total: usize) -> f64 {
    let total = total.max(1);
    let warmup = libm::ceil(cfg.warmup_fraction * total as f64) as usize;
    if step < warmup {
        return cfg.learning_rate * (step + 1) as f64 / warmup as f64;
    }
    let span = (total - warmup).max(1) as f64;
    let progress = ((step - warmup) as f64 / span).min(1.0);
    let floor = cfg.learning_rate * cfg.min_lr_fraction;
    floor + (cfg.learning_rate - floor) * 0.5 * (1.0 + libm::cos(core::f64::consts::PI * progress))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch's steps (mm).
    pub train_loss: f64,
    /// Mean joint error over all output frames of the validation set (mm).
    pub val_loss: f64,
    /// Validation MPJPE at the 1000 ms output frame, when the output reaches it.
    pub val_mpjpe_1000: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Evaluation-mode losses before the first step; `epoch` is the number of
    /// epochs already trained.
    pub initial: Option<EpochRecord>,
    pub epochs: Vec<EpochRecord>,
    pub steps: usize,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last().or(self.initial.as_ref())
    }
}

/// Evaluation-mode loss and 1000 ms MPJPE of `model` over centered windows.
pub fn validation_stats(model: &MotionConformer<f32>, windows: &[ForecastWindow]) -> Result<(f64, Option<f64>), TrainError> {
    if windows.is_empty() {
        return Err(TrainError::EmptyVal);
    }
    let cfg = model.config();
    let frame_1000 = libm::round(windows[0].fps) as usize;
    let probe = (frame_1000 >= 1 && frame_1000 <= cfg.t_out).then(|| frame_1000 - 1);
    let (mut loss, mut at) = (0.0, 0.0);
    for w in windows {
        let x = MotionConformer::<f32>::window_input(w);
        model.check_input(&x).map_err(|_| TrainError::Shape)?;
        let y = &model.forward(core::slice::from_ref(&x)).map_err(|_| TrainError::Shape)?[0];
        let target = w.target.data();
        let cols = cfg.channels();
        let mut frame_err = |f: usize| {
            let row = y.row(f);
            let tgt = &target[f * cols..(f + 1) * cols];
            let mut s = 0.0;
            for (p, t) in row.chunks_exact(3).zip(tgt.chunks_exact(3)) {
                let d: f64 = (0..3).map(|k| (p[k] as f64 - t[k]) * (p[k] as f64 - t[k])).sum();
                s += libm::sqrt(d);
            }
            s / cfg.joints as f64
        };
        loss += (0..cfg.t_out).map(&mut frame_err).sum::<f64>() / cfg.t_out as f64;
        if let Some(f) = probe {
            at += frame_err(f);
        }
    }
    let n = windows.len() as f64;
    Ok((loss / n, probe.map(|_| at / n)))
}

fn centered(windows: &[ForecastWindow]) -> Result<Vec<ForecastWindow>, TrainError> {
    windows.iter().map(|w| if w.centered { Ok(w.clone()) } else { Ok(center_window(w)?) }).collect()
}

struct Adam {
    m: Vec<Mat<f32>>,
    v: Vec<Mat<f32>>,
    t: i32,
}

impl Adam {
    const BETA1: f32 = 0.9;
    const BETA2: f32 = 0.999;
    const EPS: f32 = 1e-8;

    fn step(&mut self, params: &mut [Mat<f32>], grads: &[Mat<f32>], lr: f32) {
        self.t += 1;
        let c1 = 1.0 - libm::powf(Self::BETA1, self.t as f32);
        let c2 = 1.0 - libm::powf(Self::BETA2, self.t as f32);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            let it = p.data_mut().iter_mut().zip(g.data()).zip(m.data_mut().iter_mut().zip(v.data_mut()));
            for ((p, &g), (m, v)) in it {
                *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
                *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
                *p -= lr * (*m / c1) / (libm::sqrtf(*v / c2) + Self::EPS);
            }
        }
    }
}

/// Trains `model` in place and returns per-epoch history.
///
/// Windows are centered first when needed. Augmentation, noise and SpecAug
/// apply to training samples only. On a non-finite loss or gradient the
/// model keeps the parameters from the last finite step.
pub fn train(
    model: &mut MotionConformer<f32>,
    train_windows: &[ForecastWindow],
    val_windows: &[ForecastWindow],
    cfg: &TrainConfig,
) -> Result<TrainHistory, TrainError> {
    cfg.validate()?;
    if train_windows.is_empty() {
        return Err(TrainError::EmptyTrain);
    }
    if val_windows.is_empty() {
        return Err(TrainError::EmptyVal);
    }
    let mcfg = model.config().clone();
    let expected = [mcfg.t_in, mcfg.t_out, mcfg.joints];
    if train_windows.iter().chain(val_windows).any(|w| [w.t_in(), w.t_out(), w.total_joints()] != expected) {
        return Err(TrainError::Shape);
    }
    let train_set = centered(train_windows)?;
    let val_set = centered(val_windows)?;

    let start_epoch = model.epochs_trained;
    let run_seed = cfg.seed ^ (start_epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut order_rng = ChaCha8Rng::seed_from_u64(run_seed);
    let mut aug_rng = ChaCha8Rng::seed_from_u64(run_seed);
    aug_rng.set_stream(1);
    let mut drop_rng = ChaCha8Rng::seed_from_u64(run_seed);
    drop_rng.set_stream(2);

    let batches_per_epoch = train_set.len().div_ceil(cfg.batch_size);
    let mut total_steps = cfg.epochs * batches_per_epoch;
    if let Some(cap) = cfg.max_steps {
        total_steps = total_steps.min(cap);
    }

    let (val_loss, val_mpjpe_1000) = validation_stats(model, &val_set)?;
    let (train_loss, _) = validation_stats(model, &train_set)?;
    let mut history = TrainHistory {
        initial: Some(EpochRecord { epoch: start_epoch, train_loss, val_loss, val_mpjpe_1000 }),
        epochs: Vec::new(),
        steps: 0,
    };

    let mut adam = Adam { m: model.params().zeros_like(), v: model.params().zeros_like(), t: 0 };
    let mut grads = model.params().zeros_like();
    let mut last_good = model.params().values().to_vec();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let clip = cfg.grad_clip_norm;

    'epochs: for e in 0..cfg.epochs {
        if history.steps >= total_steps {
            break;
        }
        let epoch = start_epoch + e + 1;
        order.shuffle(&mut order_rng);
        let (mut epoch_loss, mut epoch_samples) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            if history.steps >= total_steps {
                break;
            }
            grads.iter_mut().for_each(|g| g.fill(0.0));
            let mut batch_loss = 0.0f64;
            for &i in batch {
                let mut w = geometric_augment(&train_set[i], &cfg.geo_aug, &mut aug_rng);
                if let Some(noise) = &cfg.input_noise {
                    perturb_in_place(w.input.data_mut(), noise, &mut aug_rng);
                    if cfg.noise_targets {
                        perturb_in_place(w.target.data_mut(), noise, &mut aug_rng);
                    }
                }
                let x = MotionConformer::<f32>::window_input(&w);
                let x = spec_augment(&x, &cfg.spec_aug, &mut aug_rng);
                let y = MotionConformer::<f32>::window_target(&w);
                let l = model.loss_and_grad(&x, &y, &mut Mode::Train(&mut drop_rng), &mut grads);
                batch_loss += l as f64;
            }
            let inv = 1.0 / batch.len() as f32;
            let mut norm2 = 0.0f64;
            for g in grads.iter_mut() {
                g.scale_assign(inv);
                norm2 += g.sum_squares() as f64;
            }
            let norm = libm::sqrt(norm2);
            if !batch_loss.is_finite() || !norm.is_finite() {
                model.params_mut().values_mut().clone_from_slice(&last_good);
                return Err(TrainError::Diverged { epoch, step: history.steps, history });
            }
            if norm > clip {
                let s = (clip / norm) as f32;
                grads.iter_mut().for_each(|g| g.scale_assign(s));
            }
            let lr = scheduled_lr(cfg, history.steps, total_steps) as f32;
            adam.step(model.params_mut().values_mut(), &grads, lr);
            if model.params().values().iter().any(|p| !p.all_finite()) {
                model.params_mut().values_mut().clone_from_slice(&last_good);
                return Err(TrainError::Diverged { epoch, step: history.steps, history });
            }
            last_good.clone_from_slice(model.params().values());
            history.steps += 1;
            epoch_loss += batch_loss;
            epoch_samples += batch.len();
        }
        if epoch_samples == 0 {
            break 'epochs;
        }
        model.epochs_trained = epoch;
        let (val_loss, val_mpjpe_1000) = validation_stats(model, &val_set)?;
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / epoch_samples as f64,
            val_loss,
            val_mpjpe_1000,
        });
    }
    Ok(history)
}
