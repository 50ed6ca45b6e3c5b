//! Absolute 3D human pose forecasting.
//!
//! The crate is `no_std` (with `alloc`): everything here is pure computation.
//! File formats, wall-clock timing and the command line live in the
//! `posecast` crate.
//!
//! - [`motion_data`]: sequences, windowing, centering, corpus synthesis
//! - [`metrics`]: MPJPE, VIM, FADE, FCE, throughput and evaluation
//! - [`baselines`]: repeat-last-frame, last-delta-average, ridge regression
//! - [`motion_conformer`]: the conformer forecaster, augmentation, training
//! - [`noise_lab`]: noisy-input corpora, dual evaluation, unsupervised finetuning
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod autograd;
pub mod baselines;
pub mod metrics;
pub mod motion_conformer;
pub mod motion_data;
pub mod noise_lab;
pub mod tensor;
