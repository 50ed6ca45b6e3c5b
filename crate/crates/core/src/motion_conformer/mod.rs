//! The conformer forecaster: model, augmentation and training.

mod augment;
mod model;
mod train;

pub use augment::{
    apply_masks, geometric_augment, sample_masks, spec_augment, yaw_scale, GeoAugSpec, MaskAxis, MaskSpan, SpecAugSpec,
};
pub use model::{ModelConfig, ModelError, Mode, MotionConformer, ReductionPosition};
pub use train::{scheduled_lr, train, validation_stats, EpochRecord, TrainConfig, TrainError, TrainHistory};
