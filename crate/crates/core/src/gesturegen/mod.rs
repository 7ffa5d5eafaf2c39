//! Synthetic tactile gestures on the 9×9 grid.
//!
//! Motion templates, speed bands and augmentation ranges are configuration,
//! not measurements; every knob lives in [`Templates`], [`GenSpec`] or
//! [`AugmentConfig`].

mod augment;
mod dataset;
mod templates;

pub use augment::{augment, augment_with, AugmentConfig, AugmentParams};
pub use dataset::{generate_dataset, split, split_indices, GenSpec, GestureRecord, LabelSet, Manifest, FORMAT_VERSION};
pub use templates::{generate_gesture, frame_count_range, Templates};
