//! Auditing image datasets for non-semantic, class-correlated signal.
//!
//! A dataset is suspect when a classifier still does well after the images
//! have been transformed so that a human could no longer tell the classes
//! apart, or when a tiny background-only corner crop is enough to beat
//! chance. The crate provides the transforms, a small from-scratch CNN,
//! the experimental protocol and reporting around those two probes.

mod error;

pub mod cnn;
pub mod cropper;
pub mod imgio;
pub mod metrics;
pub mod protocol;
pub mod synth;
pub mod transforms;

pub use error::{Error, Result};

pub use cnn::{init_model, train_model, BlockSpec, DataView, Model, ModelConfig, TrainConfig};
pub use cropper::{crop_corner, crop_dataset, Corner, CropSpec};
pub use imgio::{
    load_dataset, load_image, save_dataset, save_image, split_dataset, Fractions, Grid, ImageTensor, Item,
    LabeledDataset, Mask, Partition, SplitManifest,
};
pub use metrics::{classification_metrics, confusion_matrix, evaluate, ConfusionMatrix, EvalMetrics};
pub use protocol::{
    chance_threshold, decide_bias_flags, run_crop_probe, run_transform_audit, AuditOptions, AuditReport,
    BiasFlag, ConditionResult, CropProbeResult,
};
pub use synth::{generate_shape_dataset, inject_class_correlated_background, BiasPattern, BiasSpec, SynthSpec};
pub use transforms::{apply_transform, TransformSpec, WaveletFamily, WaveletOutput};
