//! The two bias probes: the transform audit and the background-crop probe.

mod audit;
mod report;
mod stats;

pub use audit::{
    decide_bias_flags, run_crop_probe, run_transform_audit, train_and_evaluate, AuditOptions, TrainedCondition,
    DEFAULT_CONFIDENCE, DEFAULT_TOLERANCE_PP,
};
pub use report::{
    AuditReport, BiasFlag, ConditionResult, ConfigEcho, CropProbeResult, ProbeStatus, SplitSummary,
    ORIGINAL_CONDITION, TOOLKIT_VERSION,
};
pub use stats::{binomial_upper_tails, chance_threshold, critical_count};
