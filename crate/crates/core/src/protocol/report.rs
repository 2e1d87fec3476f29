//! Audit report types, JSON (de)serialization and the CSV flattening.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cnn::{EpochRecord, ModelConfig, TrainConfig};
use crate::cropper::Corner;
use crate::error::Result;
use crate::imgio::{Fractions, Partition, SplitManifest};
use crate::metrics::{ConfusionMatrix, EvalMetrics};
use crate::transforms::TransformSpec;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Name given to the untransformed condition.
pub const ORIGINAL_CONDITION: &str = "original";

pub const FOURIER_ENCODING: &str = "log(1+|F|), DC at (H/2, W/2), per-channel min-max to [0,1]";
pub const DECISION_RULE: &str =
    "BIAS_INDICATED iff accuracy >= original accuracy - tolerance (inclusive); identity and, by default, Fourier conditions are EXCLUDED_FROM_RULE";
pub const CROP_RULE: &str = "BIAS_INDICATED iff accuracy > exact one-sided binomial threshold against 1/K";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BiasFlag {
    BiasIndicated,
    NoIndication,
    ExcludedFromRule,
}

impl BiasFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            BiasFlag::BiasIndicated => "BIAS_INDICATED",
            BiasFlag::NoIndication => "NO_INDICATION",
            BiasFlag::ExcludedFromRule => "EXCLUDED_FROM_RULE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub name: String,
    pub transform: TransformSpec,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub confusion: ConfusionMatrix,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined_precision: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined_recall: Vec<usize>,
    /// `100 * (accuracy - original accuracy)`.
    pub delta_pp: f64,
    pub flag: BiasFlag,
    #[serde(default)]
    pub history: Vec<EpochRecord>,
}

impl ConditionResult {
    /// Unflagged result with a zero delta; `decide_bias_flags` fills both in.
    pub fn new(transform: TransformSpec, metrics: EvalMetrics, history: Vec<EpochRecord>) -> Self {
        let name = if transform.is_identity() {
            ORIGINAL_CONDITION.to_owned()
        } else {
            transform.to_string()
        };
        ConditionResult {
            name,
            transform,
            accuracy: metrics.accuracy,
            macro_precision: metrics.macro_precision,
            macro_recall: metrics.macro_recall,
            macro_f1: metrics.macro_f1,
            confusion: metrics.confusion,
            undefined_precision: metrics.undefined_precision,
            undefined_recall: metrics.undefined_recall,
            delta_pp: 0.0,
            flag: BiasFlag::ExcludedFromRule,
            history,
        }
    }

    pub fn metrics(&self) -> EvalMetrics {
        EvalMetrics {
            confusion: self.confusion.clone(),
            accuracy: self.accuracy,
            macro_precision: self.macro_precision,
            macro_recall: self.macro_recall,
            macro_f1: self.macro_f1,
            undefined_precision: self.undefined_precision.clone(),
            undefined_recall: self.undefined_recall.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeStatus {
    Completed,
    SkippedUndersized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropProbeResult {
    pub corner: Corner,
    pub size: usize,
    pub status: ProbeStatus,
    pub accuracy: Option<f64>,
    /// `1/K`.
    pub chance: f64,
    pub threshold: Option<f64>,
    pub confidence: f64,
    pub n_test: usize,
    pub flag: BiasFlag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<EvalMetrics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undersized: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub seed: u64,
    pub fractions: Fractions,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    /// SHA-256 of the manifest's JSON text.
    pub manifest_sha256: String,
}

impl SplitSummary {
    pub fn of(split: &SplitManifest) -> Result<Self> {
        let digest = Sha256::digest(split.to_json()?.as_bytes());
        Ok(SplitSummary {
            seed: split.seed,
            fractions: split.fractions,
            train: split.count(Partition::Train),
            val: split.count(Partition::Val),
            test: split.count(Partition::Test),
            manifest_sha256: hex::encode(digest),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop_model: Option<ModelConfig>,
    pub training: TrainConfig,
    pub transforms: Vec<TransformSpec>,
    pub split_seed: u64,
    pub model_seed: u64,
    pub tolerance_pp: f64,
    pub include_fourier_in_rule: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    pub fourier_encoding: String,
    pub decision_rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop_rule: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub dataset: String,
    pub split: SplitSummary,
    pub conditions: Vec<ConditionResult>,
    #[serde(default)]
    pub crop_probe: Option<CropProbeResult>,
    pub config: ConfigEcho,
    pub version: String,
    /// Wall-clock stamp; the only key allowed to differ between reruns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl AuditReport {
    pub fn original(&self) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.transform.is_identity())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with the timestamp removed, for rerun comparisons.
    pub fn to_json_without_timestamp(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.timestamp = None;
        copy.to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per condition.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "name",
            "transform",
            "accuracy",
            "macro_precision",
            "macro_recall",
            "macro_f1",
            "delta_pp",
            "flag",
        ])?;
        for c in &self.conditions {
            w.write_record([
                c.name.clone(),
                c.transform.to_string(),
                c.accuracy.to_string(),
                c.macro_precision.to_string(),
                c.macro_recall.to_string(),
                c.macro_f1.to_string(),
                c.delta_pp.to_string(),
                c.flag.as_str().to_owned(),
            ])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| crate::error::Error::InvalidAudit(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Human-readable summary in the results-table layout.
    pub fn to_table(&self) -> String {
        let mut out = format!("dataset: {}\n", self.dataset);
        for c in &self.conditions {
            out.push_str(&format!(
                "\n[{}] delta {:+.2} pp, {}\n{}\n",
                c.name,
                c.delta_pp,
                c.flag.as_str(),
                c.metrics().table_cell()
            ));
        }
        if let Some(p) = &self.crop_probe {
            out.push_str(&format!("\n[crop probe {} {}px] ", p.corner, p.size));
            match (p.accuracy, p.threshold) {
                (Some(a), Some(t)) => out.push_str(&format!(
                    "accuracy {:.2}% vs chance {:.2}% (threshold {:.2}%), {}\n",
                    100.0 * a,
                    100.0 * p.chance,
                    100.0 * t,
                    p.flag.as_str()
                )),
                _ => out.push_str(&format!("skipped: {} undersized images\n", p.undersized.len())),
            }
        }
        out
    }
}
