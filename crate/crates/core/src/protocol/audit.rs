use rayon::prelude::*;

use super::report::{
    AuditReport, BiasFlag, ConditionResult, ConfigEcho, CropProbeResult, ProbeStatus, SplitSummary, CROP_RULE,
    DECISION_RULE,
    FOURIER_ENCODING, TOOLKIT_VERSION,
};
use super::stats::chance_threshold;
use crate::cnn::{init_model, predict_batch, train_model, DataView, EpochRecord, Model, ModelConfig, TrainConfig};
use crate::cropper::{crop_dataset, CropSpec};
use crate::error::{Error, Result};
use crate::imgio::{split_dataset, Fractions, LabeledDataset, Partition, SplitManifest, DEFAULT_FRACTIONS};
use crate::metrics::{evaluate, EvalMetrics};
use crate::transforms::{apply_transform, TransformSpec};

pub const DEFAULT_TOLERANCE_PP: f64 = 2.0;
pub const DEFAULT_CONFIDENCE: f64 = 0.99;

/// Absorbs rounding in `100 * (a - b)` so the boundary stays inclusive.
const BOUNDARY_EPS_PP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AuditOptions {
    pub dataset_id: String,
    pub split_seed: u64,
    pub fractions: Fractions,
    /// Initialization seed shared by every condition.
    pub model_seed: u64,
    pub tolerance_pp: f64,
    pub include_fourier_in_rule: bool,
    /// Conditions trained concurrently; 1 runs them in order on this thread.
    pub jobs: usize,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            dataset_id: "dataset".into(),
            split_seed: 0,
            fractions: DEFAULT_FRACTIONS,
            model_seed: 0,
            tolerance_pp: DEFAULT_TOLERANCE_PP,
            include_fourier_in_rule: false,
            jobs: 1,
        }
    }
}

/// A trained model with its test-set evaluation.
#[derive(Debug, Clone)]
pub struct TrainedCondition {
    pub model: Model,
    pub metrics: EvalMetrics,
    pub history: Vec<EpochRecord>,
}

fn view<'a>(ds: &'a LabeledDataset, idx: &[usize]) -> DataView<'a> {
    DataView::new(
        idx.iter().map(|&i| &ds.items()[i].image).collect(),
        idx.iter().map(|&i| ds.items()[i].label).collect(),
    )
}

fn check_model_fits(ds: &LabeledDataset, mc: &ModelConfig) -> Result<()> {
    mc.validate()?;
    if mc.num_classes != ds.num_classes() {
        return Err(Error::InvalidModelConfig(format!(
            "model has {} outputs but the dataset has {} classes",
            mc.num_classes,
            ds.num_classes()
        )));
    }
    let expected = (mc.input_h, mc.input_w, mc.input_c);
    for item in ds.items() {
        let img = &item.image;
        let found = (img.height(), img.width(), img.channels());
        if found != expected {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}x{}", expected.0, expected.1, expected.2),
                found: format!("{}x{}x{} ({})", found.0, found.1, found.2, item.id),
            });
        }
    }
    Ok(())
}

/// Trains a fresh model on the TRAIN partition (VAL feeds the history) and
/// evaluates it on TEST.
pub fn train_and_evaluate(
    ds: &LabeledDataset,
    split: &SplitManifest,
    mc: &ModelConfig,
    tc: &TrainConfig,
    model_seed: u64,
) -> Result<TrainedCondition> {
    check_model_fits(ds, mc)?;
    let train = view(ds, &split.indices(ds, Partition::Train));
    let val = view(ds, &split.indices(ds, Partition::Val));
    let test = view(ds, &split.indices(ds, Partition::Test));
    if test.is_empty() {
        return Err(Error::InvalidAudit("the test partition is empty".into()));
    }
    let mut model = init_model(mc, model_seed)?;
    let history = train_model(&mut model, &train, &val, tc)?;
    let mut predictions = Vec::with_capacity(test.len());
    for chunk in test.images.chunks(64) {
        predictions.extend(predict_batch(&model, chunk)?);
    }
    let metrics = evaluate(&predictions, &test.labels, ds.num_classes())?;
    Ok(TrainedCondition {
        model,
        metrics,
        history,
    })
}

/// Fills `delta_pp` and `flag` for every condition from the single identity
/// condition. The identity itself is excluded, as are Fourier conditions
/// unless `include_fourier` is set.
pub fn decide_bias_flags(conditions: &mut [ConditionResult], tolerance_pp: f64, include_fourier: bool) -> Result<()> {
    if !(tolerance_pp.is_finite() && tolerance_pp >= 0.0) {
        return Err(Error::InvalidAudit(format!("tolerance must be >= 0 pp, got {tolerance_pp}")));
    }
    let identities: Vec<usize> = conditions
        .iter()
        .enumerate()
        .filter(|(_, c)| c.transform.is_identity())
        .map(|(i, _)| i)
        .collect();
    let original = match identities.as_slice() {
        [] => return Err(Error::MissingIdentity),
        [i] => conditions[*i].accuracy,
        _ => return Err(Error::InvalidAudit("more than one identity condition".into())),
    };
    for c in conditions.iter_mut() {
        c.delta_pp = 100.0 * (c.accuracy - original);
        c.flag = if c.transform.is_identity() || (c.transform.involves_fourier() && !include_fourier) {
            BiasFlag::ExcludedFromRule
        } else if c.delta_pp >= -tolerance_pp - BOUNDARY_EPS_PP {
            BiasFlag::BiasIndicated
        } else {
            BiasFlag::NoIndication
        };
    }
    Ok(())
}

fn run_condition(
    ds: &LabeledDataset,
    split: &SplitManifest,
    transform: &TransformSpec,
    mc: &ModelConfig,
    tc: &TrainConfig,
    model_seed: u64,
) -> Result<ConditionResult> {
    log::info!("condition {transform}: training");
    let trained = if transform.is_identity() {
        train_and_evaluate(ds, split, mc, tc, model_seed)?
    } else {
        let transformed = ds.map_images(|item| apply_transform(transform, &item.image))?;
        train_and_evaluate(&transformed, split, mc, tc, model_seed)?
    };
    log::info!("condition {transform}: test accuracy {:.4}", trained.metrics.accuracy);
    Ok(ConditionResult::new(transform.clone(), trained.metrics, trained.history))
}

/// Trains one model per condition (identity first, then `transforms` in
/// order) on one shared split and flags each against the identity.
pub fn run_transform_audit(
    ds: &LabeledDataset,
    transforms: &[TransformSpec],
    mc: &ModelConfig,
    tc: &TrainConfig,
    opts: &AuditOptions,
) -> Result<AuditReport> {
    if transforms.is_empty() {
        return Err(Error::InvalidAudit("no transforms to audit".into()));
    }
    if transforms.iter().any(TransformSpec::is_identity) {
        return Err(Error::InvalidAudit("identity is always audited and may not be listed".into()));
    }
    for t in transforms {
        t.validate()?;
    }
    tc.validate()?;
    check_model_fits(ds, mc)?;
    if opts.jobs == 0 {
        return Err(Error::InvalidAudit("jobs must be >= 1".into()));
    }

    let split = split_dataset(ds, opts.fractions, opts.split_seed)?;
    let mut report = AuditReport {
        dataset: opts.dataset_id.clone(),
        split: SplitSummary::of(&split)?,
        conditions: Vec::new(),
        crop_probe: None,
        config: ConfigEcho {
            model: mc.clone(),
            crop_model: None,
            training: tc.clone(),
            transforms: transforms.to_vec(),
            split_seed: opts.split_seed,
            model_seed: opts.model_seed,
            tolerance_pp: opts.tolerance_pp,
            include_fourier_in_rule: opts.include_fourier_in_rule,
            confidence: None,
            fourier_encoding: FOURIER_ENCODING.into(),
            decision_rule: DECISION_RULE.into(),
            crop_rule: None,
        },
        version: TOOLKIT_VERSION.into(),
        timestamp: None,
    };

    let mut all = vec![TransformSpec::Identity];
    all.extend_from_slice(transforms);
    let run = |t: &TransformSpec| run_condition(ds, &split, t, mc, tc, opts.model_seed);
    let outcomes: Vec<Result<ConditionResult>> = if opts.jobs == 1 {
        all.iter().map(run).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::InvalidAudit(e.to_string()))?
            .install(|| all.par_iter().map(run).collect())
    };

    for (t, outcome) in all.iter().zip(outcomes) {
        match outcome {
            Ok(c) => report.conditions.push(c),
            Err(source) => {
                // Flags are best effort on a partial report.
                let _ = decide_bias_flags(&mut report.conditions, opts.tolerance_pp, opts.include_fourier_in_rule);
                return Err(Error::ConditionFailed {
                    condition: t.to_string(),
                    partial: Box::new(report),
                    source: Box::new(source),
                });
            }
        }
    }
    decide_bias_flags(&mut report.conditions, opts.tolerance_pp, opts.include_fourier_in_rule)?;
    Ok(report)
}

/// Trains and evaluates on background corner patches, reusing `split`.
/// Undersized images skip the probe with an explicit status instead of
/// failing.
pub fn run_crop_probe(
    ds: &LabeledDataset,
    split: &SplitManifest,
    crop: CropSpec,
    mc: &ModelConfig,
    tc: &TrainConfig,
    model_seed: u64,
    confidence: f64,
) -> Result<CropProbeResult> {
    let k = ds.num_classes();
    let n_test = split.count(Partition::Test);
    let threshold = chance_threshold(n_test, k, confidence)?;
    let mut result = CropProbeResult {
        corner: crop.corner,
        size: crop.size,
        status: ProbeStatus::Completed,
        accuracy: None,
        chance: 1.0 / k as f64,
        threshold: Some(threshold),
        confidence,
        n_test,
        flag: BiasFlag::ExcludedFromRule,
        metrics: None,
        undersized: Vec::new(),
    };
    let cropped = match crop_dataset(ds, crop) {
        Ok(c) => c,
        Err(Error::UndersizedImages(paths)) => {
            log::warn!("crop probe skipped: {} undersized images", paths.len());
            result.status = ProbeStatus::SkippedUndersized;
            result.undersized = paths.iter().map(|p| p.display().to_string()).collect();
            return Ok(result);
        }
        Err(e) => return Err(e),
    };
    let trained = train_and_evaluate(&cropped, split, mc, tc, model_seed)?;
    let acc = trained.metrics.accuracy;
    log::info!("crop probe: accuracy {acc:.4}, threshold {threshold:.4}");
    result.accuracy = Some(acc);
    result.flag = if acc > threshold {
        BiasFlag::BiasIndicated
    } else {
        BiasFlag::NoIndication
    };
    result.metrics = Some(trained.metrics);
    Ok(result)
}

impl AuditReport {
    /// Runs the crop probe on the report's own split and records it.
    pub fn attach_crop_probe(
        &mut self,
        ds: &LabeledDataset,
        crop: CropSpec,
        mc: &ModelConfig,
        tc: &TrainConfig,
        confidence: f64,
    ) -> Result<&CropProbeResult> {
        let split = split_dataset(ds, self.split.fractions, self.split.seed)?;
        let probe = run_crop_probe(ds, &split, crop, mc, tc, self.config.model_seed, confidence)?;
        self.config.crop_model = Some(mc.clone());
        self.config.confidence = Some(confidence);
        self.config.crop_rule = Some(CROP_RULE.into());
        Ok(self.crop_probe.insert(probe))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::WaveletFamily;

    fn cond(t: TransformSpec, acc: f64) -> ConditionResult {
        let metrics = EvalMetrics {
            confusion: vec![vec![1]],
            accuracy: acc,
            macro_precision: acc,
            macro_recall: acc,
            macro_f1: acc,
            undefined_precision: vec![],
            undefined_recall: vec![],
        };
        ConditionResult::new(t, metrics, vec![])
    }

    fn table_row(orig: f64, fourier: f64, wav: f64, med: f64, medwav: f64) -> Vec<ConditionResult> {
        let haar = TransformSpec::wavelet(WaveletFamily::Haar);
        vec![
            cond(TransformSpec::Identity, orig),
            cond(TransformSpec::Fourier, fourier),
            cond(haar.clone(), wav),
            cond(TransformSpec::median(5), med),
            cond(TransformSpec::Compose(vec![TransformSpec::median(5), haar]), medwav),
        ]
    }

    #[test]
    fn inclusive_boundary_and_strict_side() {
        let mut cs = vec![
            cond(TransformSpec::Identity, 0.59),
            cond(TransformSpec::median(5), 0.57),
            cond(TransformSpec::median(3), 0.569),
        ];
        decide_bias_flags(&mut cs, 2.0, false).unwrap();
        assert_eq!(cs[1].flag, BiasFlag::BiasIndicated);
        assert_eq!(cs[2].flag, BiasFlag::NoIndication);
        assert_eq!(cs[0].flag, BiasFlag::ExcludedFromRule);
        assert_eq!(cs[0].name, "original");
    }

    #[test]
    fn fourier_is_excluded_unless_requested() {
        let mut cs = table_row(0.5, 0.9, 0.1, 0.1, 0.1);
        decide_bias_flags(&mut cs, 2.0, false).unwrap();
        assert_eq!(cs[1].flag, BiasFlag::ExcludedFromRule);
        decide_bias_flags(&mut cs, 2.0, true).unwrap();
        assert_eq!(cs[1].flag, BiasFlag::BiasIndicated);
    }

    #[test]
    fn identity_must_appear_exactly_once() {
        let mut none = vec![cond(TransformSpec::Fourier, 0.5)];
        assert!(matches!(decide_bias_flags(&mut none, 2.0, false), Err(Error::MissingIdentity)));
        let mut two = vec![cond(TransformSpec::Identity, 0.5), cond(TransformSpec::Identity, 0.5)];
        assert!(decide_bias_flags(&mut two, 2.0, false).is_err());
    }

    #[test]
    fn deltas_are_percentage_points() {
        let mut cs = table_row(0.70, 0.60, 0.80, 0.70, 0.80);
        decide_bias_flags(&mut cs, 2.0, false).unwrap();
        assert!((cs[2].delta_pp - 10.0).abs() < 1e-9);
        assert!((cs[1].delta_pp + 10.0).abs() < 1e-9);
    }
}
