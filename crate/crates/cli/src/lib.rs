//! `biaslens` subcommands. [`run_command`] is the whole program minus the
//! process exit, so integration tests can drive it in-process.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use biaslens::cnn::checkpoint::save_checkpoint;
use biaslens::imgio::resize_bilinear;
use biaslens::protocol::{
    train_and_evaluate, AuditReport, DEFAULT_CONFIDENCE, DEFAULT_TOLERANCE_PP,
};
use biaslens::synth::{save_synth_dataset, BiasPattern, SynthMeta, DEFAULT_BIAS_AMPLITUDE};
use biaslens::{
    apply_transform, crop_dataset, generate_shape_dataset, inject_class_correlated_background, load_dataset,
    run_transform_audit, save_dataset, split_dataset, AuditOptions, BiasSpec, Corner, CropSpec, Error,
    LabeledDataset, ModelConfig, SynthSpec, TrainConfig, TransformSpec,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const PARTIAL_REPORT_JSON: &str = "report.partial.json";
pub const RUN_CONFIG_JSON: &str = "run_config.json";
pub const SPLIT_JSON: &str = "split.json";

#[derive(Debug, Parser)]
#[command(name = "biaslens", version, about = "Audit image datasets for class-correlated background bias")]
#[command(after_help = "Log verbosity is read from BIASLENS_LOG (error, warn, info, debug, trace; default warn).")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transform audit plus corner-crop probe; writes report.json and report.csv.
    Audit(AuditArgs),
    /// Materialize a dataset of corner crops.
    Crop(CropArgs),
    /// Materialize one transformed dataset per listed transform.
    Transform(TransformArgs),
    /// Train and evaluate a single condition, saving the model.
    Train(TrainArgs),
    /// Generate the synthetic unbiased/biased corpus pair.
    Synth(SynthArgs),
    /// Re-render an existing report.json.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Arch {
    /// Three 1-conv blocks (8/16/16 filters), dense 32.
    Compact,
    /// Two 2-conv blocks (16/32 filters), dense 128.
    VggMini,
    /// Full VGG16 layout.
    Vgg16,
}

impl Arch {
    fn config(self, h: usize, w: usize, c: usize, k: usize) -> ModelConfig {
        match self {
            Arch::Compact => ModelConfig::compact(h, w, c, k),
            Arch::VggMini => ModelConfig::vgg_mini(h, w, c, k),
            Arch::Vgg16 => ModelConfig::vgg16(h, w, c, k),
        }
    }

    /// Two pooling stages at most, so 20-pixel patches still fit.
    fn patch_config(self, h: usize, w: usize, c: usize, k: usize) -> ModelConfig {
        match self {
            Arch::Compact => ModelConfig::compact_patch(h, w, c, k),
            Arch::VggMini | Arch::Vgg16 => ModelConfig::vgg_mini(h, w, c, k),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct TransformList(Vec<TransformSpec>);

fn parse_transforms(text: &str) -> Result<TransformList, String> {
    TransformSpec::parse_list(text)
        .and_then(|list| {
            list.iter().try_for_each(TransformSpec::validate)?;
            Ok(list)
        })
        .map(TransformList)
        .map_err(|e| e.to_string())
}

fn parse_transform(text: &str) -> Result<TransformSpec, String> {
    let spec: TransformSpec = text.parse().map_err(|e: Error| e.to_string())?;
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn parse_corner(text: &str) -> Result<Corner, String> {
    text.parse().map_err(|e: Error| e.to_string())
}

/// Canonical text of [`default_audit_transforms`].
const DEFAULT_TRANSFORMS: &str = "fourier,wavelet:haar,median:5,median:5+wavelet:haar";

#[derive(Debug, Clone, Args, Serialize)]
struct TrainingArgs {
    /// Network layout.
    #[arg(long, value_enum, default_value_t = Arch::Compact)]
    arch: Arch,
    /// Training epochs (no early stopping).
    #[arg(long, default_value_t = 40)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Adam learning rate.
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Data seed: drives the train/val/test split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model seed: drives weight initialization and the epoch shuffle.
    #[arg(long, default_value_t = 0)]
    model_seed: u64,
    /// Resample every image to N×N before training (bilinear).
    #[arg(long, value_name = "N")]
    resize: Option<usize>,
}

impl TrainingArgs {
    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.lr,
            seed: self.model_seed,
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct AuditArgs {
    /// Dataset root (one subdirectory of PNGs per class).
    #[arg(long)]
    data: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated transforms; `+` composes left to right.
    #[arg(long, value_parser = parse_transforms, default_value = DEFAULT_TRANSFORMS)]
    transforms: TransformList,
    /// Crop-probe corner: tl, tr, bl or br.
    #[arg(long, value_parser = parse_corner, default_value = "tl")]
    corner: Corner,
    /// Crop-probe patch side in pixels; 0 disables the probe.
    #[arg(long, default_value_t = 20)]
    crop_size: usize,
    #[command(flatten)]
    training: TrainingArgs,
    /// Percentage points by which a transformed condition may trail the
    /// original and still count as similar.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE_PP)]
    tolerance_pp: f64,
    /// Confidence of the crop-probe binomial test.
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    confidence: f64,
    /// Conditions trained concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Let Fourier conditions raise flags.
    #[arg(long)]
    include_fourier_in_rule: bool,
    /// Overwrite an existing report in --out.
    #[arg(long)]
    #[serde(skip)]
    force: bool,
}

impl std::fmt::Display for TransformList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Args)]
struct CropArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = parse_corner, default_value = "tl")]
    corner: Corner,
    #[arg(long, default_value_t = 20)]
    crop_size: usize,
}

#[derive(Debug, Args)]
struct TransformArgs {
    #[arg(long)]
    data: PathBuf,
    /// Each transform is written to <out>/<transform name>.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = parse_transforms, default_value = DEFAULT_TRANSFORMS)]
    transforms: TransformList,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Condition to train on.
    #[arg(long, value_parser = parse_transform, default_value = "identity")]
    transform: TransformSpec,
    #[command(flatten)]
    training: TrainingArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PatternArg {
    FixedHighFrequency,
    CornerOffset,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Writes <out>/unbiased and <out>/biased.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    classes: usize,
    #[arg(long, default_value_t = 40)]
    samples_per_class: usize,
    #[arg(long, default_value_t = 64)]
    image_size: usize,
    /// Maximum per-pixel bias perturbation.
    #[arg(long, default_value_t = DEFAULT_BIAS_AMPLITUDE)]
    amplitude: f64,
    #[arg(long, value_enum, default_value_t = PatternArg::FixedHighFrequency)]
    pattern: PatternArg,
    /// Generation seed; the bias pattern uses seed + 1.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// A report.json, or the directory holding one.
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    format: ReportFormat,
    /// Destination file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure of a subcommand after argument parsing.
#[derive(Debug)]
struct Failure {
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::Io { .. } | Error::ReadDir { .. } | Error::Write { .. } | Error::Decode { .. } => "io",
            Error::ConditionFailed { .. } => "condition_failed",
            Error::NonFinite(_) => "non_finite",
            _ => "pipeline",
        };
        Failure {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure {
            kind: "json",
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        kind: "io",
        message: format!("{}: {e}", path.display()),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_failure(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| io_failure(path, e))
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("BIASLENS_LOG", "warn");
    // Repeated in-process invocations keep the first logger.
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `args` (program name first) and runs the subcommand. Returns the
/// process exit status: 0 success, 2 usage error, 1 runtime failure.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Audit(a) => audit(a),
        Command::Crop(a) => crop(a),
        Command::Transform(a) => transform(a),
        Command::Train(a) => train(a),
        Command::Synth(a) => synth(a),
        Command::Report(a) => report(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let line = serde_json::json!({ "error": f.kind, "message": f.message });
            eprintln!("{line}");
            EXIT_RUNTIME
        }
    }
}

fn load(data: &Path, resize: Option<usize>) -> Result<LabeledDataset, Failure> {
    let ds = load_dataset(data)?;
    Ok(match resize {
        Some(n) => ds.map_images(|item| resize_bilinear(&item.image, n, n))?,
        None => ds,
    })
}

/// Height, width and channels shared by every image.
fn uniform_shape(ds: &LabeledDataset) -> Result<(usize, usize, usize), Failure> {
    let first = &ds.items()[0].image;
    let shape = (first.height(), first.width(), first.channels());
    match ds
        .items()
        .iter()
        .find(|i| (i.image.height(), i.image.width(), i.image.channels()) != shape)
    {
        None => Ok(shape),
        Some(item) => Err(Failure {
            kind: "pipeline",
            message: format!(
                "{} is {}x{}x{} but {}x{}x{} was expected; pass --resize N",
                item.id,
                item.image.height(),
                item.image.width(),
                item.image.channels(),
                shape.0,
                shape.1,
                shape.2
            ),
        }),
    }
}

#[derive(Serialize)]
struct RunConfig<'a> {
    command: &'static str,
    #[serde(flatten)]
    args: &'a AuditArgs,
    model: &'a ModelConfig,
    crop_model: Option<&'a ModelConfig>,
    training: TrainConfig,
    version: &'static str,
}

/// Directory for this run's outputs. An existing report is never replaced
/// without `--force`; the run moves to `<out>/<config hash>/` instead.
fn resolve_out_dir(out: &Path, config_json: &str, force: bool) -> Result<PathBuf, Failure> {
    if force || !out.join(REPORT_JSON).exists() {
        return Ok(out.to_path_buf());
    }
    let hash = hex::encode(Sha256::digest(config_json.as_bytes()));
    let alt = out.join(&hash[..16]);
    if alt.join(REPORT_JSON).exists() {
        return Err(Failure {
            kind: "exists",
            message: format!(
                "{} and {} already exist; pass --force to overwrite",
                out.join(REPORT_JSON).display(),
                alt.join(REPORT_JSON).display()
            ),
        });
    }
    log::warn!("{} exists; writing to {}", out.join(REPORT_JSON).display(), alt.display());
    Ok(alt)
}

fn audit(args: AuditArgs) -> Result<(), Failure> {
    let ds = load(&args.data, args.training.resize)?;
    let raw = if args.training.resize.is_some() {
        load_dataset(&args.data)?
    } else {
        ds.clone()
    };
    let (h, w, c) = uniform_shape(&ds)?;
    let k = ds.num_classes();
    let mc = args.training.arch.config(h, w, c, k);
    let crop = CropSpec {
        corner: args.corner,
        size: args.crop_size,
    };
    let crop_mc = (args.crop_size > 0).then(|| args.training.arch.patch_config(crop.size, crop.size, c, k));
    let tc = args.training.train_config();

    let config = RunConfig {
        command: "audit",
        args: &args,
        model: &mc,
        crop_model: crop_mc.as_ref(),
        training: tc.clone(),
        version: biaslens::protocol::TOOLKIT_VERSION,
    };
    let config_json = serde_json::to_string_pretty(&config)?;
    let out = resolve_out_dir(&args.out, &config_json, args.force)?;
    write_file(&out.join(RUN_CONFIG_JSON), &config_json)?;

    let split = split_dataset(&ds, AuditOptions::default().fractions, args.training.seed)?;
    write_file(&out.join(SPLIT_JSON), &split.to_json()?)?;

    let opts = AuditOptions {
        dataset_id: args.data.display().to_string(),
        split_seed: args.training.seed,
        model_seed: args.training.model_seed,
        tolerance_pp: args.tolerance_pp,
        include_fourier_in_rule: args.include_fourier_in_rule,
        jobs: args.jobs,
        ..AuditOptions::default()
    };
    let mut report = match run_transform_audit(&ds, &args.transforms.0, &mc, &tc, &opts) {
        Ok(r) => r,
        Err(Error::ConditionFailed {
            condition,
            partial,
            source,
        }) => {
            write_file(&out.join(PARTIAL_REPORT_JSON), &partial.to_json()?)?;
            return Err(Error::ConditionFailed {
                condition,
                partial,
                source,
            }
            .into());
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(crop_mc) = &crop_mc {
        report.attach_crop_probe(&raw, crop, crop_mc, &tc, args.confidence)?;
    }
    report.timestamp = Some(unix_timestamp());
    write_file(&out.join(REPORT_JSON), &report.to_json()?)?;
    write_file(&out.join(REPORT_CSV), &report.to_csv()?)?;
    print!("{}", report.to_table());
    Ok(())
}

fn unix_timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    format!("unix:{secs}")
}

fn crop(args: CropArgs) -> Result<(), Failure> {
    let ds = load_dataset(&args.data)?;
    let cropped = crop_dataset(
        &ds,
        CropSpec {
            corner: args.corner,
            size: args.crop_size,
        },
    )?;
    save_dataset(&cropped, &args.out)?;
    println!("wrote {} crops to {}", cropped.len(), args.out.display());
    Ok(())
}

/// Directory-safe rendering of a transform's canonical text.
fn transform_dir_name(t: &TransformSpec) -> String {
    t.to_string().replace(':', "-").replace('+', "_then_")
}

fn transform(args: TransformArgs) -> Result<(), Failure> {
    let ds = load_dataset(&args.data)?;
    for t in &args.transforms.0 {
        let out_ds = ds.map_images(|item| apply_transform(t, &item.image))?;
        let dir = args.out.join(transform_dir_name(t));
        save_dataset(&out_ds, &dir)?;
        println!("{t}: {} images -> {}", out_ds.len(), dir.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    dataset: String,
    transform: &'a TransformSpec,
    metrics: &'a biaslens::EvalMetrics,
    history: &'a [biaslens::cnn::EpochRecord],
}

fn train(args: TrainArgs) -> Result<(), Failure> {
    let ds = load(&args.data, args.training.resize)?;
    let ds = if args.transform.is_identity() {
        ds
    } else {
        ds.map_images(|item| apply_transform(&args.transform, &item.image))?
    };
    let (h, w, c) = uniform_shape(&ds)?;
    let mc = args.training.arch.config(h, w, c, ds.num_classes());
    let tc = args.training.train_config();
    let split = split_dataset(&ds, AuditOptions::default().fractions, args.training.seed)?;
    let trained = train_and_evaluate(&ds, &split, &mc, &tc, args.training.model_seed)?;
    let summary = TrainSummary {
        dataset: args.data.display().to_string(),
        transform: &args.transform,
        metrics: &trained.metrics,
        history: &trained.history,
    };
    fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;
    write_file(&args.out.join("metrics.json"), &serde_json::to_string_pretty(&summary)?)?;
    write_file(&args.out.join(SPLIT_JSON), &split.to_json()?)?;
    save_checkpoint(
        &trained.model,
        &tc,
        &args.out.join("model.bin"),
        &args.out.join("model.json"),
    )?;
    println!("{}", trained.metrics.table_cell());
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), Failure> {
    let spec = SynthSpec {
        num_classes: args.classes,
        samples_per_class: args.samples_per_class,
        image_size: args.image_size,
        seed: args.seed,
        ..SynthSpec::default()
    };
    let bias = BiasSpec {
        amplitude: args.amplitude,
        pattern: match args.pattern {
            PatternArg::FixedHighFrequency => BiasPattern::FixedHighFrequency,
            PatternArg::CornerOffset => BiasPattern::CornerOffset,
        },
        seed: args.seed.wrapping_add(1),
    };
    bias.validate()?;
    let unbiased = generate_shape_dataset(&spec)?;
    let biased = inject_class_correlated_background(&unbiased, &bias)?;
    let meta = SynthMeta {
        spec: spec.clone(),
        bias: None,
    };
    save_synth_dataset(&unbiased, &meta, &args.out.join("unbiased"))?;
    let meta = SynthMeta {
        bias: Some(bias),
        ..meta
    };
    save_synth_dataset(&biased, &meta, &args.out.join("biased"))?;
    println!("wrote {} + {} images under {}", unbiased.len(), biased.len(), args.out.display());
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let path = if args.input.is_dir() {
        args.input.join(REPORT_JSON)
    } else {
        args.input.clone()
    };
    let text = fs::read_to_string(&path).map_err(|e| io_failure(&path, e))?;
    let parsed = AuditReport::from_json(&text)?;
    let rendered = match args.format {
        ReportFormat::Csv => parsed.to_csv()?,
        ReportFormat::Json => parsed.to_json()?,
        ReportFormat::Table => parsed.to_table(),
    };
    match &args.out {
        Some(out) => write_file(out, &rendered),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use biaslens::transforms::default_audit_transforms;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn default_transforms_round_trip() {
        let parsed = parse_transforms(DEFAULT_TRANSFORMS).unwrap();
        assert_eq!(parsed.0, default_audit_transforms());
    }

    #[test]
    fn bad_token_is_named() {
        let err = parse_transforms("fourier,wavelet:qux").unwrap_err();
        assert!(err.contains("qux"), "{err}");
    }

    #[test]
    fn dir_names_are_path_safe() {
        let t: TransformSpec = "median:5+wavelet:haar".parse().unwrap();
        assert_eq!(transform_dir_name(&t), "median-5_then_wavelet-haar");
    }
}
