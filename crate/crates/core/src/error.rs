use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image tensor: {0}")]
    InvalidImage(String),

    #[error("cannot read directory {path}: {source}")]
    ReadDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode image {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },

    #[error("dataset has {found} classes, at least 2 are required")]
    TooFewClasses { found: usize },

    #[error("class `{class}` has no images")]
    EmptyClass { class: String },

    #[error("invalid split fractions {0:?}: must be non-negative and sum to 1")]
    InvalidFractions([f64; 3]),

    #[error("class `{class}` with {count} items cannot place an item in the training partition")]
    ClassTooSmall { class: String, count: usize },

    #[error("invalid transform spec: {0}")]
    InvalidTransform(String),

    #[error("transform grammar error at token `{token}`: {reason}")]
    TransformSyntax { token: String, reason: String },

    #[error("grid {height}x{width} is smaller than the 2x2 minimum for a wavelet decomposition")]
    GridTooSmall { height: usize, width: usize },

    #[error("crop of size {size} does not fit {height}x{width} image{}", path_suffix(.path))]
    CropTooLarge {
        size: usize,
        height: usize,
        width: usize,
        path: Option<PathBuf>,
    },

    #[error("{} image(s) too small for the crop: {}", .0.len(), join_paths(.0))]
    UndersizedImages(Vec<PathBuf>),

    #[error("invalid model config: {0}")]
    InvalidModelConfig(String),

    #[error("invalid training config: {0}")]
    InvalidTrainConfig(String),

    #[error("shape mismatch: expected {expected}, got {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("invalid label {label} for {classes} classes")]
    InvalidLabel { label: usize, classes: usize },

    #[error("length mismatch: {predictions} predictions vs {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },

    #[error("invalid confusion matrix: {0}")]
    InvalidConfusion(String),

    #[error("invalid synth spec: {0}")]
    InvalidSynthSpec(String),

    #[error("dataset lacks foreground masks")]
    MissingMasks,

    #[error("background bias was already injected into this dataset")]
    AlreadyBiased,

    #[error("audit has no identity condition")]
    MissingIdentity,

    #[error("invalid audit setup: {0}")]
    InvalidAudit(String),

    #[error("audit condition `{condition}` failed: {source}")]
    ConditionFailed {
        condition: String,
        /// Conditions finished before the failure.
        partial: Box<crate::protocol::AuditReport>,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn path_suffix(path: &Option<PathBuf>) -> String {
    match path {
        Some(p) => format!(" ({})", p.display()),
        None => String::new(),
    }
}

fn join_paths(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
