//! Image transforms used by the audit and their textual grammar.
//!
//! Grammar: `identity`, `fourier`, `wavelet:<family>[:mosaic|:approx]` with
//! family `haar` or `db<N>`, `median:<window>`, and compositions joined by
//! `+` which apply left to right (`median:5+wavelet:haar`).

mod fourier;
mod median;
mod wavelet;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::imgio::ImageTensor;

pub use fourier::{dft2_forward, fourier_log_magnitude_image, ComplexGrid};
pub use median::{median_filter, median_filter_grid, DEFAULT_MEDIAN_WINDOW, MAX_MEDIAN_WINDOW};
pub use rustfft::num_complex::Complex64;
pub use wavelet::{
    dwt2_single_level, idwt2_single_level, wavelet_mosaic_image, SubbandSet, WaveletFamily,
    WaveletOutput, MAX_DAUBECHIES_ORDER,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TransformSpec {
    Identity,
    Fourier,
    Wavelet {
        family: WaveletFamily,
        output: WaveletOutput,
    },
    Median {
        window: usize,
    },
    /// Applied left to right. Nonempty, never nested.
    Compose(Vec<TransformSpec>),
}

impl TransformSpec {
    pub fn wavelet(family: WaveletFamily) -> Self {
        TransformSpec::Wavelet {
            family,
            output: WaveletOutput::Mosaic,
        }
    }

    pub fn median(window: usize) -> Self {
        TransformSpec::Median { window }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TransformSpec::Identity | TransformSpec::Fourier => Ok(()),
            TransformSpec::Wavelet { family, .. } => {
                if let WaveletFamily::Daubechies(order) = family {
                    if *order < 2 {
                        return Err(Error::InvalidTransform(format!(
                            "Daubechies order must be >= 2, got {order}"
                        )));
                    }
                }
                family.lowpass().map(|_| ())
            }
            TransformSpec::Median { window } => median::check_window(*window),
            TransformSpec::Compose(parts) => {
                if parts.is_empty() {
                    return Err(Error::InvalidTransform("empty composition".into()));
                }
                for part in parts {
                    if matches!(part, TransformSpec::Compose(_)) {
                        return Err(Error::InvalidTransform("nested composition".into()));
                    }
                    part.validate()?;
                }
                Ok(())
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, TransformSpec::Identity)
    }

    /// True when a Fourier stage appears anywhere in the spec.
    pub fn involves_fourier(&self) -> bool {
        match self {
            TransformSpec::Fourier => true,
            TransformSpec::Compose(parts) => parts.iter().any(|p| p.involves_fourier()),
            _ => false,
        }
    }

    /// True when a wavelet stage appears anywhere in the spec.
    pub fn involves_wavelet(&self) -> bool {
        match self {
            TransformSpec::Wavelet { .. } => true,
            TransformSpec::Compose(parts) => parts.iter().any(|p| p.involves_wavelet()),
            _ => false,
        }
    }

    /// Parses a comma-separated list of specs.
    pub fn parse_list(text: &str) -> Result<Vec<TransformSpec>> {
        text.split(',')
            .map(str::trim)
            .map(|t| {
                if t.is_empty() {
                    Err(Error::TransformSyntax {
                        token: t.into(),
                        reason: "empty list element".into(),
                    })
                } else {
                    t.parse()
                }
            })
            .collect()
    }
}

/// The four conditions of the standard audit: Fourier, Haar wavelet,
/// 5×5 median, and median followed by Haar wavelet.
pub fn default_audit_transforms() -> Vec<TransformSpec> {
    vec![
        TransformSpec::Fourier,
        TransformSpec::wavelet(WaveletFamily::Haar),
        TransformSpec::median(DEFAULT_MEDIAN_WINDOW),
        TransformSpec::Compose(vec![
            TransformSpec::median(DEFAULT_MEDIAN_WINDOW),
            TransformSpec::wavelet(WaveletFamily::Haar),
        ]),
    ]
}

pub fn apply_transform(spec: &TransformSpec, img: &ImageTensor) -> Result<ImageTensor> {
    spec.validate()?;
    apply_validated(spec, img)
}

fn apply_validated(spec: &TransformSpec, img: &ImageTensor) -> Result<ImageTensor> {
    match spec {
        TransformSpec::Identity => Ok(img.clone()),
        TransformSpec::Fourier => fourier_log_magnitude_image(img),
        TransformSpec::Wavelet { family, output } => wavelet_mosaic_image(img, *family, *output),
        TransformSpec::Median { window } => median_filter(img, *window),
        TransformSpec::Compose(parts) => {
            let mut current = img.clone();
            for part in parts {
                current = apply_validated(part, &current)?;
            }
            Ok(current)
        }
    }
}

fn syntax(token: &str, reason: impl Into<String>) -> Error {
    Error::TransformSyntax {
        token: token.to_string(),
        reason: reason.into(),
    }
}

fn parse_atom(token: &str) -> Result<TransformSpec> {
    let fields: Vec<&str> = token.split(':').collect();
    let spec = match fields.as_slice() {
        ["identity"] => TransformSpec::Identity,
        ["fourier"] => TransformSpec::Fourier,
        ["wavelet", family, rest @ ..] => {
            let family = match *family {
                "haar" => WaveletFamily::Haar,
                f if f.starts_with("db") => {
                    let order: u8 = f[2..]
                        .parse()
                        .map_err(|_| syntax(token, format!("bad Daubechies order in `{f}`")))?;
                    WaveletFamily::Daubechies(order)
                }
                other => return Err(syntax(token, format!("unknown wavelet family `{other}`"))),
            };
            let output = match rest {
                [] | ["mosaic"] => WaveletOutput::Mosaic,
                ["approx"] => WaveletOutput::ApproxOnly,
                _ => return Err(syntax(token, "expected `mosaic` or `approx`")),
            };
            TransformSpec::Wavelet { family, output }
        }
        ["wavelet"] => return Err(syntax(token, "missing wavelet family")),
        ["median", window] => {
            let window = window
                .parse()
                .map_err(|_| syntax(token, "median window must be an integer"))?;
            TransformSpec::Median { window }
        }
        _ => return Err(syntax(token, "unknown transform")),
    };
    spec.validate().map_err(|e| syntax(token, e.to_string()))?;
    Ok(spec)
}

impl FromStr for TransformSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let atoms = s
            .split('+')
            .map(|t| parse_atom(t.trim()))
            .collect::<Result<Vec<_>>>()?;
        Ok(match <[TransformSpec; 1]>::try_from(atoms) {
            Ok([single]) => single,
            Err(atoms) => TransformSpec::Compose(atoms),
        })
    }
}

impl fmt::Display for TransformSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformSpec::Identity => f.write_str("identity"),
            TransformSpec::Fourier => f.write_str("fourier"),
            TransformSpec::Wavelet { family, output } => {
                match family {
                    WaveletFamily::Haar => f.write_str("wavelet:haar")?,
                    WaveletFamily::Daubechies(n) => write!(f, "wavelet:db{n}")?,
                }
                if *output == WaveletOutput::ApproxOnly {
                    f.write_str(":approx")?;
                }
                Ok(())
            }
            TransformSpec::Median { window } => write!(f, "median:{window}"),
            TransformSpec::Compose(parts) => {
                for (i, part) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str("+")?;
                    }
                    write!(f, "{part}")?;
                }
                Ok(())
            }
        }
    }
}

impl Serialize for TransformSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TransformSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_round_trips() {
        for text in [
            "identity",
            "fourier",
            "wavelet:haar",
            "wavelet:db2",
            "wavelet:haar:approx",
            "median:5",
            "median:5+wavelet:haar",
            "median:3+fourier+wavelet:db4:approx",
        ] {
            let spec: TransformSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
        let explicit: TransformSpec = "wavelet:db3:mosaic".parse().unwrap();
        assert_eq!(explicit.to_string(), "wavelet:db3");
    }

    #[test]
    fn grammar_rejects_bad_tokens() {
        for (text, bad) in [
            ("wavelet:qux", "wavelet:qux"),
            ("median:4", "median:4"),
            ("median:x", "median:x"),
            ("wavelet:db1", "wavelet:db1"),
            ("fourier+blur", "blur"),
            ("wavelet:haar:full", "wavelet:haar:full"),
        ] {
            match text.parse::<TransformSpec>() {
                Err(Error::TransformSyntax { token, .. }) => assert_eq!(token, bad),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn parse_list_splits_on_commas() {
        let list =
            TransformSpec::parse_list("fourier,wavelet:haar,median:5,median:5+wavelet:haar")
                .unwrap();
        assert_eq!(list, default_audit_transforms());
        assert!(TransformSpec::parse_list("fourier,,median:5").is_err());
    }

    #[test]
    fn validation_rules() {
        assert!(TransformSpec::Compose(vec![]).validate().is_err());
        let nested = TransformSpec::Compose(vec![TransformSpec::Compose(vec![
            TransformSpec::Identity,
        ])]);
        assert!(nested.validate().is_err());
        assert!(TransformSpec::median(7).validate().is_ok());
    }

    #[test]
    fn identity_and_composition() {
        let img = ImageTensor::new(
            8,
            8,
            1,
            (0..64).map(|i| ((i * 37) % 64) as f64 / 63.0).collect(),
        )
        .unwrap();
        assert_eq!(apply_transform(&TransformSpec::Identity, &img).unwrap(), img);
        let composed: TransformSpec = "median:5+wavelet:haar".parse().unwrap();
        let expected = wavelet_mosaic_image(
            &median_filter(&img, 5).unwrap(),
            WaveletFamily::Haar,
            WaveletOutput::Mosaic,
        )
        .unwrap();
        assert_eq!(apply_transform(&composed, &img).unwrap(), expected);
    }

    #[test]
    fn fourier_detection() {
        assert!("median:3+fourier".parse::<TransformSpec>().unwrap().involves_fourier());
        assert!(!"median:3+wavelet:haar"
            .parse::<TransformSpec>()
            .unwrap()
            .involves_fourier());
    }
}
