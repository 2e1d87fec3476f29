//! Corner patches of supposedly blank background.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgio::{ImageTensor, Item, LabeledDataset};

pub const DEFAULT_CROP_SIZE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Corner {
    #[default]
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
}

impl FromStr for Corner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tl" => Ok(Corner::TopLeft),
            "tr" => Ok(Corner::TopRight),
            "bl" => Ok(Corner::BottomLeft),
            "br" => Ok(Corner::BottomRight),
            other => Err(Error::InvalidImage(format!(
                "unknown corner `{other}` (expected tl, tr, bl or br)"
            ))),
        }
    }
}

impl fmt::Display for Corner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Corner::TopLeft => "tl",
            Corner::TopRight => "tr",
            Corner::BottomLeft => "bl",
            Corner::BottomRight => "br",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CropSpec {
    pub corner: Corner,
    pub size: usize,
}

impl Default for CropSpec {
    fn default() -> Self {
        CropSpec {
            corner: Corner::TopLeft,
            size: DEFAULT_CROP_SIZE,
        }
    }
}

impl CropSpec {
    pub fn fits(&self, img: &ImageTensor) -> bool {
        self.size >= 1 && self.size <= img.height() && self.size <= img.width()
    }

    /// Top-left source coordinate of the patch.
    fn origin(&self, img: &ImageTensor) -> (usize, usize) {
        let bottom = img.height() - self.size;
        let right = img.width() - self.size;
        match self.corner {
            Corner::TopLeft => (0, 0),
            Corner::TopRight => (0, right),
            Corner::BottomLeft => (bottom, 0),
            Corner::BottomRight => (bottom, right),
        }
    }
}

pub fn crop_corner(img: &ImageTensor, spec: CropSpec) -> Result<ImageTensor> {
    if !spec.fits(img) {
        return Err(Error::CropTooLarge {
            size: spec.size,
            height: img.height(),
            width: img.width(),
            path: None,
        });
    }
    let (y0, x0) = spec.origin(img);
    let c = img.channels();
    let row_len = spec.size * c;
    let mut data = Vec::with_capacity(spec.size * row_len);
    for y in y0..y0 + spec.size {
        let start = (y * img.width() + x0) * c;
        data.extend_from_slice(&img.data()[start..start + row_len]);
    }
    ImageTensor::new(spec.size, spec.size, c, data)
}

/// Crops every item; all undersized images are reported together.
pub fn crop_dataset(ds: &LabeledDataset, spec: CropSpec) -> Result<LabeledDataset> {
    let undersized: Vec<PathBuf> = ds
        .items()
        .iter()
        .filter(|item| !spec.fits(&item.image))
        .map(|item| PathBuf::from(&item.id))
        .collect();
    if !undersized.is_empty() {
        return Err(Error::UndersizedImages(undersized));
    }
    let items = ds
        .items()
        .iter()
        .map(|item| {
            Ok(Item {
                id: item.id.clone(),
                image: crop_corner(&item.image, spec)?,
                label: item.label,
                mask: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::new(ds.class_names().to_vec(), items)
}
