//! Image tensors, class-per-directory datasets and deterministic splits.
//!
//! A dataset on disk is laid out as `<root>/<class_name>/<image>.png`. Class
//! indices follow the lexicographic order of the class directory names.
//! Directories whose names start with `_` or `.` are not classes; `_masks/`
//! holds optional binary foreground masks mirroring the class tree.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, RgbImage};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Directory (relative to a dataset root) holding foreground masks.
pub const MASK_DIR: &str = "_masks";
/// Metadata file written next to synthetic corpora.
pub const SYNTH_META_FILE: &str = "synth.json";

/// Row-major real grid, the per-channel working type of the transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Grid {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), height * width, "grid data length");
        Grid {
            height,
            width,
            data,
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Grid::new(height, width, vec![0.0; height * width])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Grid::new(height, width, data)
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Rescales to [0, 1]; a constant grid maps to all zeros.
    pub fn min_max_normalized(&self) -> Grid {
        let (lo, hi) = self
            .data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let span = hi - lo;
        let data = if span > 0.0 && span.is_finite() {
            self.data.iter().map(|&v| (v - lo) / span).collect()
        } else {
            vec![0.0; self.data.len()]
        };
        Grid::new(self.height, self.width, data)
    }
}

/// H×W×C image, channel-last, nominally in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {height}x{width}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::InvalidImage(format!(
                "data length {} != {height}x{width}x{channels}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidImage("non-finite sample".into()));
        }
        Ok(ImageTensor {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        ImageTensor::new(
            height,
            width,
            channels,
            vec![value; height * width * channels],
        )
    }

    pub fn from_channels(channels: &[Grid]) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::InvalidImage("no channels".into()))?;
        let (h, w) = (first.height, first.width);
        if channels.iter().any(|g| g.height != h || g.width != w) {
            return Err(Error::InvalidImage("channel dimensions differ".into()));
        }
        let c = channels.len();
        let mut data = vec![0.0; h * w * c];
        for (ci, g) in channels.iter().enumerate() {
            for (i, &v) in g.data.iter().enumerate() {
                data[i * c + ci] = v;
            }
        }
        ImageTensor::new(h, w, c, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn channel(&self, c: usize) -> Grid {
        assert!(c < self.channels, "channel index out of range");
        let data = self
            .data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect();
        Grid::new(self.height, self.width, data)
    }

    pub fn channel_grids(&self) -> Vec<Grid> {
        (0..self.channels).map(|c| self.channel(c)).collect()
    }

    /// Applies `f` to every channel independently and reassembles the result.
    pub fn map_channels(&self, f: impl FnMut(&Grid) -> Result<Grid>) -> Result<ImageTensor> {
        let grids = self
            .channel_grids()
            .iter()
            .map(f)
            .collect::<Result<Vec<_>>>()?;
        ImageTensor::from_channels(&grids)
    }
}

/// Binary foreground mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub height: usize,
    pub width: usize,
    pub data: Vec<bool>,
}

impl Mask {
    #[inline]
    pub fn get(&self, y: usize, x: usize) -> bool {
        self.data[y * self.width + x]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    /// Path relative to the dataset root, `/`-separated (`class/file.png`).
    pub id: String,
    pub image: ImageTensor,
    pub label: usize,
    pub mask: Option<Mask>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    class_names: Vec<String>,
    items: Vec<Item>,
    bias_injected: bool,
}

impl LabeledDataset {
    pub fn new(class_names: Vec<String>, items: Vec<Item>) -> Result<Self> {
        if class_names.len() < 2 {
            return Err(Error::TooFewClasses {
                found: class_names.len(),
            });
        }
        let mut counts = vec![0usize; class_names.len()];
        for item in &items {
            if item.label >= class_names.len() {
                return Err(Error::InvalidLabel {
                    label: item.label,
                    classes: class_names.len(),
                });
            }
            counts[item.label] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyClass {
                class: class_names[empty].clone(),
            });
        }
        Ok(LabeledDataset {
            class_names,
            items,
            bias_injected: false,
        })
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.items.iter().map(|i| i.label).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for item in &self.items {
            counts[item.label] += 1;
        }
        counts
    }

    pub fn has_masks(&self) -> bool {
        !self.items.is_empty() && self.items.iter().all(|i| i.mask.is_some())
    }

    pub fn bias_injected(&self) -> bool {
        self.bias_injected
    }

    pub(crate) fn set_bias_injected(&mut self, value: bool) {
        self.bias_injected = value;
    }

    /// Builds a dataset with the same ids, labels and classes but new images.
    /// Masks are dropped when the image geometry changes.
    pub fn map_images(&self, mut f: impl FnMut(&Item) -> Result<ImageTensor>) -> Result<Self> {
        let items = self
            .items
            .iter()
            .map(|item| {
                let image = f(item)?;
                let mask = item.mask.as_ref().filter(|m| {
                    m.height == image.height() && m.width == image.width()
                });
                Ok(Item {
                    id: item.id.clone(),
                    label: item.label,
                    mask: mask.cloned(),
                    image,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LabeledDataset {
            class_names: self.class_names.clone(),
            items,
            bias_injected: self.bias_injected,
        })
    }
}

fn is_png(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = fs::read_dir(dir).map_err(|source| Error::ReadDir {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::new();
    for entry in rd {
        let entry = entry.map_err(|source| Error::ReadDir {
            path: dir.to_path_buf(),
            source,
        })?;
        paths.push(entry.path());
    }
    paths.sort();
    Ok(paths)
}

fn decode_image(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Decodes a PNG into [0, 1] samples. Grayscale stays single-channel,
/// everything else becomes RGB (alpha is dropped).
pub fn load_image(path: &Path) -> Result<ImageTensor> {
    let img = decode_image(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let gray = matches!(
        img.color(),
        image::ColorType::L8 | image::ColorType::L16 | image::ColorType::La8 | image::ColorType::La16
    );
    let (channels, bytes) = if gray {
        (1, img.to_luma8().into_raw())
    } else {
        (3, img.to_rgb8().into_raw())
    };
    let data = bytes.into_iter().map(|b| f64::from(b) / 255.0).collect();
    ImageTensor::new(h, w, channels, data).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes an 8-bit PNG (grayscale or RGB); samples are clamped to [0, 1].
pub fn save_image(img: &ImageTensor, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    let bytes: Vec<u8> = img.data().iter().map(|&v| quantize(v)).collect();
    let (w, h) = (img.width() as u32, img.height() as u32);
    let res = if img.channels() == 1 {
        GrayImage::from_raw(w, h, bytes).map(|b| b.save(path))
    } else {
        RgbImage::from_raw(w, h, bytes).map(|b| b.save(path))
    };
    match res {
        Some(Ok(())) => Ok(()),
        Some(Err(e)) => Err(Error::Write {
            path: path.to_path_buf(),
            message: e.to_string(),
        }),
        None => Err(Error::Write {
            path: path.to_path_buf(),
            message: "buffer size mismatch".into(),
        }),
    }
}

fn load_mask(path: &Path) -> Result<Mask> {
    let img = decode_image(path)?.to_luma8();
    Ok(Mask {
        height: img.height() as usize,
        width: img.width() as usize,
        data: img.into_raw().into_iter().map(|b| b > 127).collect(),
    })
}

fn save_mask(mask: &Mask, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    let bytes = mask.data.iter().map(|&b| if b { 255 } else { 0 }).collect();
    GrayImage::from_raw(mask.width as u32, mask.height as u32, bytes)
        .ok_or_else(|| Error::Write {
            path: path.to_path_buf(),
            message: "mask size mismatch".into(),
        })?
        .save(path)
        .map_err(|e| Error::Write {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

/// Loads `<root>/<class>/<image>.png`, with masks from `<root>/_masks/` when
/// present. Non-PNG files are ignored.
pub fn load_dataset(root: &Path) -> Result<LabeledDataset> {
    let class_dirs: Vec<PathBuf> = sorted_entries(root)?
        .into_iter()
        .filter(|p| p.is_dir())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| !n.starts_with('_') && !n.starts_with('.'))
        })
        .collect();
    if class_dirs.len() < 2 {
        return Err(Error::TooFewClasses {
            found: class_dirs.len(),
        });
    }

    let mut class_names = Vec::with_capacity(class_dirs.len());
    let mut items = Vec::new();
    for (label, dir) in class_dirs.iter().enumerate() {
        let class = dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::InvalidImage(format!("non-UTF-8 class dir {}", dir.display())))?
            .to_string();
        let mut found = 0;
        for path in sorted_entries(dir)? {
            if !path.is_file() {
                continue;
            }
            if !is_png(&path) {
                log::warn!("skipping non-PNG file {}", path.display());
                continue;
            }
            let file = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            let id = format!("{class}/{file}");
            let image = load_image(&path)?;
            let mask_path = root.join(MASK_DIR).join(&class).join(file);
            let mask = if mask_path.is_file() {
                Some(load_mask(&mask_path)?)
            } else {
                None
            };
            items.push(Item {
                id,
                image,
                label,
                mask,
            });
            found += 1;
        }
        if found == 0 {
            return Err(Error::EmptyClass { class });
        }
        class_names.push(class);
    }

    let mut ds = LabeledDataset::new(class_names, items)?;
    let meta_path = root.join(SYNTH_META_FILE);
    if meta_path.is_file() {
        let text = fs::read_to_string(&meta_path)
            .map_err(|e| Error::io(meta_path.display().to_string(), e))?;
        let meta: serde_json::Value = serde_json::from_str(&text)?;
        ds.set_bias_injected(meta.get("bias").is_some_and(|b| !b.is_null()));
    }
    Ok(ds)
}

/// Writes the dataset as a PNG tree (plus masks, when every item has one).
pub fn save_dataset(ds: &LabeledDataset, root: &Path) -> Result<()> {
    for class in ds.class_names() {
        let dir = root.join(class);
        fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    }
    for item in ds.items() {
        save_image(&item.image, &root.join(&item.id))?;
        if let Some(mask) = &item.mask {
            save_mask(mask, &root.join(MASK_DIR).join(&item.id))?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Partition {
    Train,
    Val,
    Test,
}

/// Train/validation/test fractions.
pub type Fractions = [f64; 3];

pub const DEFAULT_FRACTIONS: Fractions = [0.70, 0.15, 0.15];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub fractions: Fractions,
    pub assignment: BTreeMap<String, Partition>,
}

impl SplitManifest {
    /// Item indices of `ds` in `partition`, in dataset order.
    pub fn indices(&self, ds: &LabeledDataset, partition: Partition) -> Vec<usize> {
        ds.items()
            .iter()
            .enumerate()
            .filter(|(_, item)| self.assignment.get(&item.id) == Some(&partition))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn count(&self, partition: Partition) -> usize {
        self.assignment.values().filter(|&&p| p == partition).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn validate_fractions(fractions: Fractions) -> Result<()> {
    let ok = fractions.iter().all(|f| f.is_finite() && *f >= 0.0)
        && (fractions.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidFractions(fractions))
    }
}

/// Stratified split: each class is shuffled from a single seeded stream (in
/// class order), validation and test sizes are floored, and the remainder
/// goes to training.
pub fn split_dataset(ds: &LabeledDataset, fractions: Fractions, seed: u64) -> Result<SplitManifest> {
    validate_fractions(fractions)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = BTreeMap::new();
    for (label, class) in ds.class_names().iter().enumerate() {
        let mut members: Vec<usize> = ds
            .items()
            .iter()
            .enumerate()
            .filter(|(_, item)| item.label == label)
            .map(|(i, _)| i)
            .collect();
        let n = members.len();
        // The epsilon guards products like 20 * 0.15 = 2.9999999999999996.
        let n_val = (n as f64 * fractions[1] + 1e-9).floor() as usize;
        let n_test = (n as f64 * fractions[2] + 1e-9).floor() as usize;
        if n_val + n_test >= n {
            return Err(Error::ClassTooSmall {
                class: class.clone(),
                count: n,
            });
        }
        members.shuffle(&mut rng);
        for (rank, &idx) in members.iter().enumerate() {
            let part = if rank < n_val {
                Partition::Val
            } else if rank < n_val + n_test {
                Partition::Test
            } else {
                Partition::Train
            };
            assignment.insert(ds.items()[idx].id.clone(), part);
        }
    }
    Ok(SplitManifest {
        seed,
        fractions,
        assignment,
    })
}

/// Corner-aligned bilinear resampling.
pub fn resize_bilinear(img: &ImageTensor, out_h: usize, out_w: usize) -> Result<ImageTensor> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidImage(format!(
            "resize target must be positive, got {out_h}x{out_w}"
        )));
    }
    let (h, w, c) = (img.height(), img.width(), img.channels());
    if (h, w) == (out_h, out_w) {
        return Ok(img.clone());
    }
    let coord = |i: usize, n_in: usize, n_out: usize| -> (usize, usize, f64) {
        if n_out == 1 || n_in == 1 {
            return (0, 0, 0.0);
        }
        let pos = i as f64 * (n_in - 1) as f64 / (n_out - 1) as f64;
        let lo = (pos.floor() as usize).min(n_in - 1);
        let hi = (lo + 1).min(n_in - 1);
        (lo, hi, pos - lo as f64)
    };
    let mut data = Vec::with_capacity(out_h * out_w * c);
    for oy in 0..out_h {
        let (y0, y1, fy) = coord(oy, h, out_h);
        for ox in 0..out_w {
            let (x0, x1, fx) = coord(ox, w, out_w);
            for ch in 0..c {
                let top = img.get(y0, x0, ch) * (1.0 - fx) + img.get(y0, x1, ch) * fx;
                let bottom = img.get(y1, x0, ch) * (1.0 - fx) + img.get(y1, x1, ch) * fx;
                data.push(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    ImageTensor::new(out_h, out_w, c, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(h: usize, w: usize, data: Vec<f64>) -> ImageTensor {
        ImageTensor::new(h, w, 1, data).unwrap()
    }

    fn toy_dataset(per_class: &[usize]) -> LabeledDataset {
        let names = (0..per_class.len()).map(|c| format!("c{c}")).collect();
        let mut items = Vec::new();
        for (label, &n) in per_class.iter().enumerate() {
            for i in 0..n {
                items.push(Item {
                    id: format!("c{label}/{i:04}.png"),
                    image: ImageTensor::filled(2, 2, 1, 0.0).unwrap(),
                    label,
                    mask: None,
                });
            }
        }
        LabeledDataset::new(names, items).unwrap()
    }

    #[test]
    fn image_tensor_rejects_bad_input() {
        assert!(ImageTensor::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(ImageTensor::new(2, 2, 2, vec![0.0; 8]).is_err());
        assert!(ImageTensor::new(1, 1, 1, vec![f64::NAN]).is_err());
        assert!(ImageTensor::new(0, 1, 1, vec![]).is_err());
    }

    #[test]
    fn channel_roundtrip() {
        let img = ImageTensor::new(1, 2, 3, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        let grids = img.channel_grids();
        assert_eq!(grids[1].data, vec![0.2, 0.5]);
        assert_eq!(ImageTensor::from_channels(&grids).unwrap(), img);
    }

    #[test]
    fn split_is_stratified_70_15_15() {
        let ds = toy_dataset(&[100, 100]);
        let m = split_dataset(&ds, DEFAULT_FRACTIONS, 7).unwrap();
        for label in 0..2 {
            let count = |p| {
                m.indices(&ds, p)
                    .into_iter()
                    .filter(|&i| ds.items()[i].label == label)
                    .count()
            };
            assert_eq!(count(Partition::Train), 70);
            assert_eq!(count(Partition::Val), 15);
            assert_eq!(count(Partition::Test), 15);
        }
    }

    #[test]
    fn degenerate_split_puts_everything_in_train() {
        let ds = toy_dataset(&[3, 5]);
        let m = split_dataset(&ds, [1.0, 0.0, 0.0], 1).unwrap();
        assert_eq!(m.count(Partition::Train), 8);
    }

    #[test]
    fn split_is_deterministic() {
        let ds = toy_dataset(&[10, 13, 7]);
        let a = split_dataset(&ds, DEFAULT_FRACTIONS, 99).unwrap();
        let b = split_dataset(&ds, DEFAULT_FRACTIONS, 99).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = split_dataset(&ds, DEFAULT_FRACTIONS, 100).unwrap();
        assert_ne!(a.assignment, c.assignment);
    }

    #[test]
    fn split_rejects_bad_fractions_and_tiny_classes() {
        let ds = toy_dataset(&[2, 2]);
        assert!(matches!(
            split_dataset(&ds, [0.5, 0.2, 0.2], 0),
            Err(Error::InvalidFractions(_))
        ));
        assert!(matches!(
            split_dataset(&ds, [0.0, 0.5, 0.5], 0),
            Err(Error::ClassTooSmall { .. })
        ));
    }

    #[test]
    fn resize_identity_and_constant() {
        let img = gray(2, 3, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        assert_eq!(resize_bilinear(&img, 2, 3).unwrap(), img);
        let c = ImageTensor::filled(3, 5, 3, 0.25).unwrap();
        let r = resize_bilinear(&c, 7, 2).unwrap();
        assert!(r.data().iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn resize_hand_weights() {
        let img = gray(2, 2, vec![0.0, 1.0, 0.0, 1.0]);
        let r = resize_bilinear(&img, 2, 3).unwrap();
        assert_eq!(r.data(), &[0.0, 0.5, 1.0, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn dataset_requires_two_nonempty_classes() {
        assert!(matches!(
            LabeledDataset::new(vec!["a".into()], vec![]),
            Err(Error::TooFewClasses { found: 1 })
        ));
        assert!(matches!(
            LabeledDataset::new(vec!["a".into(), "b".into()], vec![]),
            Err(Error::EmptyClass { .. })
        ));
    }

    #[test]
    fn min_max_normalization() {
        let g = Grid::new(1, 3, vec![2.0, 4.0, 3.0]);
        assert_eq!(g.min_max_normalized().data, vec![0.0, 1.0, 0.5]);
        let flat = Grid::new(1, 2, vec![5.0, 5.0]);
        assert_eq!(flat.min_max_normalized().data, vec![0.0, 0.0]);
    }
}
