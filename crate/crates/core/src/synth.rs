//! Synthetic shape corpora with known ground truth, and class-correlated
//! background bias injection.
//!
//! Every image is one class-specific shape drawn over iid Gaussian noise.
//! Shapes stay clear of the four `CORNER_CLEARANCE`-sized corner squares, so
//! corner crops contain background only. Foreground masks travel with each
//! item, which makes "background pixels" well defined for bias injection.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgio::{self, ImageTensor, Item, LabeledDataset, Mask, SYNTH_META_FILE};

/// Side of the corner squares kept free of foreground.
pub const CORNER_CLEARANCE: usize = 20;
pub const MIN_IMAGE_SIZE: usize = 32;
pub const MAX_BIAS_AMPLITUDE: f64 = 0.1;
pub const DEFAULT_BIAS_AMPLITUDE: f64 = 0.04;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Circle,
    Square,
    Triangle,
    Diamond,
    Cross,
    Hexagon,
    Saltire,
    Ellipse,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 8] = [
        ShapeKind::Circle,
        ShapeKind::Square,
        ShapeKind::Triangle,
        ShapeKind::Diamond,
        ShapeKind::Cross,
        ShapeKind::Hexagon,
        ShapeKind::Saltire,
        ShapeKind::Ellipse,
    ];

    /// Signed distance (negative inside) of point `(px, py)`, in the shape's
    /// own frame, to a shape of nominal radius `r`.
    fn sdf(self, px: f64, py: f64, r: f64) -> f64 {
        let polygon = |sides: usize, phase: f64, apothem: f64| {
            (0..sides)
                .map(|k| {
                    let a = phase + 2.0 * PI * k as f64 / sides as f64;
                    px * a.cos() + py * a.sin()
                })
                .fold(f64::NEG_INFINITY, f64::max)
                - apothem
        };
        let bars = |x: f64, y: f64| {
            let half = 0.18 * r;
            let seg = |along: f64, across: f64| {
                let d = (along.abs() - r).max(0.0);
                (d * d + across * across).sqrt()
            };
            seg(x, y).min(seg(y, x)) - half
        };
        match self {
            ShapeKind::Circle => (px * px + py * py).sqrt() - r,
            ShapeKind::Square => polygon(4, 0.0, 0.8 * r),
            ShapeKind::Triangle => polygon(3, PI / 2.0, 0.5 * r),
            ShapeKind::Diamond => polygon(4, PI / 4.0, 0.75 * r),
            ShapeKind::Cross => bars(px, py),
            ShapeKind::Hexagon => polygon(6, 0.0, 0.87 * r),
            ShapeKind::Saltire => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                bars(s * (px + py), s * (py - px))
            }
            ShapeKind::Ellipse => {
                let (a, b) = (r, 0.55 * r);
                ((px / a).powi(2) + (py / b).powi(2)).sqrt().mul_add(b, -b)
            }
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        f.write_str(&name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeStyle {
    Outline,
    Filled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InkSpec {
    pub style: ShapeStyle,
    /// Added to the background where the shape fully covers a pixel.
    pub contrast: f64,
    /// Outline width in pixels.
    pub stroke: f64,
    pub min_radius: f64,
    pub max_radius: f64,
    /// Uniform rotation jitter, in degrees either way.
    pub max_rotation_deg: f64,
    /// Uniform jitter of the shape centre around the image centre, in pixels
    /// along each axis.
    pub max_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub num_classes: usize,
    pub samples_per_class: usize,
    pub image_size: usize,
    /// One shape per class; the first `num_classes` of [`ShapeKind::ALL`] when empty.
    #[serde(default)]
    pub shapes: Vec<ShapeKind>,
    pub background: NoiseSpec,
    pub ink: InkSpec,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            num_classes: 5,
            samples_per_class: 40,
            image_size: 64,
            shapes: Vec::new(),
            background: NoiseSpec { mean: 0.35, std: 0.1 },
            ink: InkSpec {
                style: ShapeStyle::Outline,
                contrast: 0.5,
                stroke: 1.0,
                min_radius: 5.0,
                max_radius: 8.0,
                max_rotation_deg: 10.0,
                max_shift: 4.0,
            },
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSynthSpec(m));
        if self.num_classes < 2 {
            return bad(format!("num_classes must be >= 2, got {}", self.num_classes));
        }
        let available = if self.shapes.is_empty() {
            ShapeKind::ALL.len()
        } else {
            self.shapes.len()
        };
        if self.num_classes > available {
            return bad(format!(
                "{} classes but only {available} shape families",
                self.num_classes
            ));
        }
        if self.samples_per_class == 0 {
            return bad("samples_per_class must be >= 1".into());
        }
        if self.image_size < MIN_IMAGE_SIZE {
            return bad(format!("image_size must be >= {MIN_IMAGE_SIZE}"));
        }
        if !(self.background.std >= 0.0 && self.background.mean.is_finite()) {
            return bad("background noise parameters are invalid".into());
        }
        let ink = &self.ink;
        if !(ink.min_radius > 0.0 && ink.max_radius >= ink.min_radius && ink.stroke > 0.0) {
            return bad("ink radii and stroke must be positive and ordered".into());
        }
        if !(ink.max_shift >= 0.0 && ink.max_rotation_deg >= 0.0) {
            return bad("ink jitter bounds must be non-negative".into());
        }
        let span = 2.0 * (ink.max_radius + ink.stroke + 1.0) + 1.0;
        if span > (self.image_size - 2 * CORNER_CLEARANCE) as f64 {
            return bad("shapes do not fit between the corner squares".into());
        }
        Ok(())
    }

    pub fn shape_for(&self, class: usize) -> ShapeKind {
        self.shapes.get(class).copied().unwrap_or(ShapeKind::ALL[class])
    }

    pub fn class_names(&self) -> Vec<String> {
        (0..self.num_classes)
            .map(|c| format!("c{c}_{}", self.shape_for(c)))
            .collect()
    }
}

/// Picks a centre within `max_shift` of the image centre whose bounding
/// square of half-side `reach` stays inside the image and out of every
/// corner square. The exact centre always qualifies once the spec validates.
fn place(rng: &mut ChaCha8Rng, size: usize, reach: f64, max_shift: f64) -> (f64, f64) {
    let mid = (size as f64 - 1.0) / 2.0;
    let inside = |c: f64| c - reach >= -0.5 && c + reach <= size as f64 - 0.5;
    let band = |c: f64| {
        c - reach >= CORNER_CLEARANCE as f64 - 0.5 && c + reach <= (size - CORNER_CLEARANCE) as f64 - 0.5
    };
    for _ in 0..1000 {
        let cy = mid + rng.random_range(-max_shift..=max_shift);
        let cx = mid + rng.random_range(-max_shift..=max_shift);
        if inside(cy) && inside(cx) && (band(cy) || band(cx)) {
            return (cy, cx);
        }
    }
    (mid, mid)
}

fn render_item(spec: &SynthSpec, class: usize, index: u64) -> Result<(ImageTensor, Mask)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index);
    let n = spec.image_size;
    let ink = &spec.ink;
    let noise = Normal::new(spec.background.mean, spec.background.std)
        .map_err(|e| Error::InvalidSynthSpec(e.to_string()))?;
    let radius = rng.random_range(ink.min_radius..=ink.max_radius);
    let theta = rng.random_range(-ink.max_rotation_deg..=ink.max_rotation_deg).to_radians();
    let (cy, cx) = place(&mut rng, n, radius + ink.stroke + 1.0, ink.max_shift);
    let (sin, cos) = theta.sin_cos();
    let shape = spec.shape_for(class);

    let mut data = Vec::with_capacity(n * n);
    let mut mask = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let (px, py) = (cos * dx + sin * dy, -sin * dx + cos * dy);
            let d = shape.sdf(px, py, radius);
            let coverage = match ink.style {
                ShapeStyle::Outline => (ink.stroke / 2.0 + 0.5 - d.abs()).clamp(0.0, 1.0),
                ShapeStyle::Filled => (0.5 - d).clamp(0.0, 1.0),
            };
            let bg: f64 = noise.sample(&mut rng);
            data.push((bg + ink.contrast * coverage).clamp(0.0, 1.0));
            mask.push(coverage > 0.0);
        }
    }
    Ok((
        ImageTensor::new(n, n, 1, data)?,
        Mask {
            height: n,
            width: n,
            data: mask,
        },
    ))
}

/// Deterministic in `spec.seed`; item `i` draws from its own stream.
pub fn generate_shape_dataset(spec: &SynthSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let names = spec.class_names();
    let mut items = Vec::with_capacity(spec.num_classes * spec.samples_per_class);
    for (class, name) in names.iter().enumerate() {
        for i in 0..spec.samples_per_class {
            let index = (class * spec.samples_per_class + i) as u64;
            let (image, mask) = render_item(spec, class, index)?;
            items.push(Item {
                id: format!("{name}/{name}_{i:04}.png"),
                image,
                label: class,
                mask: Some(mask),
            });
        }
    }
    LabeledDataset::new(names, items)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasPattern {
    /// Class-seeded ±1 field over every pixel.
    FixedHighFrequency,
    /// Constant class-specific offset in the four corner squares.
    CornerOffset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasSpec {
    pub amplitude: f64,
    pub pattern: BiasPattern,
    pub seed: u64,
}

impl Default for BiasSpec {
    fn default() -> Self {
        BiasSpec {
            amplitude: DEFAULT_BIAS_AMPLITUDE,
            pattern: BiasPattern::FixedHighFrequency,
            seed: 0,
        }
    }
}

impl BiasSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=MAX_BIAS_AMPLITUDE).contains(&self.amplitude) {
            return Err(Error::InvalidSynthSpec(format!(
                "bias amplitude must lie in [0, {MAX_BIAS_AMPLITUDE}], got {}",
                self.amplitude
            )));
        }
        Ok(())
    }

    /// Per-pixel perturbation for `class`, with max |value| = amplitude.
    pub fn pattern_field(&self, class: usize, num_classes: usize, h: usize, w: usize) -> Vec<f64> {
        match self.pattern {
            BiasPattern::FixedHighFrequency => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(class as u64);
                (0..h * w)
                    .map(|_| if rng.random::<bool>() { self.amplitude } else { -self.amplitude })
                    .collect()
            }
            BiasPattern::CornerOffset => {
                let level = if num_classes > 1 {
                    -1.0 + 2.0 * class as f64 / (num_classes - 1) as f64
                } else {
                    0.0
                };
                let side = CORNER_CLEARANCE.min(h / 2).min(w / 2);
                let in_corner = |y: usize, x: usize| {
                    (y < side || y >= h - side) && (x < side || x >= w - side)
                };
                (0..h * w)
                    .map(|i| {
                        if in_corner(i / w, i % w) {
                            self.amplitude * level
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Adds each class's pattern to background pixels only, clipping to [0, 1].
/// Foreground pixels are left bit-identical. A dataset can be biased once.
pub fn inject_class_correlated_background(ds: &LabeledDataset, bias: &BiasSpec) -> Result<LabeledDataset> {
    bias.validate()?;
    if ds.bias_injected() {
        return Err(Error::AlreadyBiased);
    }
    if !ds.has_masks() {
        return Err(Error::MissingMasks);
    }
    let k = ds.num_classes();
    let mut out = ds.map_images(|item| {
        let mask = item.mask.as_ref().ok_or(Error::MissingMasks)?;
        let img = &item.image;
        let (h, w, c) = (img.height(), img.width(), img.channels());
        if (mask.height, mask.width) != (h, w) {
            return Err(Error::MissingMasks);
        }
        let field = bias.pattern_field(item.label, k, h, w);
        let mut data = img.data().to_vec();
        for (p, &delta) in field.iter().enumerate() {
            if mask.data[p] || delta == 0.0 {
                continue;
            }
            for v in &mut data[p * c..(p + 1) * c] {
                *v = (*v + delta).clamp(0.0, 1.0);
            }
        }
        ImageTensor::new(h, w, c, data)
    })?;
    out.set_bias_injected(true);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthMeta {
    pub spec: SynthSpec,
    pub bias: Option<BiasSpec>,
}

/// Writes the PNG tree, `_masks/` and `synth.json`.
pub fn save_synth_dataset(ds: &LabeledDataset, meta: &SynthMeta, root: &Path) -> Result<()> {
    imgio::save_dataset(ds, root)?;
    let path = root.join(SYNTH_META_FILE);
    fs::write(&path, serde_json::to_string_pretty(meta)?)
        .map_err(|e| Error::io(path.display().to_string(), e))
}
