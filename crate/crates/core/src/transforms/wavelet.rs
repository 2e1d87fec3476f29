//! Single-level separable 2D DWT with periodic extension.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgio::{Grid, ImageTensor};

/// Highest Daubechies order with built-in filter taps.
pub const MAX_DAUBECHIES_ORDER: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WaveletFamily {
    Haar,
    /// Daubechies with `order` vanishing moments (`2 * order` taps).
    Daubechies(u8),
}

impl WaveletFamily {
    /// Orthonormal low-pass analysis filter.
    pub fn lowpass(&self) -> Result<Vec<f64>> {
        match *self {
            WaveletFamily::Haar | WaveletFamily::Daubechies(1) => {
                Ok(vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2])
            }
            WaveletFamily::Daubechies(2) => {
                let s3 = 3f64.sqrt();
                let d = 4.0 * 2f64.sqrt();
                Ok(vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d])
            }
            WaveletFamily::Daubechies(3) => Ok(vec![
                0.332_670_552_950_082_63,
                0.806_891_509_311_092_5,
                0.459_877_502_118_491_5,
                -0.135_011_020_010_254_58,
                -0.085_441_273_882_026_66,
                0.035_226_291_885_709_53,
            ]),
            WaveletFamily::Daubechies(4) => Ok(vec![
                0.230_377_813_308_896_5,
                0.714_846_570_552_915_4,
                0.630_880_767_929_858_9,
                -0.027_983_769_416_859_85,
                -0.187_034_811_719_093_08,
                0.030_841_381_835_560_76,
                0.032_883_011_666_885_2,
                -0.010_597_401_785_069_03,
            ]),
            WaveletFamily::Daubechies(order) => Err(Error::InvalidTransform(format!(
                "Daubechies order {order} unsupported (2..={MAX_DAUBECHIES_ORDER})"
            ))),
        }
    }

    /// Quadrature-mirror high-pass: `g[k] = (-1)^k h[L-1-k]`.
    pub fn highpass(&self) -> Result<Vec<f64>> {
        let h = self.lowpass()?;
        let n = h.len();
        Ok((0..n)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * h[n - 1 - k]
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WaveletOutput {
    /// `[ll | lh; hl | hh]` tiled at the input resolution.
    Mosaic,
    /// `ll` alone, nearest-neighbour upsampled to the input resolution.
    ApproxOnly,
}

/// The four subbands of a single-level decomposition. `lh` is high-pass
/// along rows and low-pass along columns; `hl` is the converse.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub ll: Grid,
    pub lh: Grid,
    pub hl: Grid,
    pub hh: Grid,
    /// Whether an odd height/width was edge-padded by one row/column.
    pub padded: (bool, bool),
}

fn analyze(signal: &[f64], lo: &[f64], hi: &[f64], approx: &mut [f64], detail: &mut [f64]) {
    let n = signal.len();
    for (k, (a, d)) in approx.iter_mut().zip(detail.iter_mut()).enumerate() {
        let (mut sa, mut sd) = (0.0, 0.0);
        for (t, (&l, &h)) in lo.iter().zip(hi).enumerate() {
            let x = signal[(2 * k + t) % n];
            sa += l * x;
            sd += h * x;
        }
        *a = sa;
        *d = sd;
    }
}

fn synthesize(approx: &[f64], detail: &[f64], lo: &[f64], hi: &[f64], out: &mut [f64]) {
    let n = out.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    for (k, (&a, &d)) in approx.iter().zip(detail).enumerate() {
        for (t, (&l, &h)) in lo.iter().zip(hi).enumerate() {
            out[(2 * k + t) % n] += l * a + h * d;
        }
    }
}

fn pad_to_even(grid: &Grid) -> (Grid, (bool, bool)) {
    let pad = (grid.height % 2 == 1, grid.width % 2 == 1);
    if pad == (false, false) {
        return (grid.clone(), pad);
    }
    let h = grid.height + usize::from(pad.0);
    let w = grid.width + usize::from(pad.1);
    let padded = Grid::from_fn(h, w, |y, x| {
        grid.get(y.min(grid.height - 1), x.min(grid.width - 1))
    });
    (padded, pad)
}

/// Splits along the row axis (each row into low/high halves).
fn split_rows(grid: &Grid, lo: &[f64], hi: &[f64]) -> (Grid, Grid) {
    let half = grid.width / 2;
    let mut low = Grid::zeros(grid.height, half);
    let mut high = Grid::zeros(grid.height, half);
    for y in 0..grid.height {
        let row = &grid.data[y * grid.width..(y + 1) * grid.width];
        analyze(
            row,
            lo,
            hi,
            &mut low.data[y * half..(y + 1) * half],
            &mut high.data[y * half..(y + 1) * half],
        );
    }
    (low, high)
}

/// Splits along the column axis.
fn split_cols(grid: &Grid, lo: &[f64], hi: &[f64]) -> (Grid, Grid) {
    let half = grid.height / 2;
    let mut low = Grid::zeros(half, grid.width);
    let mut high = Grid::zeros(half, grid.width);
    let mut column = vec![0.0; grid.height];
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for x in 0..grid.width {
        for (y, c) in column.iter_mut().enumerate() {
            *c = grid.get(y, x);
        }
        analyze(&column, lo, hi, &mut a, &mut d);
        for y in 0..half {
            low.set(y, x, a[y]);
            high.set(y, x, d[y]);
        }
    }
    (low, high)
}

fn merge_cols(low: &Grid, high: &Grid, lo: &[f64], hi: &[f64]) -> Grid {
    let h = low.height * 2;
    let mut out = Grid::zeros(h, low.width);
    let mut a = vec![0.0; low.height];
    let mut d = vec![0.0; low.height];
    let mut column = vec![0.0; h];
    for x in 0..low.width {
        for y in 0..low.height {
            a[y] = low.get(y, x);
            d[y] = high.get(y, x);
        }
        synthesize(&a, &d, lo, hi, &mut column);
        for (y, &v) in column.iter().enumerate() {
            out.set(y, x, v);
        }
    }
    out
}

fn merge_rows(low: &Grid, high: &Grid, lo: &[f64], hi: &[f64]) -> Grid {
    let w = low.width * 2;
    let mut out = Grid::zeros(low.height, w);
    for y in 0..low.height {
        synthesize(
            &low.data[y * low.width..(y + 1) * low.width],
            &high.data[y * low.width..(y + 1) * low.width],
            lo,
            hi,
            &mut out.data[y * w..(y + 1) * w],
        );
    }
    out
}

/// Single-level orthonormal decomposition: filter and downsample along rows,
/// then along columns. Odd dimensions are edge-padded to even first.
pub fn dwt2_single_level(channel: &Grid, family: WaveletFamily) -> Result<SubbandSet> {
    if channel.height < 2 || channel.width < 2 {
        return Err(Error::GridTooSmall {
            height: channel.height,
            width: channel.width,
        });
    }
    let lo = family.lowpass()?;
    let hi = family.highpass()?;
    let (grid, padded) = pad_to_even(channel);
    let (row_lo, row_hi) = split_rows(&grid, &lo, &hi);
    let (ll, hl) = split_cols(&row_lo, &lo, &hi);
    let (lh, hh) = split_cols(&row_hi, &lo, &hi);
    Ok(SubbandSet {
        ll,
        lh,
        hl,
        hh,
        padded,
    })
}

/// Exact inverse of [`dwt2_single_level`]; any edge padding is removed.
pub fn idwt2_single_level(bands: &SubbandSet, family: WaveletFamily) -> Result<Grid> {
    let lo = family.lowpass()?;
    let hi = family.highpass()?;
    let row_lo = merge_cols(&bands.ll, &bands.hl, &lo, &hi);
    let row_hi = merge_cols(&bands.lh, &bands.hh, &lo, &hi);
    let full = merge_rows(&row_lo, &row_hi, &lo, &hi);
    let h = full.height - usize::from(bands.padded.0);
    let w = full.width - usize::from(bands.padded.1);
    Ok(Grid::from_fn(h, w, |y, x| full.get(y, x)))
}

/// Renders the decomposition of every channel as an image of the input size.
/// Each subband is min-max normalized on its own.
pub fn wavelet_mosaic_image(
    img: &ImageTensor,
    family: WaveletFamily,
    output: WaveletOutput,
) -> Result<ImageTensor> {
    let (h, w) = (img.height(), img.width());
    img.map_channels(|grid| {
        let bands = dwt2_single_level(grid, family)?;
        let ll = bands.ll.min_max_normalized();
        match output {
            WaveletOutput::ApproxOnly => Ok(Grid::from_fn(h, w, |y, x| ll.get(y / 2, x / 2))),
            WaveletOutput::Mosaic => {
                let lh = bands.lh.min_max_normalized();
                let hl = bands.hl.min_max_normalized();
                let hh = bands.hh.min_max_normalized();
                let (bh, bw) = (ll.height, ll.width);
                // Quadrants are cut back to h×w when the input was padded.
                Ok(Grid::from_fn(h, w, |y, x| match (y < bh, x < bw) {
                    (true, true) => ll.get(y, x),
                    (true, false) => lh.get(y, x - bw),
                    (false, true) => hl.get(y - bh, x),
                    (false, false) => hh.get(y - bh, x - bw),
                }))
            }
        }
    })
}
