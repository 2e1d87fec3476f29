//! Two-dimensional DFT and its log-magnitude rendering.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::Result;
use crate::imgio::{Grid, ImageTensor};

/// Complex H×W grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    pub height: usize,
    pub width: usize,
    pub data: Vec<Complex64>,
}

impl ComplexGrid {
    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Complex64 {
        self.data[u * self.width + v]
    }
}

/// Unnormalized forward DFT:
/// `F[u,v] = sum_x sum_y f[x,y] * exp(-2*pi*i*(u*x/H + v*y/W))`.
pub fn dft2_forward(channel: &Grid) -> ComplexGrid {
    let (h, w) = (channel.height, channel.width);
    let mut data: Vec<Complex64> = channel
        .data
        .iter()
        .map(|&re| Complex64::new(re, 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();

    let row_fft = planner.plan_fft_forward(w);
    for row in data.chunks_exact_mut(w) {
        row_fft.process(row);
    }

    let col_fft = planner.plan_fft_forward(h);
    let mut column = vec![Complex64::new(0.0, 0.0); h];
    for v in 0..w {
        for u in 0..h {
            column[u] = data[u * w + v];
        }
        col_fft.process(&mut column);
        for u in 0..h {
            data[u * w + v] = column[u];
        }
    }

    ComplexGrid {
        height: h,
        width: w,
        data,
    }
}

/// Cyclic shift placing index 0 at `n / 2`.
#[inline]
fn centered(i: usize, n: usize) -> usize {
    (i + n / 2) % n
}

/// Per channel: `log(1 + |F|)`, DC moved to `(H/2, W/2)`, min-max scaled to
/// [0, 1]. Phase is discarded.
pub fn fourier_log_magnitude_image(img: &ImageTensor) -> Result<ImageTensor> {
    img.map_channels(|grid| {
        let spectrum = dft2_forward(grid);
        let (h, w) = (grid.height, grid.width);
        let mut out = Grid::zeros(h, w);
        for u in 0..h {
            for v in 0..w {
                out.set(centered(u, h), centered(v, w), spectrum.get(u, v).norm().ln_1p());
            }
        }
        Ok(out.min_max_normalized())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_grid_has_only_dc() {
        let g = Grid::new(4, 4, vec![0.5; 16]);
        let f = dft2_forward(&g);
        assert!((f.get(0, 0).re - 8.0).abs() < 1e-12);
        for (i, z) in f.data.iter().enumerate().skip(1) {
            assert!(z.norm() < 1e-12, "entry {i} = {z}");
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut g = Grid::zeros(4, 4);
        g.set(0, 0, 1.0);
        let f = dft2_forward(&g);
        assert!(f.data.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn non_square_dimensions_preserved() {
        let g = Grid::from_fn(3, 5, |y, x| (y * 5 + x) as f64);
        let f = dft2_forward(&g);
        assert_eq!((f.height, f.width, f.data.len()), (3, 5, 15));
        assert!((f.get(0, 0).re - 105.0).abs() < 1e-9);
    }

    #[test]
    fn constant_image_renders_single_centered_pixel() {
        let img = ImageTensor::filled(6, 5, 1, 0.3).unwrap();
        let out = fourier_log_magnitude_image(&img).unwrap();
        for y in 0..6 {
            for x in 0..5 {
                let expected = if (y, x) == (3, 2) { 1.0 } else { 0.0 };
                assert!((out.get(y, x, 0) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn all_zero_image_maps_to_zero() {
        let img = ImageTensor::filled(4, 4, 3, 0.0).unwrap();
        let out = fourier_log_magnitude_image(&img).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
        assert_eq!(out.channels(), 3);
    }
}
