use crate::error::{Error, Result};
use crate::imgio::{Grid, ImageTensor};

pub const DEFAULT_MEDIAN_WINDOW: usize = 5;
pub const MAX_MEDIAN_WINDOW: usize = 25;

pub(crate) fn check_window(window: usize) -> Result<()> {
    if window < 3 || window.is_multiple_of(2) || window > MAX_MEDIAN_WINDOW {
        return Err(Error::InvalidTransform(format!(
            "median window must be odd and in 3..={MAX_MEDIAN_WINDOW}, got {window}"
        )));
    }
    Ok(())
}

/// Exact window×window median of one channel with replicate borders.
pub fn median_filter_grid(grid: &Grid, window: usize) -> Result<Grid> {
    check_window(window)?;
    let r = (window / 2) as isize;
    let (h, w) = (grid.height as isize, grid.width as isize);
    let mid = window * window / 2;
    let mut buf = Vec::with_capacity(window * window);
    let mut out = Grid::zeros(grid.height, grid.width);
    for y in 0..h {
        for x in 0..w {
            buf.clear();
            for dy in -r..=r {
                let sy = (y + dy).clamp(0, h - 1) as usize;
                for dx in -r..=r {
                    let sx = (x + dx).clamp(0, w - 1) as usize;
                    buf.push(grid.get(sy, sx));
                }
            }
            let (_, m, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
            out.set(y as usize, x as usize, *m);
        }
    }
    Ok(out)
}

pub fn median_filter(img: &ImageTensor, window: usize) -> Result<ImageTensor> {
    check_window(window)?;
    img.map_channels(|g| median_filter_grid(g, window))
}
