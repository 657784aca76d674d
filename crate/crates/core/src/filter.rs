//! Sliding-window kernels shared by preprocessing, edge detection and SSIM.
//!
//! All windows are centered and use the correlation convention (the kernel is
//! not flipped). Borders replicate the nearest edge pixel.

use crate::error::{Error, Result};
use crate::raster::Grid;

/// Square correlation kernel with odd side length.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self> {
        if size == 0 || size.is_multiple_of(2) {
            return Err(Error::Param(format!("kernel size {size} must be odd")));
        }
        if weights.len() != size * size {
            return Err(Error::Param(format!(
                "{size}x{size} kernel needs {} weights, got {}",
                size * size,
                weights.len()
            )));
        }
        Ok(Kernel { size, weights })
    }

    /// Builds a 3x3 kernel from integer rows.
    pub fn from_rows3(rows: [[i32; 3]; 3]) -> Self {
        Kernel {
            size: 3,
            weights: rows.iter().flatten().map(|&v| v as f64).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.weights[row * self.size + col]
    }

    pub fn transpose(&self) -> Kernel {
        let n = self.size;
        Kernel {
            size: n,
            weights: (0..n * n).map(|i| self.get(i / n, i % n)).collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn check_fits(size: usize, grid: &Grid) -> Result<()> {
    if size > grid.width() || size > grid.height() {
        return Err(Error::KernelTooLarge {
            kernel: size,
            width: grid.width(),
            height: grid.height(),
        });
    }
    Ok(())
}

/// Clamped source indices for every output position and kernel tap:
/// `table[i * size + k]` is the source index for output `i`, tap `k`.
fn clamp_table(len: usize, size: usize) -> Vec<usize> {
    let r = (size / 2) as isize;
    let mut table = Vec::with_capacity(len * size);
    for i in 0..len as isize {
        for k in -r..=r {
            table.push((i + k).clamp(0, len as isize - 1) as usize);
        }
    }
    table
}

/// 2D correlation with edge-replicated borders; output has the input's size.
pub fn convolve2d(image: &Grid, kernel: &Kernel) -> Result<Grid> {
    check_fits(kernel.size(), image)?;
    let (w, h, n) = (image.width(), image.height(), kernel.size());
    let xs = clamp_table(w, n);
    let ys = clamp_table(h, n);
    let src = image.data();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let rows = &ys[y * n..(y + 1) * n];
        for x in 0..w {
            let cols = &xs[x * n..(x + 1) * n];
            let mut acc = 0.0;
            for (ky, &sy) in rows.iter().enumerate() {
                let row = &src[sy * w..(sy + 1) * w];
                let krow = &kernel.weights[ky * n..(ky + 1) * n];
                for (kw, &sx) in krow.iter().zip(cols) {
                    acc += kw * row[sx];
                }
            }
            out[y * w + x] = acc;
        }
    }
    Grid::new(w, h, out)
}

/// Sampled Gaussian of odd length `size`, normalized to unit sum.
pub fn gaussian_kernel_1d(size: usize, sigma: f64) -> Result<Vec<f64>> {
    if size == 0 || size.is_multiple_of(2) {
        return Err(Error::Param(format!(
            "Gaussian kernel size {size} must be odd"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Param(format!(
            "Gaussian sigma {sigma} must be positive"
        )));
    }
    let r = (size / 2) as f64;
    let raw: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - r;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| v / total).collect())
}

/// Horizontal then vertical 1D correlation with replicated borders.
pub fn correlate_separable(image: &Grid, taps: &[f64]) -> Result<Grid> {
    let n = taps.len();
    check_fits(n, image)?;
    let (w, h) = (image.width(), image.height());
    let xs = clamp_table(w, n);
    let ys = clamp_table(h, n);
    let src = image.data();

    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            tmp[y * w + x] = taps
                .iter()
                .zip(&xs[x * n..(x + 1) * n])
                .map(|(t, &sx)| t * row[sx])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let rows = &ys[y * n..(y + 1) * n];
        let dst = &mut out[y * w..(y + 1) * w];
        for (t, &sy) in taps.iter().zip(rows) {
            let src_row = &tmp[sy * w..(sy + 1) * w];
            for (d, s) in dst.iter_mut().zip(src_row) {
                *d += t * s;
            }
        }
    }
    Grid::new(w, h, out)
}

#[derive(Clone, Copy)]
enum Extremum {
    Min,
    Max,
}

/// Square-window max (`Max`) or min (`Min`) filter with replicated borders.
fn rank_filter(image: &Grid, size: usize, which: Extremum) -> Result<Grid> {
    check_fits(size, image)?;
    let pick = match which {
        Extremum::Min => f64::min,
        Extremum::Max => f64::max,
    };
    let (w, h) = (image.width(), image.height());
    let xs = clamp_table(w, size);
    let ys = clamp_table(h, size);
    let src = image.data();
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut cols = xs[x * size..(x + 1) * size].iter().map(|&sx| row[sx]);
            let first = cols.next().expect("window is non-empty");
            tmp[y * w + x] = cols.fold(first, pick);
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut rows = ys[y * size..(y + 1) * size]
                .iter()
                .map(|&sy| tmp[sy * w + x]);
            let first = rows.next().expect("window is non-empty");
            out[y * w + x] = rows.fold(first, pick);
        }
    }
    Grid::new(w, h, out)
}

pub fn dilate(image: &Grid, size: usize) -> Result<Grid> {
    rank_filter(image, size, Extremum::Max)
}

pub fn erode(image: &Grid, size: usize) -> Result<Grid> {
    rank_filter(image, size, Extremum::Min)
}
