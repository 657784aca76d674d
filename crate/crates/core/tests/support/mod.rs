//! Brute-force oracles and fixture helpers shared by the integration tests.
//! Each oracle follows the textbook definition directly, with no sharing of
//! code paths with the library.

#![allow(dead_code)]

use std::path::PathBuf;

use coastedge::filter::Kernel;
use coastedge::raster::{read_npy, EdgeKind, EdgeMap, Grid, NpyArray};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

pub fn load_fixture(name: &str) -> NpyArray {
    read_npy(fixture(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

/// 2-D u8 fixture as an edge map (magnitude kind accepts any byte).
pub fn fixture_edges(name: &str) -> EdgeMap {
    let arr = load_fixture(name);
    let (h, w) = (arr.shape()[0], arr.shape()[1]);
    let values = arr.data().iter().map(|&v| v as u8).collect();
    EdgeMap::new(w, h, EdgeKind::Magnitude, values).unwrap()
}

pub fn fixture_grid(name: &str) -> Grid {
    let arr = load_fixture(name);
    let (h, w) = (arr.shape()[0], arr.shape()[1]);
    Grid::new(w, h, arr.into_data()).unwrap()
}

pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.0.next_u64() % n
    }

    pub fn range(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        lo + self.below((hi_inclusive - lo + 1) as u64) as usize
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn byte(&mut self) -> u8 {
        self.0.next_u64() as u8
    }
}

/// A random pair shaped like real inputs: a sparse binary reference and a
/// detection that mixes true edges, noise and flat patches.
pub fn random_pair(rng: &mut Rng, w: usize, h: usize) -> (EdgeMap, EdgeMap) {
    let density = 0.02 + 0.2 * rng.unit();
    let reference: Vec<u8> = (0..w * h)
        .map(|_| if rng.unit() < density { 255 } else { 0 })
        .collect();
    let style = rng.below(3);
    let detected: Vec<u8> = reference
        .iter()
        .map(|&r| match style {
            0 => rng.byte(),
            1 => {
                if rng.unit() < 0.15 {
                    255 - r
                } else {
                    r
                }
            }
            _ => (r as f64 * rng.unit() * 0.5 + 40.0 * rng.unit()) as u8,
        })
        .collect();
    (
        EdgeMap::new(w, h, EdgeKind::Magnitude, detected).unwrap(),
        EdgeMap::new(w, h, EdgeKind::Binary, reference).unwrap(),
    )
}

pub fn random_grid(rng: &mut Rng, w: usize, h: usize, scale: f64) -> Grid {
    Grid::from_fn(w, h, |_, _| (rng.unit() * scale).floor())
}

fn mse(a: &EdgeMap, b: &EdgeMap) -> f64 {
    let n = a.values().len() as f64;
    a.values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum::<f64>()
        / n
}

pub fn oracle_rmse(a: &EdgeMap, b: &EdgeMap) -> f64 {
    mse(a, b).sqrt()
}

pub fn oracle_psnr(a: &EdgeMap, b: &EdgeMap) -> f64 {
    let m = mse(a, b);
    if m == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / m).log10()
    }
}

/// SSIM from a full 2-D Gaussian weight matrix per window, with weighted
/// (co)variances computed about the weighted means.
pub fn oracle_ssim(a: &EdgeMap, b: &EdgeMap, window: usize, sigma: f64) -> f64 {
    let r = (window / 2) as isize;
    let mut weights = Vec::with_capacity(window * window);
    for dy in -r..=r {
        for dx in -r..=r {
            weights.push((-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp());
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|v| *v /= total);

    let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
    let (w, h) = (a.width(), a.height());
    let mut sum = 0.0;
    let mut count = 0usize;
    for y0 in 0..=h - window {
        for x0 in 0..=w - window {
            let px = |m: &EdgeMap, i: usize| m.get(x0 + i % window, y0 + i / window) as f64;
            let mx: f64 = (0..weights.len()).map(|i| weights[i] * px(a, i)).sum();
            let my: f64 = (0..weights.len()).map(|i| weights[i] * px(b, i)).sum();
            let mut vx = 0.0;
            let mut vy = 0.0;
            let mut cxy = 0.0;
            for (i, wt) in weights.iter().enumerate() {
                let (dx, dy) = (px(a, i) - mx, px(b, i) - my);
                vx += wt * dx * dx;
                vy += wt * dy * dy;
                cxy += wt * dx * dy;
            }
            sum += ((2.0 * mx * my + c1) * (2.0 * cxy + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    sum / count as f64
}

/// Universal quality index with sample (N-1) statistics per window.
/// Constant windows: skipped when both are the same constant, zero otherwise.
pub fn oracle_uqi(a: &EdgeMap, b: &EdgeMap, window: usize) -> f64 {
    let (w, h) = (a.width(), a.height());
    let n = (window * window) as f64;
    let mut sum = 0.0;
    let mut count = 0usize;
    for y0 in 0..=h - window {
        for x0 in 0..=w - window {
            let mut xs = Vec::with_capacity(window * window);
            let mut ys = Vec::with_capacity(window * window);
            for y in y0..y0 + window {
                for x in x0..x0 + window {
                    xs.push(a.get(x, y) as f64);
                    ys.push(b.get(x, y) as f64);
                }
            }
            let mx = xs.iter().sum::<f64>() / n;
            let my = ys.iter().sum::<f64>() / n;
            let vx = xs.iter().map(|v| (v - mx).powi(2)).sum::<f64>() / (n - 1.0);
            let vy = ys.iter().map(|v| (v - my).powi(2)).sum::<f64>() / (n - 1.0);
            let cxy = xs
                .iter()
                .zip(&ys)
                .map(|(p, q)| (p - mx) * (q - my))
                .sum::<f64>()
                / (n - 1.0);
            let x_const = xs.iter().all(|&v| v == xs[0]);
            let y_const = ys.iter().all(|&v| v == ys[0]);
            let dark = xs.iter().all(|&v| v == 0.0) && ys.iter().all(|&v| v == 0.0);
            if (x_const && y_const) || dark {
                if xs != ys {
                    count += 1;
                }
                continue;
            }
            sum += 4.0 * cxy * mx * my / ((vx + vy) * (mx * mx + my * my));
            count += 1;
        }
    }
    if count == 0 {
        1.0
    } else {
        sum / count as f64
    }
}

/// Nested-loop correlation with edge-replicated borders.
pub fn oracle_convolve(image: &Grid, kernel: &Kernel) -> Grid {
    let r = (kernel.size() / 2) as isize;
    let (w, h) = (image.width() as isize, image.height() as isize);
    Grid::from_fn(image.width(), image.height(), |x, y| {
        let mut acc = 0.0;
        for ky in 0..kernel.size() {
            for kx in 0..kernel.size() {
                let sx = (x as isize + kx as isize - r).clamp(0, w - 1) as usize;
                let sy = (y as isize + ky as isize - r).clamp(0, h - 1) as usize;
                acc += kernel.get(kx, ky) * image.get(sx, sy);
            }
        }
        acc
    })
}

pub fn max_abs_diff(a: &Grid, b: &Grid) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Edge pixels of a binary map reachable from strong pixels through
/// 8-connected edge pixels, as a membership mask.
pub fn reachable_from(edges: &EdgeMap, seeds: &[bool]) -> Vec<bool> {
    let (w, h) = (edges.width(), edges.height());
    let mut seen = seeds.to_vec();
    let mut stack: Vec<usize> = (0..w * h).filter(|&i| seeds[i]).collect();
    while let Some(i) = stack.pop() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !seen[j] && edges.values()[j] == 255 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    seen
}
