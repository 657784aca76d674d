//! Canny, Sobel, Scharr and Prewitt edge detection.
//!
//! The three gradient operators emit the min-max normalized gradient magnitude
//! as a grayscale edge map. Canny runs on the Sobel gradient and emits a
//! binary map.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{self, Kernel};
use crate::raster::{quantize_u8, Band, EdgeKind, EdgeMap, Grid};

pub use crate::filter::convolve2d;

pub const DEFAULT_CANNY_LOW: f64 = 50.0;
pub const DEFAULT_CANNY_HIGH: f64 = 150.0;
pub const DEFAULT_CANNY_SMOOTHING_KERNEL: usize = 5;
pub const DEFAULT_CANNY_SMOOTHING_SIGMA: f64 = 1.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientOperator {
    Sobel,
    Scharr,
    Prewitt,
}

/// Horizontal and vertical 3x3 derivative kernels; `gy` is `gx` transposed.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientKernelPair {
    pub operator: GradientOperator,
    pub gx: Kernel,
    pub gy: Kernel,
}

impl GradientKernelPair {
    fn from_gx(operator: GradientOperator, rows: [[i32; 3]; 3]) -> Self {
        let gx = Kernel::from_rows3(rows);
        let gy = gx.transpose();
        GradientKernelPair { operator, gx, gy }
    }

    pub fn sobel() -> Self {
        Self::from_gx(
            GradientOperator::Sobel,
            [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]],
        )
    }

    pub fn scharr() -> Self {
        Self::from_gx(
            GradientOperator::Scharr,
            [[-3, 0, 3], [-10, 0, 10], [-3, 0, 3]],
        )
    }

    pub fn prewitt() -> Self {
        Self::from_gx(
            GradientOperator::Prewitt,
            [[-1, 0, 1], [-1, 0, 1], [-1, 0, 1]],
        )
    }

    pub fn for_operator(operator: GradientOperator) -> Self {
        match operator {
            GradientOperator::Sobel => Self::sobel(),
            GradientOperator::Scharr => Self::scharr(),
            GradientOperator::Prewitt => Self::prewitt(),
        }
    }
}

/// Per-pixel gradient magnitude and direction (radians in (-pi, pi]).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub magnitude: Grid,
    pub direction: Grid,
}

pub fn gradient_field(image: &Grid, kernels: &GradientKernelPair) -> Result<GradientField> {
    let gx = convolve2d(image, &kernels.gx)?;
    let gy = convolve2d(image, &kernels.gy)?;
    let (w, h) = (image.width(), image.height());
    let mut magnitude = Vec::with_capacity(w * h);
    let mut direction = Vec::with_capacity(w * h);
    for (&x, &y) in gx.data().iter().zip(gy.data()) {
        magnitude.push(x.hypot(y));
        let theta = y.atan2(x);
        direction.push(if theta == -PI { PI } else { theta });
    }
    Ok(GradientField {
        magnitude: Grid::new(w, h, magnitude)?,
        direction: Grid::new(w, h, direction)?,
    })
}

/// Min-max normalization of the magnitude onto [0, 255], unrounded.
/// A constant field maps to all zeros.
pub fn normalize_magnitude(field: &GradientField) -> Grid {
    let (lo, hi) = field.magnitude.min_max();
    if hi > lo {
        let span = hi - lo;
        field.magnitude.map(|m| (m - lo) / span * 255.0)
    } else {
        Grid::filled(field.magnitude.width(), field.magnitude.height(), 0.0)
    }
}

pub fn magnitude_to_edgemap(field: &GradientField) -> EdgeMap {
    let norm = normalize_magnitude(field);
    let values = norm.data().iter().map(|&v| quantize_u8(v)).collect();
    EdgeMap::new(norm.width(), norm.height(), EdgeKind::Magnitude, values)
        .expect("dimensions preserved")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothing {
    pub kernel_size: usize,
    pub sigma: f64,
}

/// Canny thresholds on the normalized 0..=255 magnitude scale, plus the
/// optional Gaussian smoothing run before the gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CannyParams {
    pub low_threshold: f64,
    pub high_threshold: f64,
    pub smoothing: Option<Smoothing>,
}

impl Default for CannyParams {
    fn default() -> Self {
        CannyParams {
            low_threshold: DEFAULT_CANNY_LOW,
            high_threshold: DEFAULT_CANNY_HIGH,
            smoothing: Some(Smoothing {
                kernel_size: DEFAULT_CANNY_SMOOTHING_KERNEL,
                sigma: DEFAULT_CANNY_SMOOTHING_SIGMA,
            }),
        }
    }
}

impl CannyParams {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.low_threshold, self.high_threshold);
        if !(lo > 0.0 && lo < hi && hi <= 255.0) {
            return Err(Error::Param(format!(
                "Canny thresholds must satisfy 0 < low < high <= 255, got low={lo} high={hi}"
            )));
        }
        if let Some(s) = self.smoothing {
            if s.kernel_size < 3 || s.kernel_size % 2 == 0 {
                return Err(Error::Param(format!(
                    "Canny smoothing kernel must be odd and >= 3, got {}",
                    s.kernel_size
                )));
            }
            if !(s.sigma > 0.0 && s.sigma.is_finite()) {
                return Err(Error::Param(format!(
                    "Canny smoothing sigma must be positive, got {}",
                    s.sigma
                )));
            }
        }
        Ok(())
    }

    pub fn without_smoothing(self) -> Self {
        CannyParams {
            smoothing: None,
            ..self
        }
    }
}

/// Intermediate products of a Canny run.
#[derive(Debug, Clone)]
pub struct CannyTrace {
    /// Normalized Sobel magnitude the thresholds are applied to.
    pub normalized: Grid,
    /// Pixels surviving non-maximum suppression.
    pub thinned: Vec<bool>,
    pub edges: EdgeMap,
}

pub fn canny(band: &Band, params: &CannyParams) -> Result<EdgeMap> {
    Ok(canny_trace(band.grid(), params)?.edges)
}

pub fn canny_trace(image: &Grid, params: &CannyParams) -> Result<CannyTrace> {
    params.validate()?;
    let smoothed;
    let source = match params.smoothing {
        Some(s) => {
            let taps = filter::gaussian_kernel_1d(s.kernel_size, s.sigma)?;
            smoothed = filter::correlate_separable(image, &taps)?;
            &smoothed
        }
        None => image,
    };
    let field = gradient_field(source, &GradientKernelPair::sobel())?;
    let normalized = normalize_magnitude(&field);
    let thinned = non_maximum_suppression(&field);
    let edges = hysteresis(&normalized, &thinned, params);
    Ok(CannyTrace {
        normalized,
        thinned,
        edges,
    })
}

/// Neighbor offsets (behind, ahead) along the gradient direction quantized
/// to 0, 45, 90 or 135 degrees. "Behind" is the neighbor earlier in raster
/// order.
fn nms_offsets(theta: f64) -> [(isize, isize); 2] {
    let mut deg = theta.to_degrees();
    if deg < 0.0 {
        deg += 180.0;
    }
    if !(22.5..157.5).contains(&deg) {
        [(-1, 0), (1, 0)]
    } else if deg < 67.5 {
        [(-1, -1), (1, 1)]
    } else if deg < 112.5 {
        [(0, -1), (0, 1)]
    } else {
        [(1, -1), (-1, 1)]
    }
}

/// A pixel survives when it is strictly greater than its neighbor behind and
/// at least its neighbor ahead. Out-of-image neighbors count as zero.
fn non_maximum_suppression(field: &GradientField) -> Vec<bool> {
    let mag = &field.magnitude;
    let (w, h) = (mag.width() as isize, mag.height() as isize);
    let at = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w || y >= h {
            0.0
        } else {
            mag.get(x as usize, y as usize)
        }
    };
    let mut keep = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let m = mag.get(x as usize, y as usize);
            let [(bx, by), (ax, ay)] = nms_offsets(field.direction.get(x as usize, y as usize));
            keep.push(m > at(x + bx, y + by) && m >= at(x + ax, y + ay));
        }
    }
    keep
}

/// Double threshold plus 8-connected hysteresis from strong pixels.
fn hysteresis(normalized: &Grid, thinned: &[bool], params: &CannyParams) -> EdgeMap {
    let (w, h) = (normalized.width(), normalized.height());
    let norm = normalized.data();
    let candidate: Vec<bool> = thinned
        .iter()
        .zip(norm)
        .map(|(&t, &m)| t && m >= params.low_threshold)
        .collect();
    let mut out = vec![0u8; w * h];
    let mut queue = VecDeque::new();
    for i in 0..w * h {
        if candidate[i] && norm[i] >= params.high_threshold {
            out[i] = 255;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if candidate[j] && out[j] == 0 {
                    out[j] = 255;
                    queue.push_back(j);
                }
            }
        }
    }
    EdgeMap::new(w, h, EdgeKind::Binary, out).expect("binary by construction")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Canny,
    Sobel,
    Scharr,
    Prewitt,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Canny,
        Algorithm::Sobel,
        Algorithm::Scharr,
        Algorithm::Prewitt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Canny => "canny",
            Algorithm::Sobel => "sobel",
            Algorithm::Scharr => "scharr",
            Algorithm::Prewitt => "prewitt",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::Canny => "Canny",
            Algorithm::Sobel => "Sobel",
            Algorithm::Scharr => "Scharr",
            Algorithm::Prewitt => "Prewitt",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Param(format!(
                    "unknown algorithm {s:?}; expected canny, sobel, scharr or prewitt"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectParams {
    pub canny: CannyParams,
    /// Threshold gradient-operator maps to {0, 255} at this level when set.
    pub binarize: Option<u8>,
}

pub fn detect(band: &Band, algorithm: Algorithm, params: &DetectParams) -> Result<EdgeMap> {
    let operator = match algorithm {
        Algorithm::Canny => return canny(band, &params.canny),
        Algorithm::Sobel => GradientOperator::Sobel,
        Algorithm::Scharr => GradientOperator::Scharr,
        Algorithm::Prewitt => GradientOperator::Prewitt,
    };
    let field = gradient_field(band.grid(), &GradientKernelPair::for_operator(operator))?;
    let map = magnitude_to_edgemap(&field);
    Ok(match params.binarize {
        Some(t) => {
            let values = map
                .values()
                .iter()
                .map(|&v| if v >= t { 255 } else { 0 })
                .collect();
            EdgeMap::new(map.width(), map.height(), EdgeKind::Binary, values)
                .expect("binary by construction")
        }
        None => map,
    })
}
