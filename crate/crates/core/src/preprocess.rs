//! Band preprocessing: min-max scaling to 8 bits, histogram equalization and
//! noise reduction (Gaussian blur or morphological closing).
//!
//! Every operation is a pure `Band -> Band` transform. Quantization always
//! rounds half up.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter;
use crate::raster::{quantize_u8, round_half_up, Band, EdgeKind, EdgeMap, Grid, ValueKind};

pub const DEFAULT_GAUSSIAN_KERNEL: usize = 5;
pub const DEFAULT_GAUSSIAN_SIGMA: f64 = 1.0;
pub const DEFAULT_CLOSING_ELEMENT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseReduction {
    None,
    Gaussian,
    Closing,
}

impl NoiseReduction {
    pub const ALL: [NoiseReduction; 3] = [
        NoiseReduction::None,
        NoiseReduction::Gaussian,
        NoiseReduction::Closing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseReduction::None => "none",
            NoiseReduction::Gaussian => "gaussian",
            NoiseReduction::Closing => "closing",
        }
    }
}

impl fmt::Display for NoiseReduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseReduction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseReduction::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| {
                Error::Param(format!(
                    "unknown noise reduction {s:?}; expected none, gaussian or closing"
                ))
            })
    }
}

/// Preprocessing configuration. Scaling to 0..=255 is always applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessSpec {
    pub equalize: bool,
    pub noise_reduction: NoiseReduction,
    pub gaussian_kernel_size: usize,
    pub gaussian_sigma: f64,
    pub closing_element: usize,
}

impl Default for PreprocessSpec {
    /// Scale, equalize, Gaussian blur.
    fn default() -> Self {
        PreprocessSpec {
            equalize: true,
            noise_reduction: NoiseReduction::Gaussian,
            gaussian_kernel_size: DEFAULT_GAUSSIAN_KERNEL,
            gaussian_sigma: DEFAULT_GAUSSIAN_SIGMA,
            closing_element: DEFAULT_CLOSING_ELEMENT,
        }
    }
}

impl PreprocessSpec {
    pub fn with(self, equalize: bool, noise_reduction: NoiseReduction) -> Self {
        PreprocessSpec {
            equalize,
            noise_reduction,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gaussian_kernel_size < 3 || self.gaussian_kernel_size.is_multiple_of(2) {
            return Err(Error::Param(format!(
                "Gaussian kernel size must be odd and >= 3, got {}",
                self.gaussian_kernel_size
            )));
        }
        if !(self.gaussian_sigma > 0.0 && self.gaussian_sigma.is_finite()) {
            return Err(Error::Param(format!(
                "Gaussian sigma must be positive, got {}",
                self.gaussian_sigma
            )));
        }
        if self.closing_element < 3 || self.closing_element.is_multiple_of(2) {
            return Err(Error::Param(format!(
                "closing element must be odd and >= 3, got {}",
                self.closing_element
            )));
        }
        Ok(())
    }

    /// Short identifier used in reports, e.g. `eq-gaussian` or `noeq-none`.
    pub fn tag(&self) -> String {
        variant_tag(self.equalize, self.noise_reduction)
    }
}

pub fn variant_tag(equalize: bool, noise: NoiseReduction) -> String {
    format!("{}-{}", if equalize { "eq" } else { "noeq" }, noise)
}

/// Position of a variant in report ordering: the full pipeline first, then
/// the equalization ablation, then the noise-reduction ablation.
pub fn variant_rank(equalize: bool, noise: NoiseReduction) -> usize {
    match (equalize, noise) {
        (true, NoiseReduction::Gaussian) => 0,
        (false, NoiseReduction::Gaussian) => 1,
        (true, NoiseReduction::None) => 2,
        (true, NoiseReduction::Closing) => 3,
        (false, NoiseReduction::None) => 4,
        (false, NoiseReduction::Closing) => 5,
    }
}

/// Parses a tag produced by [`variant_tag`].
pub fn parse_variant_tag(tag: &str) -> Result<(bool, NoiseReduction)> {
    let (eq, noise) = tag
        .split_once('-')
        .ok_or_else(|| Error::Param(format!("malformed preprocessing tag {tag:?}")))?;
    let equalize = match eq {
        "eq" => true,
        "noeq" => false,
        _ => return Err(Error::Param(format!("malformed preprocessing tag {tag:?}"))),
    };
    Ok((equalize, noise.parse()?))
}

/// Linear map of the band's [min, max] onto [0, 255]. Constant bands map to 0.
pub fn scale_minmax(band: &Band) -> Band {
    let (lo, hi) = band.grid().min_max();
    let grid = if hi > lo {
        let span = hi - lo;
        band.grid().map(|v| round_half_up((v - lo) / span * 255.0))
    } else {
        Grid::filled(band.width(), band.height(), 0.0)
    };
    band.with_grid(ValueKind::Scaled8, grid)
}

/// CDF histogram equalization over 256 bins.
///
/// Samples are expected to be integers in 0..=255; anything else is rounded
/// and clamped into a bin. A constant image is returned unchanged.
pub fn equalize_histogram(band: &Band) -> Band {
    let bins: Vec<u8> = band.grid().data().iter().map(|&v| quantize_u8(v)).collect();
    let mut cdf = [0usize; 256];
    for &b in &bins {
        cdf[b as usize] += 1;
    }
    for i in 1..256 {
        cdf[i] += cdf[i - 1];
    }
    let n = bins.len();
    let cdf_min = cdf.iter().copied().find(|&c| c > 0).unwrap_or(0);
    if cdf_min == n {
        return band.clone();
    }
    let denom = (n - cdf_min) as f64;
    let lut: Vec<f64> = cdf
        .iter()
        .map(|&c| round_half_up(c.saturating_sub(cdf_min) as f64 / denom * 255.0))
        .collect();
    let data = bins.iter().map(|&b| lut[b as usize]).collect();
    let grid = Grid::new(band.width(), band.height(), data).expect("same dimensions");
    band.with_grid(ValueKind::Scaled8, grid)
}

/// Separable Gaussian blur, re-quantized to 0..=255.
pub fn gaussian_blur(band: &Band, kernel_size: usize, sigma: f64) -> Result<Band> {
    if kernel_size < 3 {
        return Err(Error::Param(format!(
            "Gaussian kernel size must be odd and >= 3, got {kernel_size}"
        )));
    }
    let taps = filter::gaussian_kernel_1d(kernel_size, sigma)?;
    let blurred = filter::correlate_separable(band.grid(), &taps)?;
    Ok(band.with_grid(ValueKind::Scaled8, blurred.map(|v| quantize_u8(v) as f64)))
}

/// Grayscale closing: window max followed by window min over a square element.
pub fn morphological_closing(band: &Band, element_size: usize) -> Result<Band> {
    if element_size == 0 || element_size.is_multiple_of(2) {
        return Err(Error::Param(format!(
            "closing element must be odd, got {element_size}"
        )));
    }
    let dilated = filter::dilate(band.grid(), element_size)?;
    let closed = filter::erode(&dilated, element_size)?;
    Ok(band.with_grid(band.kind(), closed))
}

/// Scale, then optionally equalize, then optionally reduce noise.
pub fn run_pipeline(band: &Band, spec: &PreprocessSpec) -> Result<Band> {
    Ok(pipeline_stages(band, spec)?
        .pop()
        .expect("pipeline always yields the input stage"))
}

/// Every intermediate of [`run_pipeline`], starting with the input band.
/// Disabled steps are skipped, so the last element is the pipeline output.
pub fn pipeline_stages(band: &Band, spec: &PreprocessSpec) -> Result<Vec<Band>> {
    spec.validate()?;
    let mut stages = vec![band.clone(), scale_minmax(band)];
    if spec.equalize {
        let eq = equalize_histogram(stages.last().expect("non-empty"));
        stages.push(eq);
    }
    let current = stages.last().expect("non-empty");
    let denoised = match spec.noise_reduction {
        NoiseReduction::None => None,
        NoiseReduction::Gaussian => Some(gaussian_blur(
            current,
            spec.gaussian_kernel_size,
            spec.gaussian_sigma,
        )?),
        NoiseReduction::Closing => Some(morphological_closing(current, spec.closing_element)?),
    };
    stages.extend(denoised);
    Ok(stages)
}

/// 8-bit min-max view of any band, for exporting intermediates as images.
pub fn preview(band: &Band) -> EdgeMap {
    let scaled = scale_minmax(band);
    let values = scaled.grid().data().iter().map(|&v| v as u8).collect();
    EdgeMap::new(band.width(), band.height(), EdgeKind::Magnitude, values)
        .expect("dimensions preserved")
}
