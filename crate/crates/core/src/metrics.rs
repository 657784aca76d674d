//! Image-quality metrics (RMSE, PSNR, SSIM, UQI) between edge maps, and
//! corpus aggregation into mean and population standard deviation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::edgedetect::Algorithm;
use crate::error::{Error, Result};
use crate::filter;
use crate::preprocess::{parse_variant_tag, variant_rank};
use crate::raster::{BandName, EdgeMap};

pub const PEAK: f64 = 255.0;
pub const DEFAULT_SSIM_WINDOW: usize = 11;
pub const DEFAULT_SSIM_SIGMA: f64 = 1.5;
pub const DEFAULT_UQI_WINDOW: usize = 8;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricName {
    Rmse,
    Psnr,
    Ssim,
    Uqi,
}

impl MetricName {
    pub const ALL: [MetricName; 4] = [
        MetricName::Rmse,
        MetricName::Psnr,
        MetricName::Ssim,
        MetricName::Uqi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::Rmse => "rmse",
            MetricName::Psnr => "psnr",
            MetricName::Ssim => "ssim",
            MetricName::Uqi => "uqi",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            MetricName::Rmse => "RMSE",
            MetricName::Psnr => "PSNR",
            MetricName::Ssim => "SSIM",
            MetricName::Uqi => "UQI",
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricName::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Param(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    pub ssim_window: usize,
    pub ssim_sigma: f64,
    pub uqi_window: usize,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams {
            ssim_window: DEFAULT_SSIM_WINDOW,
            ssim_sigma: DEFAULT_SSIM_SIGMA,
            uqi_window: DEFAULT_UQI_WINDOW,
        }
    }
}

impl MetricParams {
    pub fn validate(&self) -> Result<()> {
        if self.ssim_window == 0 || self.ssim_window.is_multiple_of(2) {
            return Err(Error::Param(format!(
                "SSIM window must be odd, got {}",
                self.ssim_window
            )));
        }
        if !(self.ssim_sigma > 0.0 && self.ssim_sigma.is_finite()) {
            return Err(Error::Param(format!(
                "SSIM sigma must be positive, got {}",
                self.ssim_sigma
            )));
        }
        if self.uqi_window < 2 {
            return Err(Error::Param(format!(
                "UQI window must be at least 2, got {}",
                self.uqi_window
            )));
        }
        Ok(())
    }
}

fn check_same_shape(a: &EdgeMap, b: &EdgeMap) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::Shape(format!(
            "cannot compare {}x{} with {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

fn check_window(a: &EdgeMap, window: usize) -> Result<()> {
    if window > a.width() || window > a.height() {
        return Err(Error::Window {
            window,
            width: a.width(),
            height: a.height(),
        });
    }
    Ok(())
}

pub fn rmse(a: &EdgeMap, b: &EdgeMap) -> Result<f64> {
    check_same_shape(a, b)?;
    let sse: u64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| {
            let d = x.abs_diff(y) as u64;
            d * d
        })
        .sum();
    Ok((sse as f64 / a.values().len() as f64).sqrt())
}

/// Peak signal-to-noise ratio in dB; identical maps give `+inf`.
pub fn psnr(a: &EdgeMap, b: &EdgeMap) -> Result<f64> {
    Ok(psnr_from_rmse(rmse(a, b)?))
}

pub fn psnr_from_rmse(rmse: f64) -> f64 {
    if rmse == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (PEAK / rmse).log10()
    }
}

/// Valid-mode separable correlation: only windows fully inside the image.
fn filter_valid(data: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let n = taps.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let src = &data[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = taps.iter().zip(&src[x..x + n]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        let dst = &mut out[y * ow..(y + 1) * ow];
        for (k, t) in taps.iter().enumerate() {
            let src = &rows[(y + k) * ow..(y + k + 1) * ow];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += t * s;
            }
        }
    }
    out
}

/// Mean SSIM over all Gaussian-weighted windows fully inside the image.
pub fn ssim(a: &EdgeMap, b: &EdgeMap, window: usize, sigma: f64) -> Result<f64> {
    check_same_shape(a, b)?;
    check_window(a, window)?;
    let taps = filter::gaussian_kernel_1d(window, sigma)?;
    let (w, h) = (a.width(), a.height());
    let x: Vec<f64> = a.values().iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = b.values().iter().map(|&v| v as f64).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();

    let mu_x = filter_valid(&x, w, h, &taps);
    let mu_y = filter_valid(&y, w, h, &taps);
    let e_xx = filter_valid(&xx, w, h, &taps);
    let e_yy = filter_valid(&yy, w, h, &taps);
    let e_xy = filter_valid(&xy, w, h, &taps);

    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let var_x = e_xx[i] - mx * mx;
        let var_y = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
            / ((mx * mx + my * my + c1) * (var_x + var_y + c2));
    }
    Ok(total / mu_x.len() as f64)
}

/// Inclusive-exclusive summed-area table with a zero first row and column.
fn integral(w: usize, h: usize, f: impl Fn(usize) -> i64) -> Vec<i64> {
    let stride = w + 1;
    let mut table = vec![0i64; stride * (h + 1)];
    for y in 0..h {
        let mut row = 0i64;
        for x in 0..w {
            row += f(y * w + x);
            table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row;
        }
    }
    table
}

/// Mean universal image quality index over uniform `window` x `window`
/// windows (stride 1, fully inside).
///
/// Window statistics are exact integer sums, so degenerate windows are
/// detected exactly. Windows where both inputs are constant are skipped when
/// the constants agree and contribute 0 when they differ. If every window is
/// skipped the inputs are identical and the result is 1.
pub fn uqi(a: &EdgeMap, b: &EdgeMap, window: usize) -> Result<f64> {
    check_same_shape(a, b)?;
    check_window(a, window)?;
    if window < 2 {
        return Err(Error::Param(format!(
            "UQI window must be at least 2, got {window}"
        )));
    }
    let (w, h) = (a.width(), a.height());
    let (av, bv) = (a.values(), b.values());
    let sx = integral(w, h, |i| av[i] as i64);
    let sy = integral(w, h, |i| bv[i] as i64);
    let sxx = integral(w, h, |i| (av[i] as i64).pow(2));
    let syy = integral(w, h, |i| (bv[i] as i64).pow(2));
    let sxy = integral(w, h, |i| av[i] as i64 * bv[i] as i64);
    let stride = w + 1;
    let window_sum = |t: &[i64], x: usize, y: usize| -> i128 {
        let (x1, y1) = (x + window, y + window);
        (t[y1 * stride + x1] - t[y * stride + x1] - t[y1 * stride + x] + t[y * stride + x]) as i128
    };

    let n = (window * window) as i128;
    let mut total = 0.0;
    let mut counted = 0usize;
    for y in 0..=h - window {
        for x in 0..=w - window {
            let (px, py) = (window_sum(&sx, x, y), window_sum(&sy, x, y));
            let spread_x = n * window_sum(&sxx, x, y) - px * px;
            let spread_y = n * window_sum(&syy, x, y) - py * py;
            let spread = spread_x + spread_y;
            let level = px * px + py * py;
            if spread == 0 || level == 0 {
                if px != py {
                    counted += 1;
                }
                continue;
            }
            let cross = n * window_sum(&sxy, x, y) - px * py;
            total += (4 * cross * px * py) as f64 / (spread * level) as f64;
            counted += 1;
        }
    }
    Ok(if counted == 0 {
        1.0
    } else {
        total / counted as f64
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    pub rmse: f64,
    pub psnr: f64,
    pub ssim: f64,
    pub uqi: f64,
}

impl MetricValues {
    pub fn get(&self, metric: MetricName) -> f64 {
        match metric {
            MetricName::Rmse => self.rmse,
            MetricName::Psnr => self.psnr,
            MetricName::Ssim => self.ssim,
            MetricName::Uqi => self.uqi,
        }
    }
}

/// All four metrics of `detected` against `reference`.
pub fn compute_all(
    detected: &EdgeMap,
    reference: &EdgeMap,
    params: &MetricParams,
) -> Result<MetricValues> {
    params.validate()?;
    let rmse = rmse(detected, reference)?;
    Ok(MetricValues {
        rmse,
        psnr: psnr_from_rmse(rmse),
        ssim: ssim(detected, reference, params.ssim_window, params.ssim_sigma)?,
        uqi: uqi(detected, reference, params.uqi_window)?,
    })
}

/// One (image, band, algorithm, preprocessing) cell. Failed cells carry an
/// error message and NaN metric values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub image_id: String,
    pub band: BandName,
    pub algorithm: Algorithm,
    pub preprocess: String,
    pub values: MetricValues,
    pub error: Option<String>,
}

impl MetricRecord {
    pub fn failed(
        image_id: &str,
        band: BandName,
        algorithm: Algorithm,
        preprocess: &str,
        error: impl fmt::Display,
    ) -> Self {
        MetricRecord {
            image_id: image_id.to_string(),
            band,
            algorithm,
            preprocess: preprocess.to_string(),
            values: MetricValues {
                rmse: f64::NAN,
                psnr: f64::NAN,
                ssim: f64::NAN,
                uqi: f64::NAN,
            },
            error: Some(error.to_string()),
        }
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }
}

/// Canonical record order: image id, band, algorithm, preprocessing variant.
pub fn sort_records(records: &mut [MetricRecord]) {
    records.sort_by(|a, b| {
        a.image_id
            .cmp(&b.image_id)
            .then(a.band.cmp(&b.band))
            .then(a.algorithm.cmp(&b.algorithm))
            .then(tag_rank(&a.preprocess).cmp(&tag_rank(&b.preprocess)))
    });
}

fn tag_rank(tag: &str) -> (usize, &str) {
    let rank = parse_variant_tag(tag)
        .map(|(eq, noise)| variant_rank(eq, noise))
        .unwrap_or(usize::MAX);
    (rank, tag)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCell {
    pub band: BandName,
    pub algorithm: Algorithm,
    pub preprocess: String,
    pub metric: MetricName,
    pub mean: f64,
    pub std: f64,
    pub n_included: usize,
    pub n_excluded: usize,
}

/// Mean and population standard deviation of one metric over the records of
/// a (band, algorithm, preprocessing) group. Non-finite values (infinite
/// PSNR, failed cells) are excluded and counted.
pub fn aggregate(
    records: &[MetricRecord],
    band: BandName,
    algorithm: Algorithm,
    preprocess: &str,
    metric: MetricName,
) -> Result<AggregateCell> {
    let mut group: Vec<&MetricRecord> = records
        .iter()
        .filter(|r| r.band == band && r.algorithm == algorithm && r.preprocess == preprocess)
        .collect();
    if group.is_empty() {
        return Err(Error::EmptyGroup);
    }
    group.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    let finite: Vec<f64> = group
        .iter()
        .map(|r| r.values.get(metric))
        .filter(|v| v.is_finite())
        .collect();
    let (mean, std) = mean_std(&finite);
    Ok(AggregateCell {
        band,
        algorithm,
        preprocess: preprocess.to_string(),
        metric,
        mean,
        std,
        n_included: finite.len(),
        n_excluded: group.len() - finite.len(),
    })
}

/// Two-pass mean and population standard deviation; NaN for empty input.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregates every group present in `records`, in canonical order
/// (band, algorithm, variant, metric).
pub fn aggregate_all(records: &[MetricRecord]) -> Vec<AggregateCell> {
    let mut groups: Vec<(BandName, Algorithm, String)> = records
        .iter()
        .map(|r| (r.band, r.algorithm, r.preprocess.clone()))
        .collect();
    groups.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(tag_rank(&a.2).cmp(&tag_rank(&b.2)))
    });
    groups.dedup();
    let mut cells = Vec::with_capacity(groups.len() * 4);
    for (band, algorithm, preprocess) in groups {
        for metric in MetricName::ALL {
            cells.push(
                aggregate(records, band, algorithm, &preprocess, metric)
                    .expect("group drawn from the records is non-empty"),
            );
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::EdgeKind;

    fn map(w: usize, h: usize, values: Vec<u8>) -> EdgeMap {
        EdgeMap::new(w, h, EdgeKind::Magnitude, values).unwrap()
    }

    fn pattern(w: usize, h: usize, seed: u32) -> EdgeMap {
        let mut s = seed.wrapping_mul(2654435761).wrapping_add(1);
        let values = (0..w * h)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 17;
                s ^= s << 5;
                (s % 256) as u8
            })
            .collect();
        map(w, h, values)
    }

    #[test]
    fn rmse_and_psnr_closed_forms() {
        let zeros = map(4, 4, vec![0; 16]);
        let full = map(4, 4, vec![255; 16]);
        let ones = map(4, 4, vec![1; 16]);
        assert_eq!(rmse(&zeros, &zeros).unwrap(), 0.0);
        assert_eq!(rmse(&zeros, &full).unwrap(), 255.0);
        assert_eq!(psnr(&zeros, &zeros).unwrap(), f64::INFINITY);
        assert_eq!(psnr(&zeros, &full).unwrap(), 0.0);
        assert!((psnr(&zeros, &ones).unwrap() - 48.1308).abs() < 1e-4);
    }

    #[test]
    fn shape_and_window_errors() {
        let a = map(12, 12, vec![0; 144]);
        let b = map(11, 12, vec![0; 132]);
        assert!(matches!(rmse(&a, &b), Err(Error::Shape(_))));
        assert!(matches!(ssim(&a, &b, 11, 1.5), Err(Error::Shape(_))));
        let small = map(10, 10, vec![0; 100]);
        assert!(matches!(
            ssim(&small, &small, 11, 1.5),
            Err(Error::Window { .. })
        ));
        let tiny = map(7, 9, vec![0; 63]);
        assert!(matches!(uqi(&tiny, &tiny, 8), Err(Error::Window { .. })));
    }

    #[test]
    fn identity_gives_exactly_one() {
        let a = pattern(24, 20, 3);
        assert_eq!(ssim(&a, &a, 11, 1.5).unwrap(), 1.0);
        assert_eq!(uqi(&a, &a, 8).unwrap(), 1.0);
    }

    #[test]
    fn inverted_map_has_negative_ssim() {
        let a = pattern(32, 32, 9);
        let inv = map(32, 32, a.values().iter().map(|v| 255 - v).collect());
        assert!(ssim(&a, &inv, 11, 1.5).unwrap() < -0.5);
    }

    #[test]
    fn uqi_degenerate_windows() {
        let a = map(8, 8, vec![10; 64]);
        let b = map(8, 8, vec![20; 64]);
        assert_eq!(uqi(&a, &b, 8).unwrap(), 0.0);
        assert_eq!(uqi(&a, &a, 8).unwrap(), 1.0);
        let zero = map(8, 8, vec![0; 64]);
        assert_eq!(uqi(&zero, &zero, 8).unwrap(), 1.0);
    }

    #[test]
    fn uqi_skips_flat_identical_windows() {
        // left half flat and identical in both, right half varies identically
        let values: Vec<u8> = (0..16 * 8)
            .map(|i| if i % 16 < 8 { 40 } else { (i * 7 % 256) as u8 })
            .collect();
        let a = map(16, 8, values);
        assert_eq!(uqi(&a, &a, 8).unwrap(), 1.0);
    }

    fn record(id: &str, psnr: f64) -> MetricRecord {
        MetricRecord {
            image_id: id.into(),
            band: BandName::Blue,
            algorithm: Algorithm::Canny,
            preprocess: "eq-gaussian".into(),
            values: MetricValues {
                rmse: 1.0,
                psnr,
                ssim: 0.5,
                uqi: 0.5,
            },
            error: None,
        }
    }

    #[test]
    fn aggregate_mean_and_population_std() {
        let recs = vec![record("c", 3.0), record("a", 1.0), record("b", 2.0)];
        let cell = aggregate(
            &recs,
            BandName::Blue,
            Algorithm::Canny,
            "eq-gaussian",
            MetricName::Psnr,
        )
        .unwrap();
        assert_eq!(cell.mean, 2.0);
        assert!((cell.std - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!((cell.n_included, cell.n_excluded), (3, 0));
    }

    #[test]
    fn aggregate_excludes_infinity() {
        let recs = vec![record("a", 5.0), record("b", f64::INFINITY)];
        let cell = aggregate(
            &recs,
            BandName::Blue,
            Algorithm::Canny,
            "eq-gaussian",
            MetricName::Psnr,
        )
        .unwrap();
        assert_eq!(cell.mean, 5.0);
        assert_eq!(cell.std, 0.0);
        assert_eq!((cell.n_included, cell.n_excluded), (1, 1));
    }

    #[test]
    fn aggregate_empty_group() {
        let recs = vec![record("a", 5.0)];
        assert!(matches!(
            aggregate(
                &recs,
                BandName::Red,
                Algorithm::Canny,
                "eq-gaussian",
                MetricName::Psnr
            ),
            Err(Error::EmptyGroup)
        ));
    }

    #[test]
    fn failed_records_are_excluded() {
        let recs = vec![
            record("a", 5.0),
            MetricRecord::failed("b", BandName::Blue, Algorithm::Canny, "eq-gaussian", "boom"),
        ];
        let cells = aggregate_all(&recs);
        assert_eq!(cells.len(), 4);
        assert!(cells.iter().all(|c| c.n_included == 1 && c.n_excluded == 1));
    }
}
