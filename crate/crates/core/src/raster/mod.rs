//! Raster data model: float grids, named bands, label masks, edge maps and
//! the on-disk formats they travel in.

mod npy;
mod pgm;
mod scene;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use npy::{read_npy, write_npy, Dtype, NpyArray};
pub use pgm::{encode_pgm, write_pgm};
pub use scene::{
    bands_from_array, label_from_array, load_manifest, load_scene, resample_nearest, Manifest,
    ManifestEntry, Scene,
};

/// Smallest band side length; every sliding-window op needs a 3x3 neighborhood.
pub const MIN_BAND_SIDE: usize = 3;

/// Round half up, the single quantization rule used across the toolkit.
#[inline]
pub fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

/// Round half up and clamp into the 8-bit range.
#[inline]
pub fn quantize_u8(v: f64) -> u8 {
    round_half_up(v).clamp(0.0, 255.0) as u8
}

/// A row-major 2D grid of `f64` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width * height != data.len() {
            return Err(Error::Shape(format!(
                "{width}x{height} grid needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Grid {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Grid {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Grid {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Sample with coordinates clamped into the grid (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn transpose(&self) -> Grid {
        Grid::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }

    /// Rotates 90 degrees counter-clockwise.
    pub fn rotate90(&self) -> Grid {
        Grid::from_fn(self.height, self.width, |x, y| {
            self.get(self.width - 1 - y, x)
        })
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// The twelve spectral bands, in the canonical (results-table) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BandName {
    CoastalAerosol,
    Blue,
    Green,
    Red,
    RedEdge1,
    RedEdge2,
    RedEdge3,
    NIR,
    RedEdge4,
    WaterVapour,
    SWIR1,
    SWIR2,
}

impl BandName {
    pub const ALL: [BandName; 12] = [
        BandName::CoastalAerosol,
        BandName::Blue,
        BandName::Green,
        BandName::Red,
        BandName::RedEdge1,
        BandName::RedEdge2,
        BandName::RedEdge3,
        BandName::NIR,
        BandName::RedEdge4,
        BandName::WaterVapour,
        BandName::SWIR1,
        BandName::SWIR2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BandName::CoastalAerosol => "CoastalAerosol",
            BandName::Blue => "Blue",
            BandName::Green => "Green",
            BandName::Red => "Red",
            BandName::RedEdge1 => "RedEdge1",
            BandName::RedEdge2 => "RedEdge2",
            BandName::RedEdge3 => "RedEdge3",
            BandName::NIR => "NIR",
            BandName::RedEdge4 => "RedEdge4",
            BandName::WaterVapour => "WaterVapour",
            BandName::SWIR1 => "SWIR1",
            BandName::SWIR2 => "SWIR2",
        }
    }

    /// Human-readable name as printed in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            BandName::CoastalAerosol => "Coastal Aerosol",
            BandName::RedEdge1 => "Red Edge 1",
            BandName::RedEdge2 => "Red Edge 2",
            BandName::RedEdge3 => "Red Edge 3",
            BandName::RedEdge4 => "Red Edge 4",
            BandName::WaterVapour => "Water Vapour",
            BandName::SWIR1 => "SWIR 1",
            BandName::SWIR2 => "SWIR 2",
            other => other.as_str(),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn canonical_list() -> String {
        BandName::ALL.map(|b| b.as_str()).join(", ")
    }
}

impl fmt::Display for BandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BandName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BandName::ALL
            .into_iter()
            .find(|b| b.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Param(format!(
                    "unknown band {s:?}; expected one of: {}",
                    BandName::canonical_list()
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    /// Raw sensor counts.
    Raw16,
    /// Integers in 0..=255 after min-max scaling.
    Scaled8,
    Float,
}

/// One grayscale raster plane of a multiband scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    name: BandName,
    kind: ValueKind,
    grid: Grid,
}

impl Band {
    pub fn new(name: BandName, kind: ValueKind, grid: Grid) -> Result<Self> {
        if grid.width() < MIN_BAND_SIDE || grid.height() < MIN_BAND_SIDE {
            return Err(Error::Shape(format!(
                "band {name} is {}x{}, minimum is {MIN_BAND_SIDE}x{MIN_BAND_SIDE}",
                grid.width(),
                grid.height()
            )));
        }
        if let Some(bad) = grid.data().iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Sample(format!(
                "band {name} contains {bad}; samples must be finite and non-negative"
            )));
        }
        Ok(Band { name, kind, grid })
    }

    pub fn name(&self) -> BandName {
        self.name
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    /// Replaces the samples, keeping the band identity. Used by pure transforms
    /// whose outputs satisfy the band invariants by construction.
    pub(crate) fn with_grid(&self, kind: ValueKind, grid: Grid) -> Band {
        debug_assert!(grid.data().iter().all(|v| v.is_finite() && *v >= 0.0));
        Band {
            name: self.name,
            kind,
            grid,
        }
    }
}

/// Binary land (0) / water (1) label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    width: usize,
    height: usize,
    values: Vec<u8>,
}

impl LabelMask {
    pub const LAND: u8 = 0;
    pub const WATER: u8 = 1;

    pub fn new(width: usize, height: usize, values: Vec<u8>) -> Result<Self> {
        if width * height != values.len() {
            return Err(Error::Shape(format!(
                "{width}x{height} label needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| **v > 1) {
            return Err(Error::Label(format!("label value {bad} is not 0 or 1")));
        }
        Ok(LabelMask {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.values[y * self.width + x]
    }

    /// Label scaled to {0, 255} as a float grid.
    pub fn to_grid(&self) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            data: self.values.iter().map(|&v| v as f64 * 255.0).collect(),
        }
    }

    /// Whether some 8-neighbor of (x, y) carries the opposite class.
    pub fn touches_other_class(&self, x: usize, y: usize) -> bool {
        let own = self.get(x, y);
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= self.width as isize || ny >= self.height as isize {
                    continue;
                }
                if self.get(nx as usize, ny as usize) != own {
                    return true;
                }
            }
        }
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Binary,
    Magnitude,
}

/// 8-bit edge image. Binary maps hold only 0 and 255.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    kind: EdgeKind,
    values: Vec<u8>,
}

impl EdgeMap {
    pub fn new(width: usize, height: usize, kind: EdgeKind, values: Vec<u8>) -> Result<Self> {
        if width * height != values.len() {
            return Err(Error::Shape(format!(
                "{width}x{height} edge map needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if kind == EdgeKind::Binary && values.iter().any(|&v| v != 0 && v != 255) {
            return Err(Error::Param(
                "binary edge maps may only contain 0 and 255".into(),
            ));
        }
        Ok(EdgeMap {
            width,
            height,
            kind,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn kind(&self) -> EdgeKind {
        self.kind
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.values[y * self.width + x]
    }

    pub fn edge_count(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }

    pub fn to_npy(&self) -> NpyArray {
        NpyArray::new(
            vec![self.height, self.width],
            Dtype::U8,
            self.values.iter().map(|&v| v as f64).collect(),
        )
        .expect("edge map shape matches its values")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_half_up_rule() {
        assert_eq!(round_half_up(127.5), 128.0);
        assert_eq!(round_half_up(0.49), 0.0);
        assert_eq!(round_half_up(2.5), 3.0);
        assert_eq!(quantize_u8(300.0), 255);
        assert_eq!(quantize_u8(-3.0), 0);
    }

    #[test]
    fn band_rejects_small_or_invalid_grids() {
        let tiny = Grid::filled(2, 5, 1.0);
        assert!(matches!(
            Band::new(BandName::Blue, ValueKind::Raw16, tiny),
            Err(Error::Shape(_))
        ));
        let neg = Grid::new(3, 3, vec![0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            Band::new(BandName::Blue, ValueKind::Float, neg),
            Err(Error::Sample(_))
        ));
        let nan = Grid::filled(3, 3, f64::NAN);
        assert!(Band::new(BandName::Blue, ValueKind::Float, nan).is_err());
    }

    #[test]
    fn band_names_parse_case_insensitively() {
        assert_eq!("nir".parse::<BandName>().unwrap(), BandName::NIR);
        for b in BandName::ALL {
            assert_eq!(b.as_str().parse::<BandName>().unwrap(), b);
            assert_eq!(BandName::ALL[b.index()], b);
        }
        let msg = "Purple".parse::<BandName>().unwrap_err().to_string();
        assert!(msg.contains("CoastalAerosol") && msg.contains("SWIR2"));
    }

    #[test]
    fn label_rejects_non_binary() {
        assert!(matches!(
            LabelMask::new(2, 1, vec![0, 2]),
            Err(Error::Label(_))
        ));
    }

    #[test]
    fn binary_edge_map_rejects_gray() {
        assert!(EdgeMap::new(2, 1, EdgeKind::Binary, vec![0, 7]).is_err());
        assert!(EdgeMap::new(2, 1, EdgeKind::Magnitude, vec![0, 7]).is_ok());
    }

    #[test]
    fn rotate_and_transpose() {
        let g = Grid::from_fn(3, 2, |x, y| (y * 3 + x) as f64);
        let t = g.transpose();
        assert_eq!(t.width(), 2);
        assert_eq!(t.get(1, 2), g.get(2, 1));
        let r = g.rotate90();
        // top-right corner moves to the top-left
        assert_eq!(r.get(0, 0), g.get(2, 0));
        assert_eq!(r.rotate90().rotate90().rotate90(), g);
    }
}
