use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_npy, Band, BandName, Grid, LabelMask, NpyArray, ValueKind, MIN_BAND_SIDE};
use crate::error::{Error, Result};

/// Twelve co-registered bands (canonical order) plus the land/water label.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    id: String,
    bands: Vec<Band>,
    label: LabelMask,
}

impl Scene {
    pub fn new(id: impl Into<String>, bands: Vec<Band>, label: LabelMask) -> Result<Self> {
        if bands.len() != 12 {
            return Err(Error::BandCount(bands.len()));
        }
        for (band, expected) in bands.iter().zip(BandName::ALL) {
            if band.name() != expected {
                return Err(Error::Shape(format!(
                    "band {} found where {} was expected",
                    band.name(),
                    expected
                )));
            }
            if band.width() != label.width() || band.height() != label.height() {
                return Err(Error::Shape(format!(
                    "band {} is {}x{} but the label is {}x{}",
                    band.name(),
                    band.width(),
                    band.height(),
                    label.width(),
                    label.height()
                )));
            }
        }
        Ok(Scene {
            id: id.into(),
            bands,
            label,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn band(&self, name: BandName) -> &Band {
        &self.bands[name.index()]
    }

    pub fn label(&self) -> &LabelMask {
        &self.label
    }

    pub fn width(&self) -> usize {
        self.label.width()
    }

    pub fn height(&self) -> usize {
        self.label.height()
    }

    /// The 12 bands stacked as an H x W x 12 array in canonical order.
    pub fn image_array(&self, dtype: super::Dtype) -> Result<NpyArray> {
        let (w, h) = (self.width(), self.height());
        let mut data = Vec::with_capacity(w * h * 12);
        for i in 0..w * h {
            for band in &self.bands {
                data.push(band.grid().data()[i]);
            }
        }
        NpyArray::new(vec![h, w, 12], dtype, data)
    }

    pub fn label_array(&self) -> NpyArray {
        NpyArray::new(
            vec![self.height(), self.width()],
            super::Dtype::U8,
            self.label.values().iter().map(|&v| v as f64).collect(),
        )
        .expect("label shape matches its values")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub image: String,
    pub label: String,
}

/// Corpus manifest. Paths are relative to the manifest file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub band_order: Vec<BandName>,
    pub images: Vec<ManifestEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn new(images: Vec<ManifestEntry>) -> Self {
        Manifest {
            band_order: BandName::ALL.to_vec(),
            images,
            base_dir: PathBuf::new(),
        }
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut manifest: Manifest = serde_json::from_str(text)
            .map_err(|e| Error::Corpus(format!("invalid manifest JSON: {e}")))?;
        manifest.base_dir = base_dir.into();
        manifest.validate()?;
        Ok(manifest)
    }

    fn validate(&self) -> Result<()> {
        if self.band_order.len() != 12 {
            return Err(Error::BandCount(self.band_order.len()));
        }
        let distinct: HashSet<_> = self.band_order.iter().collect();
        if distinct.len() != 12 {
            return Err(Error::Corpus("band_order repeats a band".into()));
        }
        let mut ids = HashSet::new();
        for entry in &self.images {
            if !ids.insert(entry.id.as_str()) {
                return Err(Error::Corpus(format!("duplicate image id {:?}", entry.id)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.base_dir.join(relative)
    }

    pub fn entry(&self, id: &str) -> Option<&ManifestEntry> {
        self.images.iter().find(|e| e.id == id)
    }

    pub fn band_order(&self) -> Result<[BandName; 12]> {
        self.band_order
            .clone()
            .try_into()
            .map_err(|v: Vec<BandName>| Error::BandCount(v.len()))
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Manifest::parse(&text, base)
}

/// Reads one manifest entry into a validated scene, resampling bands onto
/// the label grid with nearest-neighbor when their shape differs.
pub fn load_scene(manifest: &Manifest, entry: &ManifestEntry) -> Result<Scene> {
    let image = read_npy(manifest.resolve(&entry.image))?;
    let label = label_from_array(&read_npy(manifest.resolve(&entry.label))?)?;
    let bands = bands_from_array(&image, &manifest.band_order()?)?;
    let bands = bands
        .into_iter()
        .map(|band| {
            if band.width() == label.width() && band.height() == label.height() {
                Ok(band)
            } else {
                let grid = resample_nearest(band.grid(), label.width(), label.height());
                Band::new(band.name(), band.kind(), grid)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Scene::new(entry.id.clone(), bands, label)
}

/// Splits an H x W x 12 array into bands, returned in canonical order.
///
/// `band_order[i]` names the band stored in channel `i`.
pub fn bands_from_array(array: &NpyArray, band_order: &[BandName; 12]) -> Result<Vec<Band>> {
    let (h, w, c) = match *array.shape() {
        [h, w, c] => (h, w, c),
        [_, _] => return Err(Error::BandCount(1)),
        ref other => {
            return Err(Error::Shape(format!(
                "image must be H x W x 12, got shape {other:?}"
            )))
        }
    };
    if c != 12 {
        return Err(Error::BandCount(c));
    }
    let kind = if array.is_integer() {
        ValueKind::Raw16
    } else {
        ValueKind::Float
    };
    let data = array.data();
    let mut planes: Vec<Option<Band>> = vec![None; 12];
    for (channel, &name) in band_order.iter().enumerate() {
        let samples = (0..h * w).map(|i| data[i * 12 + channel]).collect();
        let band = Band::new(name, kind, Grid::new(w, h, samples)?)?;
        planes[name.index()] = Some(band);
    }
    planes
        .into_iter()
        .map(|b| b.ok_or_else(|| Error::Corpus("band_order is not a permutation".into())))
        .collect()
}

/// Builds a label from an H x W array, squeezing singleton axes first.
pub fn label_from_array(array: &NpyArray) -> Result<LabelMask> {
    let dims: Vec<usize> = array.shape().iter().copied().filter(|&d| d != 1).collect();
    let (h, w) = match (array.shape().len(), dims.as_slice()) {
        (_, [h, w]) => (*h, *w),
        (2, [_]) | (2, []) => (array.shape()[0], array.shape()[1]),
        _ => {
            return Err(Error::Shape(format!(
                "label must be H x W, got shape {:?}",
                array.shape()
            )))
        }
    };
    if w < MIN_BAND_SIDE || h < MIN_BAND_SIDE {
        return Err(Error::Shape(format!("label is {w}x{h}, too small")));
    }
    let values = array
        .data()
        .iter()
        .map(|&v| {
            if v == 0.0 {
                Ok(LabelMask::LAND)
            } else if v == 1.0 {
                Ok(LabelMask::WATER)
            } else {
                Err(Error::Label(format!("label value {v} is not 0 or 1")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    LabelMask::new(w, h, values)
}

/// Nearest-neighbor resampling onto a `width` x `height` grid, sampling
/// source pixel centers.
pub fn resample_nearest(grid: &Grid, width: usize, height: usize) -> Grid {
    let src_index = |dst: usize, dst_len: usize, src_len: usize| -> usize {
        let pos = ((dst as f64 + 0.5) * src_len as f64 / dst_len as f64).floor() as usize;
        pos.min(src_len - 1)
    };
    let xs: Vec<usize> = (0..width)
        .map(|x| src_index(x, width, grid.width()))
        .collect();
    Grid::from_fn(width, height, |x, y| {
        grid.get(xs[x], src_index(y, height, grid.height()))
    })
}
