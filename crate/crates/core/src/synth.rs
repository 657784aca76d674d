//! Seeded synthetic coastline scenes.
//!
//! Randomness comes from ChaCha8 keyed with the seed's little-endian bytes in
//! the first 8 key bytes (remaining key bytes zero, stream 0). Uniforms take
//! the top 53 bits of each 64-bit output; normals use the cosine branch of
//! Box-Muller on two uniforms. Draw order is fixed:
//!
//! 1. boundary shape parameters (sinusoid phase, or blob harmonics),
//! 2. development rectangle placement attempts (two uniforms each),
//! 3. one normal per pixel, bands in canonical order, pixels row-major.
//!
//! Raw samples are rounded half up and clamped to the u16 range, so a scene
//! survives an NPY round trip unchanged.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{
    round_half_up, write_npy, Band, BandName, Dtype, Grid, LabelMask, Manifest, ManifestEntry,
    Scene, ValueKind,
};

pub const DEFAULT_SIZE: usize = 256;
pub const DEFAULT_NOISE_SIGMA: f64 = 650.0;
pub const DEFAULT_CONTRAST: f64 = 1.0;
pub const DEFAULT_SINUSOID_AMPLITUDE: f64 = 4.0;
pub const DEFAULT_SINUSOID_PERIOD: f64 = 128.0;
pub const DEFAULT_DEVELOPMENT_SIZE: usize = 8;
pub const DEFAULT_DEVELOPMENT_INTENSITY: f64 = 3.0;

/// Land and water raw means per band, canonical order. Separations sit in a
/// narrow 600-1000 band so one noise level stresses every band similarly.
pub const DEFAULT_CLASS_MEANS: [ClassMeans; 12] = [
    ClassMeans::new(1500.0, 900.0),
    ClassMeans::new(1400.0, 750.0),
    ClassMeans::new(1400.0, 700.0),
    ClassMeans::new(1450.0, 700.0),
    ClassMeans::new(1600.0, 800.0),
    ClassMeans::new(1700.0, 800.0),
    ClassMeans::new(1800.0, 850.0),
    ClassMeans::new(1900.0, 900.0),
    ClassMeans::new(1900.0, 900.0),
    ClassMeans::new(1000.0, 400.0),
    ClassMeans::new(1500.0, 600.0),
    ClassMeans::new(1200.0, 400.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMeans {
    pub land: f64,
    pub water: f64,
}

impl ClassMeans {
    pub const fn new(land: f64, water: f64) -> Self {
        ClassMeans { land, water }
    }
}

/// Shape of the land/water boundary. Land lies left of (or inside) it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Boundary {
    /// Land where `x < column`.
    HalfPlane { column: usize },
    /// Land left of `size/2 + amplitude * sin(2 pi y / period + phase)`,
    /// with the phase drawn from the seed.
    Sinusoid { amplitude: f64, period: f64 },
    /// Land island around the center with a seeded, lobed outline.
    Blob,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Development {
    pub count: usize,
    /// Side length of each square rectangle, pixels.
    pub size: usize,
    /// Rectangle intensity as a multiple of the band's land mean.
    pub intensity: f64,
}

impl Default for Development {
    fn default() -> Self {
        Development {
            count: 0,
            size: DEFAULT_DEVELOPMENT_SIZE,
            intensity: DEFAULT_DEVELOPMENT_INTENSITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub size: usize,
    pub seed: u64,
    pub boundary: Boundary,
    pub means: [ClassMeans; 12],
    pub noise_sigma: f64,
    /// Scales land/water intensities (noise included) toward zero while
    /// development rectangles keep their full intensity.
    pub contrast: f64,
    pub development: Development,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            size: DEFAULT_SIZE,
            seed: 0,
            boundary: Boundary::Sinusoid {
                amplitude: DEFAULT_SINUSOID_AMPLITUDE,
                period: DEFAULT_SINUSOID_PERIOD,
            },
            means: DEFAULT_CLASS_MEANS,
            noise_sigma: DEFAULT_NOISE_SIGMA,
            contrast: DEFAULT_CONTRAST,
            development: Development::default(),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.size < 16 {
            return Err(Error::Param(format!(
                "scene size must be >= 16, got {}",
                self.size
            )));
        }
        if !self.means.iter().any(|m| m.land != m.water) {
            return Err(Error::Param(
                "land and water means are equal in every band".into(),
            ));
        }
        if self.means.iter().any(|m| {
            !(m.land >= 0.0 && m.water >= 0.0 && m.land.is_finite() && m.water.is_finite())
        }) {
            return Err(Error::Param(
                "class means must be finite and non-negative".into(),
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Param(format!(
                "noise sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        if !(self.contrast > 0.0 && self.contrast.is_finite()) {
            return Err(Error::Param(format!(
                "contrast must be positive, got {}",
                self.contrast
            )));
        }
        match self.boundary {
            Boundary::HalfPlane { column } if column == 0 || column >= self.size => {
                return Err(Error::Param(format!(
                    "half-plane column must lie in 1..{}, got {column}",
                    self.size
                )))
            }
            Boundary::Sinusoid { amplitude, period }
                if !(amplitude >= 0.0 && period > 0.0) || amplitude >= self.size as f64 / 2.0 =>
            {
                return Err(Error::Param(format!(
                    "sinusoid needs 0 <= amplitude < size/2 and period > 0, got {amplitude}, {period}"
                )))
            }
            _ => {}
        }
        let dev = &self.development;
        if dev.count > 0 && (dev.size == 0 || dev.size * 4 > self.size || dev.intensity <= 0.0) {
            return Err(Error::Param(format!(
                "development rectangles need 0 < size <= scene/4 and positive intensity, got {dev:?}"
            )));
        }
        Ok(())
    }
}

struct Stream(ChaCha8Rng);

impl Stream {
    fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        Stream(ChaCha8Rng::from_seed(key))
    }

    /// Uniform in [0, 1).
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }
}

fn build_label(spec: &SynthSpec, rng: &mut Stream) -> LabelMask {
    let n = spec.size;
    let center = n as f64 / 2.0;
    let is_land: Box<dyn Fn(f64, f64) -> bool> = match spec.boundary {
        Boundary::HalfPlane { column } => Box::new(move |x, _| x < column as f64),
        Boundary::Sinusoid { amplitude, period } => {
            let phase = 2.0 * PI * rng.uniform();
            Box::new(move |x, y| x < center + amplitude * (2.0 * PI * y / period + phase).sin())
        }
        Boundary::Blob => {
            let base = n as f64 / 4.0;
            let harmonics: Vec<(f64, f64)> = (2..=4)
                .map(|k| {
                    let amp = 0.15 * rng.uniform() / (k as f64 - 1.0);
                    let phase = 2.0 * PI * rng.uniform();
                    (amp, phase)
                })
                .collect();
            Box::new(move |x, y| {
                let (dx, dy) = (x - center, y - center);
                let theta = dy.atan2(dx);
                let radius = harmonics.iter().zip(2..).fold(1.0, |r, ((amp, phase), k)| {
                    r + amp * (k as f64 * theta + phase).sin()
                });
                dx.hypot(dy) < base * radius
            })
        }
    };
    let values = (0..n * n)
        .map(|i| {
            let (x, y) = ((i % n) as f64 + 0.5, (i / n) as f64 + 0.5);
            if is_land(x, y) {
                LabelMask::LAND
            } else {
                LabelMask::WATER
            }
        })
        .collect();
    LabelMask::new(n, n, values).expect("square label")
}

/// Places non-overlapping development squares fully on land with water
/// within twice their size. Returns top-left corners.
fn place_development(
    spec: &SynthSpec,
    label: &LabelMask,
    rng: &mut Stream,
) -> Result<Vec<(usize, usize)>> {
    let dev = spec.development;
    let n = spec.size;
    let mut placed: Vec<(usize, usize)> = Vec::new();
    const MAX_ATTEMPTS: usize = 20_000;
    let mut attempts = 0;
    while placed.len() < dev.count {
        if attempts == MAX_ATTEMPTS {
            return Err(Error::Param(format!(
                "could not place {} development rectangles of size {}",
                dev.count, dev.size
            )));
        }
        attempts += 1;
        let x0 = (rng.uniform() * (n - dev.size + 1) as f64) as usize;
        let y0 = (rng.uniform() * (n - dev.size + 1) as f64) as usize;
        let all_land = (y0..y0 + dev.size)
            .all(|y| (x0..x0 + dev.size).all(|x| label.get(x, y) == LabelMask::LAND));
        if !all_land {
            continue;
        }
        let gap = 1;
        let overlaps = placed.iter().any(|&(px, py)| {
            x0 < px + dev.size + gap
                && px < x0 + dev.size + gap
                && y0 < py + dev.size + gap
                && py < y0 + dev.size + gap
        });
        if overlaps {
            continue;
        }
        let reach = 2 * dev.size;
        let (ax, ay) = (x0.saturating_sub(reach), y0.saturating_sub(reach));
        let (bx, by) = (
            (x0 + dev.size + reach).min(n),
            (y0 + dev.size + reach).min(n),
        );
        let near_water = (ay..by).any(|y| (ax..bx).any(|x| label.get(x, y) == LabelMask::WATER));
        if near_water {
            placed.push((x0, y0));
        }
    }
    Ok(placed)
}

/// Generates one scene. Identical specs give bit-identical scenes.
pub fn generate_scene(spec: &SynthSpec) -> Result<Scene> {
    spec.validate()?;
    let mut rng = Stream::new(spec.seed);
    let label = build_label(spec, &mut rng);
    let rects = place_development(spec, &label, &mut rng)?;
    let n = spec.size;
    let mut developed = vec![false; n * n];
    for &(x0, y0) in &rects {
        for y in y0..y0 + spec.development.size {
            developed[y * n + x0..y * n + x0 + spec.development.size].fill(true);
        }
    }

    let mut bands = Vec::with_capacity(12);
    for (name, means) in BandName::ALL.into_iter().zip(&spec.means) {
        let dev_level = spec.development.intensity * means.land;
        let data = (0..n * n)
            .map(|i| {
                let noise = spec.noise_sigma * rng.normal();
                let raw = if developed[i] {
                    dev_level + noise
                } else if label.values()[i] == LabelMask::LAND {
                    spec.contrast * (means.land + noise)
                } else {
                    spec.contrast * (means.water + noise)
                };
                round_half_up(raw).clamp(0.0, u16::MAX as f64)
            })
            .collect();
        bands.push(Band::new(name, ValueKind::Raw16, Grid::new(n, n, data)?)?);
    }
    Scene::new(format!("synth-{}", spec.seed), bands, label)
}

fn scene_id(index: usize, n: usize) -> String {
    let width = n.saturating_sub(1).to_string().len().max(4);
    format!("scene_{index:0width$}")
}

/// Writes `n` scenes seeded `base.seed .. base.seed + n - 1` as NPY pairs
/// plus `manifest.json` under `out_dir`.
pub fn generate_corpus(n: usize, base: &SynthSpec, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    if n == 0 {
        return Err(Error::Param("corpus size must be at least 1".into()));
    }
    base.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let spec = SynthSpec {
            seed: base.seed.wrapping_add(i as u64),
            ..base.clone()
        };
        let scene = generate_scene(&spec)?;
        let id = scene_id(i, n);
        let entry = ManifestEntry {
            image: format!("{id}_image.npy"),
            label: format!("{id}_label.npy"),
            id,
        };
        write_npy(&scene.image_array(Dtype::U16)?, out_dir.join(&entry.image))?;
        write_npy(&scene.label_array(), out_dir.join(&entry.label))?;
        entries.push(entry);
    }
    let mut manifest = Manifest::new(entries);
    let path = out_dir.join("manifest.json");
    fs::write(&path, manifest.to_json()).map_err(|e| Error::io(&path, e))?;
    manifest.base_dir = out_dir.to_path_buf();
    Ok(manifest)
}
