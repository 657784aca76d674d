//! Experiment grids over a corpus: reference derivation, per-cell scoring,
//! aggregation and report emission.
//!
//! Cells are independent. Images are processed in parallel on a dedicated
//! pool and the resulting records are sorted canonically before
//! aggregation, so output does not depend on the worker count.

mod report;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::edgedetect::{canny, detect, Algorithm, CannyParams, DetectParams};
use crate::error::{Error, Result};
use crate::metrics::{
    aggregate_all, compute_all, sort_records, AggregateCell, MetricParams, MetricRecord,
};
use crate::preprocess::{run_pipeline, variant_rank, NoiseReduction, PreprocessSpec};
use crate::raster::{
    load_scene, write_pgm, Band, BandName, EdgeMap, LabelMask, Manifest, Scene, ValueKind,
};

pub use report::{
    aggregates_csv, emit_aggregate_reports, emit_report, format_mean_std, markdown_tables,
    parse_records_csv, plotdata_csv, records_csv, Figure, AGGREGATES_HEADER, RECORDS_HEADER,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Every algorithm under the full pipeline (scale, equalize, blur).
    Table1,
    /// Canny with equalization on and off.
    EqualizationAblation,
    /// Canny with no noise reduction, Gaussian blur and closing.
    NoiseAblation,
    /// Full-pipeline scoring plus one edge image per band and scene.
    BandDump,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Table1 => "table1",
            ExperimentKind::EqualizationAblation => "equalization",
            ExperimentKind::NoiseAblation => "noise",
            ExperimentKind::BandDump => "band-dump",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table1" => Ok(ExperimentKind::Table1),
            "equalization" => Ok(ExperimentKind::EqualizationAblation),
            "noise" => Ok(ExperimentKind::NoiseAblation),
            "band-dump" => Ok(ExperimentKind::BandDump),
            other => Err(Error::Param(format!(
                "unknown experiment {other:?}; expected table1, equalization, noise or band-dump"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kinds: Vec<ExperimentKind>,
    /// Algorithms for the table1 and band-dump grids; ablations always use Canny.
    pub algorithms: Vec<Algorithm>,
    /// Kernel and element sizes; the equalize/noise switches are set per variant.
    pub preprocess: PreprocessSpec,
    pub detect: DetectParams,
    pub metrics: MetricParams,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec::new(vec![ExperimentKind::Table1])
    }
}

impl ExperimentSpec {
    pub fn new(kinds: Vec<ExperimentKind>) -> Self {
        ExperimentSpec {
            kinds,
            algorithms: Algorithm::ALL.to_vec(),
            preprocess: PreprocessSpec::default(),
            detect: DetectParams::default(),
            metrics: MetricParams::default(),
            workers: 0,
        }
    }

    /// Every experiment in one grid.
    pub fn all() -> Self {
        ExperimentSpec::new(vec![
            ExperimentKind::Table1,
            ExperimentKind::EqualizationAblation,
            ExperimentKind::NoiseAblation,
        ])
    }

    pub fn validate(&self) -> Result<()> {
        if self.kinds.is_empty() {
            return Err(Error::Param("no experiment selected".into()));
        }
        self.preprocess.validate()?;
        self.detect.canny.validate()?;
        self.metrics.validate()
    }

    /// The distinct (algorithm, preprocessing) cells to evaluate per band,
    /// in canonical order.
    pub fn cells(&self) -> Vec<(Algorithm, PreprocessSpec)> {
        let base = self.preprocess;
        let mut cells = Vec::new();
        for kind in &self.kinds {
            match kind {
                ExperimentKind::Table1 | ExperimentKind::BandDump => {
                    for &a in &self.algorithms {
                        cells.push((a, base.with(true, NoiseReduction::Gaussian)));
                    }
                }
                ExperimentKind::EqualizationAblation => {
                    for eq in [true, false] {
                        cells.push((Algorithm::Canny, base.with(eq, NoiseReduction::Gaussian)));
                    }
                }
                ExperimentKind::NoiseAblation => {
                    for noise in NoiseReduction::ALL {
                        cells.push((Algorithm::Canny, base.with(true, noise)));
                    }
                }
            }
        }
        let key = |(a, p): &(Algorithm, PreprocessSpec)| {
            (*a, variant_rank(p.equalize, p.noise_reduction))
        };
        cells.sort_by_key(key);
        cells.dedup_by_key(|c| key(c));
        cells
    }
}

/// Failure note copied into the provenance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub image_id: String,
    pub band: BandName,
    pub algorithm: Algorithm,
    pub preprocess: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub toolkit_version: String,
    pub corpus_hash: String,
    pub experiment: ExperimentSpec,
    pub n_images: usize,
    pub n_records: usize,
    pub n_error_records: usize,
    pub failures: Vec<CellFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub records: Vec<MetricRecord>,
    pub aggregates: Vec<AggregateCell>,
    pub provenance: Provenance,
}

impl RunResult {
    pub fn error_count(&self) -> usize {
        self.provenance.n_error_records
    }
}

/// Reference edges from a land/water label: Canny on the label scaled to
/// {0, 255}, thresholds from `params`, internal smoothing off.
pub fn derive_reference(label: &LabelMask, params: &CannyParams) -> Result<EdgeMap> {
    let band = Band::new(BandName::Blue, ValueKind::Scaled8, label.to_grid())?;
    canny(&band, &params.without_smoothing())
}

/// Scores one already-preprocessed band against a reference.
fn score(
    scene_id: &str,
    band: &Band,
    algorithm: Algorithm,
    tag: &str,
    reference: &EdgeMap,
    detect_params: &DetectParams,
    metric_params: &MetricParams,
) -> MetricRecord {
    let outcome = detect(band, algorithm, detect_params)
        .and_then(|edges| compute_all(&edges, reference, metric_params));
    match outcome {
        Ok(values) => MetricRecord {
            image_id: scene_id.to_string(),
            band: band.name(),
            algorithm,
            preprocess: tag.to_string(),
            values,
            error: None,
        },
        Err(e) => MetricRecord::failed(scene_id, band.name(), algorithm, tag, e),
    }
}

/// Preprocess, detect and score a single (band, algorithm, variant) cell.
/// Failures become error records.
pub fn run_cell(
    scene: &Scene,
    band: BandName,
    algorithm: Algorithm,
    preprocess: &PreprocessSpec,
    detect_params: &DetectParams,
    metric_params: &MetricParams,
) -> MetricRecord {
    let tag = preprocess.tag();
    let prepared = derive_reference(scene.label(), &detect_params.canny)
        .and_then(|reference| run_pipeline(scene.band(band), preprocess).map(|b| (reference, b)));
    match prepared {
        Ok((reference, b)) => score(
            scene.id(),
            &b,
            algorithm,
            &tag,
            &reference,
            detect_params,
            metric_params,
        ),
        Err(e) => MetricRecord::failed(scene.id(), band, algorithm, &tag, e),
    }
}

fn failed_image(
    image_id: &str,
    cells: &[(Algorithm, PreprocessSpec)],
    error: &Error,
) -> Vec<MetricRecord> {
    BandName::ALL
        .iter()
        .flat_map(|&band| {
            cells
                .iter()
                .map(move |(a, p)| MetricRecord::failed(image_id, band, *a, &p.tag(), error))
        })
        .collect()
}

/// Every cell of one scene, preprocessing each (band, variant) once.
fn run_scene(
    scene: &Scene,
    spec: &ExperimentSpec,
    cells: &[(Algorithm, PreprocessSpec)],
) -> Vec<MetricRecord> {
    let reference = match derive_reference(scene.label(), &spec.detect.canny) {
        Ok(r) => r,
        Err(e) => return failed_image(scene.id(), cells, &e),
    };
    let mut records = Vec::with_capacity(12 * cells.len());
    for band in scene.bands() {
        let mut variants: Vec<PreprocessSpec> = Vec::new();
        for (_, p) in cells {
            if !variants.contains(p) {
                variants.push(*p);
            }
        }
        for variant in variants {
            let tag = variant.tag();
            let algorithms = cells.iter().filter(|(_, p)| *p == variant).map(|(a, _)| *a);
            match run_pipeline(band, &variant) {
                Ok(prepared) => records.extend(algorithms.map(|a| {
                    score(
                        scene.id(),
                        &prepared,
                        a,
                        &tag,
                        &reference,
                        &spec.detect,
                        &spec.metrics,
                    )
                })),
                Err(e) => records.extend(
                    algorithms.map(|a| MetricRecord::failed(scene.id(), band.name(), a, &tag, &e)),
                ),
            }
        }
    }
    records
}

/// Content hash of the manifest plus the size of every referenced file.
pub fn corpus_hash(manifest: &Manifest) -> String {
    let mut hasher = Sha256::new();
    hasher.update(manifest.to_json().as_bytes());
    for entry in &manifest.images {
        for rel in [&entry.image, &entry.label] {
            let size = fs::metadata(manifest.resolve(rel))
                .map(|m| m.len() as i64)
                .unwrap_or(-1);
            hasher.update(format!("{}\t{rel}\t{size}\n", entry.id).as_bytes());
        }
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Param(format!("cannot start worker pool: {e}")))
}

/// Runs the grid described by `spec` over every manifest image.
pub fn run_experiment(manifest: &Manifest, spec: &ExperimentSpec) -> Result<RunResult> {
    spec.validate()?;
    let cells = spec.cells();
    let mut entries: Vec<_> = manifest.images.iter().collect();
    entries.sort_by(|a, b| a.id.cmp(&b.id));

    let pool = build_pool(spec.workers)?;
    let per_image: Vec<Vec<MetricRecord>> = pool.install(|| {
        entries
            .par_iter()
            .map(|entry| match load_scene(manifest, entry) {
                Ok(scene) => run_scene(&scene, spec, &cells),
                Err(e) => failed_image(&entry.id, &cells, &e),
            })
            .collect()
    });
    let mut records: Vec<MetricRecord> = per_image.into_iter().flatten().collect();
    sort_records(&mut records);
    let aggregates = aggregate_all(&records);

    let failures: Vec<CellFailure> = records
        .iter()
        .filter_map(|r| {
            r.error.as_ref().map(|e| CellFailure {
                image_id: r.image_id.clone(),
                band: r.band,
                algorithm: r.algorithm,
                preprocess: r.preprocess.clone(),
                error: e.clone(),
            })
        })
        .collect();
    let provenance = Provenance {
        toolkit_version: crate::VERSION.to_string(),
        corpus_hash: corpus_hash(manifest),
        experiment: spec.clone(),
        n_images: entries.len(),
        n_records: records.len(),
        n_error_records: failures.len(),
        failures,
    };
    Ok(RunResult {
        records,
        aggregates,
        provenance,
    })
}

/// Writes one edge image per band, named `NN_<Band>_<algorithm>.pgm` with
/// `NN` the 1-based canonical band position.
pub fn dump_band_edges(
    scene: &Scene,
    algorithm: Algorithm,
    preprocess: &PreprocessSpec,
    detect_params: &DetectParams,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut paths = Vec::with_capacity(12);
    for band in scene.bands() {
        let prepared = run_pipeline(band, preprocess)?;
        let edges = detect(&prepared, algorithm, detect_params)?;
        let path = out_dir.join(format!(
            "{:02}_{}_{}.pgm",
            band.name().index() + 1,
            band.name(),
            algorithm
        ));
        write_pgm(&edges, &path)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Band dumps for every scene in the manifest, one subdirectory per image.
/// Scenes that fail to load are skipped and reported.
pub fn dump_corpus_edges(
    manifest: &Manifest,
    spec: &ExperimentSpec,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<(String, Error)>> {
    let preprocess = spec.preprocess.with(true, NoiseReduction::Gaussian);
    let mut skipped = Vec::new();
    for entry in &manifest.images {
        match load_scene(manifest, entry) {
            Ok(scene) => {
                for &a in &spec.algorithms {
                    dump_band_edges(
                        &scene,
                        a,
                        &preprocess,
                        &spec.detect,
                        out_dir.as_ref().join(&entry.id),
                    )?;
                }
            }
            Err(e) => skipped.push((entry.id.clone(), e)),
        }
    }
    Ok(skipped)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shapes() {
        assert_eq!(
            ExperimentSpec::new(vec![ExperimentKind::Table1])
                .cells()
                .len(),
            4
        );
        assert_eq!(
            ExperimentSpec::new(vec![ExperimentKind::EqualizationAblation])
                .cells()
                .len(),
            2
        );
        assert_eq!(
            ExperimentSpec::new(vec![ExperimentKind::NoiseAblation])
                .cells()
                .len(),
            3
        );
        // the Canny full-pipeline cell is shared by all three experiments
        assert_eq!(ExperimentSpec::all().cells().len(), 4 + 1 + 2);
        let tags: Vec<String> = ExperimentSpec::all()
            .cells()
            .iter()
            .filter(|(a, _)| *a == Algorithm::Canny)
            .map(|(_, p)| p.tag())
            .collect();
        assert_eq!(
            tags,
            ["eq-gaussian", "noeq-gaussian", "eq-none", "eq-closing"]
        );
    }

    #[test]
    fn reference_of_uniform_label_is_empty() {
        let label = LabelMask::new(16, 16, vec![1; 256]).unwrap();
        let r = derive_reference(&label, &CannyParams::default()).unwrap();
        assert_eq!(r.edge_count(), 0);
    }

    #[test]
    fn reference_of_half_plane_is_one_column() {
        let label =
            LabelMask::new(20, 12, (0..240).map(|i| u8::from(i % 20 >= 9)).collect()).unwrap();
        let r = derive_reference(&label, &CannyParams::default()).unwrap();
        for y in 0..12 {
            let cols: Vec<usize> = (0..20).filter(|&x| r.get(x, y) == 255).collect();
            assert_eq!(cols, vec![8]);
        }
    }

    #[test]
    fn experiment_names_parse() {
        for k in [
            ExperimentKind::Table1,
            ExperimentKind::EqualizationAblation,
            ExperimentKind::NoiseAblation,
            ExperimentKind::BandDump,
        ] {
            assert_eq!(k.as_str().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("fig7".parse::<ExperimentKind>().is_err());
    }
}
