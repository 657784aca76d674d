use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use coastedge::edgedetect::{
    detect, Algorithm, CannyParams, DetectParams, Smoothing, DEFAULT_CANNY_HIGH, DEFAULT_CANNY_LOW,
    DEFAULT_CANNY_SMOOTHING_KERNEL, DEFAULT_CANNY_SMOOTHING_SIGMA,
};
use coastedge::harness::{
    self, aggregates_csv, emit_report, markdown_tables, parse_records_csv, plotdata_csv,
    ExperimentKind, ExperimentSpec, Figure,
};
use coastedge::metrics::{
    aggregate_all, compute_all, MetricParams, DEFAULT_SSIM_SIGMA, DEFAULT_SSIM_WINDOW,
    DEFAULT_UQI_WINDOW,
};
use coastedge::preprocess::{
    run_pipeline, NoiseReduction, PreprocessSpec, DEFAULT_CLOSING_ELEMENT, DEFAULT_GAUSSIAN_KERNEL,
    DEFAULT_GAUSSIAN_SIGMA,
};
use coastedge::raster::{
    bands_from_array, label_from_array, load_manifest, read_npy, write_npy, write_pgm, Band,
    BandName, Grid, ValueKind,
};
use coastedge::synth::{
    self, Boundary, Development, SynthSpec, DEFAULT_CONTRAST, DEFAULT_DEVELOPMENT_INTENSITY,
    DEFAULT_DEVELOPMENT_SIZE, DEFAULT_NOISE_SIGMA, DEFAULT_SINUSOID_AMPLITUDE,
    DEFAULT_SINUSOID_PERIOD, DEFAULT_SIZE,
};
use coastedge::{Error, Result};

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_CELL_ERRORS: u8 = 3;

#[derive(Parser)]
#[command(
    name = "coastedge",
    version,
    about = "Coastline edge-detection benchmark toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Preprocess one band of a chip and write its edge map.
    Detect(DetectArgs),
    /// Run an experiment grid over a corpus and write reports.
    Evaluate(EvaluateArgs),
    /// Generate a seeded synthetic corpus.
    Synth(SynthArgs),
    /// Re-aggregate a records.csv without re-running detection.
    Report(ReportArgs),
}

#[derive(Args)]
struct PreprocessFlags {
    /// Gaussian blur kernel size (odd).
    #[arg(long, default_value_t = DEFAULT_GAUSSIAN_KERNEL)]
    gaussian_kernel: usize,
    /// Gaussian blur sigma.
    #[arg(long, default_value_t = DEFAULT_GAUSSIAN_SIGMA)]
    gaussian_sigma: f64,
    /// Morphological closing element size (odd).
    #[arg(long, default_value_t = DEFAULT_CLOSING_ELEMENT)]
    closing_element: usize,
}

impl PreprocessFlags {
    fn spec(&self, equalize: bool, noise: NoiseReduction) -> PreprocessSpec {
        PreprocessSpec {
            equalize,
            noise_reduction: noise,
            gaussian_kernel_size: self.gaussian_kernel,
            gaussian_sigma: self.gaussian_sigma,
            closing_element: self.closing_element,
        }
    }
}

#[derive(Args)]
struct DetectFlags {
    /// Canny low hysteresis threshold on the 0-255 normalized magnitude.
    #[arg(long, default_value_t = DEFAULT_CANNY_LOW)]
    canny_low: f64,
    /// Canny high hysteresis threshold on the 0-255 normalized magnitude.
    #[arg(long, default_value_t = DEFAULT_CANNY_HIGH)]
    canny_high: f64,
    /// Canny internal Gaussian smoothing kernel size; 0 disables smoothing.
    #[arg(long, default_value_t = DEFAULT_CANNY_SMOOTHING_KERNEL)]
    canny_smoothing_kernel: usize,
    /// Canny internal Gaussian smoothing sigma.
    #[arg(long, default_value_t = DEFAULT_CANNY_SMOOTHING_SIGMA)]
    canny_smoothing_sigma: f64,
    /// Binarize gradient maps at this level (0-255) [default: off]
    #[arg(long)]
    binarize: Option<u8>,
}

impl DetectFlags {
    fn params(&self) -> DetectParams {
        let smoothing = (self.canny_smoothing_kernel > 0).then_some(Smoothing {
            kernel_size: self.canny_smoothing_kernel,
            sigma: self.canny_smoothing_sigma,
        });
        DetectParams {
            canny: CannyParams {
                low_threshold: self.canny_low,
                high_threshold: self.canny_high,
                smoothing,
            },
            binarize: self.binarize,
        }
    }
}

#[derive(Args)]
struct MetricFlags {
    /// SSIM Gaussian window size (odd).
    #[arg(long, default_value_t = DEFAULT_SSIM_WINDOW)]
    ssim_window: usize,
    /// SSIM Gaussian window sigma.
    #[arg(long, default_value_t = DEFAULT_SSIM_SIGMA)]
    ssim_sigma: f64,
    /// UQI uniform window size.
    #[arg(long, default_value_t = DEFAULT_UQI_WINDOW)]
    uqi_window: usize,
}

impl MetricFlags {
    fn params(&self) -> MetricParams {
        MetricParams {
            ssim_window: self.ssim_window,
            ssim_sigma: self.ssim_sigma,
            uqi_window: self.uqi_window,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EdgeFormat {
    Npy,
    Pgm,
}

#[derive(Args)]
struct DetectArgs {
    /// Image chip: NPY array of H x W x 12 bands (canonical order) or a single H x W band.
    #[arg(long)]
    input: PathBuf,
    /// Optional NPY land/water label; when given, metrics are printed as CSV.
    #[arg(long)]
    label: Option<PathBuf>,
    /// Band name, e.g. CoastalAerosol or NIR.
    #[arg(long)]
    band: String,
    /// Edge detector: canny, sobel, scharr or prewitt.
    #[arg(long, default_value = "canny")]
    algorithm: String,
    /// Apply histogram equalization (true/false).
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    equalize: bool,
    /// Noise reduction: none, gaussian or closing.
    #[arg(long, default_value = "gaussian")]
    noise: String,
    #[command(flatten)]
    preprocess: PreprocessFlags,
    #[command(flatten)]
    detect: DetectFlags,
    #[command(flatten)]
    metrics: MetricFlags,
    /// Output edge-map path.
    #[arg(long)]
    out: PathBuf,
    /// Output format.
    #[arg(long, value_enum, default_value_t = EdgeFormat::Pgm)]
    format: EdgeFormat,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Corpus manifest.json.
    #[arg(long)]
    manifest: PathBuf,
    /// Experiment: table1, equalization, noise, band-dump or all.
    #[arg(long, default_value = "table1")]
    experiment: String,
    /// Report directory.
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[command(flatten)]
    preprocess: PreprocessFlags,
    #[command(flatten)]
    detect: DetectFlags,
    #[command(flatten)]
    metrics: MetricFlags,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryKind {
    Sinusoid,
    Halfplane,
    Blob,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of scenes.
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Scene side length in pixels.
    #[arg(long, default_value_t = DEFAULT_SIZE)]
    size: usize,
    /// Seed of the first scene; scene i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standard deviation of the per-pixel Gaussian noise.
    #[arg(long, default_value_t = DEFAULT_NOISE_SIGMA)]
    noise_sigma: f64,
    /// Land/water intensity scale (values below 1 give low-contrast scenes).
    #[arg(long, default_value_t = DEFAULT_CONTRAST)]
    contrast: f64,
    /// Number of bright development rectangles per scene.
    #[arg(long, default_value_t = 0)]
    development: usize,
    /// Development rectangle side length.
    #[arg(long, default_value_t = DEFAULT_DEVELOPMENT_SIZE)]
    development_size: usize,
    /// Development intensity as a multiple of the land mean.
    #[arg(long, default_value_t = DEFAULT_DEVELOPMENT_INTENSITY)]
    development_intensity: f64,
    /// Boundary shape.
    #[arg(long, value_enum, default_value_t = BoundaryKind::Sinusoid)]
    boundary: BoundaryKind,
    /// Sinusoid amplitude in pixels.
    #[arg(long, default_value_t = DEFAULT_SINUSOID_AMPLITUDE)]
    amplitude: f64,
    /// Sinusoid period in pixels.
    #[arg(long, default_value_t = DEFAULT_SINUSOID_PERIOD)]
    period: f64,
    /// Output directory.
    #[arg(long, default_value = "corpus")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Markdown,
    Csv,
    Plotdata,
}

#[derive(Args)]
struct ReportArgs {
    /// records.csv written by evaluate.
    #[arg(long)]
    records: PathBuf,
    /// Output format.
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    format: ReportFormat,
    /// Output directory [default: print to standard output]
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Error plus the exit code it maps to.
struct Failure {
    code: u8,
    error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = if error.is_io() {
            EXIT_IO
        } else {
            EXIT_VALIDATION
        };
        Failure { code, error }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Detect(args) => cmd_detect(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Report(args) => cmd_report(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load_band(path: &Path, name: BandName) -> Result<Band> {
    let array = read_npy(path)?;
    if array.shape().len() == 2 {
        let (h, w) = (array.shape()[0], array.shape()[1]);
        let kind = if array.is_integer() {
            ValueKind::Raw16
        } else {
            ValueKind::Float
        };
        return Band::new(name, kind, Grid::new(w, h, array.into_data())?);
    }
    let bands = bands_from_array(&array, &BandName::ALL)?;
    Ok(bands.into_iter().nth(name.index()).expect("twelve bands"))
}

fn cmd_detect(args: DetectArgs) -> std::result::Result<u8, Failure> {
    let band_name: BandName = args.band.parse()?;
    let algorithm: Algorithm = args.algorithm.parse()?;
    let noise: NoiseReduction = args.noise.parse()?;
    let preprocess = args.preprocess.spec(args.equalize, noise);
    preprocess.validate()?;
    let detect_params = args.detect.params();
    detect_params.canny.validate()?;
    let metric_params = args.metrics.params();
    metric_params.validate()?;

    let band = load_band(&args.input, band_name)?;
    let prepared = run_pipeline(&band, &preprocess)?;
    let edges = detect(&prepared, algorithm, &detect_params)?;
    match args.format {
        EdgeFormat::Npy => write_npy(&edges.to_npy(), &args.out)?,
        EdgeFormat::Pgm => write_pgm(&edges, &args.out)?,
    }
    if let Some(label_path) = &args.label {
        let label = label_from_array(&read_npy(label_path)?)?;
        let reference = harness::derive_reference(&label, &detect_params.canny)?;
        let v = compute_all(&edges, &reference, &metric_params)?;
        println!("{},{},{},{}", v.rmse, v.psnr, v.ssim, v.uqi);
    }
    Ok(0)
}

fn experiment_kinds(name: &str) -> Result<Vec<ExperimentKind>> {
    if name == "all" {
        return Ok(ExperimentSpec::all().kinds);
    }
    name.split(',').map(|s| s.trim().parse()).collect()
}

fn corpus_failure(error: Error) -> Failure {
    Failure {
        code: EXIT_IO,
        error,
    }
}

fn cmd_evaluate(args: EvaluateArgs) -> std::result::Result<u8, Failure> {
    let mut spec = ExperimentSpec::new(experiment_kinds(&args.experiment)?);
    spec.preprocess = args.preprocess.spec(true, NoiseReduction::Gaussian);
    spec.detect = args.detect.params();
    spec.metrics = args.metrics.params();
    spec.workers = args.workers;
    spec.validate()?;

    let manifest = load_manifest(&args.manifest).map_err(corpus_failure)?;
    let result = harness::run_experiment(&manifest, &spec)?;
    emit_report(&result, &args.out_dir)?;
    if spec.kinds.contains(&ExperimentKind::BandDump) {
        for (id, e) in harness::dump_corpus_edges(&manifest, &spec, args.out_dir.join("band_dump"))?
        {
            eprintln!("band dump skipped {id}: {e}");
        }
    }
    print!("{}", markdown_tables(&result.aggregates));
    let errors = result.error_count();
    if errors > 0 {
        eprintln!(
            "{errors} of {} cells failed; see provenance.json",
            result.records.len()
        );
        return Ok(EXIT_CELL_ERRORS);
    }
    Ok(0)
}

fn cmd_synth(args: SynthArgs) -> std::result::Result<u8, Failure> {
    let boundary = match args.boundary {
        BoundaryKind::Sinusoid => Boundary::Sinusoid {
            amplitude: args.amplitude,
            period: args.period,
        },
        BoundaryKind::Halfplane => Boundary::HalfPlane {
            column: args.size / 2,
        },
        BoundaryKind::Blob => Boundary::Blob,
    };
    let spec = SynthSpec {
        size: args.size,
        seed: args.seed,
        boundary,
        noise_sigma: args.noise_sigma,
        contrast: args.contrast,
        development: Development {
            count: args.development,
            size: args.development_size,
            intensity: args.development_intensity,
        },
        ..SynthSpec::default()
    };
    synth::generate_corpus(args.n, &spec, &args.out_dir)?;
    println!("{}", args.out_dir.join("manifest.json").display());
    Ok(0)
}

fn write_out(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::Io { path, source: e })
}

fn cmd_report(args: ReportArgs) -> std::result::Result<u8, Failure> {
    let text = fs::read_to_string(&args.records).map_err(|e| Error::Io {
        path: args.records.clone(),
        source: e,
    })?;
    let cells = aggregate_all(&parse_records_csv(&text)?);
    match (args.format, &args.out) {
        (ReportFormat::Csv, None) => print!("{}", aggregates_csv(&cells)),
        (ReportFormat::Csv, Some(dir)) => {
            write_out(dir, "aggregates.csv", &aggregates_csv(&cells))?
        }
        (ReportFormat::Markdown, None) => print!("{}", markdown_tables(&cells)),
        (ReportFormat::Markdown, Some(dir)) => {
            write_out(dir, "table1.md", &markdown_tables(&cells))?
        }
        (ReportFormat::Plotdata, out) => {
            for figure in [Figure::Equalization, Figure::NoiseReduction] {
                if let Some(data) = plotdata_csv(&cells, figure) {
                    match out {
                        Some(dir) => write_out(dir, figure.file_name(), &data)?,
                        None => print!("# {}\n{data}", figure.file_name()),
                    }
                }
            }
        }
    }
    Ok(0)
}
