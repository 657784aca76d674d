//! Coastline edge-detection benchmark toolkit.
//!
//! Multiband satellite chips are preprocessed band by band, run through one of
//! four edge detectors (Canny, Sobel, Scharr, Prewitt) and scored against a
//! reference edge map derived from the land/water label with RMSE, PSNR, SSIM
//! and UQI. The [`harness`] runs full experiment grids over a corpus and
//! writes CSV, markdown and plot-ready reports; [`synth`] generates seeded
//! synthetic corpora so everything runs without external data.

pub mod edgedetect;
pub mod error;
pub mod filter;
pub mod harness;
pub mod metrics;
pub mod preprocess;
pub mod raster;
pub mod synth;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
