//! CSV, markdown and plot-data serialization of run results.
//!
//! Floats are written in Rust's shortest round-trip form, with `inf`, `-inf`
//! and `nan` literals, so re-aggregating a parsed `records.csv` reproduces
//! `aggregates.csv` byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use super::RunResult;
use crate::edgedetect::Algorithm;
use crate::error::{Error, Result};
use crate::metrics::{AggregateCell, MetricName, MetricRecord, MetricValues};
use crate::preprocess::{variant_tag, NoiseReduction};
use crate::raster::BandName;

pub const RECORDS_HEADER: [&str; 9] = [
    "image_id",
    "band",
    "algorithm",
    "preprocess",
    "rmse",
    "psnr",
    "ssim",
    "uqi",
    "error",
];

pub const AGGREGATES_HEADER: [&str; 8] = [
    "band",
    "algorithm",
    "preprocess",
    "metric",
    "mean",
    "std",
    "n_included",
    "n_excluded",
];

fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        v.to_string()
    }
}

fn parse_float(s: &str) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" | "" => Ok(f64::NAN),
        _ => s
            .parse()
            .map_err(|_| Error::Records(format!("bad number {s:?}"))),
    }
}

fn csv_string(rows: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    rows(&mut writer).expect("writing to memory");
    let bytes = writer.into_inner().expect("flush to memory");
    String::from_utf8(bytes).expect("UTF-8 input")
}

pub fn records_csv(records: &[MetricRecord]) -> String {
    csv_string(|w| {
        w.write_record(RECORDS_HEADER)?;
        for r in records {
            w.write_record([
                r.image_id.as_str(),
                r.band.as_str(),
                r.algorithm.as_str(),
                r.preprocess.as_str(),
                &fmt_float(r.values.rmse),
                &fmt_float(r.values.psnr),
                &fmt_float(r.values.ssim),
                &fmt_float(r.values.uqi),
                r.error.as_deref().unwrap_or(""),
            ])?;
        }
        Ok(())
    })
}

pub fn parse_records_csv(text: &str) -> Result<Vec<MetricRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Records(e.to_string()))?
        .clone();
    if header.iter().ne(RECORDS_HEADER) {
        return Err(Error::Records(format!(
            "expected header {}, found {}",
            RECORDS_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut records = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Records(e.to_string()))?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let context = |e: Error| Error::Records(format!("row {}: {e}", line + 2));
        let band: BandName = field(1).parse().map_err(context)?;
        let algorithm: Algorithm = field(2).parse().map_err(context)?;
        crate::preprocess::parse_variant_tag(field(3)).map_err(context)?;
        let values = MetricValues {
            rmse: parse_float(field(4)).map_err(context)?,
            psnr: parse_float(field(5)).map_err(context)?,
            ssim: parse_float(field(6)).map_err(context)?,
            uqi: parse_float(field(7)).map_err(context)?,
        };
        let error = Some(field(8)).filter(|e| !e.is_empty()).map(str::to_string);
        records.push(MetricRecord {
            image_id: field(0).to_string(),
            band,
            algorithm,
            preprocess: field(3).to_string(),
            values,
            error,
        });
    }
    Ok(records)
}

pub fn aggregates_csv(cells: &[AggregateCell]) -> String {
    csv_string(|w| {
        w.write_record(AGGREGATES_HEADER)?;
        for c in cells {
            w.write_record([
                c.band.as_str(),
                c.algorithm.as_str(),
                c.preprocess.as_str(),
                c.metric.as_str(),
                &fmt_float(c.mean),
                &fmt_float(c.std),
                &c.n_included.to_string(),
                &c.n_excluded.to_string(),
            ])?;
        }
        Ok(())
    })
}

/// One decimal place with a trailing `.0` dropped, e.g. `13.2`, `13`, `0`.
fn one_decimal(v: f64) -> String {
    if !v.is_finite() {
        return fmt_float(v);
    }
    let s = format!("{v:.1}");
    let s = s.strip_suffix(".0").unwrap_or(&s);
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Table cell text `mean ± std`.
pub fn format_mean_std(mean: f64, std: f64) -> String {
    format!("{} ± {}", one_decimal(mean), one_decimal(std))
}

fn find<'a>(
    cells: &'a [AggregateCell],
    band: BandName,
    algorithm: Algorithm,
    tag: &str,
    metric: MetricName,
) -> Option<&'a AggregateCell> {
    cells.iter().find(|c| {
        c.band == band && c.algorithm == algorithm && c.preprocess == tag && c.metric == metric
    })
}

/// Markdown tables, one pair per preprocessing variant: PSNR/SSIM (the
/// results-table layout) then RMSE/UQI. Rows follow the canonical band order.
pub fn markdown_tables(cells: &[AggregateCell]) -> String {
    let mut tags: Vec<&str> = Vec::new();
    for c in cells {
        if !tags.contains(&c.preprocess.as_str()) {
            tags.push(&c.preprocess);
        }
    }
    let mut out = String::new();
    for tag in tags {
        let algorithms: Vec<Algorithm> = Algorithm::ALL
            .into_iter()
            .filter(|&a| {
                cells
                    .iter()
                    .any(|c| c.algorithm == a && c.preprocess == tag)
            })
            .collect();
        let bands: Vec<BandName> = BandName::ALL
            .into_iter()
            .filter(|&b| cells.iter().any(|c| c.band == b && c.preprocess == tag))
            .collect();
        for pair in [
            [MetricName::Psnr, MetricName::Ssim],
            [MetricName::Rmse, MetricName::Uqi],
        ] {
            out.push_str(&format!(
                "### {} / {} ({tag})\n\n| Band |",
                pair[0].display_name(),
                pair[1].display_name()
            ));
            for a in &algorithms {
                for m in pair {
                    out.push_str(&format!(" {} {} |", a.display_name(), m.display_name()));
                }
            }
            out.push_str("\n|---|");
            out.push_str(&"---|".repeat(algorithms.len() * 2));
            out.push('\n');
            for &band in &bands {
                out.push_str(&format!("| {} |", band.display_name()));
                for &a in &algorithms {
                    for m in pair {
                        let text = find(cells, band, a, tag, m)
                            .map(|c| format_mean_std(c.mean, c.std))
                            .unwrap_or_else(|| "-".into());
                        out.push_str(&format!(" {text} |"));
                    }
                }
                out.push('\n');
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Canny mean PSNR with and without equalization.
    Equalization,
    /// Canny mean PSNR per noise-reduction method.
    NoiseReduction,
}

impl Figure {
    pub fn file_name(self) -> &'static str {
        match self {
            Figure::Equalization => "fig5_equalization.csv",
            Figure::NoiseReduction => "fig6_noise.csv",
        }
    }

    pub fn variants(self) -> Vec<String> {
        match self {
            Figure::Equalization => vec![
                variant_tag(true, NoiseReduction::Gaussian),
                variant_tag(false, NoiseReduction::Gaussian),
            ],
            Figure::NoiseReduction => NoiseReduction::ALL
                .into_iter()
                .map(|n| variant_tag(true, n))
                .collect(),
        }
    }
}

/// Plot-ready CSV: one row per band, one column of Canny mean PSNR per
/// variant. `None` when the aggregates lack any of the figure's variants.
pub fn plotdata_csv(cells: &[AggregateCell], figure: Figure) -> Option<String> {
    let variants = figure.variants();
    let present = |tag: &str| {
        cells
            .iter()
            .any(|c| c.algorithm == Algorithm::Canny && c.preprocess == tag)
    };
    if !variants.iter().all(|v| present(v)) {
        return None;
    }
    let bands: Vec<BandName> = BandName::ALL
        .into_iter()
        .filter(|&b| {
            cells
                .iter()
                .any(|c| c.band == b && c.algorithm == Algorithm::Canny)
        })
        .collect();
    Some(csv_string(|w| {
        let mut header = vec!["band".to_string()];
        header.extend(variants.iter().cloned());
        w.write_record(&header)?;
        for band in bands {
            let mut row = vec![band.as_str().to_string()];
            for tag in &variants {
                let mean = find(cells, band, Algorithm::Canny, tag, MetricName::Psnr)
                    .map_or(f64::NAN, |c| c.mean);
                row.push(fmt_float(mean));
            }
            w.write_record(&row)?;
        }
        Ok(())
    }))
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// `aggregates.csv`, `table1.md` and whichever figure CSVs the aggregates
/// support.
pub fn emit_aggregate_reports(cells: &[AggregateCell], out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = vec![
        write_file(out_dir.join("aggregates.csv"), &aggregates_csv(cells))?,
        write_file(out_dir.join("table1.md"), &markdown_tables(cells))?,
    ];
    for figure in [Figure::Equalization, Figure::NoiseReduction] {
        if let Some(text) = plotdata_csv(cells, figure) {
            written.push(write_file(out_dir.join(figure.file_name()), &text)?);
        }
    }
    Ok(written)
}

/// Writes every report for a run: records, aggregates, markdown, figure
/// data and provenance.
pub fn emit_report(result: &RunResult, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = vec![write_file(
        out_dir.join("records.csv"),
        &records_csv(&result.records),
    )?];
    written.extend(emit_aggregate_reports(&result.aggregates, out_dir)?);
    let provenance =
        serde_json::to_string_pretty(&result.provenance).expect("provenance serializes") + "\n";
    written.push(write_file(out_dir.join("provenance.json"), &provenance)?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::aggregate_all;

    fn record(id: &str, band: BandName, tag: &str, psnr: f64) -> MetricRecord {
        MetricRecord {
            image_id: id.into(),
            band,
            algorithm: Algorithm::Canny,
            preprocess: tag.into(),
            values: MetricValues {
                rmse: 0.1 + psnr,
                psnr,
                ssim: 1.0 / 3.0,
                uqi: -0.25,
            },
            error: None,
        }
    }

    #[test]
    fn mean_std_cell_formatting() {
        assert_eq!(format_mean_std(13.2, 2.0), "13.2 ± 2");
        assert_eq!(format_mean_std(13.04, 1.94), "13 ± 1.9");
        assert_eq!(format_mean_std(0.8, 0.1), "0.8 ± 0.1");
        assert_eq!(format_mean_std(0.01, 0.02), "0 ± 0");
        assert_eq!(format_mean_std(-0.01, 0.0), "0 ± 0");
        assert_eq!(format_mean_std(f64::NAN, f64::NAN), "nan ± nan");
    }

    #[test]
    fn records_round_trip_through_csv() {
        let mut recs = vec![
            record("a", BandName::Blue, "eq-gaussian", f64::INFINITY),
            record("b", BandName::Blue, "eq-gaussian", 12.345678901234567),
        ];
        recs.push(MetricRecord::failed(
            "c",
            BandName::Red,
            Algorithm::Sobel,
            "eq-gaussian",
            "bad, \"quoted\" failure",
        ));
        let text = records_csv(&recs);
        let back = parse_records_csv(&text).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[1], recs[1]);
        assert_eq!(back[0].values.psnr, f64::INFINITY);
        assert!(back[2].values.rmse.is_nan());
        assert_eq!(back[2].error.as_deref(), Some("bad, \"quoted\" failure"));
        assert_eq!(records_csv(&back), text);
    }

    #[test]
    fn empty_outputs_are_header_only() {
        assert_eq!(records_csv(&[]), RECORDS_HEADER.join(",") + "\r\n");
        assert_eq!(aggregates_csv(&[]), AGGREGATES_HEADER.join(",") + "\r\n");
        assert!(parse_records_csv(&records_csv(&[])).unwrap().is_empty());
        assert!(markdown_tables(&[]).is_empty());
    }

    #[test]
    fn malformed_records_rejected() {
        assert!(parse_records_csv("a,b\n1,2\n").is_err());
        let bad_band = RECORDS_HEADER.join(",") + "\nx,Purple,canny,eq-gaussian,1,1,1,1,\n";
        assert!(matches!(
            parse_records_csv(&bad_band),
            Err(Error::Records(_))
        ));
        let bad_num = RECORDS_HEADER.join(",") + "\nx,Blue,canny,eq-gaussian,1,one,1,1,\n";
        assert!(parse_records_csv(&bad_num).is_err());
    }

    #[test]
    fn noise_plotdata_shape() {
        let mut recs = Vec::new();
        for band in BandName::ALL {
            for noise in NoiseReduction::ALL {
                recs.push(record("a", band, &variant_tag(true, noise), 10.0));
            }
        }
        let cells = aggregate_all(&recs);
        let text = plotdata_csv(&cells, Figure::NoiseReduction).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 13);
        assert_eq!(lines[0], "band,eq-none,eq-gaussian,eq-closing");
        assert_eq!(lines[1], "CoastalAerosol,10,10,10");
        assert!(plotdata_csv(&cells, Figure::Equalization).is_none());
    }

    #[test]
    fn markdown_rows_in_canonical_order() {
        let recs = vec![
            record("a", BandName::SWIR2, "eq-gaussian", 3.0),
            record("a", BandName::CoastalAerosol, "eq-gaussian", 13.2),
        ];
        let md = markdown_tables(&aggregate_all(&recs));
        let ca = md.find("| Coastal Aerosol |").unwrap();
        let sw = md.find("| SWIR 2 |").unwrap();
        assert!(ca < sw);
        assert!(md.contains("| Coastal Aerosol | 13.2 ± 0 | 0.3 ± 0 |"));
    }
}
