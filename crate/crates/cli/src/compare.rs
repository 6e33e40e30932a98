use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use roidiff_core::classifier::FEATURE_NAMES;
use roidiff_core::imaging::to_grayscale;
use roidiff_core::pipeline::{pad_to_height, render_overlay};
use roidiff_core::segmentation::{render_roi_outlines, segment};
use roidiff_core::{compare_pages, ComparisonReport, ModelFile, PageVerdict, Raster, Rect};

use crate::config::RunConfig;
use crate::output::{load_png, write_atomic, write_json, write_png};

#[derive(Args, Debug)]
pub struct CompareArgs {
    pub baseline: PathBuf,
    pub under_test: PathBuf,
    /// Configuration index of the page under test, 1 to 14.
    #[arg(long)]
    pub config_index: Option<u8>,
    /// Keep per-stage timings in the report (makes it run-dependent).
    #[arg(long)]
    pub timings: bool,
    /// Write crops and features of every flagged pair here, for `label`.
    #[arg(long)]
    pub export_pairs: Option<PathBuf>,
    /// Classifier model file; flagged pairs it calls false positives are dropped.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

pub fn run(cfg: &RunConfig, a: CompareArgs) -> Result<ExitCode> {
    let cfg = &cfg.with_model(a.model.clone())?;
    let mut compare = cfg.compare.clone();
    if let Some(ci) = a.config_index {
        compare.config_index = ci;
    }
    let baseline = load_png(&a.baseline)?;
    let under_test = load_png(&a.under_test)?;
    let model = cfg
        .model
        .as_deref()
        .map(|p| ModelFile::load(p).with_context(|| format!("loading model {}", p.display())))
        .transpose()?;
    let mut report = compare_pages(&baseline, &under_test, &compare, model.as_ref())?;
    if let Some(t) = report.timings.as_ref().filter(|_| a.timings) {
        eprintln!(
            "timings ms: grayscale {:.1}, segmentation {:.1}, features {:.1}, matching {:.1}, fallback {:.1}, classification {:.1}, total {:.1}",
            t.grayscale_ms, t.segmentation_ms, t.features_ms, t.matching_ms, t.fallback_ms, t.classification_ms, t.total_ms
        );
    }
    if !a.timings {
        report.timings = None;
    }

    let out = cfg.out_dir();
    write_json(&out.join("report.json"), &report)?;
    write_png(
        &out.join("overlay.png"),
        &render_overlay(&under_test, &report),
    )?;
    if cfg.debug_images {
        let height = report.compared_height;
        for (name, page) in [
            ("baseline_rois.png", &baseline),
            ("test_rois.png", &under_test),
        ] {
            let gray = pad_to_height(&to_grayscale(page), height)?;
            let rois = segment(&gray, &compare.segmentation)?;
            write_png(&out.join(name), &render_roi_outlines(&gray, &rois))?;
        }
    }
    if let Some(dir) = &a.export_pairs {
        let stem = a
            .under_test
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("page");
        export_pairs(dir, stem, &baseline, &under_test, &report)?;
    }
    println!(
        "{}: {} incompatibilities, {} bare-bones, mismatch density {:.3}",
        match report.page_verdict {
            PageVerdict::Compatible => "compatible",
            PageVerdict::Incompatible => "incompatible",
        },
        report.incompatibilities,
        report
            .pairs
            .iter()
            .filter(|p| p.bare_verdict == roidiff_core::Verdict::PotentialIncompatibility)
            .count(),
        report.mismatch_density
    );
    Ok(match report.page_verdict {
        PageVerdict::Compatible => ExitCode::SUCCESS,
        PageVerdict::Incompatible => ExitCode::from(1),
    })
}

fn crop(page: &Raster, r: Rect) -> Result<Option<Raster>> {
    match r.intersection(&page.bounds()) {
        Some(r) if !r.is_empty() => Ok(Some(page.crop(r)?)),
        _ => Ok(None),
    }
}

/// Every bare-bones potential incompatibility as `<stem>_<k>_baseline.png`,
/// `<stem>_<k>_test.png` and a row of `features.csv`.
fn export_pairs(
    dir: &Path,
    stem: &str,
    baseline: &Raster,
    under_test: &Raster,
    report: &ComparisonReport,
) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let features_path = dir.join("features.csv");
    let mut rows: Vec<Vec<String>> = Vec::new();
    let existing: Vec<Vec<String>> = if features_path.exists() {
        let mut r = csv::Reader::from_path(&features_path)?;
        r.records()
            .map(|rec| Ok(rec?.iter().map(str::to_string).collect::<Vec<_>>()))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    for (k, rec) in report.pairs.iter().enumerate() {
        let Some(features) = &rec.features else {
            continue;
        };
        let id = format!("{stem}_{k:04}");
        for (side, page, bbox) in [
            ("baseline", baseline, rec.baseline_bbox),
            ("test", under_test, rec.test_bbox),
        ] {
            if let Some(img) = bbox.map(|b| crop(page, b)).transpose()?.flatten() {
                write_png(&dir.join(format!("{id}_{side}.png")), &img)?;
            }
        }
        let mut row = vec![id];
        row.extend(features.iter().map(|v| v.to_string()));
        rows.push(row);
    }
    let mut all: Vec<Vec<String>> = existing
        .into_iter()
        .filter(|r| !rows.iter().any(|n| n[0] == r[0]))
        .collect();
    all.extend(rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["pair_id"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header)?;
    for r in &all {
        w.write_record(r)?;
    }
    write_atomic(&features_path, &w.into_inner()?)
}
