use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use roidiff_core::imaging::to_grayscale;
use roidiff_core::segmentation::{render_roi_outlines, segment_traced, RoiSource};
use roidiff_core::Rect;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{load_png, write_json, write_png};

#[derive(Args, Debug)]
pub struct SegmentArgs {
    pub page: PathBuf,
}

#[derive(Serialize)]
struct ExtentRow {
    extent: u32,
    blob_count: usize,
    max_side: u32,
}

#[derive(Serialize)]
struct RoiRow {
    id: usize,
    bbox: Rect,
}

#[derive(Serialize)]
struct SegmentReport {
    schema_version: u32,
    width: u32,
    height: u32,
    corner_pixels: usize,
    chosen_extent: u32,
    extents: Vec<ExtentRow>,
    rois: Vec<RoiRow>,
}

pub fn run(cfg: &RunConfig, a: SegmentArgs) -> Result<ExitCode> {
    let page = load_png(&a.page)?;
    let gray = to_grayscale(&page);
    let seg = segment_traced(
        &gray,
        &cfg.compare.segmentation,
        RoiSource::Baseline,
        cfg.debug_images,
    )?;
    let out = cfg.out_dir();
    let report = SegmentReport {
        schema_version: 1,
        width: page.width(),
        height: page.height(),
        corner_pixels: seg.corners.count_ones(),
        chosen_extent: seg.chosen_extent,
        extents: seg
            .trace
            .iter()
            .map(|t| ExtentRow {
                extent: t.extent,
                blob_count: t.blob_count,
                max_side: t.max_side,
            })
            .collect(),
        rois: seg
            .rois
            .iter()
            .map(|r| RoiRow {
                id: r.id,
                bbox: r.bbox,
            })
            .collect(),
    };
    write_json(&out.join("rois.json"), &report)?;
    if cfg.debug_images {
        write_png(&out.join("corners.png"), &seg.corners.to_raster())?;
        if let Some(mask) = seg
            .trace
            .iter()
            .find(|t| t.extent == seg.chosen_extent)
            .and_then(|t| t.mask.as_ref())
        {
            write_png(&out.join("dilated.png"), &mask.to_raster())?;
        }
        write_png(
            &out.join("rois.png"),
            &render_roi_outlines(&page, &seg.rois),
        )?;
    }
    println!(
        "{} regions at dilation extent {}",
        seg.rois.len(),
        seg.chosen_extent
    );
    Ok(ExitCode::SUCCESS)
}
