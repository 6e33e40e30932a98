//! Page segmentation: Harris corners, adaptive line dilation and blob
//! analysis turn a screenshot into rectangular regions of interest.
//!
//! Corners are detected once. The dilation extent then walks down from
//! `max_dilation_extent`; the first extent whose largest region has a side
//! shorter than `max_roi_side` wins. If none does, the `min_dilation_extent`
//! segmentation is returned as is.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{
    connected_components, dilate_hv, harris_corners, BinaryMask, HarrisParams, Raster, Rect,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    pub max_dilation_extent: u32,
    pub min_dilation_extent: u32,
    pub max_roi_side: u32,
    /// Vertical extent as a multiple of the horizontal one (1.0 = isotropic).
    pub vertical_ratio: f64,
    pub harris: HarrisParams,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            max_dilation_extent: 10,
            min_dilation_extent: 2,
            max_roi_side: 300,
            vertical_ratio: 1.0,
            harris: HarrisParams::default(),
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_dilation_extent > self.max_dilation_extent {
            return Err(Error::InvalidConfig(format!(
                "min dilation extent {} exceeds max {}",
                self.min_dilation_extent, self.max_dilation_extent
            )));
        }
        if self.max_roi_side == 0 {
            return Err(Error::InvalidConfig("max_roi_side must be positive".into()));
        }
        if !(self.vertical_ratio >= 0.0 && self.vertical_ratio.is_finite()) {
            return Err(Error::InvalidConfig(
                "vertical_ratio must be finite and non-negative".into(),
            ));
        }
        self.harris.validate()
    }

    fn extents(&self, e: u32) -> (u32, u32) {
        (e, (e as f64 * self.vertical_ratio).round() as u32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoiSource {
    Baseline,
    UnderTest,
}

/// A segmented region: bounding box on the page plus a copy of its pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct Roi {
    /// Position in the page's ROI list.
    pub id: usize,
    pub bbox: Rect,
    /// Grayscale crop of the page, same size as `bbox`.
    pub window: Raster,
    pub source: RoiSource,
}

/// What happened at one dilation extent.
#[derive(Clone, Debug)]
pub struct ExtentTrace {
    pub extent: u32,
    pub blob_count: usize,
    pub max_side: u32,
    /// Dilated corner mask, kept only when requested.
    pub mask: Option<BinaryMask>,
}

#[derive(Clone, Debug)]
pub struct Segmentation {
    pub rois: Vec<Roi>,
    pub corners: BinaryMask,
    pub chosen_extent: u32,
    pub trace: Vec<ExtentTrace>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiInventory {
    pub count: usize,
    pub max_side: u32,
    pub total_area: u64,
}

pub fn segment(gray_page: &Raster, cfg: &SegmentationConfig) -> Result<Vec<Roi>> {
    segment_as(gray_page, cfg, RoiSource::Baseline)
}

pub fn segment_as(
    gray_page: &Raster,
    cfg: &SegmentationConfig,
    source: RoiSource,
) -> Result<Vec<Roi>> {
    Ok(segment_traced(gray_page, cfg, source, false)?.rois)
}

/// Segmentation with the per-extent history, optionally retaining each
/// dilated mask for debug rendering.
pub fn segment_traced(
    gray_page: &Raster,
    cfg: &SegmentationConfig,
    source: RoiSource,
    keep_masks: bool,
) -> Result<Segmentation> {
    cfg.validate()?;
    let view = gray_page.view()?;
    let corners = harris_corners(&view, &cfg.harris);
    if corners.is_empty() {
        return Ok(Segmentation {
            rois: Vec::new(),
            corners,
            chosen_extent: cfg.min_dilation_extent,
            trace: Vec::new(),
        });
    }

    let mut trace = Vec::new();
    let mut chosen = None;
    for e in (cfg.min_dilation_extent..=cfg.max_dilation_extent).rev() {
        let (he, ve) = cfg.extents(e);
        let dilated = dilate_hv(&corners, he, ve);
        let blobs = connected_components(&dilated);
        let max_side = blobs.iter().map(|b| b.bbox.max_side()).max().unwrap_or(0);
        trace.push(ExtentTrace {
            extent: e,
            blob_count: blobs.len(),
            max_side,
            mask: keep_masks.then(|| dilated.clone()),
        });
        let fits = max_side < cfg.max_roi_side;
        if fits || e == cfg.min_dilation_extent {
            chosen = Some((e, blobs));
            break;
        }
    }
    let (chosen_extent, blobs) = chosen.expect("loop always selects the final extent");
    debug_assert!(trace.windows(2).all(|w| w[1].max_side <= w[0].max_side));

    let rois = blobs
        .into_iter()
        .enumerate()
        .map(|(id, blob)| {
            Ok(Roi {
                id,
                bbox: blob.bbox,
                window: gray_page.crop(blob.bbox)?,
                source,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Segmentation {
        rois,
        corners,
        chosen_extent,
        trace,
    })
}

pub fn roi_inventory(rois: &[Roi]) -> RoiInventory {
    RoiInventory {
        count: rois.len(),
        max_side: rois.iter().map(|r| r.bbox.max_side()).max().unwrap_or(0),
        total_area: rois.iter().map(|r| r.bbox.area()).sum(),
    }
}

/// Outline every ROI on top of the page, cycling through a small palette.
pub fn render_roi_outlines(page: &Raster, rois: &[Roi]) -> Raster {
    const PALETTE: [[u8; 3]; 6] = [
        [230, 25, 75],
        [60, 180, 75],
        [0, 130, 200],
        [245, 130, 48],
        [145, 30, 180],
        [70, 240, 240],
    ];
    let gray = crate::imaging::to_grayscale(page);
    let mut out = Raster::new(
        gray.width(),
        gray.height(),
        3,
        gray.data().iter().flat_map(|&v| [v, v, v]).collect(),
    )
    .expect("same geometry");
    for roi in rois {
        let color = PALETTE[roi.id % PALETTE.len()];
        let b = roi.bbox;
        for x in b.x..b.right() {
            out.pixel_mut(x, b.y).copy_from_slice(&color);
            out.pixel_mut(x, b.bottom() - 1).copy_from_slice(&color);
        }
        for y in b.y..b.bottom() {
            out.pixel_mut(b.x, y).copy_from_slice(&color);
            out.pixel_mut(b.right() - 1, y).copy_from_slice(&color);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{connected_components, dilate_hv, harris_corners};

    fn blank(w: u32, h: u32) -> Raster {
        Raster::gray(w, h, vec![255; (w * h) as usize]).unwrap()
    }

    /// Dark text-like stripes inside `rect` on a white page.
    fn paint_block(page: &mut Raster, rect: Rect) {
        for y in rect.y..rect.bottom() {
            for x in rect.x..rect.right() {
                let ink = (y - rect.y) % 5 < 3 && (x - rect.x) % 7 < 5;
                if ink {
                    page.pixel_mut(x, y)[0] = 20;
                }
            }
        }
    }

    #[test]
    fn blank_page_has_no_rois() {
        assert!(segment(&blank(120, 80), &SegmentationConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn two_blocks_two_rois() {
        let mut page = blank(300, 120);
        let a = Rect::new(30, 40, 50, 20);
        let b = Rect::new(180, 40, 50, 20);
        paint_block(&mut page, a);
        paint_block(&mut page, b);
        let cfg = SegmentationConfig::default();
        let seg = segment_traced(&page, &cfg, RoiSource::Baseline, false).unwrap();
        assert_eq!(seg.rois.len(), 2);

        // independent route: count components of the dilated corner mask
        let corners = harris_corners(&page.view().unwrap(), &cfg.harris);
        let e = seg.chosen_extent;
        let direct = connected_components(&dilate_hv(&corners, e, e));
        assert_eq!(direct.len(), 2);

        let slack = e + 2;
        for (roi, block) in seg.rois.iter().zip([a, b]) {
            assert!(roi.bbox.x + slack >= block.x && roi.bbox.x <= block.x + slack);
            assert!(roi.bbox.y + slack >= block.y && roi.bbox.y <= block.y + slack);
            assert!(
                roi.bbox.right() + slack >= block.right()
                    && roi.bbox.right() <= block.right() + slack
            );
            assert!(
                roi.bbox.bottom() + slack >= block.bottom()
                    && roi.bbox.bottom() <= block.bottom() + slack
            );
            assert_eq!(roi.window.dimensions(), (roi.bbox.width, roi.bbox.height));
        }
    }

    #[test]
    fn dense_texture_falls_back_to_min_extent() {
        let page = Raster::from_fn_gray(
            1000,
            1000,
            |x, y| if (x / 2 + y / 2) % 2 == 0 { 0 } else { 255 },
        )
        .unwrap();
        let cfg = SegmentationConfig::default();
        let seg = segment_traced(&page, &cfg, RoiSource::Baseline, false).unwrap();
        assert_eq!(seg.chosen_extent, cfg.min_dilation_extent);
        assert_eq!(seg.trace.len(), 9);
        assert!(seg.rois.iter().any(|r| r.bbox.max_side() >= 300));
    }

    #[test]
    fn corners_are_covered_and_trace_is_monotone() {
        let mut page = blank(400, 300);
        for (i, r) in [
            Rect::new(10, 10, 120, 40),
            Rect::new(150, 30, 200, 60),
            Rect::new(40, 150, 310, 120),
        ]
        .into_iter()
        .enumerate()
        {
            if i == 1 {
                for y in r.y..r.bottom() {
                    for x in r.x..r.right() {
                        page.pixel_mut(x, y)[0] = 90;
                    }
                }
            } else {
                paint_block(&mut page, r);
            }
        }
        let cfg = SegmentationConfig {
            max_roi_side: 100,
            ..Default::default()
        };
        let seg = segment_traced(&page, &cfg, RoiSource::UnderTest, true).unwrap();
        for (x, y) in seg.corners.ones() {
            assert!(seg.rois.iter().any(|r| r.bbox.contains(x, y)));
        }
        assert!(seg.trace.windows(2).all(|w| w[1].max_side <= w[0].max_side));
        assert!(seg.trace.iter().all(|t| t.mask.is_some()));
        assert!(seg.rois.iter().all(|r| r.source == RoiSource::UnderTest));
        let again = segment(&page, &cfg).unwrap();
        assert_eq!(
            again.iter().map(|r| r.bbox).collect::<Vec<_>>(),
            seg.rois.iter().map(|r| r.bbox).collect::<Vec<_>>()
        );
    }

    #[test]
    fn inventory() {
        let mk = |bbox: Rect| Roi {
            id: 0,
            bbox,
            window: Raster::gray(bbox.width, bbox.height, vec![0; bbox.area() as usize]).unwrap(),
            source: RoiSource::Baseline,
        };
        assert_eq!(roi_inventory(&[]), RoiInventory::default());
        assert_eq!(
            roi_inventory(&[mk(Rect::new(0, 0, 10, 20))]),
            RoiInventory {
                count: 1,
                max_side: 20,
                total_area: 200
            }
        );
        assert_eq!(
            roi_inventory(&[mk(Rect::new(0, 0, 10, 10)), mk(Rect::new(50, 50, 10, 10))]),
            RoiInventory {
                count: 2,
                max_side: 10,
                total_area: 200
            }
        );
    }

    #[test]
    fn rejects_colour_pages_and_bad_config() {
        let rgb = Raster::filled(10, 10, &[1, 2, 3]).unwrap();
        assert!(segment(&rgb, &SegmentationConfig::default()).is_err());
        let bad = SegmentationConfig {
            min_dilation_extent: 11,
            ..Default::default()
        };
        assert!(segment(&blank(10, 10), &bad).is_err());
    }
}
