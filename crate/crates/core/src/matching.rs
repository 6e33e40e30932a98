//! Pairing baseline regions with under-test regions.
//!
//! The exact phase matches on intensity centroid, size, orientation and mean
//! intensity. Regions left over go through an SSD search in a window around
//! their original position on the other page; an under-test region that
//! overlaps the search window of a baseline region becomes its counterpart.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_features, RoiFeatures};
use crate::imaging::{best_placement, ncc, GrayView, Raster, Rect, HISTOGRAM_BINS};
use crate::segmentation::Roi;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchParams {
    /// Maximum page-centroid distance for an exact match, pixels.
    pub centroid_tol: f64,
    /// Maximum width and height difference, pixels.
    pub size_tol: u32,
    /// Maximum orientation difference, radians.
    pub orientation_tol: f64,
    /// Maximum difference of mean window intensity, gray levels.
    pub intensity_tol: f64,
    /// Search region inflation `d`: the region is `w + d` by `h + d`.
    pub search_tolerance: u32,
    /// Per-pixel normalised SSD above which a pair is a potential incompatibility.
    pub ssd_threshold: f64,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            centroid_tol: 10.0,
            size_tol: 15,
            orientation_tol: 0.087,
            intensity_tol: 6.0,
            search_tolerance: 40,
            ssd_threshold: 0.01,
        }
    }
}

impl MatchParams {
    pub fn validate(&self) -> Result<()> {
        let finite_non_negative = |v: f64| v.is_finite() && v >= 0.0;
        if !finite_non_negative(self.centroid_tol)
            || !finite_non_negative(self.orientation_tol)
            || !finite_non_negative(self.intensity_tol)
        {
            return Err(Error::InvalidConfig(
                "match tolerances must be finite and non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.ssd_threshold) {
            return Err(Error::InvalidConfig(format!(
                "ssd_threshold {} outside [0, 1]",
                self.ssd_threshold
            )));
        }
        Ok(())
    }
}

/// A region together with its descriptors.
#[derive(Clone, Debug)]
pub struct AnalyzedRoi {
    pub roi: Roi,
    pub features: RoiFeatures,
}

impl AnalyzedRoi {
    pub fn new(roi: Roi) -> Result<Self> {
        let features = extract_features(&roi)?;
        Ok(AnalyzedRoi { roi, features })
    }

    pub fn page_centroid(&self) -> (f64, f64) {
        (
            self.roi.bbox.x as f64 + self.features.centroid.0,
            self.roi.bbox.y as f64 + self.features.centroid.1,
        )
    }

    pub fn mean_intensity(&self) -> f64 {
        self.features.mean_intensity(self.roi.bbox.area())
    }

    pub fn summary(&self) -> RoiSummary {
        RoiSummary {
            id: self.roi.id,
            bbox: self.roi.bbox,
            histogram: self.features.histogram,
        }
    }
}

pub fn analyze_rois(rois: Vec<Roi>) -> Result<Vec<AnalyzedRoi>> {
    rois.into_iter().map(AnalyzedRoi::new).collect()
}

/// The parts of a region a verdict needs to carry around.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoiSummary {
    pub id: usize,
    pub bbox: Rect,
    pub histogram: [f64; HISTOGRAM_BINS],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Compatible,
    PotentialIncompatibility,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PageVerdict {
    Compatible,
    Incompatible,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FallbackResult {
    /// Minimum SSD divided by `pixel_count * 255^2`.
    pub best_ssd_norm: f64,
    /// Best placement relative to the region's own position.
    pub best_offset: (i32, i32),
    /// Clamped NCC at the best placement.
    pub correlation: f64,
    /// Best placement on the other page; `None` when the region did not fit.
    pub placement: Option<Rect>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub roib: Option<RoiSummary>,
    pub roit: Option<RoiSummary>,
    pub matched_exact: bool,
    pub best_ssd_norm: Option<f64>,
    pub best_offset: Option<(i32, i32)>,
    /// NCC between the region and its counterpart; 0 without a counterpart.
    pub correlation: f64,
    pub verdict: Verdict,
}

impl PairVerdict {
    /// Box to highlight: the under-test side when present.
    pub fn display_bbox(&self) -> Rect {
        self.roit
            .as_ref()
            .or(self.roib.as_ref())
            .map(|r| r.bbox)
            .expect("a verdict always has at least one side")
    }

    /// Side used for per-region features: the baseline when present.
    pub fn primary_side(&self) -> &RoiSummary {
        self.roib
            .as_ref()
            .or(self.roit.as_ref())
            .expect("a verdict always has at least one side")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchSet {
    pub verdicts: Vec<PairVerdict>,
    /// `E / T`, or 0 when the page under test has no regions.
    pub mismatch_density: f64,
    /// Under-test regions without an exact match (`E`).
    pub unmatched_test: usize,
    /// Under-test regions (`T`).
    pub total_test: usize,
}

impl MatchSet {
    pub fn flagged(&self) -> impl Iterator<Item = &PairVerdict> {
        self.verdicts
            .iter()
            .filter(|v| v.verdict == Verdict::PotentialIncompatibility)
    }
}

fn axial_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % std::f64::consts::PI;
    d.min(std::f64::consts::PI - d)
}

fn exact_candidate(b: &AnalyzedRoi, t: &AnalyzedRoi, p: &MatchParams) -> Option<f64> {
    let (bx, by) = b.page_centroid();
    let (tx, ty) = t.page_centroid();
    let dist = ((bx - tx).powi(2) + (by - ty).powi(2)).sqrt();
    let ok = dist <= p.centroid_tol
        && b.roi.bbox.width.abs_diff(t.roi.bbox.width) <= p.size_tol
        && b.roi.bbox.height.abs_diff(t.roi.bbox.height) <= p.size_tol
        && axial_difference(b.features.theta, t.features.theta) <= p.orientation_tol
        && (b.mean_intensity() - t.mean_intensity()).abs() <= p.intensity_tol;
    ok.then_some(dist)
}

/// NCC over the top-left-aligned common area of two windows.
fn window_correlation(a: &Raster, b: &Raster) -> f64 {
    let common = Rect::new(0, 0, a.width().min(b.width()), a.height().min(b.height()));
    match (
        a.view().and_then(|v| v.sub(common)),
        b.view().and_then(|v| v.sub(common)),
    ) {
        (Ok(va), Ok(vb)) => ncc(&va, &vb),
        _ => 0.0,
    }
}

/// Exact phase: greedy one-to-one matching. Each baseline region, in order,
/// takes the nearest unconsumed under-test region that passes every
/// tolerance, ties to the smaller id. Unmatched regions get a one-sided
/// verdict marked as a potential incompatibility.
pub fn match_rois(base: &[AnalyzedRoi], test: &[AnalyzedRoi], p: &MatchParams) -> MatchSet {
    let mut consumed = vec![false; test.len()];
    let mut verdicts = Vec::with_capacity(base.len() + test.len());

    for b in base {
        let mut best: Option<(f64, usize)> = None;
        for (j, t) in test.iter().enumerate() {
            if consumed[j] {
                continue;
            }
            if let Some(dist) = exact_candidate(b, t, p) {
                // strict comparison keeps the smaller index on ties
                if best.is_none_or(|(d, _)| dist < d) {
                    best = Some((dist, j));
                }
            }
        }
        match best {
            Some((_, j)) => {
                consumed[j] = true;
                verdicts.push(PairVerdict {
                    roib: Some(b.summary()),
                    roit: Some(test[j].summary()),
                    matched_exact: true,
                    best_ssd_norm: None,
                    best_offset: None,
                    correlation: window_correlation(&b.roi.window, &test[j].roi.window),
                    verdict: Verdict::Compatible,
                });
            }
            None => verdicts.push(PairVerdict {
                roib: Some(b.summary()),
                roit: None,
                matched_exact: false,
                best_ssd_norm: None,
                best_offset: None,
                correlation: 0.0,
                verdict: Verdict::PotentialIncompatibility,
            }),
        }
    }

    for (t, _) in test.iter().zip(&consumed).filter(|(_, &c)| !c) {
        verdicts.push(PairVerdict {
            roib: None,
            roit: Some(t.summary()),
            matched_exact: false,
            best_ssd_norm: None,
            best_offset: None,
            correlation: 0.0,
            verdict: Verdict::PotentialIncompatibility,
        });
    }

    let unmatched_test = consumed.iter().filter(|&&c| !c).count();
    let total_test = test.len();
    MatchSet {
        verdicts,
        mismatch_density: if total_test == 0 {
            0.0
        } else {
            unmatched_test as f64 / total_test as f64
        },
        unmatched_test,
        total_test,
    }
}

/// Region `w + d` by `h + d` centred on `bbox`, clipped to `bounds`.
pub fn search_region(bbox: Rect, d: u32, bounds: Rect) -> Option<Rect> {
    let x0 = bbox.x as i64 - (d / 2) as i64;
    let y0 = bbox.y as i64 - (d / 2) as i64;
    let x1 = x0 + bbox.width as i64 + d as i64;
    let y1 = y0 + bbox.height as i64 + d as i64;
    let cx0 = x0.max(bounds.x as i64);
    let cy0 = y0.max(bounds.y as i64);
    let cx1 = x1.min(bounds.right() as i64);
    let cy1 = y1.min(bounds.bottom() as i64);
    (cx1 > cx0 && cy1 > cy0).then(|| {
        Rect::new(
            cx0 as u32,
            cy0 as u32,
            (cx1 - cx0) as u32,
            (cy1 - cy0) as u32,
        )
    })
}

/// Exhaustive SSD scan of `roi` inside its search region on `other_page`.
pub fn ssd_fallback(roi: &Roi, other_page: &Raster, p: &MatchParams) -> Result<FallbackResult> {
    let page = other_page.view()?;
    let template = roi.window.view()?;
    fallback_scan(&template, roi.bbox, &page, p)
}

fn fallback_scan(
    template: &GrayView<'_>,
    bbox: Rect,
    page: &GrayView<'_>,
    p: &MatchParams,
) -> Result<FallbackResult> {
    let bounds = Rect::new(0, 0, page.width(), page.height());
    let not_found = FallbackResult {
        best_ssd_norm: 1.0,
        best_offset: (0, 0),
        correlation: 0.0,
        placement: None,
    };
    let Some(region) = search_region(bbox, p.search_tolerance, bounds) else {
        return Ok(not_found);
    };
    let Some(best) = best_placement(template, page, region, (bbox.x, bbox.y)) else {
        return Ok(not_found);
    };
    let placed = Rect::new(best.x, best.y, bbox.width, bbox.height);
    let n = template.pixel_count() as f64;
    Ok(FallbackResult {
        best_ssd_norm: best.ssd as f64 / (n * 255.0 * 255.0),
        best_offset: (best.x as i32 - bbox.x as i32, best.y as i32 - bbox.y as i32),
        correlation: ncc(template, &page.sub(placed)?),
        placement: Some(placed),
    })
}

pub fn pair_verdict(matched_exact: bool, best_ssd_norm: Option<f64>, p: &MatchParams) -> Verdict {
    let found = best_ssd_norm.is_some_and(|s| s <= p.ssd_threshold);
    if matched_exact || found {
        Verdict::Compatible
    } else {
        Verdict::PotentialIncompatibility
    }
}

pub fn page_verdict(ms: &MatchSet) -> PageVerdict {
    if ms.flagged().next().is_some() {
        PageVerdict::Incompatible
    } else {
        PageVerdict::Compatible
    }
}

/// SSD phase over the one-sided verdicts of an exact-phase [`MatchSet`].
///
/// Baseline regions are searched for on the page under test; the unclaimed
/// under-test region overlapping the search window most (ties to the smaller
/// id) becomes the counterpart and supplies the correlation. Under-test
/// regions still alone are then searched for on the baseline page.
pub fn resolve_unmatched(
    ms: &mut MatchSet,
    base: &[AnalyzedRoi],
    test: &[AnalyzedRoi],
    base_page: &Raster,
    test_page: &Raster,
    p: &MatchParams,
) -> Result<()> {
    let base_view = base_page.view()?;
    let test_view = test_page.view()?;
    let mut claimed = vec![false; test.len()];
    let lonely_test: Vec<usize> = ms
        .verdicts
        .iter()
        .filter(|v| v.roib.is_none())
        .filter_map(|v| v.roit.as_ref().map(|r| r.id))
        .collect();

    for v in ms
        .verdicts
        .iter_mut()
        .filter(|v| v.roib.is_some() && v.roit.is_none())
    {
        let b = &base[v.roib.as_ref().expect("filtered").id];
        let fb = fallback_scan(&b.roi.window.view()?, b.roi.bbox, &test_view, p)?;
        let probe =
            search_region(b.roi.bbox, p.search_tolerance, test_page.bounds()).unwrap_or(b.roi.bbox);
        let counterpart = lonely_test
            .iter()
            .copied()
            .filter(|&j| !claimed[j])
            .map(|j| (test[j].roi.bbox.overlap_area(&probe), j))
            .filter(|&(area, _)| area > 0)
            .max_by(|a, c| a.0.cmp(&c.0).then(c.1.cmp(&a.1)));
        v.best_ssd_norm = Some(fb.best_ssd_norm);
        v.best_offset = Some(fb.best_offset);
        v.correlation = 0.0;
        if let Some((_, j)) = counterpart {
            claimed[j] = true;
            v.roit = Some(test[j].summary());
            v.correlation = fb.correlation;
        }
        v.verdict = pair_verdict(false, v.best_ssd_norm, p);
    }

    ms.verdicts
        .retain(|v| !(v.roib.is_none() && v.roit.as_ref().is_some_and(|t| claimed[t.id])));

    for v in ms.verdicts.iter_mut().filter(|v| v.roib.is_none()) {
        let t = &test[v.roit.as_ref().expect("one side present").id];
        let fb = fallback_scan(&t.roi.window.view()?, t.roi.bbox, &base_view, p)?;
        v.best_ssd_norm = Some(fb.best_ssd_norm);
        v.best_offset = Some(fb.best_offset);
        v.correlation = 0.0;
        v.verdict = pair_verdict(false, v.best_ssd_norm, p);
    }
    Ok(())
}

/// Both phases: exact matching followed by the SSD search.
pub fn compare_rois(
    base: &[AnalyzedRoi],
    test: &[AnalyzedRoi],
    base_page: &Raster,
    test_page: &Raster,
    p: &MatchParams,
) -> Result<MatchSet> {
    p.validate()?;
    let mut ms = match_rois(base, test, p);
    resolve_unmatched(&mut ms, base, test, base_page, test_page, p)?;
    Ok(ms)
}
