//! Two screenshots in, one report out: segmentation, matching, SSD search,
//! optional classifier filtering and the page verdict.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classifier::{build_feature_vector, Classifier, ModelFile, Target};
use crate::error::{Error, Result};
use crate::imaging::{to_grayscale, Raster, Rect};
use crate::matching::{
    analyze_rois, match_rois, page_verdict, resolve_unmatched, MatchParams, PageVerdict, Verdict,
};
use crate::segmentation::{segment_as, RoiSource, SegmentationConfig};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareConfig {
    pub segmentation: SegmentationConfig,
    pub matching: MatchParams,
    /// Opaque identifier of the configuration under test, 1 to 14.
    pub config_index: u8,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            segmentation: SegmentationConfig::default(),
            matching: MatchParams::default(),
            config_index: 1,
        }
    }
}

impl CompareConfig {
    pub fn validate(&self) -> Result<()> {
        self.segmentation.validate()?;
        self.matching.validate()?;
        if !(1..=14).contains(&self.config_index) {
            return Err(Error::InvalidConfig(format!(
                "config_index {} outside 1..=14",
                self.config_index
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: String,
    pub class_index: usize,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub baseline_id: Option<usize>,
    pub test_id: Option<usize>,
    pub baseline_bbox: Option<Rect>,
    pub test_bbox: Option<Rect>,
    pub matched_exact: bool,
    pub best_ssd_norm: Option<f64>,
    pub best_offset: Option<(i32, i32)>,
    pub correlation: f64,
    /// Verdict before classifier filtering.
    pub bare_verdict: Verdict,
    pub verdict: Verdict,
    pub classification: Option<Classification>,
    /// Classifier input, present for every bare-bones potential incompatibility.
    pub features: Option<Vec<f64>>,
}

impl PairRecord {
    pub fn display_bbox(&self) -> Rect {
        self.test_bbox
            .or(self.baseline_bbox)
            .expect("a pair always has at least one side")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub grayscale_ms: f64,
    pub segmentation_ms: f64,
    pub features_ms: f64,
    pub matching_ms: f64,
    pub fallback_ms: f64,
    pub classification_ms: f64,
    pub total_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub model_type: String,
    pub target: Target,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub page_verdict: PageVerdict,
    pub bare_page_verdict: PageVerdict,
    pub mismatch_density: f64,
    pub unmatched_test: usize,
    pub total_test: usize,
    pub baseline_size: (u32, u32),
    pub test_size: (u32, u32),
    /// Height both pages were padded to before comparison.
    pub compared_height: u32,
    pub baseline_rois: usize,
    pub test_rois: usize,
    pub incompatibilities: usize,
    pub pairs: Vec<PairRecord>,
    pub model: Option<ModelInfo>,
    pub config: CompareConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<StageTimings>,
}

impl ComparisonReport {
    pub fn flagged(&self) -> impl Iterator<Item = &PairRecord> {
        self.pairs
            .iter()
            .filter(|p| p.verdict == Verdict::PotentialIncompatibility)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Most frequent intensity on the one-pixel border, ties to the darker value.
pub fn background_intensity(gray: &Raster) -> u8 {
    let (w, h) = gray.dimensions();
    if w == 0 || h == 0 {
        return 255;
    }
    let mut hist = [0u64; 256];
    for x in 0..w {
        hist[gray.get(x, 0) as usize] += 1;
        hist[gray.get(x, h - 1) as usize] += 1;
    }
    for y in 0..h {
        hist[gray.get(0, y) as usize] += 1;
        hist[gray.get(w - 1, y) as usize] += 1;
    }
    let mut best = 0;
    for v in 1..256 {
        if hist[v] > hist[best] {
            best = v;
        }
    }
    best as u8
}

/// Extends a grayscale page downwards to `height` rows of its background.
pub fn pad_to_height(gray: &Raster, height: u32) -> Result<Raster> {
    if gray.height() >= height {
        return Ok(gray.clone());
    }
    let bg = background_intensity(gray);
    let mut data = gray.data().to_vec();
    data.resize(gray.width() as usize * height as usize, bg);
    Raster::gray(gray.width(), height, data)
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Compares two screenshots. With a model, every bare-bones potential
/// incompatibility is classified and false positives are demoted.
pub fn compare_pages(
    baseline: &Raster,
    under_test: &Raster,
    cfg: &CompareConfig,
    model: Option<&ModelFile>,
) -> Result<ComparisonReport> {
    cfg.validate()?;
    if baseline.width() != under_test.width() {
        return Err(Error::ResolutionMismatch {
            baseline: baseline.width(),
            under_test: under_test.width(),
        });
    }
    let start = Instant::now();
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let height = baseline.height().max(under_test.height());
    let base_gray = pad_to_height(&to_grayscale(baseline), height)?;
    let test_gray = pad_to_height(&to_grayscale(under_test), height)?;
    timings.grayscale_ms = ms(t);

    let t = Instant::now();
    let base_rois = segment_as(&base_gray, &cfg.segmentation, RoiSource::Baseline)?;
    let test_rois = segment_as(&test_gray, &cfg.segmentation, RoiSource::UnderTest)?;
    timings.segmentation_ms = ms(t);

    let t = Instant::now();
    let base = analyze_rois(base_rois)?;
    let test = analyze_rois(test_rois)?;
    timings.features_ms = ms(t);

    let t = Instant::now();
    let mut ms_set = match_rois(&base, &test, &cfg.matching);
    timings.matching_ms = ms(t);

    let t = Instant::now();
    resolve_unmatched(
        &mut ms_set,
        &base,
        &test,
        &base_gray,
        &test_gray,
        &cfg.matching,
    )?;
    timings.fallback_ms = ms(t);

    let t = Instant::now();
    let mut pairs = Vec::with_capacity(ms_set.verdicts.len());
    for pv in &ms_set.verdicts {
        let flagged = pv.verdict == Verdict::PotentialIncompatibility;
        let features = if flagged {
            Some(build_feature_vector(
                pv,
                cfg.config_index,
                ms_set.mismatch_density,
            )?)
        } else {
            None
        };
        let mut verdict = pv.verdict;
        let classification = match (&features, model) {
            (Some(fv), Some(m)) => {
                let (class_index, probability) = m.model.predict(&fv.values);
                if m.target.is_false_positive(class_index) {
                    verdict = Verdict::Compatible;
                }
                Some(Classification {
                    class: m.target.class_names()[class_index].to_string(),
                    class_index,
                    probability,
                })
            }
            _ => None,
        };
        pairs.push(PairRecord {
            baseline_id: pv.roib.as_ref().map(|r| r.id),
            test_id: pv.roit.as_ref().map(|r| r.id),
            baseline_bbox: pv.roib.as_ref().map(|r| r.bbox),
            test_bbox: pv.roit.as_ref().map(|r| r.bbox),
            matched_exact: pv.matched_exact,
            best_ssd_norm: pv.best_ssd_norm,
            best_offset: pv.best_offset,
            correlation: pv.correlation,
            bare_verdict: pv.verdict,
            verdict,
            classification,
            features: features.map(|f| f.values.to_vec()),
        });
    }
    timings.classification_ms = ms(t);

    let incompatibilities = pairs
        .iter()
        .filter(|p| p.verdict == Verdict::PotentialIncompatibility)
        .count();
    timings.total_ms = ms(start);
    Ok(ComparisonReport {
        schema_version: REPORT_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        page_verdict: if incompatibilities > 0 {
            PageVerdict::Incompatible
        } else {
            PageVerdict::Compatible
        },
        bare_page_verdict: page_verdict(&ms_set),
        mismatch_density: ms_set.mismatch_density,
        unmatched_test: ms_set.unmatched_test,
        total_test: ms_set.total_test,
        baseline_size: baseline.dimensions(),
        test_size: under_test.dimensions(),
        compared_height: height,
        baseline_rois: base.len(),
        test_rois: test.len(),
        incompatibilities,
        pairs,
        model: model.map(|m| ModelInfo {
            model_type: match m.model {
                crate::classifier::Model::Tree(_) => "tree".into(),
                crate::classifier::Model::Nn(_) => "nn".into(),
            },
            target: m.target,
        }),
        config: cfg.clone(),
        timings: Some(timings),
    })
}

const TINT_ALPHA: u32 = 96;
const BORDER: u32 = 2;

fn to_rgba(img: &Raster) -> Raster {
    let data = match img.channels() {
        1 => img.data().iter().flat_map(|&v| [v, v, v, 255]).collect(),
        3 => img
            .data()
            .chunks_exact(3)
            .flat_map(|p| [p[0], p[1], p[2], 255])
            .collect(),
        _ => img.data().to_vec(),
    };
    Raster::new(img.width(), img.height(), 4, data).expect("same geometry")
}

/// Red highlight over every surviving incompatibility: a single alpha-96 tint
/// over the union of boxes and a 2-pixel solid border inside each box.
pub fn render_overlay(under_test: &Raster, report: &ComparisonReport) -> Raster {
    let mut out = to_rgba(under_test);
    let (w, h) = out.dimensions();
    let bounds = out.bounds();
    let boxes: Vec<Rect> = report
        .flagged()
        .filter_map(|p| p.display_bbox().intersection(&bounds))
        .collect();
    let mut tint = vec![false; w as usize * h as usize];
    let mut border = vec![false; w as usize * h as usize];
    for r in &boxes {
        for y in r.y..r.bottom() {
            for x in r.x..r.right() {
                let i = y as usize * w as usize + x as usize;
                tint[i] = true;
                let edge = x < r.x + BORDER
                    || y < r.y + BORDER
                    || x + BORDER >= r.right()
                    || y + BORDER >= r.bottom();
                border[i] |= edge;
            }
        }
    }
    for (i, px) in out.data_mut().chunks_exact_mut(4).enumerate() {
        if border[i] {
            px.copy_from_slice(&[255, 0, 0, 255]);
        } else if tint[i] {
            let blend = |v: u8, target: u32| {
                ((v as u32 * (255 - TINT_ALPHA) + target * TINT_ALPHA + 127) / 255) as u8
            };
            px[0] = blend(px[0], 255);
            px[1] = blend(px[1], 0);
            px[2] = blend(px[2], 0);
        }
    }
    out
}
