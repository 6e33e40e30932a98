//! Screenshot comparison for cross-browser layout checks.
//!
//! Pages are segmented into regions around Harris corners, regions are paired
//! by image moments with an SSD search as fallback, and flagged pairs can be
//! filtered by a trained classifier.

pub mod classifier;
pub mod dataset;
pub mod error;
pub mod features;
pub mod imaging;
pub mod matching;
pub mod pipeline;
pub mod segmentation;
pub mod synth;

pub use classifier::{
    BinaryLabel, Classifier, LabeledSample, Model, ModelFile, Quaternary, Target, TrainingSet,
};
pub use error::{Error, Result};
pub use imaging::{Raster, Rect};
pub use matching::{MatchParams, PageVerdict, Verdict};
pub use pipeline::{compare_pages, render_overlay, CompareConfig, ComparisonReport, PairRecord};
pub use segmentation::SegmentationConfig;
