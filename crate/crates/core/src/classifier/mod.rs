//! False-positive filtering: feature vectors, a CART decision tree, a
//! one-hidden-layer network, k-fold evaluation and model files.

mod data;
mod eval;
mod features;
mod model;
mod nn;
mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use data::{read_samples, read_samples_from, write_samples, write_samples_to, CSV_HEADER};
pub use eval::{cross_validate, metrics, stratified_folds, ClassMetrics, CvReport, EvalMetrics};
pub use features::{build_feature_vector, FeatureVector17, NullSide, FEATURE_COUNT, FEATURE_NAMES};
pub use model::{Model, ModelFile, MODEL_SCHEMA_VERSION};
pub use nn::{normalization, NnGradient, NnModel, NnParams};
pub use tree::{TreeModel, TreeNode, TreeParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Binary,
    Quaternary,
}

impl Target {
    pub fn n_classes(self) -> usize {
        match self {
            Target::Binary => 2,
            Target::Quaternary => 4,
        }
    }

    pub fn class_names(self) -> &'static [&'static str] {
        match self {
            Target::Binary => &["false_positive", "incompatibility"],
            Target::Quaternary => &["C1", "C2", "C3", "C4"],
        }
    }

    /// Whether a predicted class counts as a false positive when filtering.
    /// For four classes, "no difference" and "minor difference" do.
    pub fn is_false_positive(self, class: usize) -> bool {
        match self {
            Target::Binary => class == 0,
            Target::Quaternary => class <= 1,
        }
    }
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Target::Binary),
            "quaternary" => Ok(Target::Quaternary),
            other => Err(Error::InvalidConfig(format!("unknown target {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryLabel {
    FalsePositive,
    Incompatibility,
}

impl BinaryLabel {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BinaryLabel::FalsePositive => "false_positive",
            BinaryLabel::Incompatibility => "incompatibility",
        }
    }
}

/// Severity: no difference, minor, major, critical.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quaternary {
    C1,
    C2,
    C3,
    C4,
}

impl Quaternary {
    pub fn from_class(c: u8) -> Result<Self> {
        match c {
            1 => Ok(Quaternary::C1),
            2 => Ok(Quaternary::C2),
            3 => Ok(Quaternary::C3),
            4 => Ok(Quaternary::C4),
            other => Err(Error::InvalidRating(other)),
        }
    }

    pub fn class(self) -> u8 {
        self as u8 + 1
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: FeatureVector17,
    pub binary_label: Option<BinaryLabel>,
    pub quaternary_label: Option<Quaternary>,
}

impl LabeledSample {
    pub fn label(&self, target: Target) -> Option<usize> {
        match target {
            Target::Binary => self.binary_label.map(BinaryLabel::index),
            Target::Quaternary => self.quaternary_label.map(Quaternary::index),
        }
    }
}

/// Dense training matrix for one target.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    pub features: Vec<[f64; FEATURE_COUNT]>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl TrainingSet {
    /// Samples lacking a label for `target` are an error.
    pub fn from_samples(samples: &[LabeledSample], target: Target) -> Result<Self> {
        let mut features = Vec::with_capacity(samples.len());
        let mut labels = Vec::with_capacity(samples.len());
        for (i, s) in samples.iter().enumerate() {
            let label = s.label(target).ok_or_else(|| {
                Error::InsufficientData(format!("sample {i} has no {target:?} label"))
            })?;
            features.push(s.features.values);
            labels.push(label);
        }
        Ok(TrainingSet {
            features,
            labels,
            n_classes: target.n_classes(),
        })
    }

    pub fn new(
        features: Vec<[f64; FEATURE_COUNT]>,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                actual: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InsufficientData(format!(
                "label {bad} outside {n_classes} classes"
            )));
        }
        Ok(TrainingSet {
            features,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn subset(&self, idx: &[usize]) -> TrainingSet {
        TrainingSet {
            features: idx.iter().map(|&i| self.features[i]).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }
}

/// Anything that maps a feature vector to class posteriors.
pub trait Classifier {
    fn n_classes(&self) -> usize;

    fn predict_proba(&self, x: &[f64; FEATURE_COUNT]) -> Vec<f64>;

    /// Most probable class, ties to the lower index, with its probability.
    fn predict(&self, x: &[f64; FEATURE_COUNT]) -> (usize, f64) {
        argmax(&self.predict_proba(x))
    }
}

pub(crate) fn argmax(p: &[f64]) -> (usize, f64) {
    let mut best = (0, p[0]);
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// Prediction on an arbitrary-length slice, checked against the model input.
pub fn predict_slice<C: Classifier + ?Sized>(model: &C, x: &[f64]) -> Result<(usize, f64)> {
    let fv: &[f64; FEATURE_COUNT] = x.try_into().map_err(|_| Error::DimensionMismatch {
        expected: FEATURE_COUNT,
        actual: x.len(),
    })?;
    Ok(model.predict(fv))
}
