use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Classifier, NnModel, Target, TreeModel, FEATURE_COUNT};
use crate::error::{Error, Result};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_type", rename_all = "snake_case")]
pub enum Model {
    Tree(TreeModel),
    Nn(NnModel),
}

impl Classifier for Model {
    fn n_classes(&self) -> usize {
        match self {
            Model::Tree(t) => t.n_classes(),
            Model::Nn(n) => n.n_classes(),
        }
    }

    fn predict_proba(&self, x: &[f64; FEATURE_COUNT]) -> Vec<f64> {
        match self {
            Model::Tree(t) => t.predict_proba(x),
            Model::Nn(n) => n.predict_proba(x),
        }
    }
}

/// On-disk model: schema version, target and the model itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub target: Target,
    pub n_features: usize,
    pub model: Model,
}

impl ModelFile {
    pub fn new(target: Target, model: Model) -> Self {
        ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            target,
            n_features: FEATURE_COUNT,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(s)?;
        if f.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "model schema version {} (expected {MODEL_SCHEMA_VERSION})",
                f.schema_version
            )));
        }
        if f.n_features != FEATURE_COUNT || f.model.n_classes() != f.target.n_classes() {
            return Err(Error::Format(
                "model dimensions do not match its target".into(),
            ));
        }
        if let Model::Nn(n) = &f.model {
            let ok = n.w1.len() == n.n_hidden * FEATURE_COUNT
                && n.b1.len() == n.n_hidden
                && n.w2.len() == n.n_outputs * n.n_hidden
                && n.b2.len() == n.n_outputs
                && n.mean.len() == FEATURE_COUNT
                && n.std.len() == FEATURE_COUNT
                && n.std.iter().all(|&s| s > 0.0);
            if !ok {
                return Err(Error::Format("inconsistent network layer sizes".into()));
            }
        }
        if let Model::Tree(t) = &f.model {
            let n = t.nodes.len();
            let ok = n > 0
                && t.nodes.iter().all(|node| {
                    node.class_counts.len() == t.n_classes
                        && node
                            .feature
                            .is_none_or(|f| f < FEATURE_COUNT && node.left < n && node.right < n)
                });
            if !ok {
                return Err(Error::Format("malformed tree".into()));
            }
        }
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
