use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Classifier, TrainingSet};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub support: usize,
}

fn f_score(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub per_class: Vec<ClassMetrics>,
    pub mean_training_ms: f64,
}

impl EvalMetrics {
    pub fn class(&self, index: usize) -> &ClassMetrics {
        &self.per_class[index]
    }

    /// Unweighted mean F-score over classes.
    pub fn macro_f(&self) -> f64 {
        self.per_class.iter().map(|c| c.f_score).sum::<f64>() / self.per_class.len().max(1) as f64
    }

    /// One row per class: precision, recall and F-score.
    pub fn table(&self, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{title}");
        let _ = writeln!(
            s,
            "{:<18} {:>9} {:>9} {:>9} {:>8}",
            "class", "precision", "recall", "f-score", "support"
        );
        for c in &self.per_class {
            let _ = writeln!(
                s,
                "{:<18} {:>9.3} {:>9.3} {:>9.3} {:>8}",
                c.class, c.precision, c.recall, c.f_score, c.support
            );
        }
        s
    }
}

/// One-vs-rest precision, recall and F-score per class. Precision is 0 for a
/// class that is never predicted.
pub fn metrics(
    predictions: &[usize],
    truth: &[usize],
    class_names: &[&str],
) -> Result<EvalMetrics> {
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: predictions.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InsufficientData("no predictions to score".into()));
    }
    let per_class = class_names
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
            for (&p, &t) in predictions.iter().zip(truth) {
                match (p == c, t == c) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    _ => {}
                }
            }
            let precision = if tp + fp > 0 {
                tp as f64 / (tp + fp) as f64
            } else {
                0.0
            };
            let recall = if tp + fn_ > 0 {
                tp as f64 / (tp + fn_) as f64
            } else {
                0.0
            };
            ClassMetrics {
                class: name.to_string(),
                precision,
                recall,
                f_score: f_score(precision, recall),
                support: tp + fn_,
            }
        })
        .collect();
    Ok(EvalMetrics {
        per_class,
        mean_training_ms: 0.0,
    })
}

/// Test-fold indices. Each class is shuffled with `seed` and dealt round-robin,
/// continuing where the previous class stopped. A class with a single sample
/// is kept out of every test fold so that each training split contains it.
pub fn stratified_folds(
    labels: &[usize],
    n_classes: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!(
            "k = {k}, need at least 2 folds"
        )));
    }
    if labels.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} samples for {k} folds",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.len() < 2 {
            continue;
        }
        members.shuffle(&mut rng);
        for i in members {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    /// Fold-averaged precision and recall; F-scores recomputed from them.
    pub metrics: EvalMetrics,
    pub folds: Vec<EvalMetrics>,
}

/// k-fold cross-validation over stratified folds.
pub fn cross_validate<M, F>(
    data: &TrainingSet,
    k: usize,
    seed: u64,
    class_names: &[&str],
    mut train: F,
) -> Result<CvReport>
where
    M: Classifier,
    F: FnMut(&TrainingSet) -> Result<M>,
{
    if class_names.len() != data.n_classes {
        return Err(Error::DimensionMismatch {
            expected: data.n_classes,
            actual: class_names.len(),
        });
    }
    let folds = stratified_folds(&data.labels, data.n_classes, k, seed)?;
    let mut in_test = vec![usize::MAX; data.len()];
    for (f, idx) in folds.iter().enumerate() {
        for &i in idx {
            in_test[i] = f;
        }
    }
    let mut results = Vec::with_capacity(k);
    for (f, test_idx) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| in_test[i] != f).collect();
        let train_set = data.subset(&train_idx);
        let started = Instant::now();
        let model = train(&train_set)?;
        let elapsed = started.elapsed().as_secs_f64() * 1e3;
        let preds: Vec<usize> = test_idx
            .iter()
            .map(|&i| model.predict(&data.features[i]).0)
            .collect();
        let truth: Vec<usize> = test_idx.iter().map(|&i| data.labels[i]).collect();
        let mut m = metrics(&preds, &truth, class_names)?;
        m.mean_training_ms = elapsed;
        results.push(m);
    }

    let kf = results.len() as f64;
    let per_class = (0..data.n_classes)
        .map(|c| {
            let precision = results
                .iter()
                .map(|m| m.per_class[c].precision)
                .sum::<f64>()
                / kf;
            let recall = results.iter().map(|m| m.per_class[c].recall).sum::<f64>() / kf;
            ClassMetrics {
                class: class_names[c].to_string(),
                precision,
                recall,
                f_score: f_score(precision, recall),
                support: results.iter().map(|m| m.per_class[c].support).sum(),
            }
        })
        .collect();
    let mean_training_ms = results.iter().map(|m| m.mean_training_ms).sum::<f64>() / kf;
    Ok(CvReport {
        metrics: EvalMetrics {
            per_class,
            mean_training_ms,
        },
        folds: results,
    })
}
