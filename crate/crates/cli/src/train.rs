use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use roidiff_core::classifier::{
    cross_validate, read_samples, CvReport, LabeledSample, NnModel, NnParams, TreeModel,
};
use roidiff_core::dataset::balance_binary;
use roidiff_core::{Model, ModelFile, Target, TrainingSet};

use crate::config::RunConfig;
use crate::output::{write_atomic, write_json};
use crate::ModelKind;

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Feature CSV with binary and/or quaternary labels.
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value = "nn")]
    pub model: ModelKind,
    #[arg(long, default_value = "binary")]
    pub target: Target,
    /// Hidden units of the network.
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Keep the first N samples of each binary class before training.
    #[arg(long)]
    pub balance: Option<usize>,
    /// Also write the cross-validation metrics as JSON.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

pub fn run(cfg: &RunConfig, a: TrainArgs) -> Result<ExitCode> {
    let samples =
        read_samples(&a.dataset).with_context(|| format!("reading {}", a.dataset.display()))?;
    let mut samples: Vec<LabeledSample> = samples
        .into_iter()
        .filter(|s| s.label(a.target).is_some())
        .collect();
    if let Some(per_class) = a.balance {
        anyhow::ensure!(
            a.target == Target::Binary,
            "--balance applies to the binary target only"
        );
        samples = balance_binary(&samples, per_class)?;
    }
    let data = TrainingSet::from_samples(&samples, a.target)?;
    let names = a.target.class_names();
    let nn = NnParams {
        hidden: a.hidden.unwrap_or(cfg.nn.hidden),
        seed: cfg.seed,
        ..cfg.nn
    };
    let train = |d: &TrainingSet| -> roidiff_core::Result<Model> {
        Ok(match a.model {
            ModelKind::Tree => Model::Tree(TreeModel::train(d, cfg.tree)?),
            ModelKind::Nn => Model::Nn(NnModel::train(d, nn)?),
        })
    };
    let cv: CvReport = cross_validate(&data, a.folds, cfg.seed, names, train)?;
    let title = format!(
        "{} on {} samples {:?}, {}-fold cross-validation",
        match a.model {
            ModelKind::Tree => "tree".to_string(),
            ModelKind::Nn => format!("network ({} hidden)", nn.hidden),
        },
        data.len(),
        data.class_counts(),
        a.folds
    );
    print!("{}", cv.metrics.table(&title));

    let file = ModelFile::new(a.target, train(&data)?);
    let path = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("model.json"));
    let mut json = file.to_json()?;
    json.push('\n');
    write_atomic(&path, json.as_bytes())?;
    if let Some(m) = &a.metrics {
        write_json(m, &cv)?;
    }
    eprintln!("model written to {}", path.display());
    Ok(ExitCode::SUCCESS)
}
