use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use rayon::prelude::*;
use roidiff_core::classifier::BinaryLabel;
use roidiff_core::synth::{score_report, CorpusManifest, ManifestEntry, PairScore};
use roidiff_core::{compare_pages, CompareConfig, ModelFile, PageVerdict};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{load_png, write_json};

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// `manifest.json` written by `synth`.
    pub manifest: PathBuf,
    /// Classifier model file for the filtered rows.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

/// Page-level counts: a page is positive when it carries an incompatibility.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PageScore {
    pub pages: usize,
    pub defective: usize,
    pub flagged: usize,
    pub true_flagged: usize,
}

impl PageScore {
    fn add(&mut self, defective: bool, flagged: bool) {
        self.pages += 1;
        self.defective += defective as usize;
        self.flagged += flagged as usize;
        self.true_flagged += (defective && flagged) as usize;
    }

    pub fn precision(&self) -> f64 {
        ratio(self.true_flagged, self.flagged, 0.0)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.true_flagged, self.defective, 1.0)
    }
}

fn ratio(num: usize, den: usize, empty: f64) -> f64 {
    if den == 0 {
        empty
    } else {
        num as f64 / den as f64
    }
}

fn f(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub pairs: usize,
    pub model: Option<String>,
    pub pair_bare: PairScore,
    pub pair_filtered: PairScore,
    pub page_bare: PageScore,
    pub page_filtered: PageScore,
}

struct PairOutcome {
    bare: PairScore,
    filtered: PairScore,
    defective: bool,
    bare_flagged: bool,
    filtered_flagged: bool,
}

fn evaluate(
    dir: &Path,
    entry: &ManifestEntry,
    compare: &CompareConfig,
    model: Option<&ModelFile>,
) -> Result<PairOutcome> {
    let b = load_png(&dir.join(&entry.baseline)).with_context(|| format!("pair {}", entry.id))?;
    let t = load_png(&dir.join(&entry.under_test)).with_context(|| format!("pair {}", entry.id))?;
    let cfg = CompareConfig {
        config_index: entry.config_index,
        ..compare.clone()
    };
    let report =
        compare_pages(&b, &t, &cfg, model).with_context(|| format!("pair {}", entry.id))?;
    Ok(PairOutcome {
        bare: score_report(&report, &entry.labels, true),
        filtered: score_report(&report, &entry.labels, false),
        defective: entry
            .labels
            .iter()
            .any(|l| l.label == BinaryLabel::Incompatibility),
        bare_flagged: report.bare_page_verdict == PageVerdict::Incompatible,
        filtered_flagged: report.page_verdict == PageVerdict::Incompatible,
    })
}

pub fn table(r: &EvalReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<6} {:<12} {:>9} {:>9} {:>9} {:>8} {:>8}",
        "level", "pipeline", "precision", "recall", "f-score", "flagged", "truth"
    );
    let filtered_name = if r.model.is_some() {
        "filtered"
    } else {
        "filtered*"
    };
    for (name, p) in [
        ("bare-bones", &r.pair_bare),
        (filtered_name, &r.pair_filtered),
    ] {
        let _ = writeln!(
            s,
            "{:<6} {:<12} {:>9.3} {:>9.3} {:>9.3} {:>8} {:>8}",
            "pair",
            name,
            p.precision(),
            p.recall(),
            p.f_score(),
            p.flagged,
            p.defects
        );
    }
    for (name, p) in [
        ("bare-bones", &r.page_bare),
        (filtered_name, &r.page_filtered),
    ] {
        let _ = writeln!(
            s,
            "{:<6} {:<12} {:>9.3} {:>9.3} {:>9.3} {:>8} {:>8}",
            "page",
            name,
            p.precision(),
            p.recall(),
            f(p.precision(), p.recall()),
            p.flagged,
            p.defective
        );
    }
    if r.model.is_none() {
        let _ = writeln!(
            s,
            "* no model given; filtered rows equal the bare-bones rows"
        );
    }
    s
}

pub fn run(cfg: &RunConfig, a: EvalArgs) -> Result<ExitCode> {
    let cfg = &cfg.with_model(a.model.clone())?;
    let text = std::fs::read_to_string(&a.manifest)
        .with_context(|| format!("reading {}", a.manifest.display()))?;
    let manifest =
        CorpusManifest::from_json(&text).with_context(|| format!("in {}", a.manifest.display()))?;
    let dir = a.manifest.parent().unwrap_or(Path::new("."));
    let model = cfg
        .model
        .as_deref()
        .map(|p| ModelFile::load(p).with_context(|| format!("loading model {}", p.display())))
        .transpose()?;

    let outcomes: Vec<PairOutcome> = cfg.thread_pool()?.install(|| {
        manifest
            .pairs
            .par_iter()
            .map(|e| evaluate(dir, e, &cfg.compare, model.as_ref()))
            .collect::<Result<_>>()
    })?;

    let mut report = EvalReport {
        schema_version: 1,
        pairs: outcomes.len(),
        model: cfg.model.as_ref().map(|p| p.display().to_string()),
        pair_bare: PairScore::default(),
        pair_filtered: PairScore::default(),
        page_bare: PageScore::default(),
        page_filtered: PageScore::default(),
    };
    for o in &outcomes {
        report.pair_bare.add(&o.bare);
        report.pair_filtered.add(&o.filtered);
        report.page_bare.add(o.defective, o.bare_flagged);
        report.page_filtered.add(o.defective, o.filtered_flagged);
    }
    print!("{}", table(&report));
    if let Some(out) = &cfg.out {
        write_json(&out.join("eval.json"), &report)?;
    }
    Ok(ExitCode::SUCCESS)
}
