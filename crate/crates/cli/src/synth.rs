use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use rayon::prelude::*;
use roidiff_core::classifier::write_samples_to;
use roidiff_core::synth::{gen_corpus, harvest_samples, CorpusManifest};

use crate::config::RunConfig;
use crate::output::{write_atomic, write_json, write_png};

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Number of page pairs.
    #[arg(long, short)]
    pub n: usize,
    /// Also harvest a labelled feature CSV with this many samples per binary
    /// class, from pairs of the same seed.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Most pairs the harvest may compare.
    #[arg(long, default_value_t = 5000)]
    pub max_pairs: usize,
    /// Most samples kept from one pair.
    #[arg(long, default_value_t = 12)]
    pub max_per_page: usize,
}

pub fn run(cfg: &RunConfig, a: SynthArgs) -> Result<ExitCode> {
    let out = cfg.out_dir();
    let corpus = gen_corpus(a.n, cfg.seed, &cfg.corpus)?;
    let pool = cfg.thread_pool()?;
    pool.install(|| {
        corpus.par_iter().try_for_each(|pair| -> Result<()> {
            let (b, t) = pair.render();
            write_png(&out.join(format!("{}_baseline.png", pair.id)), &b)?;
            write_png(&out.join(format!("{}_test.png", pair.id)), &t)
        })
    })?;
    write_json(
        &out.join("manifest.json"),
        &CorpusManifest::new(cfg.seed, cfg.corpus.clone(), &corpus),
    )?;
    let defects = corpus.iter().filter(|p| p.has_defect()).count();
    println!(
        "{} pairs ({defects} with a defect) in {}",
        corpus.len(),
        out.display()
    );

    if let Some(per_class) = a.samples {
        let samples = pool.install(|| {
            harvest_samples(
                cfg.seed,
                &cfg.corpus,
                &cfg.compare,
                per_class,
                a.max_pairs,
                a.max_per_page,
            )
        })?;
        let mut buf = Vec::new();
        write_samples_to(&mut buf, &samples)?;
        write_atomic(&out.join("samples.csv"), &buf)?;
        println!("{} labelled samples in samples.csv", samples.len());
    }
    Ok(ExitCode::SUCCESS)
}
