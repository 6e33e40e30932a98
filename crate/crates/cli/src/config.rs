//! Run configuration: a versioned TOML document, overridden by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use roidiff_core::classifier::{NnParams, TreeParams};
use roidiff_core::synth::CorpusConfig;
use roidiff_core::CompareConfig;
use serde::{Deserialize, Serialize};

use crate::Common;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub debug_images: bool,
    pub model: Option<PathBuf>,
    /// Worker count for `eval` and `synth`; `ROIDIFF_THREADS` takes precedence.
    pub threads: Option<usize>,
    pub compare: CompareConfig,
    pub tree: TreeParams,
    pub nn: NnParams,
    pub corpus: CorpusConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            seed: 0,
            out: None,
            debug_images: false,
            model: None,
            threads: None,
            compare: CompareConfig::default(),
            tree: TreeParams::default(),
            nn: NnParams::default(),
            corpus: CorpusConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses a config document. Relative paths are taken relative to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).context("parsing config")?;
        if cfg.schema_version != CONFIG_SCHEMA_VERSION {
            bail!(
                "config schema version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                cfg.schema_version
            );
        }
        for p in [&mut cfg.out, &mut cfg.model].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Loads `--config` if given, applies flag overrides and validates.
    pub fn resolve(flags: &Common) -> Result<Self> {
        let mut cfg = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                let base = path.parent().unwrap_or(Path::new("."));
                Self::parse(&text, base).with_context(|| format!("in {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = flags.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &flags.out {
            cfg.out = Some(out.clone());
        }
        cfg.debug_images |= flags.debug_images;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Replaces the configured model file with a flag value, if any.
    pub fn with_model(&self, flag: Option<PathBuf>) -> Result<Self> {
        let mut cfg = self.clone();
        if flag.is_some() {
            cfg.model = flag;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.compare.validate()?;
        self.corpus.validate()?;
        if let Some(m) = &self.model {
            if !m.is_file() {
                bail!("model file {} does not exist", m.display());
            }
        }
        if self.threads == Some(0) {
            bail!("threads must be at least 1");
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// `ROIDIFF_THREADS`, then the config, then rayon's default.
    pub fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        let from_env = match std::env::var("ROIDIFF_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&n| n > 0)
                    .with_context(|| format!("ROIDIFF_THREADS={v:?} is not a positive integer"))?,
            ),
            Err(_) => None,
        };
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = from_env.or(self.threads) {
            b = b.num_threads(n);
        }
        Ok(b.build()?)
    }
}
