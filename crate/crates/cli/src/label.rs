//! Sequential rating of exported region pairs. Each answer is saved at once,
//! so a session can stop anywhere and resume later.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};

use crate::config::RunConfig;
use crate::output::write_atomic;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    /// Classes 1 (no difference) to 4 (critical).
    Quaternary,
    /// `p` for an incompatibility, `n` for a false positive.
    Binary,
}

#[derive(Args, Debug)]
pub struct LabelArgs {
    /// Directory written by `compare --export-pairs`.
    pub pairs: PathBuf,
    /// Ratings CSV (`pair_id,rater_id,class`), created or extended.
    pub ratings: PathBuf,
    #[arg(long, default_value = "rater")]
    pub rater: String,
    #[arg(long, value_enum, default_value = "quaternary")]
    pub scale: Scale,
}

const SUFFIXES: [&str; 2] = ["_baseline.png", "_test.png"];

/// Pair ids with at least one exported crop, sorted.
pub fn pair_ids(dir: &Path) -> Result<Vec<String>> {
    let mut ids = BTreeSet::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let name = entry?.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(id) = SUFFIXES.iter().find_map(|s| name.strip_suffix(s)) {
            ids.insert(id.to_string());
        }
    }
    Ok(ids.into_iter().collect())
}

fn read_rows(path: &Path) -> Result<Vec<[String; 3]>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    anyhow::ensure!(
        header == ["pair_id", "rater_id", "class"],
        "{} is not a ratings file (header {:?})",
        path.display(),
        header
    );
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok([rec[0].to_string(), rec[1].to_string(), rec[2].to_string()])
        })
        .collect()
}

fn write_rows(path: &Path, rows: &[[String; 3]]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["pair_id", "rater_id", "class"])?;
    for r in rows {
        w.write_record(r)?;
    }
    write_atomic(path, &w.into_inner()?)
}

fn parse_answer(s: &str, scale: Scale) -> Option<String> {
    let s = s.trim().to_ascii_lowercase();
    let ok = match scale {
        Scale::Quaternary => matches!(s.as_str(), "1" | "2" | "3" | "4"),
        Scale::Binary => matches!(s.as_str(), "p" | "n"),
    };
    ok.then_some(s)
}

/// Prompts on `prompt_out` and reads answers from `input`. Returns the number
/// of pairs rated in this session.
pub fn session(
    a: &LabelArgs,
    input: &mut dyn BufRead,
    prompt_out: &mut dyn Write,
) -> Result<usize> {
    let ids = pair_ids(&a.pairs)?;
    let mut rows = read_rows(&a.ratings)?;
    let done: BTreeSet<String> = rows
        .iter()
        .filter(|r| r[1] == a.rater)
        .map(|r| r[0].clone())
        .collect();
    let todo: Vec<&String> = ids.iter().filter(|id| !done.contains(*id)).collect();
    let keys = match a.scale {
        Scale::Quaternary => "1-4",
        Scale::Binary => "p/n",
    };
    let mut rated = 0;
    'pairs: for (i, id) in todo.iter().enumerate() {
        loop {
            write!(
                prompt_out,
                "[{}/{}] {id} ({keys}, q to stop): ",
                i + 1,
                todo.len()
            )?;
            prompt_out.flush()?;
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 || line.trim() == "q" {
                break 'pairs;
            }
            match parse_answer(&line, a.scale) {
                Some(class) => {
                    rows.push([id.to_string(), a.rater.clone(), class]);
                    write_rows(&a.ratings, &rows)?;
                    rated += 1;
                    break;
                }
                None => writeln!(prompt_out, "expected {keys}")?,
            }
        }
    }
    Ok(rated)
}

pub fn run(_cfg: &RunConfig, a: LabelArgs) -> Result<ExitCode> {
    let stdin = std::io::stdin();
    let rated = session(&a, &mut stdin.lock(), &mut std::io::stderr())?;
    eprintln!("{rated} pair(s) rated");
    Ok(ExitCode::SUCCESS)
}
