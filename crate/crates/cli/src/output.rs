//! Output files are written to a temporary sibling and renamed into place,
//! so a reader never sees a partial file.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use roidiff_core::Raster;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("writing into {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_png(path: &Path, img: &Raster) -> Result<()> {
    write_atomic(path, &img.encode_png()?)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn load_png(path: &Path) -> Result<Raster> {
    Raster::load_png(path).with_context(|| format!("reading {}", path.display()))
}
