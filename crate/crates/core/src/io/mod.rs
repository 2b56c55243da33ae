//! File formats: raster images, QHSL dumps, retrieval reports, circuit
//! listings, manual lightness tables and pseudocolor maps.

mod circuit_text;
mod dump;
mod raster;
mod tables;

use std::io::Write;
use std::path::Path;

pub use circuit_text::{export_circuit, format_circuit, import_circuit, parse_circuit};
pub use dump::{format_dump, format_report, parse_dump, parse_report, read_dump, read_report, write_dump, write_report};
pub use raster::{
    decode_raster, encode_png, encode_ppm, image_to_rgb, load_image, report_to_rgb, rgb_to_image, save_image,
    save_report, RgbRaster,
};
pub use tables::{parse_manual_table, parse_pseudocolor_map, read_manual_table, read_pseudocolor_map};

use crate::error::{QhslError, Result};

/// Write through a temporary file in the destination directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| QhslError::Io(e.error))?;
    Ok(())
}

/// Read a text file, attaching the path to any parse error from `parse`.
fn read_text<T>(path: &Path, parse: impl FnOnce(&str) -> Result<T>) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    parse(&text).map_err(|e| e.with_path(path))
}

/// Lines with `#` comments and surrounding whitespace removed, paired with
/// 1-based line numbers; blank lines are skipped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}
