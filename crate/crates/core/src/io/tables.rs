//! Manual lightness tables (`one fraction per line`) and pseudocolor maps
//! (`lo hi hue_degrees` per line).

use std::path::Path;

use crate::color::ManualTable;
use crate::error::{QhslError, Result};
use crate::transforms::{PseudocolorInterval, PseudocolorMap};

use super::{content_lines, read_text};

/// Parse a table of exactly `2^q` fractions.
pub fn parse_manual_table(text: &str, q: u32) -> Result<ManualTable> {
    let mut values = Vec::new();
    for (line, s) in content_lines(text) {
        let v: f64 = s
            .parse()
            .map_err(|_| QhslError::parse(line, format!("expected a fraction, found {s:?}")))?;
        values.push(v);
    }
    let expected = 1usize << q;
    if values.len() != expected {
        return Err(QhslError::parse(
            text.lines().count(),
            format!("table has {} entries, q={q} needs {expected}", values.len()),
        ));
    }
    ManualTable::new(values)
}

pub fn read_manual_table(path: &Path, q: u32) -> Result<ManualTable> {
    read_text(path, |t| parse_manual_table(t, q)).map(|t| t.with_source(path.display().to_string()))
}

pub fn parse_pseudocolor_map(text: &str, q: u32) -> Result<PseudocolorMap> {
    let mut intervals = Vec::new();
    for (line, s) in content_lines(text) {
        let fields: Vec<&str> = s.split_whitespace().collect();
        let [lo, hi, hue] = fields[..] else {
            return Err(QhslError::parse(line, "expected `lo hi hue_degrees`"));
        };
        let bad = |what: &str, v: &str| QhslError::parse(line, format!("bad {what} {v:?}"));
        intervals.push(PseudocolorInterval {
            lo: lo.parse().map_err(|_| bad("lower bound", lo))?,
            hi: hi.parse().map_err(|_| bad("upper bound", hi))?,
            hue: hue.parse().map_err(|_| bad("hue", hue))?,
        });
    }
    PseudocolorMap::new(q, intervals)
}

pub fn read_pseudocolor_map(path: &Path, q: u32) -> Result<PseudocolorMap> {
    read_text(path, |t| parse_pseudocolor_map(t, q))
}
