//! Text dumps of QHSL images and retrieval reports.
//!
//! Both start with a header naming the register sizes and the lightness
//! mapping (`average`, or `manual:<table path>` resolved against the dump's
//! directory), followed by one line per pixel in row-major order. Reals are
//! written with 12 significant digits.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use crate::color::{ChromaState, LightnessMapping};
use crate::error::{QhslError, Result};
use crate::image::{Pixel, QhslImage};
use crate::retrieval::{RetrievalReport, RetrievedPixel};

use super::tables::read_manual_table;
use super::{content_lines, read_text, write_atomic};

const DUMP_MAGIC: &str = "QHSL";
const REPORT_MAGIC: &str = "QHSL-REPORT";
/// Slack for 12-digit rounding of angles that sit on a range boundary.
const ROUNDING_SLACK: f64 = 1e-10;

fn real(x: f64) -> String {
    format!("{x:.11e}")
}

/// Azimuth text that parses back below 2π.
fn azimuth(phi: f64) -> String {
    let s = real(phi);
    if s.parse::<f64>().is_ok_and(|v| v >= TAU) {
        real(0.0)
    } else {
        s
    }
}

fn mapping_field(mapping: &LightnessMapping) -> Result<String> {
    match mapping {
        LightnessMapping::Average => Ok("average".into()),
        LightnessMapping::Manual(t) => t
            .source()
            .map(|s| format!("manual:{s}"))
            .ok_or_else(|| QhslError::Config("manual table has no file to reference in the header".into())),
    }
}

fn check_q(q: u32) -> Result<()> {
    if q > 16 {
        return Err(QhslError::Config(format!("q={q} exceeds the supported 16 lightness qubits")));
    }
    Ok(())
}

pub fn format_dump(img: &QhslImage) -> Result<String> {
    let mut out = format!(
        "{DUMP_MAGIC} n={} q={} mapping={}\n",
        img.n(),
        img.q(),
        mapping_field(img.mapping())?
    );
    for addr in img.addresses() {
        let p = img.pixel(addr);
        out.push_str(&format!(
            "{} {} {} {} {}\n",
            addr.y,
            addr.x,
            real(p.chroma.theta()),
            azimuth(p.chroma.phi()),
            p.lightness
        ));
    }
    Ok(out)
}

struct Header {
    n: u32,
    q: u32,
    mapping: LightnessMapping,
    extra: Vec<(String, String)>,
}

fn parse_header(line: usize, text: &str, magic: &str, base: Option<&Path>) -> Result<Header> {
    let mut fields = text.split_whitespace();
    if fields.next() != Some(magic) {
        return Err(QhslError::parse(line, format!("expected a `{magic}` header")));
    }
    let mut pairs = Vec::new();
    for f in fields {
        let (k, v) = f
            .split_once('=')
            .ok_or_else(|| QhslError::parse(line, format!("bad header field {f:?}")))?;
        pairs.push((k.to_string(), v.to_string()));
    }
    let get = |key: &str| {
        pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| QhslError::parse(line, format!("header lacks `{key}=`")))
    };
    let int = |key: &str| -> Result<u32> {
        let v = get(key)?;
        v.parse()
            .map_err(|_| QhslError::parse(line, format!("bad {key} value {v:?}")))
    };
    let (n, q) = (int("n")?, int("q")?);
    if n > 15 {
        return Err(QhslError::parse(line, format!("n={n} is too large")));
    }
    check_q(q).map_err(|e| QhslError::parse(line, e.to_string()))?;
    let mapping = match get("mapping")? {
        "average" => LightnessMapping::Average,
        m => {
            let file = m
                .strip_prefix("manual:")
                .ok_or_else(|| QhslError::parse(line, format!("unknown mapping {m:?}")))?;
            let resolved = match base {
                Some(dir) if Path::new(file).is_relative() => dir.join(file),
                _ => file.into(),
            };
            let table = read_manual_table(&resolved, q)
                .map_err(|e| QhslError::parse(line, format!("manual table {file}: {e}")))?;
            LightnessMapping::Manual(table.with_source(file))
        }
    };
    Ok(Header {
        n,
        q,
        mapping,
        extra: pairs,
    })
}

fn parse_coord(v: &str, line: usize, side: usize) -> Result<usize> {
    v.parse::<usize>()
        .ok()
        .filter(|&c| c < side)
        .ok_or_else(|| QhslError::parse(line, format!("bad coordinate {v:?}")))
}

fn parse_real(v: &str, line: usize, what: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| QhslError::parse(line, format!("bad {what} {v:?}")))
}

/// Collect per-pixel rows in raster order, checking coordinates.
fn rows<'a>(
    lines: impl Iterator<Item = (usize, &'a str)>,
    n: u32,
    columns: usize,
    last_line: usize,
) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let side = 1usize << n;
    let mut out = Vec::with_capacity(side * side);
    for (line, text) in lines {
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.len() != columns {
            return Err(QhslError::parse(line, format!("expected {columns} columns, found {}", f.len())));
        }
        let i = out.len();
        if i >= side * side {
            return Err(QhslError::parse(line, "more pixel rows than the header allows"));
        }
        let (y, x) = (parse_coord(f[0], line, side)?, parse_coord(f[1], line, side)?);
        if (y, x) != (i / side, i % side) {
            return Err(QhslError::parse(
                line,
                format!("expected pixel ({}, {}), found ({y}, {x})", i / side, i % side),
            ));
        }
        out.push((line, f));
    }
    if out.len() != side * side {
        return Err(QhslError::parse(
            last_line,
            format!("expected {} pixel rows, found {}", side * side, out.len()),
        ));
    }
    Ok(out)
}

/// Parse a dump; `base` is the directory manual-table paths are relative to.
pub fn parse_dump(text: &str, base: Option<&Path>) -> Result<QhslImage> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| QhslError::parse(1, "empty dump"))?;
    let h = parse_header(hl, header, DUMP_MAGIC, base)?;
    let mut pixels = Vec::new();
    for (line, f) in rows(lines, h.n, 5, text.lines().count())? {
        let theta = parse_real(f[2], line, "theta")?;
        let phi = parse_real(f[3], line, "phi")?;
        let theta = if theta > PI && theta <= PI + ROUNDING_SLACK { PI } else { theta };
        let chroma = ChromaState::new(theta, phi).map_err(|e| QhslError::parse(line, e.to_string()))?;
        let lightness = f[4]
            .parse()
            .map_err(|_| QhslError::parse(line, format!("bad lightness {:?}", f[4])))?;
        pixels.push(Pixel { chroma, lightness });
    }
    QhslImage::new(h.n, h.q, h.mapping, pixels).map_err(|e| QhslError::parse(hl, e.to_string()))
}

pub fn write_dump(img: &QhslImage, path: &Path) -> Result<()> {
    write_atomic(path, format_dump(img)?.as_bytes())
}

pub fn read_dump(path: &Path) -> Result<QhslImage> {
    read_text(path, |t| parse_dump(t, path.parent()))
}

pub fn format_report(r: &RetrievalReport) -> Result<String> {
    let mode = match (r.shots, r.seed) {
        (Some(s), Some(seed)) => format!("mode=shots shots={s} seed={seed}"),
        (Some(s), None) => format!("mode=shots shots={s}"),
        _ => "mode=exact".to_string(),
    };
    let mut out = format!(
        "{REPORT_MAGIC} n={} q={} mapping={} {mode}\n# y x H S L hue_undefined\n",
        r.n,
        r.q,
        mapping_field(&r.mapping)?
    );
    let side = r.side();
    for (i, p) in r.pixels.iter().enumerate() {
        out.push_str(&format!(
            "{} {} {} {} {} {}\n",
            i / side,
            i % side,
            real(p.hue),
            real(p.saturation),
            p.lightness,
            u8::from(p.hue_undefined)
        ));
    }
    Ok(out)
}

pub fn parse_report(text: &str, base: Option<&Path>) -> Result<RetrievalReport> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| QhslError::parse(1, "empty report"))?;
    let h = parse_header(hl, header, REPORT_MAGIC, base)?;
    let field = |k: &str| h.extra.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
    let num = |k: &str| -> Result<Option<u64>> {
        field(k)
            .map(|v| v.parse().map_err(|_| QhslError::parse(hl, format!("bad {k} value {v:?}"))))
            .transpose()
    };
    let (shots, seed) = match field("mode") {
        Some("exact") => (None, None),
        Some("shots") => {
            let shots = num("shots")?.ok_or_else(|| QhslError::parse(hl, "shot report lacks `shots=`"))?;
            (Some(shots), num("seed")?)
        }
        other => return Err(QhslError::parse(hl, format!("bad mode {other:?}"))),
    };
    let max = crate::color::max_code(h.q);
    let mut pixels = Vec::new();
    for (line, f) in rows(lines, h.n, 6, text.lines().count())? {
        let hue = parse_real(f[2], line, "hue")?;
        let saturation = parse_real(f[3], line, "saturation")?;
        if !(0.0..360.0).contains(&hue) || !(0.0..=1.0).contains(&saturation) {
            return Err(QhslError::parse(line, "hue or saturation out of range"));
        }
        let lightness: u32 = f[4]
            .parse()
            .ok()
            .filter(|&l| l <= max)
            .ok_or_else(|| QhslError::parse(line, format!("bad lightness {:?}", f[4])))?;
        let hue_undefined = match f[5] {
            "0" => false,
            "1" => true,
            v => return Err(QhslError::parse(line, format!("hue_undefined must be 0 or 1, found {v:?}"))),
        };
        pixels.push(RetrievedPixel {
            theta: (1.0 + saturation) * PI / 3.0,
            phi: hue * PI / 180.0,
            hue,
            saturation,
            lightness,
            hue_undefined,
        });
    }
    Ok(RetrievalReport {
        n: h.n,
        q: h.q,
        mapping: h.mapping,
        shots,
        seed,
        pixels,
    })
}

pub fn write_report(r: &RetrievalReport, path: &Path) -> Result<()> {
    write_atomic(path, format_report(r)?.as_bytes())
}

pub fn read_report(path: &Path) -> Result<RetrievalReport> {
    read_text(path, |t| parse_report(t, path.parent()))
}
