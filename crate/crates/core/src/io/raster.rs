//! RGB rasters: binary PPM/PGM and PNG codecs, and conversion to and from
//! QHSL images.

use std::io::Cursor;
use std::path::Path;

use crate::color::{
    decode_hs, encode_hs, fraction_to_lightness, hsl_to_rgb, lightness_to_fraction, rgb_to_hsl, HslColor,
    LightnessCode, LightnessMapping, RgbColor,
};
use crate::error::{QhslError, Result};
use crate::image::{Pixel, QhslImage};
use crate::retrieval::RetrievalReport;

use super::write_atomic;

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

/// Row-major 8-bit RGB pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbRaster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<RgbColor>,
}

impl RgbRaster {
    pub fn get(&self, y: usize, x: usize) -> RgbColor {
        self.pixels[y * self.width + x]
    }
}

/// Decode PPM (P6), PGM (P5) or PNG, chosen by the leading bytes.
pub fn decode_raster(bytes: &[u8]) -> Result<RgbRaster> {
    if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P6") || bytes.starts_with(b"P5") {
        decode_pnm(bytes)
    } else {
        Err(QhslError::UnsupportedFormat(
            "expected binary PPM (P6), PGM (P5) or PNG".into(),
        ))
    }
}

fn bad_pnm(msg: impl Into<String>) -> QhslError {
    QhslError::InvalidImage(msg.into())
}

fn decode_pnm(bytes: &[u8]) -> Result<RgbRaster> {
    let color = bytes[1] == b'6';
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(bad_pnm("truncated PNM header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad_pnm("bad PNM header number"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad_pnm("PNM header must end with whitespace"));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(bad_pnm(format!("PNM maxval {maxval} outside 1..=65535")));
    }
    let channels = if color { 3 } else { 1 };
    let sample_bytes = if maxval < 256 { 1 } else { 2 };
    let needed = width
        .checked_mul(height)
        .and_then(|p| p.checked_mul(channels * sample_bytes))
        .ok_or_else(|| bad_pnm("PNM dimensions overflow"))?;
    let data = bytes
        .get(pos..pos + needed)
        .ok_or_else(|| bad_pnm("truncated PNM pixel data"))?;
    let sample = |i: usize| -> u8 {
        let v = if sample_bytes == 1 {
            usize::from(data[i])
        } else {
            usize::from(data[2 * i]) << 8 | usize::from(data[2 * i + 1])
        };
        ((v.min(maxval) * 255 * 2 + maxval) / (2 * maxval)) as u8
    };
    let pixels = (0..width * height)
        .map(|p| {
            if color {
                RgbColor::new(sample(3 * p), sample(3 * p + 1), sample(3 * p + 2))
            } else {
                let g = sample(p);
                RgbColor::new(g, g, g)
            }
        })
        .collect();
    Ok(RgbRaster { width, height, pixels })
}

fn decode_png(bytes: &[u8]) -> Result<RgbRaster> {
    let bad = |e: png::DecodingError| QhslError::InvalidImage(format!("PNG: {e}"));
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::normalize_to_color8());
    let mut reader = decoder.read_info().map_err(bad)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| QhslError::InvalidImage("PNG too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(bad)?;
    let (width, height) = (info.width as usize, info.height as usize);
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => {
            return Err(QhslError::UnsupportedFormat("unexpanded indexed PNG".into()));
        }
    };
    let pixels = (0..height)
        .flat_map(|y| (0..width).map(move |x| (y, x)))
        .map(|(y, x)| {
            let p = &buf[y * info.line_size + x * channels..];
            if channels < 3 {
                RgbColor::new(p[0], p[0], p[0])
            } else {
                RgbColor::new(p[0], p[1], p[2])
            }
        })
        .collect();
    Ok(RgbRaster { width, height, pixels })
}

pub fn encode_ppm(r: &RgbRaster) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", r.width, r.height).into_bytes();
    out.reserve(r.pixels.len() * 3);
    for p in &r.pixels {
        out.extend_from_slice(&[p.r, p.g, p.b]);
    }
    out
}

pub fn encode_png(r: &RgbRaster) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let bad = |e: png::EncodingError| QhslError::InvalidImage(format!("PNG: {e}"));
    let mut enc = png::Encoder::new(&mut out, r.width as u32, r.height as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header().map_err(bad)?;
    let data: Vec<u8> = r.pixels.iter().flat_map(|p| [p.r, p.g, p.b]).collect();
    writer.write_image_data(&data).map_err(bad)?;
    writer.finish().map_err(bad)?;
    Ok(out)
}

/// Encode by file extension: `.png` as PNG, `.ppm`/`.pnm` as binary PPM.
fn encode_for(path: &Path, r: &RgbRaster) -> Result<Vec<u8>> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => encode_png(r),
        Some("ppm" | "pnm") => Ok(encode_ppm(r)),
        other => Err(QhslError::UnsupportedFormat(format!(
            "cannot write {:?}; use .ppm or .png",
            other.unwrap_or("")
        ))),
    }
}

/// Smallest `n` whose `2ⁿ×2ⁿ` grid holds the raster.
fn fitting_n(width: usize, height: usize) -> u32 {
    let side = width.max(height).max(1);
    side.next_power_of_two().trailing_zeros()
}

/// Convert a raster into a QHSL image, padding with black to `2ⁿ×2ⁿ`. With
/// `n = None` the smallest fitting grid is used.
pub fn rgb_to_image(r: &RgbRaster, n: Option<u32>, q: u32, mapping: &LightnessMapping) -> Result<QhslImage> {
    mapping.validate_for(q)?;
    let n = n.unwrap_or_else(|| fitting_n(r.width, r.height));
    if n > 15 {
        return Err(QhslError::Config(format!("n={n} is too large")));
    }
    let side = 1usize << n;
    if r.width > side || r.height > side {
        return Err(QhslError::DimensionOverflow {
            width: r.width,
            height: r.height,
            side,
        });
    }
    let black = RgbColor::new(0, 0, 0);
    let mut pixels = Vec::with_capacity(side * side);
    for y in 0..side {
        for x in 0..side {
            let c = if y < r.height && x < r.width { r.get(y, x) } else { black };
            let hsl = rgb_to_hsl(c);
            pixels.push(Pixel {
                chroma: encode_hs(&hsl),
                lightness: fraction_to_lightness(hsl.lightness, q, mapping)?.bits(),
            });
        }
    }
    QhslImage::new(n, q, mapping.clone(), pixels)
}

pub fn load_image(path: &Path, n: Option<u32>, q: u32, mapping: &LightnessMapping) -> Result<QhslImage> {
    let bytes = std::fs::read(path)?;
    rgb_to_image(&decode_raster(&bytes)?, n, q, mapping)
}

fn render(hue: f64, saturation: f64, hue_undefined: bool, code: u32, q: u32, mapping: &LightnessMapping) -> Result<RgbColor> {
    let l = lightness_to_fraction(LightnessCode::new(q, code)?, mapping)?;
    let (h, s) = if hue_undefined { (0.0, 0.0) } else { (hue, saturation) };
    Ok(hsl_to_rgb(&HslColor::new(h, s, l)?))
}

/// Decode every pixel to RGB; pixels without a defined hue render grey.
pub fn image_to_rgb(img: &QhslImage) -> Result<RgbRaster> {
    let pixels = img
        .pixels()
        .iter()
        .map(|p| {
            let d = decode_hs(&p.chroma);
            render(d.hue, d.saturation, d.hue_undefined, p.lightness, img.q(), img.mapping())
        })
        .collect::<Result<_>>()?;
    Ok(RgbRaster {
        width: img.side(),
        height: img.side(),
        pixels,
    })
}

pub fn report_to_rgb(r: &RetrievalReport) -> Result<RgbRaster> {
    let pixels = r
        .pixels
        .iter()
        .map(|p| render(p.hue, p.saturation, p.hue_undefined, p.lightness, r.q, &r.mapping))
        .collect::<Result<_>>()?;
    Ok(RgbRaster {
        width: r.side(),
        height: r.side(),
        pixels,
    })
}

pub fn save_image(img: &QhslImage, path: &Path) -> Result<()> {
    let raster = image_to_rgb(img)?;
    write_atomic(path, &encode_for(path, &raster)?)
}

pub fn save_report(r: &RetrievalReport, path: &Path) -> Result<()> {
    let raster = report_to_rgb(r)?;
    write_atomic(path, &encode_for(path, &raster)?)
}
