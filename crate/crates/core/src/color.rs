//! Classical color values and their quantum encodings.
//!
//! Hue and saturation live on the Bloch sphere of a single qubit: hue is the
//! azimuth `phi = H·π/180` and saturation maps linearly onto the polar band
//! `theta ∈ [π/3, 2π/3]`. Lightness is an integer code held by a register of
//! `q` qubits and mapped to a fraction either evenly or through a table.

use std::f64::consts::{PI, TAU};

use crate::error::{QhslError, Result};

/// Below this value of `sin(theta)` the azimuth carries no information.
pub const HUE_UNDEFINED_SIN: f64 = 1e-6;

const THETA_LOW: f64 = PI / 3.0;
const THETA_HIGH: f64 = 2.0 * PI / 3.0;

/// A color in the cylindrical HSL model. Hue in degrees, the rest fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HslColor {
    pub hue: f64,
    pub saturation: f64,
    pub lightness: f64,
}

impl HslColor {
    pub fn new(hue: f64, saturation: f64, lightness: f64) -> Result<Self> {
        if !(0.0..360.0).contains(&hue) {
            return Err(QhslError::InvalidColor(format!("hue {hue} outside [0, 360)")));
        }
        if !(0.0..=1.0).contains(&saturation) {
            return Err(QhslError::InvalidColor(format!(
                "saturation {saturation} outside [0, 1]"
            )));
        }
        if !(0.0..=1.0).contains(&lightness) {
            return Err(QhslError::InvalidColor(format!(
                "lightness {lightness} outside [0, 1]"
            )));
        }
        Ok(HslColor {
            hue,
            saturation,
            lightness,
        })
    }
}

/// 8-bit RGB triplet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RgbColor {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl RgbColor {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        RgbColor { r, g, b }
    }
}

/// Bloch angles of the chromaticity qubit, `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChromaState {
    theta: f64,
    phi: f64,
}

impl ChromaState {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(QhslError::InvalidChroma(format!("theta {theta} outside [0, π]")));
        }
        if !(0.0..TAU).contains(&phi) {
            return Err(QhslError::InvalidChroma(format!("phi {phi} outside [0, 2π)")));
        }
        Ok(ChromaState { theta, phi })
    }

    /// Canonical representative for arbitrary real angles.
    ///
    /// `theta` is folded back into `[0, π]`; each reflection through a pole
    /// moves the azimuth by `π`, which is what a Y rotation past the pole does
    /// to a state on the `phi = 0` meridian.
    pub fn canonical(theta: f64, phi: f64) -> Self {
        let mut t = theta.rem_euclid(TAU);
        let mut p = phi;
        if t > PI {
            t = TAU - t;
            p += PI;
        }
        ChromaState {
            theta: t.clamp(0.0, PI),
            phi: wrap_angle(p),
        }
    }

    /// The `|0⟩` state.
    pub const fn ground() -> Self {
        ChromaState {
            theta: 0.0,
            phi: 0.0,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn hue_undefined(&self) -> bool {
        self.theta.sin() <= HUE_UNDEFINED_SIN
    }
}

/// Reduce an angle into `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Reduce a hue in degrees into `[0, 360)`.
pub fn wrap_degrees(h: f64) -> f64 {
    let w = h.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

pub fn encode_hs(color: &HslColor) -> ChromaState {
    let phi = wrap_angle(color.hue * PI / 180.0);
    let theta = (1.0 + color.saturation) * PI / 3.0;
    ChromaState { theta, phi }
}

/// Hue and saturation recovered from a chroma state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodedChroma {
    pub hue: f64,
    pub saturation: f64,
    pub hue_undefined: bool,
}

/// Inverse of [`encode_hs`], with the two polar caps clamped to 0 and 100 %.
pub fn decode_hs(state: &ChromaState) -> DecodedChroma {
    let saturation = decode_saturation(state.theta);
    if state.hue_undefined() {
        return DecodedChroma {
            hue: 0.0,
            saturation,
            hue_undefined: true,
        };
    }
    DecodedChroma {
        hue: wrap_degrees(state.phi * 180.0 / PI),
        saturation,
        hue_undefined: false,
    }
}

pub(crate) fn decode_saturation(theta: f64) -> f64 {
    if theta <= THETA_LOW {
        0.0
    } else if theta >= THETA_HIGH {
        1.0
    } else {
        (3.0 * theta / PI - 1.0).clamp(0.0, 1.0)
    }
}

/// Sorted lookup table for the manual lightness mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct ManualTable {
    values: Vec<f64>,
    source: Option<String>,
}

impl ManualTable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(QhslError::Config("manual lightness table is empty".into()));
        }
        for (i, v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(v) {
                return Err(QhslError::Config(format!(
                    "manual table entry {i} = {v} outside [0, 1]"
                )));
            }
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(QhslError::Config(
                "manual lightness table must be sorted ascending".into(),
            ));
        }
        Ok(ManualTable {
            values,
            source: None,
        })
    }

    /// Remember where the table was loaded from, for dump headers.
    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }
}

/// How a lightness code maps to a fraction of full lightness.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum LightnessMapping {
    #[default]
    Average,
    Manual(ManualTable),
}

impl LightnessMapping {
    /// Check that the mapping can serve a `q`-qubit register.
    pub fn validate_for(&self, q: u32) -> Result<()> {
        match self {
            LightnessMapping::Average => Ok(()),
            LightnessMapping::Manual(table) => {
                let expected = 1usize << q;
                if table.values.len() != expected {
                    Err(QhslError::Config(format!(
                        "manual table has {} entries, q={q} needs {expected}",
                        table.values.len()
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Integer content of a `q`-qubit lightness register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LightnessCode {
    q: u32,
    bits: u32,
}

impl LightnessCode {
    pub fn new(q: u32, bits: u32) -> Result<Self> {
        if q > 31 {
            return Err(QhslError::Config(format!("q={q} exceeds 31 lightness qubits")));
        }
        if u64::from(bits) > max_code(q) as u64 {
            return Err(QhslError::InvalidColor(format!(
                "lightness code {bits} does not fit in {q} qubits"
            )));
        }
        Ok(LightnessCode { q, bits })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }
}

/// Largest code a `q`-qubit register holds.
pub fn max_code(q: u32) -> u32 {
    ((1u64 << q) - 1) as u32
}

pub fn lightness_to_fraction(code: LightnessCode, mapping: &LightnessMapping) -> Result<f64> {
    match mapping {
        LightnessMapping::Average => {
            if code.q == 0 {
                Ok(0.5)
            } else {
                Ok(f64::from(code.bits) / f64::from(max_code(code.q)))
            }
        }
        LightnessMapping::Manual(table) => {
            mapping.validate_for(code.q)?;
            Ok(table.values[code.bits as usize])
        }
    }
}

/// Quantize a lightness fraction. The average mapping rounds half down, so
/// 50 % lands on `0111…1`.
pub fn fraction_to_lightness(f: f64, q: u32, mapping: &LightnessMapping) -> Result<LightnessCode> {
    if !(0.0..=1.0).contains(&f) {
        return Err(QhslError::InvalidColor(format!("lightness {f} outside [0, 1]")));
    }
    match mapping {
        LightnessMapping::Average => {
            let scaled = f * f64::from(max_code(q));
            let bits = (scaled - 0.5).ceil().max(0.0) as u32;
            LightnessCode::new(q, bits.min(max_code(q)))
        }
        LightnessMapping::Manual(table) => {
            mapping.validate_for(q)?;
            let mut best = 0usize;
            let mut best_dist = f64::INFINITY;
            for (i, v) in table.values.iter().enumerate() {
                let d = (v - f).abs();
                if d < best_dist {
                    best = i;
                    best_dist = d;
                }
            }
            LightnessCode::new(q, best as u32)
        }
    }
}

pub fn rgb_to_hsl(c: RgbColor) -> HslColor {
    let r = f64::from(c.r) / 255.0;
    let g = f64::from(c.g) / 255.0;
    let b = f64::from(c.b) / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let lightness = (max + min) / 2.0;
    let delta = max - min;
    if delta == 0.0 {
        return HslColor {
            hue: 0.0,
            saturation: 0.0,
            lightness,
        };
    }
    let saturation = (delta / (1.0 - (2.0 * lightness - 1.0).abs())).min(1.0);
    let sector = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    HslColor {
        hue: wrap_degrees(60.0 * sector),
        saturation,
        lightness,
    }
}

pub fn hsl_to_rgb(c: &HslColor) -> RgbColor {
    let chroma = (1.0 - (2.0 * c.lightness - 1.0).abs()) * c.saturation;
    let sector = wrap_degrees(c.hue) / 60.0;
    let x = chroma * (1.0 - (sector.rem_euclid(2.0) - 1.0).abs());
    let (r1, g1, b1) = match sector as u32 {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    let m = c.lightness - chroma / 2.0;
    let to_u8 = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    RgbColor::new(to_u8(r1), to_u8(g1), to_u8(b1))
}
