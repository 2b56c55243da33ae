//! Density slicing of grayscale images into piecewise-constant hues.
//!
//! Hue rotations are applied cumulatively: rotation `j` acts on every pixel
//! whose lightness is at most the upper bound of interval `j`, so a pixel in
//! interval `i` receives rotations `i..m`. The angles are solved from the top
//! interval down so that each suffix sum equals the interval's target hue.

use std::f64::consts::PI;

use crate::color::{fraction_to_lightness, max_code, wrap_angle, ChromaState};
use crate::error::{QhslError, Result};
use crate::image::{run_on_image, Backend, Pixel, QhslImage, RegisterLayout};
use crate::sim::{build_comparator, build_omega, Circuit, ControlPattern, Gate};

use super::region::{synthesize_leq_controls, RegionMethod};

/// Polar angle of an unsaturated pixel.
const GREY_THETA: f64 = PI / 3.0;
/// Polar angle of a fully saturated pixel.
const FULL_THETA: f64 = 2.0 * PI / 3.0;
const GREY_TOLERANCE: f64 = 1e-9;

/// Inclusive lightness-code interval and the hue assigned to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudocolorInterval {
    pub lo: u32,
    pub hi: u32,
    /// Degrees in `[0, 360)`.
    pub hue: f64,
}

/// Ascending, gap-free cover of the lightness codes `0..=2^q-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudocolorMap {
    q: u32,
    intervals: Vec<PseudocolorInterval>,
}

impl PseudocolorMap {
    pub fn new(q: u32, intervals: Vec<PseudocolorInterval>) -> Result<Self> {
        let max = max_code(q);
        let mut expected_lo = 0u32;
        for (i, iv) in intervals.iter().enumerate() {
            if iv.lo != expected_lo {
                return Err(QhslError::InvalidMap(format!(
                    "interval {i} starts at {} but {expected_lo} is the next uncovered code",
                    iv.lo
                )));
            }
            if iv.hi < iv.lo || iv.hi > max {
                return Err(QhslError::InvalidMap(format!(
                    "interval {i} ({}..={}) is empty or exceeds {max}",
                    iv.lo, iv.hi
                )));
            }
            if !(0.0..360.0).contains(&iv.hue) {
                return Err(QhslError::InvalidMap(format!("hue {} outside [0, 360)", iv.hue)));
            }
            expected_lo = iv.hi.wrapping_add(1);
        }
        if intervals.last().is_none_or(|iv| iv.hi != max) {
            return Err(QhslError::InvalidMap(format!("intervals do not cover 0..={max}")));
        }
        Ok(PseudocolorMap { q, intervals })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn intervals(&self) -> &[PseudocolorInterval] {
        &self.intervals
    }

    /// Index of the interval holding `code`.
    pub fn interval_of(&self, code: u32) -> Option<usize> {
        self.intervals.iter().position(|iv| (iv.lo..=iv.hi).contains(&code))
    }
}

/// Rotation angles (radians) whose suffix sums equal each interval's hue.
pub fn solve_rotation_angles(map: &PseudocolorMap) -> Vec<f64> {
    let hues: Vec<f64> = map.intervals.iter().map(|iv| iv.hue * PI / 180.0).collect();
    let m = hues.len();
    (0..m)
        .map(|i| if i + 1 == m { hues[i] } else { hues[i] - hues[i + 1] })
        .collect()
}

fn check_input(img: &QhslImage, map: &PseudocolorMap) -> Result<()> {
    if map.q != img.q() {
        return Err(QhslError::InvalidMap(format!(
            "map covers q={} but the image has q={}",
            map.q,
            img.q()
        )));
    }
    for addr in img.addresses() {
        let theta = img.pixel(addr).chroma.theta();
        if (theta - GREY_THETA).abs() > GREY_TOLERANCE {
            return Err(QhslError::NotGrayscale(format!(
                "pixel ({}, {}) has polar angle {theta}",
                addr.y, addr.x
            )));
        }
    }
    Ok(())
}

fn mid_code(img: &QhslImage) -> Result<u32> {
    Ok(fraction_to_lightness(0.5, img.q(), img.mapping())?.bits())
}

/// Direct per-pixel pseudocolor: full saturation, the interval's hue, and
/// the lightness code for 50%.
pub fn pseudocolor(img: &QhslImage, map: &PseudocolorMap) -> Result<QhslImage> {
    check_input(img, map)?;
    let angles = solve_rotation_angles(map);
    let mid = mid_code(img)?;
    img.map_pixels(|_, p| {
        let i = map.interval_of(p.lightness).expect("map covers every code");
        let phi: f64 = angles[i..].iter().sum();
        Pixel {
            chroma: ChromaState::canonical(FULL_THETA, wrap_angle(phi)),
            lightness: mid,
        }
    })
}

/// Circuit form. Grey input must sit on the `φ = 0` meridian, where the Y
/// rotation that saturates it moves only the polar angle.
pub fn build_pseudocolor_circuit(
    layout: RegisterLayout,
    map: &PseudocolorMap,
    method: RegionMethod,
    mid_code: u32,
) -> Result<Circuit> {
    if map.q != layout.q {
        return Err(QhslError::InvalidMap(format!(
            "map covers q={} but the layout has q={}",
            map.q, layout.q
        )));
    }
    let q = layout.q as usize;
    let light = layout.lightness_qubits();
    let chroma = layout.chroma();
    let base = layout.num_qubits();
    let nq = match method {
        RegionMethod::Patterns => base,
        RegionMethod::Comparator => base + q + 2,
    };
    let max = max_code(layout.q);
    let mut c = Circuit::new(nq);
    c.gate(Gate::Ry(FULL_THETA - GREY_THETA), chroma)?;

    for (iv, angle) in map.intervals.iter().zip(solve_rotation_angles(map)) {
        let rz = Gate::Rz(angle);
        if iv.hi == max {
            c.gate(rz, chroma)?;
            continue;
        }
        match method {
            RegionMethod::Patterns => {
                for p in synthesize_leq_controls(iv.hi.into(), q)? {
                    c.push(rz, chroma, p.to_controls(&light)?)?;
                }
            }
            RegionMethod::Comparator => {
                let constant: Vec<usize> = (base..base + q).collect();
                let (gt, lt) = (base + q, base + q + 1);
                let load = build_omega(iv.hi.into(), &constant, nq)?;
                let compare = build_comparator(&light, &constant, gt, lt, nq)?;
                c.append(&load)?;
                c.append(&compare)?;
                c.push(rz, chroma, ControlPattern::new(vec![(gt, false)])?)?;
                c.append(&compare)?;
                c.append(&load)?;
            }
        }
    }

    for (bit, &qubit) in light.iter().enumerate() {
        let gate = if (mid_code >> bit) & 1 == 1 { Gate::Set1 } else { Gate::Set0 };
        c.gate(gate, qubit)?;
    }
    Ok(c)
}

/// Run the circuit form on `img`. Grey pixels carry no hue, so the input is
/// first placed on the `φ = 0` meridian.
pub fn pseudocolor_via_circuit(
    img: &QhslImage,
    map: &PseudocolorMap,
    method: RegionMethod,
    backend: Backend,
) -> Result<QhslImage> {
    check_input(img, map)?;
    let grey = img.map_pixels(|_, p| Pixel {
        chroma: ChromaState::canonical(GREY_THETA, 0.0),
        lightness: p.lightness,
    })?;
    let c = build_pseudocolor_circuit(img.layout(), map, method, mid_code(img)?)?;
    if c.num_qubits() > backend.max_qubits() {
        return Err(QhslError::InsufficientAncilla {
            needed: c.num_qubits() - img.layout().num_qubits(),
            available: backend.max_qubits().saturating_sub(img.layout().num_qubits()),
        });
    }
    run_on_image(&grey, &c, backend)
}
