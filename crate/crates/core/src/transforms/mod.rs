//! Image operations on QHSL images, each available in two forms: a direct
//! update of the pixel values and a circuit acting on the image state.

mod pseudocolor;
mod region;

use std::f64::consts::PI;

pub use pseudocolor::{
    build_pseudocolor_circuit, pseudocolor, pseudocolor_via_circuit, solve_rotation_angles, PseudocolorInterval,
    PseudocolorMap,
};
pub use region::{
    build_region_flags, region_ancilla_count, synthesize_leq_controls, AxisPredicate, LightnessPredicate,
    RegionConstraint, RegionFlags, RegionMethod, RegisterPattern,
};

use crate::color::{max_code, ChromaState};
use crate::error::{QhslError, Result};
use crate::image::{run_on_image, Backend, Pixel, QhslImage, RegisterLayout};
use crate::sim::{build_adder, build_omega, AdderRegisters, Circuit, ControlPattern, Gate};

/// A global color operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    /// Add to the azimuth, radians.
    HueShift(f64),
    /// Add to the polar angle, radians.
    SaturationShift(f64),
    /// Saturating lightness addition.
    LightnessAdd(u32),
    /// Lightness subtraction clamped at zero.
    LightnessSub(u32),
    /// Flip every lightness bit and rotate the hue by half a turn.
    Invert,
}

impl Transform {
    fn validate(&self, q: u32) -> Result<()> {
        match *self {
            Transform::LightnessAdd(k) | Transform::LightnessSub(k) if k > max_code(q) => Err(QhslError::Config(
                format!("lightness step {k} exceeds the {q}-bit maximum {}", max_code(q)),
            )),
            Transform::HueShift(a) | Transform::SaturationShift(a) if !a.is_finite() => {
                Err(QhslError::Config(format!("rotation angle {a} is not finite")))
            }
            _ => Ok(()),
        }
    }

    /// Direct update of one pixel.
    pub fn apply_pixel(&self, p: &Pixel, q: u32) -> Pixel {
        let max = max_code(q);
        match *self {
            Transform::HueShift(d) => Pixel {
                chroma: ChromaState::canonical(p.chroma.theta(), p.chroma.phi() + d),
                ..*p
            },
            Transform::SaturationShift(d) => Pixel {
                chroma: ChromaState::canonical(p.chroma.theta() + d, p.chroma.phi()),
                ..*p
            },
            Transform::LightnessAdd(k) => Pixel {
                lightness: p.lightness.saturating_add(k).min(max),
                ..*p
            },
            Transform::LightnessSub(k) => Pixel {
                lightness: p.lightness.saturating_sub(k),
                ..*p
            },
            Transform::Invert => Pixel {
                chroma: ChromaState::canonical(p.chroma.theta(), p.chroma.phi() + PI),
                lightness: max - p.lightness,
            },
        }
    }

    fn writes_lightness(&self) -> bool {
        matches!(
            self,
            Transform::LightnessAdd(_) | Transform::LightnessSub(_) | Transform::Invert
        )
    }

    /// Ancillas needed by the unconditional circuit.
    pub fn ancilla_count(&self, q: u32) -> usize {
        match *self {
            Transform::LightnessAdd(k) | Transform::LightnessSub(k) if k > 0 && q > 0 => 2 * q as usize + 1,
            _ => 0,
        }
    }
}

/// Apply `t` to every pixel selected by `region` (all pixels when `None`).
pub fn apply_transform(img: &QhslImage, t: Transform, region: Option<&RegionConstraint>) -> Result<QhslImage> {
    t.validate(img.q())?;
    if let Some(r) = region {
        r.validate(img.layout())?;
    }
    let q = img.q();
    img.map_pixels(|addr, p| match region {
        Some(r) if !r.matches(addr, p.lightness, q) => *p,
        _ => t.apply_pixel(p, q),
    })
}

pub fn hue_shift(img: &QhslImage, delta_phi: f64, region: Option<&RegionConstraint>) -> Result<QhslImage> {
    apply_transform(img, Transform::HueShift(delta_phi), region)
}

/// Moves the polar angle of the chroma qubit. Past a pole the state is
/// reflected back into `[0, π]` with the hue turned by `π`; the decoded
/// saturation clamps at 0 and 1 without altering the stored angle.
///
/// The circuit form is `R_Y(Δθ)`, a rotation about the Y axis. It moves the
/// polar angle by exactly `Δθ` only on the `φ = 0` meridian.
pub fn saturation_shift(img: &QhslImage, delta_theta: f64, region: Option<&RegionConstraint>) -> Result<QhslImage> {
    apply_transform(img, Transform::SaturationShift(delta_theta), region)
}

pub fn lightness_add(img: &QhslImage, k: u32, region: Option<&RegionConstraint>) -> Result<QhslImage> {
    apply_transform(img, Transform::LightnessAdd(k), region)
}

pub fn lightness_sub(img: &QhslImage, k: u32, region: Option<&RegionConstraint>) -> Result<QhslImage> {
    apply_transform(img, Transform::LightnessSub(k), region)
}

pub fn invert_color(img: &QhslImage) -> Result<QhslImage> {
    apply_transform(img, Transform::Invert, None)
}

/// Unconditional circuit for `t` using ancillas from `first_ancilla` on.
fn build_core_circuit(layout: RegisterLayout, t: Transform, first_ancilla: usize, num_qubits: usize) -> Result<Circuit> {
    let mut c = Circuit::new(num_qubits);
    let chroma = layout.chroma();
    let light = layout.lightness_qubits();
    let q = layout.q;
    match t {
        Transform::HueShift(d) => c.gate(Gate::Rz(d), chroma)?,
        Transform::SaturationShift(d) => c.gate(Gate::Ry(d), chroma)?,
        Transform::Invert => {
            for &b in &light {
                c.gate(Gate::X, b)?;
            }
            c.gate(Gate::Rz(PI), chroma)?;
        }
        Transform::LightnessAdd(k) | Transform::LightnessSub(k) => {
            if k == 0 || q == 0 {
                return Ok(c);
            }
            let w = q as usize;
            let regs = AdderRegisters {
                addend: (first_ancilla..first_ancilla + w).collect(),
                target: light.clone(),
                carry_out: first_ancilla + w,
                scratch: (first_ancilla + w + 1..first_ancilla + 2 * w + 1).collect(),
            };
            let subtract = matches!(t, Transform::LightnessSub(_));
            // subtraction adds the two's complement; the carry then means "no borrow"
            let addend = if subtract {
                (1u64 << w) - u64::from(k)
            } else {
                u64::from(k)
            };
            let load = build_omega(addend, &regs.addend, num_qubits)?;
            c.append(&load)?;
            c.append(&build_adder(&regs, num_qubits)?)?;
            let (gate, polarity) = if subtract {
                (Gate::Set0, false)
            } else {
                (Gate::Set1, true)
            };
            let on_carry = ControlPattern::new(vec![(regs.carry_out, polarity)])?;
            for &b in &light {
                c.push(gate, b, on_carry.clone())?;
            }
            c.gate(Gate::Set0, regs.carry_out)?;
            c.append(&load)?;
        }
    }
    Ok(c)
}

/// Circuit form of `t`, optionally restricted to `region`, sized to the
/// image registers plus the ancillas it needs.
pub fn build_transform_circuit(
    layout: RegisterLayout,
    t: Transform,
    region: Option<&RegionConstraint>,
    method: RegionMethod,
    max_qubits: usize,
) -> Result<Circuit> {
    t.validate(layout.q)?;
    let base = layout.num_qubits();
    let region_ancillas = region.map_or(0, |r| region_ancilla_count(r, layout, method));
    let needed = region_ancillas + t.ancilla_count(layout.q);
    let nq = base + needed;
    if nq > max_qubits {
        return Err(QhslError::InsufficientAncilla {
            needed,
            available: max_qubits.saturating_sub(base),
        });
    }
    let core = build_core_circuit(layout, t, base + region_ancillas, nq)?;
    let Some(region) = region else {
        return Ok(core);
    };
    let flags = build_region_flags(region, layout, method, base, nq)?;
    let mut c = flags.compute.clone();
    c.append(&core.controlled(&flags.select)?)?;
    if t.writes_lightness() && region.reads_any(layout, &layout.lightness_qubits()) {
        c.append(&flags.reset(nq)?)?;
    } else {
        c.append(&flags.uncompute)?;
    }
    Ok(c)
}

/// Run the circuit form of `t` on `img` and read the result back.
pub fn apply_transform_circuit(
    img: &QhslImage,
    t: Transform,
    region: Option<&RegionConstraint>,
    method: RegionMethod,
    backend: Backend,
) -> Result<QhslImage> {
    let c = build_transform_circuit(img.layout(), t, region, method, backend.max_qubits())?;
    run_on_image(img, &c, backend)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::{decode_hs, LightnessMapping};
    use crate::image::PixelAddress;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn px(theta: f64, phi: f64, l: u32) -> Pixel {
        Pixel {
            chroma: ChromaState::new(theta, phi).unwrap(),
            lightness: l,
        }
    }

    fn angle_gap(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(TAU);
        d.min(TAU - d)
    }

    fn assert_close(a: &QhslImage, b: &QhslImage, tol: f64) {
        assert_eq!((a.n(), a.q()), (b.n(), b.q()));
        for (p, r) in a.pixels().iter().zip(b.pixels()) {
            assert_eq!(p.lightness, r.lightness);
            assert!((p.chroma.theta() - r.chroma.theta()).abs() < tol, "{p:?} vs {r:?}");
            if p.chroma.theta().sin() > 1e-6 {
                assert!(angle_gap(p.chroma.phi(), r.chroma.phi()) < tol, "{p:?} vs {r:?}");
            }
        }
    }

    #[test]
    fn complementary_hue() {
        let img = QhslImage::uniform(1, 8, LightnessMapping::Average, px(1.5, 0.3, 40)).unwrap();
        let out = hue_shift(&img, PI, None).unwrap();
        for p in out.pixels() {
            let h = decode_hs(&p.chroma).hue;
            assert!((h - (0.3f64.to_degrees() + 180.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn hue_shift_of_red_to_green() {
        let img = QhslImage::uniform(0, 1, LightnessMapping::Average, px(1.5, 0.0, 0)).unwrap();
        let out = hue_shift(&img, 2.0 * PI / 3.0, None).unwrap();
        assert!((decode_hs(&out.pixels()[0].chroma).hue - 120.0).abs() < 1e-12);
        assert_eq!(hue_shift(&img, 0.0, None).unwrap(), img);
    }

    #[test]
    fn saturation_endpoints() {
        let grey = QhslImage::uniform(1, 2, LightnessMapping::Average, px(PI / 3.0, 1.0, 1)).unwrap();
        let full = saturation_shift(&grey, PI / 3.0, None).unwrap();
        for p in full.pixels() {
            assert!((decode_hs(&p.chroma).saturation - 1.0).abs() < 1e-12);
        }
        let back = saturation_shift(&full, -PI / 3.0, None).unwrap();
        for p in back.pixels() {
            assert!(decode_hs(&p.chroma).saturation.abs() < 1e-12);
        }
        assert_eq!(saturation_shift(&grey, 0.0, None).unwrap(), grey);
    }

    #[test]
    fn saturation_past_the_pole_reflects() {
        let img = QhslImage::uniform(0, 0, LightnessMapping::Average, px(2.5, 1.0, 0)).unwrap();
        let out = saturation_shift(&img, 1.0, None).unwrap();
        let c = out.pixels()[0].chroma;
        assert!((c.theta() - (TAU - 3.5)).abs() < 1e-12);
        assert!((c.phi() - (1.0 + PI)).abs() < 1e-12);
        assert_eq!(decode_hs(&c).saturation, 1.0);
    }

    #[test]
    fn lightness_saturates() {
        let img = QhslImage::uniform(0, 8, LightnessMapping::Average, px(1.0, 1.0, 200)).unwrap();
        assert_eq!(lightness_add(&img, 100, None).unwrap().pixels()[0].lightness, 255);
        assert_eq!(lightness_sub(&img, 201, None).unwrap().pixels()[0].lightness, 0);
        assert_eq!(lightness_add(&img, 0, None).unwrap(), img);
        assert!(lightness_add(&img, 256, None).is_err());
    }

    #[test]
    fn invert_examples() {
        let green = QhslImage::uniform(0, 8, LightnessMapping::Average, px(2.0 * PI / 3.0, 2.0 * PI / 3.0, 127)).unwrap();
        let out = invert_color(&green).unwrap();
        let p = out.pixels()[0];
        assert_eq!(p.lightness, 128);
        assert!((decode_hs(&p.chroma).hue - 300.0).abs() < 1e-9);

        let black = QhslImage::uniform(0, 8, LightnessMapping::Average, px(PI / 3.0, 0.0, 0)).unwrap();
        let white = invert_color(&black).unwrap().pixels()[0];
        assert_eq!(white.lightness, 255);
        assert_eq!(decode_hs(&white.chroma).saturation, 0.0);
    }

    #[test]
    fn region_leaves_other_pixels_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = QhslImage::random(2, 4, &mut rng);
        let region = RegionConstraint {
            lightness: Some(LightnessPredicate::AtLeast(8)),
            y: Some(AxisPredicate::Range(1, 2)),
            x: None,
        };
        for t in [
            Transform::HueShift(1.0),
            Transform::SaturationShift(0.5),
            Transform::LightnessAdd(3),
            Transform::LightnessSub(3),
            Transform::Invert,
        ] {
            let out = apply_transform(&img, t, Some(&region)).unwrap();
            for addr in img.addresses() {
                let (a, b) = (img.pixel(addr), out.pixel(addr));
                if !region.matches(addr, a.lightness, 4) {
                    assert_eq!(a, b);
                }
            }
        }
    }

    /// Pixels on the meridian where Y rotations shift θ additively.
    fn meridian_image(rng: &mut ChaCha8Rng, n: u32, q: u32) -> QhslImage {
        let pixels = (0..1usize << (2 * n))
            .map(|_| px(rng.random_range(0.0..PI), 0.0, rng.random_range(0..=max_code(q))))
            .collect();
        QhslImage::new(n, q, LightnessMapping::Average, pixels).unwrap()
    }

    /// Test input for `t`: any azimuth unless `t` is a Y rotation.
    fn input_for(t: Transform, rng: &mut ChaCha8Rng, n: u32, q: u32) -> QhslImage {
        match t {
            Transform::SaturationShift(_) => meridian_image(rng, n, q),
            _ => QhslImage::random(n, q, rng),
        }
    }

    fn all_transforms(q: u32) -> Vec<Transform> {
        let m = max_code(q);
        vec![
            Transform::HueShift(1.3),
            Transform::HueShift(-2.2),
            Transform::SaturationShift(0.7),
            Transform::SaturationShift(-2.9),
            Transform::LightnessAdd(m / 2 + 1),
            Transform::LightnessSub(m / 2 + 1),
            Transform::LightnessAdd(m),
            Transform::Invert,
        ]
    }

    fn regions() -> Vec<Option<RegionConstraint>> {
        vec![
            None,
            Some(RegionConstraint::lightness(LightnessPredicate::Between(1, 2))),
            Some(RegionConstraint {
                lightness: Some(LightnessPredicate::AtMost(2)),
                y: Some(AxisPredicate::Range(1, 1)),
                x: Some(AxisPredicate::Bits(RegisterPattern::parse("0").unwrap())),
            }),
        ]
    }

    #[test]
    fn circuit_matches_pixels_on_dense_backend() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for t in all_transforms(2) {
            let img = input_for(t, &mut rng, 1, 2);
            for region in regions() {
                for method in [RegionMethod::Patterns, RegionMethod::Comparator] {
                    let direct = apply_transform(&img, t, region.as_ref()).unwrap();
                    let dense = apply_transform_circuit(&img, t, region.as_ref(), method, Backend::Dense { budget: 22 }).unwrap();
                    let structured = apply_transform_circuit(&img, t, region.as_ref(), method, Backend::Structured).unwrap();
                    assert_close(&direct, &dense, 1e-10);
                    assert_close(&direct, &structured, 1e-10);
                }
            }
        }
    }

    #[test]
    fn circuit_matches_pixels_on_structured_backend() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for t in all_transforms(8) {
            let img = input_for(t, &mut rng, 2, 8);
            let region = RegionConstraint {
                lightness: Some(LightnessPredicate::Between(60, 190)),
                y: None,
                x: Some(AxisPredicate::Range(1, 3)),
            };
            for r in [None, Some(&region)] {
                for method in [RegionMethod::Patterns, RegionMethod::Comparator] {
                    let direct = apply_transform(&img, t, r).unwrap();
                    let circ = apply_transform_circuit(&img, t, r, method, Backend::Structured).unwrap();
                    assert_close(&direct, &circ, 1e-10);
                }
            }
        }
    }

    #[test]
    fn hue_circuit_matches_for_any_azimuth() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let img = QhslImage::random(2, 3, &mut rng);
        let direct = hue_shift(&img, 2.1, None).unwrap();
        let circ = apply_transform_circuit(&img, Transform::HueShift(2.1), None, RegionMethod::Patterns, Backend::Structured).unwrap();
        assert_close(&direct, &circ, 1e-10);
    }

    #[test]
    fn saturation_circuit_is_a_y_rotation() {
        // Off the meridians the circuit rotates the Bloch vector about Y.
        let img = QhslImage::uniform(0, 0, LightnessMapping::Average, px(1.0, 1.0, 0)).unwrap();
        let out = apply_transform_circuit(&img, Transform::SaturationShift(0.4), None, RegionMethod::Patterns, Backend::Structured).unwrap();
        let c = out.pixels()[0].chroma;
        let (x, y, z) = (1.0f64.sin() * 1.0f64.cos(), 1.0f64.sin() * 1.0f64.sin(), 1.0f64.cos());
        let (x2, z2) = (x * 0.4f64.cos() + z * 0.4f64.sin(), z * 0.4f64.cos() - x * 0.4f64.sin());
        assert!((c.theta().cos() - z2).abs() < 1e-12);
        assert!((c.theta().sin() * c.phi().cos() - x2).abs() < 1e-12);
        assert!((c.theta().sin() * c.phi().sin() - y).abs() < 1e-12);
    }

    #[test]
    fn lightness_arithmetic_exhaustive_small_q() {
        for q in 1..=4u32 {
            let m = max_code(q);
            let pixels: Vec<Pixel> = (0..=m).map(|l| px(1.0, 0.0, l)).collect();
            let n = if pixels.len() > 4 { 2 } else { 1 };
            let mut all = pixels.clone();
            all.resize(1 << (2 * n), px(1.0, 0.0, 0));
            let img = QhslImage::new(n, q, LightnessMapping::Average, all).unwrap();
            for k in 0..=m {
                for (t, oracle) in [
                    (Transform::LightnessAdd(k), Box::new(move |l: u32| (l + k).min(m)) as Box<dyn Fn(u32) -> u32>),
                    (Transform::LightnessSub(k), Box::new(move |l: u32| l.saturating_sub(k))),
                ] {
                    let out = apply_transform_circuit(&img, t, None, RegionMethod::Patterns, Backend::Structured).unwrap();
                    for (a, b) in img.pixels().iter().zip(out.pixels()) {
                        assert_eq!(b.lightness, oracle(a.lightness), "{t:?} on {}", a.lightness);
                    }
                }
            }
        }
    }

    #[test]
    fn lightness_arithmetic_random_eight_bit() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..40 {
            let pixels: Vec<Pixel> = (0..256).map(|_| px(1.0, 0.0, rng.random_range(0..256))).collect();
            let img = QhslImage::new(4, 8, LightnessMapping::Average, pixels).unwrap();
            let k = rng.random_range(0..256);
            for t in [Transform::LightnessAdd(k), Transform::LightnessSub(k)] {
                let circ = apply_transform_circuit(&img, t, None, RegionMethod::Patterns, Backend::Structured).unwrap();
                let direct = apply_transform(&img, t, None).unwrap();
                for (a, (b, c)) in img.pixels().iter().zip(circ.pixels().iter().zip(direct.pixels())) {
                    let expect = match t {
                        Transform::LightnessAdd(k) => (a.lightness + k).min(255),
                        _ => a.lightness.saturating_sub(k),
                    };
                    assert_eq!((b.lightness, c.lightness), (expect, expect));
                }
            }
        }
    }

    #[test]
    fn add_of_200_and_100_sets_all_bits() {
        let img = QhslImage::uniform(0, 8, LightnessMapping::Average, px(1.0, 0.0, 200)).unwrap();
        let c = build_transform_circuit(img.layout(), Transform::LightnessAdd(100), None, RegionMethod::Patterns, 64).unwrap();
        assert_eq!(c.count_where(|i| i.gate == Gate::Set1), 8);
        let out = run_on_image(&img, &c, Backend::Structured).unwrap();
        assert_eq!(out.pixels()[0].lightness, 255);
    }

    #[test]
    fn ancilla_budget_enforced() {
        let layout = RegisterLayout::new(2, 8);
        let r = build_transform_circuit(layout, Transform::LightnessAdd(3), None, RegionMethod::Patterns, 20);
        assert!(matches!(r, Err(QhslError::InsufficientAncilla { needed: 17, available: 7 })));
    }

    #[test]
    fn invert_twice_restores_lightness_and_hue() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = QhslImage::random(2, 8, &mut rng);
        let twice = invert_color(&invert_color(&img).unwrap()).unwrap();
        assert_close(&img, &twice, 4.0 * f64::EPSILON * TAU);
    }

    #[test]
    fn region_at_one_pixel() {
        let img = QhslImage::uniform(1, 1, LightnessMapping::Average, px(1.0, 0.0, 0)).unwrap();
        let region = RegionConstraint {
            y: Some(AxisPredicate::Range(1, 1)),
            x: Some(AxisPredicate::Range(0, 0)),
            ..Default::default()
        };
        let out = lightness_add(&img, 1, Some(&region)).unwrap();
        let lit: Vec<_> = img.addresses().filter(|&a| out.pixel(a).lightness == 1).collect();
        assert_eq!(lit, vec![PixelAddress::new(1, 0)]);
    }

    proptest! {
        #[test]
        fn hue_shift_inverse_and_additive(a in -10.0f64..10.0, b in -10.0f64..10.0, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = QhslImage::random(1, 2, &mut rng);
            let back = hue_shift(&hue_shift(&img, a, None).unwrap(), -a, None).unwrap();
            let sum = hue_shift(&hue_shift(&img, a, None).unwrap(), b, None).unwrap();
            let once = hue_shift(&img, a + b, None).unwrap();
            for ((p, r), (s, o)) in img.pixels().iter().zip(back.pixels()).zip(sum.pixels().iter().zip(once.pixels())) {
                if p.chroma.hue_undefined() {
                    continue;
                }
                prop_assert!(angle_gap(p.chroma.phi(), r.chroma.phi()) < 1e-12);
                prop_assert!(angle_gap(s.chroma.phi(), o.chroma.phi()) < 1e-12);
            }
        }

        #[test]
        fn invert_is_an_involution_on_lightness(seed in any::<u64>(), q in 0u32..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = QhslImage::random(1, q, &mut rng);
            let twice = invert_color(&invert_color(&img).unwrap()).unwrap();
            for (a, b) in img.pixels().iter().zip(twice.pixels()) {
                prop_assert_eq!(a.lightness, b.lightness);
                prop_assert_eq!(a.chroma.theta(), b.chroma.theta());
                // φ + π + π carries up to a few ulps of rounding
                prop_assert!(angle_gap(a.chroma.phi(), b.chroma.phi()) <= 4.0 * f64::EPSILON * TAU);
            }
        }
    }
}
