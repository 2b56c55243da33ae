//! Pixel selection by lightness and position predicates, as classical
//! predicates and as flag-computing circuits.

use std::fmt;

use crate::error::{QhslError, Result};
use crate::image::{PixelAddress, RegisterLayout};
use crate::sim::{build_comparator, build_omega, Circuit, ControlPattern, Gate};

/// Required bit values on one register, least-significant bit first.
/// `None` leaves a bit free.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegisterPattern {
    bits: Vec<Option<bool>>,
}

impl RegisterPattern {
    pub fn new(bits: Vec<Option<bool>>) -> Self {
        RegisterPattern { bits }
    }

    /// Equality pattern for `value`.
    pub fn exact(value: u64, width: usize) -> Self {
        RegisterPattern {
            bits: (0..width).map(|i| Some((value >> i) & 1 == 1)).collect(),
        }
    }

    /// Parse the display form, most-significant bit first (`"001000xx"`).
    pub fn parse(text: &str) -> Result<Self> {
        let bits = text
            .chars()
            .rev()
            .map(|c| match c {
                '0' => Ok(Some(false)),
                '1' => Ok(Some(true)),
                'x' | 'X' => Ok(None),
                other => Err(QhslError::InvalidRegion(format!("bad pattern character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RegisterPattern { bits })
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[Option<bool>] {
        &self.bits
    }

    pub fn matches(&self, value: u64) -> bool {
        self.bits
            .iter()
            .enumerate()
            .all(|(i, b)| b.is_none_or(|b| ((value >> i) & 1 == 1) == b))
    }

    pub fn is_unconstrained(&self) -> bool {
        self.bits.iter().all(Option::is_none)
    }

    /// Controls on the given register qubits.
    pub fn to_controls(&self, register: &[usize]) -> Result<ControlPattern> {
        if register.len() != self.bits.len() {
            return Err(QhslError::DimensionMismatch {
                expected: self.bits.len(),
                found: register.len(),
            });
        }
        ControlPattern::new(
            self.bits
                .iter()
                .zip(register)
                .filter_map(|(b, &q)| b.map(|b| (q, b)))
                .collect(),
        )
    }
}

impl fmt::Display for RegisterPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits.iter().rev() {
            f.write_str(match b {
                Some(false) => "0",
                Some(true) => "1",
                None => "x",
            })?;
        }
        Ok(())
    }
}

/// Disjoint patterns whose matched values are exactly `0..=xi`.
///
/// The first pattern is `xi` itself; each set bit of `xi` then contributes
/// one pattern with that bit cleared, the higher bits copied and the lower
/// bits free.
pub fn synthesize_leq_controls(xi: u64, width: usize) -> Result<Vec<RegisterPattern>> {
    if width > 63 || xi >> width != 0 {
        return Err(QhslError::InvalidRegion(format!("threshold {xi} does not fit in {width} bits")));
    }
    let mut patterns = vec![RegisterPattern::exact(xi, width)];
    for bit in (0..width).rev() {
        if (xi >> bit) & 1 == 0 {
            continue;
        }
        let bits = (0..width)
            .map(|i| match i.cmp(&bit) {
                std::cmp::Ordering::Less => None,
                std::cmp::Ordering::Equal => Some(false),
                std::cmp::Ordering::Greater => Some((xi >> i) & 1 == 1),
            })
            .collect();
        patterns.push(RegisterPattern { bits });
    }
    Ok(patterns)
}

/// Condition on the lightness code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LightnessPredicate {
    AtMost(u32),
    AtLeast(u32),
    /// Inclusive on both ends.
    Between(u32, u32),
}

/// Condition on one coordinate register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AxisPredicate {
    /// Inclusive coordinate range.
    Range(u32, u32),
    Bits(RegisterPattern),
}

/// Which pixels a transform touches. Every present predicate must hold.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RegionConstraint {
    pub lightness: Option<LightnessPredicate>,
    pub y: Option<AxisPredicate>,
    pub x: Option<AxisPredicate>,
}

/// How a region is turned into circuit controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegionMethod {
    /// Flags computed from threshold control patterns.
    #[default]
    Patterns,
    /// Flags computed by comparing against constant registers.
    Comparator,
}

/// A predicate reduced to one register.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Condition {
    Interval { register: Vec<usize>, lo: u64, hi: u64 },
    Pattern { register: Vec<usize>, pattern: RegisterPattern },
}

impl Condition {
    fn register(&self) -> &[usize] {
        match self {
            Condition::Interval { register, .. } | Condition::Pattern { register, .. } => register,
        }
    }
}

impl RegionConstraint {
    pub fn lightness(p: LightnessPredicate) -> Self {
        RegionConstraint {
            lightness: Some(p),
            ..Default::default()
        }
    }

    pub fn validate(&self, layout: RegisterLayout) -> Result<()> {
        if self.lightness.is_none() && self.y.is_none() && self.x.is_none() {
            return Err(QhslError::InvalidRegion("no predicate given".into()));
        }
        if let Some(l) = self.lightness {
            let (lo, hi) = lightness_bounds(l, layout.q);
            if lo > hi || u64::from(hi) >> layout.q != 0 {
                return Err(QhslError::InvalidRegion(format!(
                    "lightness bounds {lo}..={hi} outside {}-bit range",
                    layout.q
                )));
            }
        }
        for (name, axis) in [("y", &self.y), ("x", &self.x)] {
            match axis {
                Some(AxisPredicate::Range(lo, hi)) => {
                    if lo > hi || *hi as usize >= layout.side() {
                        return Err(QhslError::InvalidRegion(format!(
                            "{name} range {lo}..={hi} outside 0..{}",
                            layout.side()
                        )));
                    }
                }
                Some(AxisPredicate::Bits(p)) => {
                    if p.width() != layout.n as usize {
                        return Err(QhslError::InvalidRegion(format!(
                            "{name} pattern {p} needs {} bits",
                            layout.n
                        )));
                    }
                }
                None => {}
            }
        }
        Ok(())
    }

    /// Classical predicate on one pixel.
    pub fn matches(&self, addr: PixelAddress, lightness: u32, q: u32) -> bool {
        let lightness_ok = self.lightness.is_none_or(|p| {
            let (lo, hi) = lightness_bounds(p, q);
            (lo..=hi).contains(&lightness)
        });
        let axis_ok = |axis: &Option<AxisPredicate>, v: usize| match axis {
            None => true,
            Some(AxisPredicate::Range(lo, hi)) => (*lo as usize..=*hi as usize).contains(&v),
            Some(AxisPredicate::Bits(p)) => p.matches(v as u64),
        };
        lightness_ok && axis_ok(&self.y, addr.y) && axis_ok(&self.x, addr.x)
    }

    /// Predicates that actually restrict something; full ranges drop out.
    fn conditions(&self, layout: RegisterLayout) -> Vec<Condition> {
        let mut out = Vec::new();
        if let Some(p) = self.lightness {
            let (lo, hi) = lightness_bounds(p, layout.q);
            push_interval(&mut out, layout.lightness_qubits(), lo.into(), hi.into());
        }
        for (axis, register) in [(&self.y, layout.y_qubits()), (&self.x, layout.x_qubits())] {
            match axis {
                Some(AxisPredicate::Range(lo, hi)) => push_interval(&mut out, register, (*lo).into(), (*hi).into()),
                Some(AxisPredicate::Bits(p)) if !p.is_unconstrained() => out.push(Condition::Pattern {
                    register,
                    pattern: p.clone(),
                }),
                _ => {}
            }
        }
        out
    }

    /// Whether any qubit in `qubits` is read by this region.
    pub fn reads_any(&self, layout: RegisterLayout, qubits: &[usize]) -> bool {
        self.conditions(layout)
            .iter()
            .any(|c| c.register().iter().any(|q| qubits.contains(q)))
    }
}

fn push_interval(out: &mut Vec<Condition>, register: Vec<usize>, lo: u64, hi: u64) {
    let max = (1u64 << register.len()) - 1;
    if lo == 0 && hi == max {
        return;
    }
    out.push(Condition::Interval { register, lo, hi });
}

fn lightness_bounds(p: LightnessPredicate, q: u32) -> (u32, u32) {
    let max = crate::color::max_code(q);
    match p {
        LightnessPredicate::AtMost(b) => (0, b),
        LightnessPredicate::AtLeast(a) => (a, max),
        LightnessPredicate::Between(a, b) => (a, b),
    }
}

/// Flag computation for a region: `compute` sets the flags, `select` is the
/// conjunction a transform must be controlled on, and `uncompute` returns the
/// ancillas to `|0⟩` provided the predicate registers were not modified.
#[derive(Debug, Clone)]
pub struct RegionFlags {
    pub compute: Circuit,
    pub select: ControlPattern,
    pub uncompute: Circuit,
    /// Ancillas used, in allocation order.
    pub ancillas: Vec<usize>,
}

impl RegionFlags {
    /// Reset every ancilla with SET0. Valid whenever each image branch holds
    /// basis-valued ancillas, which is all this module produces.
    pub fn reset(&self, num_qubits: usize) -> Result<Circuit> {
        let mut c = Circuit::new(num_qubits);
        for &a in &self.ancillas {
            c.gate(Gate::Set0, a)?;
        }
        Ok(c)
    }
}

/// Number of ancillas `build_region_flags` needs.
pub fn region_ancilla_count(region: &RegionConstraint, layout: RegisterLayout, method: RegionMethod) -> usize {
    let conditions = region.conditions(layout);
    match method {
        RegionMethod::Patterns => conditions
            .iter()
            .filter(|c| matches!(c, Condition::Interval { .. }))
            .count(),
        RegionMethod::Comparator => {
            let intervals: Vec<usize> = conditions
                .iter()
                .filter_map(|c| match c {
                    Condition::Interval { register, .. } => Some(register.len()),
                    Condition::Pattern { .. } => None,
                })
                .collect();
            // one shared constant register plus four comparator flags each
            intervals.iter().max().copied().unwrap_or(0) + 4 * intervals.len()
        }
    }
}

/// Build flag circuits for `region` using ancillas from `first_ancilla` on.
pub fn build_region_flags(
    region: &RegionConstraint,
    layout: RegisterLayout,
    method: RegionMethod,
    first_ancilla: usize,
    num_qubits: usize,
) -> Result<RegionFlags> {
    region.validate(layout)?;
    let needed = region_ancilla_count(region, layout, method);
    if first_ancilla + needed > num_qubits {
        return Err(QhslError::InsufficientAncilla {
            needed,
            available: num_qubits.saturating_sub(first_ancilla),
        });
    }
    let conditions = region.conditions(layout);
    let mut compute = Circuit::new(num_qubits);
    let mut select = Vec::new();
    let mut ancillas = Vec::new();
    let mut next = first_ancilla;
    let mut alloc = |ancillas: &mut Vec<usize>| {
        let q = next;
        next += 1;
        ancillas.push(q);
        q
    };

    let const_width = match method {
        RegionMethod::Comparator => region_ancilla_count(region, layout, method) - 4 * interval_count(&conditions),
        RegionMethod::Patterns => 0,
    };
    let constant: Vec<usize> = (0..const_width).map(|_| alloc(&mut ancillas)).collect();

    for cond in &conditions {
        match cond {
            Condition::Pattern { register, pattern } => {
                select.extend(pattern.to_controls(register)?.controls().iter().copied());
            }
            Condition::Interval { register, lo, hi } => match method {
                RegionMethod::Patterns => {
                    let flag = alloc(&mut ancillas);
                    for p in synthesize_leq_controls(*hi, register.len())? {
                        compute.push(Gate::X, flag, p.to_controls(register)?)?;
                    }
                    if *lo > 0 {
                        for p in synthesize_leq_controls(lo - 1, register.len())? {
                            compute.push(Gate::X, flag, p.to_controls(register)?)?;
                        }
                    }
                    select.push((flag, true));
                }
                RegionMethod::Comparator => {
                    let cref = &constant[..register.len()];
                    let flags: Vec<usize> = (0..4).map(|_| alloc(&mut ancillas)).collect();
                    // register < lo clears the selection, as does register > hi
                    for (bound, gt, lt) in [(*lo, flags[0], flags[1]), (*hi, flags[2], flags[3])] {
                        let load = build_omega(bound, cref, num_qubits)?;
                        compute.append(&load)?;
                        compute.append(&build_comparator(register, cref, gt, lt, num_qubits)?)?;
                        compute.append(&load)?;
                    }
                    select.push((flags[1], false));
                    select.push((flags[2], false));
                }
            },
        }
    }
    let uncompute = compute.inverse()?;
    Ok(RegionFlags {
        compute,
        select: ControlPattern::new(select)?,
        uncompute,
        ancillas,
    })
}

fn interval_count(conditions: &[Condition]) -> usize {
    conditions
        .iter()
        .filter(|c| matches!(c, Condition::Interval { .. }))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{extract_bits, run_on_basis};
    use proptest::prelude::*;

    fn matched(patterns: &[RegisterPattern], width: usize) -> Vec<u64> {
        (0..1u64 << width).filter(|&v| patterns.iter().any(|p| p.matches(v))).collect()
    }

    #[test]
    fn thirty_seven() {
        let ps = synthesize_leq_controls(37, 8).unwrap();
        let text: Vec<String> = ps.iter().map(ToString::to_string).collect();
        assert_eq!(text, ["00100101", "000xxxxx", "001000xx", "00100100"]);
        assert_eq!(matched(&ps, 8), (0..=37).collect::<Vec<_>>());
    }

    #[test]
    fn zero_threshold() {
        let ps = synthesize_leq_controls(0, 8).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].to_string(), "00000000");
    }

    #[test]
    fn leq_exhaustive_up_to_ten_bits() {
        for width in 1..=10usize {
            for xi in 0..1u64 << width {
                let ps = synthesize_leq_controls(xi, width).unwrap();
                assert_eq!(ps.len() as u32, xi.count_ones() + 1);
                let mut hits = vec![0u8; 1 << width];
                for p in &ps {
                    for v in 0..1u64 << width {
                        if p.matches(v) {
                            hits[v as usize] += 1;
                        }
                    }
                }
                for (v, &h) in hits.iter().enumerate() {
                    assert_eq!(h, u8::from(v as u64 <= xi), "width {width} xi {xi} v {v}");
                }
            }
        }
    }

    #[test]
    fn threshold_out_of_range() {
        assert!(synthesize_leq_controls(256, 8).is_err());
    }

    #[test]
    fn pattern_parse_round_trip() {
        for s in ["001000xx", "x", "10", ""] {
            assert_eq!(RegisterPattern::parse(s).unwrap().to_string(), s);
        }
        assert!(RegisterPattern::parse("01z").is_err());
    }

    #[test]
    fn pattern_controls() {
        let p = RegisterPattern::parse("1x0").unwrap();
        let c = p.to_controls(&[4, 5, 6]).unwrap();
        assert_eq!(c.controls(), &[(4, false), (6, true)]);
    }

    fn lightness_flag_membership(lo: u32, hi: u32, q: u32, method: RegionMethod) -> Vec<u32> {
        let layout = RegisterLayout::new(0, q);
        let region = RegionConstraint::lightness(LightnessPredicate::Between(lo, hi));
        let nq = layout.num_qubits() + region_ancilla_count(&region, layout, method);
        let flags = build_region_flags(&region, layout, method, layout.first_ancilla(), nq).unwrap();
        let reg = layout.lightness_qubits();
        (0..1u32 << q)
            .filter(|&l| {
                let idx = extract_bits_inverse(&reg, l.into());
                let out = run_on_basis(&flags.compute, idx).unwrap();
                assert_eq!(extract_bits(out, &reg), u64::from(l));
                let selected = flags.select.matches(out);
                assert_eq!(run_on_basis(&flags.uncompute, out).unwrap(), idx);
                selected
            })
            .collect()
    }

    fn extract_bits_inverse(register: &[usize], value: u64) -> u64 {
        register
            .iter()
            .enumerate()
            .map(|(i, &q)| ((value >> i) & 1) << q)
            .sum()
    }

    #[test]
    fn interval_194_to_241() {
        for method in [RegionMethod::Patterns, RegionMethod::Comparator] {
            assert_eq!(lightness_flag_membership(194, 241, 8, method), (194..=241).collect::<Vec<_>>());
        }
    }

    #[test]
    fn full_interval_is_unconditional() {
        let layout = RegisterLayout::new(1, 8);
        let region = RegionConstraint::lightness(LightnessPredicate::Between(0, 255));
        for method in [RegionMethod::Patterns, RegionMethod::Comparator] {
            let f = build_region_flags(&region, layout, method, layout.first_ancilla(), layout.num_qubits()).unwrap();
            assert!(f.compute.is_empty() && f.select.is_empty());
        }
    }

    #[test]
    fn insufficient_ancillas() {
        let layout = RegisterLayout::new(1, 4);
        let region = RegionConstraint::lightness(LightnessPredicate::AtMost(5));
        let r = build_region_flags(&region, layout, RegionMethod::Comparator, layout.first_ancilla(), layout.num_qubits() + 2);
        assert!(matches!(r, Err(QhslError::InsufficientAncilla { needed: 8, available: 2 })));
    }

    #[test]
    fn validation() {
        let layout = RegisterLayout::new(2, 4);
        assert!(RegionConstraint::default().validate(layout).is_err());
        assert!(RegionConstraint::lightness(LightnessPredicate::AtMost(16)).validate(layout).is_err());
        assert!(RegionConstraint::lightness(LightnessPredicate::Between(5, 4)).validate(layout).is_err());
        let y = RegionConstraint {
            y: Some(AxisPredicate::Range(0, 4)),
            ..Default::default()
        };
        assert!(y.validate(layout).is_err());
        let x = RegionConstraint {
            x: Some(AxisPredicate::Bits(RegisterPattern::parse("1").unwrap())),
            ..Default::default()
        };
        assert!(x.validate(layout).is_err());
    }

    #[test]
    fn combined_region_selects_intersection() {
        let layout = RegisterLayout::new(2, 3);
        let region = RegionConstraint {
            lightness: Some(LightnessPredicate::Between(2, 5)),
            y: Some(AxisPredicate::Range(2, 3)),
            x: Some(AxisPredicate::Bits(RegisterPattern::parse("x1").unwrap())),
        };
        for method in [RegionMethod::Patterns, RegionMethod::Comparator] {
            let nq = layout.num_qubits() + region_ancilla_count(&region, layout, method);
            let f = build_region_flags(&region, layout, method, layout.first_ancilla(), nq).unwrap();
            for y in 0..4 {
                for x in 0..4 {
                    for l in 0..8u32 {
                        let addr = PixelAddress::new(y, x);
                        let idx = layout.basis_index(addr, l, false);
                        let out = run_on_basis(&f.compute, idx).unwrap();
                        let oracle = (2..=5).contains(&l) && y >= 2 && x % 2 == 1;
                        assert_eq!(f.select.matches(out), oracle);
                        assert_eq!(region.matches(addr, l, 3), oracle);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn leq_matches_brute_force(width in 1usize..=16, seed in any::<u64>()) {
            let max = (1u64 << width) - 1;
            let xi = seed & max;
            let ps = synthesize_leq_controls(xi, width).unwrap();
            for v in [0, xi, xi.saturating_sub(1), (xi + 1).min(max), max, seed.rotate_left(7) & max] {
                let hits = ps.iter().filter(|p| p.matches(v)).count();
                prop_assert_eq!(hits, usize::from(v <= xi));
            }
        }
    }
}
