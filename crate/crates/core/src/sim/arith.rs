//! Reversible arithmetic blocks: constant loading, ripple-carry addition and
//! magnitude comparison.
//!
//! All registers are slices of qubit indices with the least-significant bit
//! first.

use std::collections::HashSet;

use crate::error::{QhslError, Result};

use super::circuit::{Circuit, ControlPattern};
use super::gate::Gate;

fn check_disjoint<'a>(num_qubits: usize, groups: impl IntoIterator<Item = &'a [usize]>) -> Result<()> {
    let mut seen = HashSet::new();
    for group in groups {
        for &q in group {
            if q >= num_qubits {
                return Err(QhslError::QubitOutOfRange { qubit: q, num_qubits });
            }
            if !seen.insert(q) {
                return Err(QhslError::RegisterOverlap(q));
            }
        }
    }
    Ok(())
}

/// XOR a constant into a register from `|0…0⟩`: X on every qubit whose bit
/// of `value` is set.
pub fn build_omega(value: u64, register: &[usize], num_qubits: usize) -> Result<Circuit> {
    if register.len() < 64 && value >> register.len() != 0 {
        return Err(QhslError::Config(format!(
            "value {value} does not fit in {} qubits",
            register.len()
        )));
    }
    let mut c = Circuit::new(num_qubits);
    for (bit, &q) in register.iter().enumerate() {
        if (value >> bit) & 1 == 1 {
            c.gate(Gate::X, q)?;
        }
    }
    Ok(c)
}

/// Qubit assignment for a ripple-carry adder computing `target += addend`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdderRegisters {
    pub addend: Vec<usize>,
    pub target: Vec<usize>,
    /// Receives the final carry; must start in `|0⟩`.
    pub carry_out: usize,
    /// Internal carries, one per bit; start and end in `|0⟩`.
    pub scratch: Vec<usize>,
}

impl AdderRegisters {
    pub fn width(&self) -> usize {
        self.addend.len()
    }
}

/// Ripple-carry adder built from carry and sum blocks.
///
/// On basis input `|a⟩|b⟩|0⟩` it produces `|a⟩|(a+b) mod 2^w⟩|c⟩` with the
/// carry set when `a + b ≥ 2^w`; scratch qubits are returned to `|0⟩`.
pub fn build_adder(regs: &AdderRegisters, num_qubits: usize) -> Result<Circuit> {
    let w = regs.width();
    if w == 0 || regs.target.len() != w || regs.scratch.len() != w {
        return Err(QhslError::Config(format!(
            "adder registers must share a non-zero width (addend {}, target {}, scratch {})",
            w,
            regs.target.len(),
            regs.scratch.len()
        )));
    }
    let carry_out = [regs.carry_out];
    check_disjoint(
        num_qubits,
        [
            regs.addend.as_slice(),
            regs.target.as_slice(),
            regs.scratch.as_slice(),
            carry_out.as_slice(),
        ],
    )?;

    let a = &regs.addend;
    let b = &regs.target;
    let carry = |i: usize| if i == w { regs.carry_out } else { regs.scratch[i] };

    let mut c = Circuit::new(num_qubits);
    for i in 0..w {
        carry_block(&mut c, carry(i), a[i], b[i], carry(i + 1))?;
    }
    c.mcx(&[a[w - 1]], b[w - 1])?;
    sum_block(&mut c, carry(w - 1), a[w - 1], b[w - 1])?;
    for i in (0..w - 1).rev() {
        carry_block_inverse(&mut c, carry(i), a[i], b[i], carry(i + 1))?;
        sum_block(&mut c, carry(i), a[i], b[i])?;
    }
    Ok(c)
}

fn carry_block(c: &mut Circuit, cin: usize, a: usize, b: usize, cout: usize) -> Result<()> {
    c.mcx(&[a, b], cout)?;
    c.mcx(&[a], b)?;
    c.mcx(&[cin, b], cout)
}

fn carry_block_inverse(c: &mut Circuit, cin: usize, a: usize, b: usize, cout: usize) -> Result<()> {
    c.mcx(&[cin, b], cout)?;
    c.mcx(&[a], b)?;
    c.mcx(&[a, b], cout)
}

fn sum_block(c: &mut Circuit, cin: usize, a: usize, b: usize) -> Result<()> {
    c.mcx(&[a], b)?;
    c.mcx(&[cin], b)
}

/// Magnitude comparator: flips `greater` iff A > B and `less` iff A < B.
///
/// B is temporarily overwritten with `A xor B`; the highest differing bit
/// decides the order and is found with mixed-polarity multi-controls, so no
/// extra ancillas are needed. Both inputs are restored.
pub fn build_comparator(
    a: &[usize],
    b: &[usize],
    greater: usize,
    less: usize,
    num_qubits: usize,
) -> Result<Circuit> {
    let w = a.len();
    if w == 0 || b.len() != w {
        return Err(QhslError::Config(format!(
            "comparator registers must share a non-zero width ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let flags = [greater, less];
    check_disjoint(num_qubits, [a, b, flags.as_slice()])?;

    let mut c = Circuit::new(num_qubits);
    for i in 0..w {
        c.mcx(&[a[i]], b[i])?;
    }
    for i in (0..w).rev() {
        let mut controls: Vec<(usize, bool)> = ((i + 1)..w).map(|j| (b[j], false)).collect();
        controls.push((b[i], true));
        let mut gt = controls.clone();
        gt.push((a[i], true));
        c.push(Gate::X, greater, ControlPattern::new(gt)?)?;
        controls.push((a[i], false));
        c.push(Gate::X, less, ControlPattern::new(controls)?)?;
    }
    for i in 0..w {
        c.mcx(&[a[i]], b[i])?;
    }
    Ok(c)
}
