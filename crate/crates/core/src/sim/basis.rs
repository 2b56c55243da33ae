//! Classical simulation of permutation circuits on computational basis states.
//!
//! Arithmetic blocks (adders, comparators, constant loads, set gates) only
//! permute or overwrite basis states, so they can be checked exhaustively at
//! widths far beyond what a dense amplitude array allows.

use crate::error::{QhslError, Result};

use super::circuit::{Circuit, Instruction};
use super::gate::Gate;

/// Apply one permutation instruction to a basis index.
pub fn apply_on_basis(ins: &Instruction, index: u64) -> Result<u64> {
    if !ins.controls.matches(index) {
        return match ins.gate {
            Gate::X | Gate::I | Gate::Set0 | Gate::Set1 => Ok(index),
            g => Err(QhslError::NotPermutation(g.name().into())),
        };
    }
    let bit = 1u64 << ins.target;
    match ins.gate {
        Gate::X => Ok(index ^ bit),
        Gate::I => Ok(index),
        Gate::Set0 => Ok(index & !bit),
        Gate::Set1 => Ok(index | bit),
        g => Err(QhslError::NotPermutation(g.name().into())),
    }
}

/// Run a permutation circuit on `|index⟩` and return the output index.
pub fn run_on_basis(circuit: &Circuit, index: u64) -> Result<u64> {
    if circuit.num_qubits() > 64 {
        return Err(QhslError::Config(format!(
            "basis simulation supports at most 64 qubits, circuit has {}",
            circuit.num_qubits()
        )));
    }
    circuit
        .instructions()
        .iter()
        .try_fold(index, |idx, ins| apply_on_basis(ins, idx))
}
