//! Dense statevector simulation and the gate vocabulary used by QHSL circuits.

pub mod arith;
pub mod basis;
mod circuit;
mod gate;
mod state;

pub use arith::{build_adder, build_comparator, build_omega, AdderRegisters};
pub use basis::{apply_on_basis, run_on_basis};
pub use circuit::{Circuit, ControlPattern, Instruction};
pub use gate::{Gate, Matrix2};
pub use state::{extract_bits, run_circuit, StateVector, NORM_TOLERANCE, SET_TOLERANCE};
