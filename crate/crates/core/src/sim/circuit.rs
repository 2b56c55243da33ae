use std::collections::HashSet;

use crate::error::{QhslError, Result};

use super::gate::Gate;

/// Conjunction of required bit values on a set of qubits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ControlPattern {
    controls: Vec<(usize, bool)>,
}

impl ControlPattern {
    pub fn new(controls: Vec<(usize, bool)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for &(q, _) in &controls {
            if !seen.insert(q) {
                return Err(QhslError::DuplicateControl(q));
            }
        }
        Ok(ControlPattern { controls })
    }

    pub fn empty() -> Self {
        ControlPattern::default()
    }

    /// Control on every qubit of `register` (LSB first) matching `value`.
    pub fn from_value(register: &[usize], value: u64) -> Self {
        let controls = register
            .iter()
            .enumerate()
            .map(|(bit, &q)| (q, (value >> bit) & 1 == 1))
            .collect();
        ControlPattern { controls }
    }

    pub fn controls(&self) -> &[(usize, bool)] {
        &self.controls
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn contains(&self, qubit: usize) -> bool {
        self.controls.iter().any(|&(q, _)| q == qubit)
    }

    /// Bit mask of the controlled qubits and the value they must hold.
    pub fn mask_value(&self) -> (u64, u64) {
        self.controls.iter().fold((0, 0), |(m, v), &(q, b)| {
            (m | 1 << q, if b { v | 1 << q } else { v })
        })
    }

    pub fn matches(&self, index: u64) -> bool {
        let (mask, value) = self.mask_value();
        index & mask == value
    }

    /// Conjunction of two patterns. Contradictory requirements on the same
    /// qubit are an error; identical ones are merged.
    pub fn and(&self, other: &ControlPattern) -> Result<ControlPattern> {
        let mut controls = self.controls.clone();
        for &(q, b) in &other.controls {
            match controls.iter().find(|&&(p, _)| p == q) {
                Some(&(_, existing)) if existing == b => {}
                Some(_) => return Err(QhslError::DuplicateControl(q)),
                None => controls.push((q, b)),
            }
        }
        Ok(ControlPattern { controls })
    }
}

/// One gate application.
#[derive(Debug, Clone, PartialEq)]
pub struct Instruction {
    pub gate: Gate,
    pub target: usize,
    pub controls: ControlPattern,
}

/// Ordered list of gate applications on a fixed-width register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            instructions: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    fn check(&self, target: usize, controls: &ControlPattern) -> Result<()> {
        if target >= self.num_qubits {
            return Err(QhslError::QubitOutOfRange {
                qubit: target,
                num_qubits: self.num_qubits,
            });
        }
        for &(q, _) in controls.controls() {
            if q >= self.num_qubits {
                return Err(QhslError::QubitOutOfRange {
                    qubit: q,
                    num_qubits: self.num_qubits,
                });
            }
            if q == target {
                return Err(QhslError::IndexConflict(target));
            }
        }
        Ok(())
    }

    pub fn push(&mut self, gate: Gate, target: usize, controls: ControlPattern) -> Result<()> {
        self.check(target, &controls)?;
        self.instructions.push(Instruction {
            gate,
            target,
            controls,
        });
        Ok(())
    }

    /// Uncontrolled gate.
    pub fn gate(&mut self, gate: Gate, target: usize) -> Result<()> {
        self.push(gate, target, ControlPattern::empty())
    }

    /// X on `target` controlled on every listed qubit being 1.
    pub fn mcx(&mut self, controls: &[usize], target: usize) -> Result<()> {
        let pattern = ControlPattern::new(controls.iter().map(|&q| (q, true)).collect())?;
        self.push(Gate::X, target, pattern)
    }

    /// Append all instructions of `other`, which must not be wider.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.num_qubits > self.num_qubits {
            return Err(QhslError::DimensionMismatch {
                expected: self.num_qubits,
                found: other.num_qubits,
            });
        }
        self.instructions.extend(other.instructions.iter().cloned());
        Ok(())
    }

    /// Same circuit on a wider register.
    pub fn widen(&self, num_qubits: usize) -> Result<Circuit> {
        if num_qubits < self.num_qubits {
            return Err(QhslError::DimensionMismatch {
                expected: self.num_qubits,
                found: num_qubits,
            });
        }
        Ok(Circuit {
            num_qubits,
            instructions: self.instructions.clone(),
        })
    }

    /// Every instruction additionally conditioned on `extra`.
    pub fn controlled(&self, extra: &ControlPattern) -> Result<Circuit> {
        let mut out = Circuit::new(self.num_qubits);
        for ins in &self.instructions {
            if extra.contains(ins.target) {
                return Err(QhslError::IndexConflict(ins.target));
            }
            out.push(ins.gate, ins.target, ins.controls.and(extra)?)?;
        }
        Ok(out)
    }

    /// The inverse circuit. Fails on gates without an inverse in the vocabulary.
    pub fn inverse(&self) -> Result<Circuit> {
        let mut out = Circuit::new(self.num_qubits);
        for ins in self.instructions.iter().rev() {
            let inv = ins
                .gate
                .inverse()
                .ok_or_else(|| QhslError::NotInvertible(ins.gate.name().into()))?;
            for g in inv {
                out.push(g, ins.target, ins.controls.clone())?;
            }
        }
        Ok(out)
    }

    pub fn count_where(&self, pred: impl Fn(&Instruction) -> bool) -> usize {
        self.instructions.iter().filter(|i| pred(i)).count()
    }

    /// Qubits written to (targets) by any instruction.
    pub fn targets(&self) -> HashSet<usize> {
        self.instructions.iter().map(|i| i.target).collect()
    }
}
