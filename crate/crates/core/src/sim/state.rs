use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QhslError, Result};

use super::circuit::{Circuit, ControlPattern, Instruction};
use super::gate::{Gate, Matrix2};

/// Tolerance on the squared norm of a state.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Largest minority weight a set gate accepts on its target.
pub const SET_TOLERANCE: f64 = 1e-9;

/// Dense amplitude vector. Qubit `k` is bit `k` of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Self {
        StateVector::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: u64) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << num_qubits];
        amps[index as usize] = Complex64::new(1.0, 0.0);
        StateVector { num_qubits, amps }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(QhslError::DimensionMismatch {
                expected: len.next_power_of_two(),
                found: len,
            });
        }
        let state = StateVector {
            num_qubits: len.trailing_zeros() as usize,
            amps,
        };
        let n = state.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(QhslError::NotNormalized(n));
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: u64) -> Complex64 {
        self.amps[index as usize]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            Err(QhslError::QubitOutOfRange {
                qubit: q,
                num_qubits: self.num_qubits,
            })
        } else {
            Ok(())
        }
    }

    /// Apply `gate` to `target` on the subspace selected by `controls`.
    pub fn apply_gate(&mut self, gate: Gate, target: usize, controls: &ControlPattern) -> Result<()> {
        self.check_qubit(target)?;
        for &(q, _) in controls.controls() {
            self.check_qubit(q)?;
            if q == target {
                return Err(QhslError::IndexConflict(target));
            }
        }
        let (mask, value) = controls.mask_value();
        match gate.matrix() {
            Some(m) => {
                self.apply_matrix(&m, target, mask, value);
                Ok(())
            }
            None => self.apply_set(gate == Gate::Set1, target, mask, value),
        }
    }

    pub fn apply(&mut self, ins: &Instruction) -> Result<()> {
        self.apply_gate(ins.gate, ins.target, &ins.controls)
    }

    fn apply_matrix(&mut self, m: &Matrix2, target: usize, mask: u64, value: u64) {
        let tbit = 1usize << target;
        let (mask, value) = (mask as usize, value as usize);
        for i in 0..self.amps.len() {
            if i & tbit != 0 || i & mask != value {
                continue;
            }
            let j = i | tbit;
            let (a0, a1) = (self.amps[i], self.amps[j]);
            self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    fn apply_set(&mut self, one: bool, target: usize, mask: u64, value: u64) -> Result<()> {
        let tbit = 1usize << target;
        let (mask, value) = (mask as usize, value as usize);
        let pairs = || {
            (0..self.amps.len()).filter(move |&i| i & tbit == 0 && i & mask == value)
        };
        for i in pairs() {
            let weight = self.amps[i].norm_sqr().min(self.amps[i | tbit].norm_sqr());
            if weight > SET_TOLERANCE {
                return Err(QhslError::NonBasisTarget { target, weight });
            }
        }
        let indices: Vec<usize> = pairs().collect();
        for i in indices {
            let j = i | tbit;
            let moved = self.amps[i] + self.amps[j];
            let zero = Complex64::new(0.0, 0.0);
            if one {
                self.amps[i] = zero;
                self.amps[j] = moved;
            } else {
                self.amps[i] = moved;
                self.amps[j] = zero;
            }
        }
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 && norm != 1.0 {
            for a in &mut self.amps {
                *a /= norm;
            }
        }
        Ok(())
    }

    pub fn run(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.num_qubits() != self.num_qubits {
            return Err(QhslError::DimensionMismatch {
                expected: self.num_qubits,
                found: circuit.num_qubits(),
            });
        }
        for ins in circuit.instructions() {
            self.apply(ins)?;
        }
        Ok(())
    }

    /// Probabilities of reading 0 and 1 on `qubit`.
    pub fn probabilities(&self, qubit: usize) -> Result<(f64, f64)> {
        self.check_qubit(qubit)?;
        let tbit = 1usize << qubit;
        let (mut p0, mut p1) = (0.0, 0.0);
        for (i, a) in self.amps.iter().enumerate() {
            if i & tbit == 0 {
                p0 += a.norm_sqr();
            } else {
                p1 += a.norm_sqr();
            }
        }
        let total = p0 + p1;
        Ok((p0 / total, p1 / total))
    }

    /// Marginal distribution over `qubits`; key bit `k` is `qubits[k]`.
    pub fn marginal(&self, qubits: &[usize]) -> Result<BTreeMap<u64, f64>> {
        for &q in qubits {
            self.check_qubit(q)?;
        }
        let mut out = BTreeMap::new();
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            *out.entry(extract_bits(i as u64, qubits)).or_insert(0.0) += p;
        }
        Ok(out)
    }

    /// Sample `shots` measurements of `qubits` with a seeded generator.
    pub fn sample_shots(&self, qubits: &[usize], shots: u64, seed: u64) -> Result<BTreeMap<u64, u64>> {
        if shots == 0 {
            return Err(QhslError::Config("shots must be at least 1".into()));
        }
        let dist = self.marginal(qubits)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(sample_distribution(&dist, shots, &mut rng))
    }
}

/// Gather bits of `index` at `qubits` into a compact integer.
pub fn extract_bits(index: u64, qubits: &[usize]) -> u64 {
    qubits
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &q)| acc | ((index >> q) & 1) << k)
}

fn sample_distribution<R: Rng>(dist: &BTreeMap<u64, f64>, shots: u64, rng: &mut R) -> BTreeMap<u64, u64> {
    let keys: Vec<u64> = dist.keys().copied().collect();
    let mut cumulative = Vec::with_capacity(keys.len());
    let mut acc = 0.0;
    for p in dist.values() {
        acc += p;
        cumulative.push(acc);
    }
    let mut hist = BTreeMap::new();
    for _ in 0..shots {
        let r = rng.random::<f64>() * acc;
        let idx = cumulative.partition_point(|&c| c <= r).min(keys.len() - 1);
        *hist.entry(keys[idx]).or_insert(0) += 1;
    }
    hist
}

/// Run `circuit` on a copy of `initial`.
pub fn run_circuit(initial: &StateVector, circuit: &Circuit) -> Result<StateVector> {
    let mut state = initial.clone();
    state.run(circuit)?;
    Ok(state)
}
