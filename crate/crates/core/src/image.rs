//! QHSL image model, preparation circuits and the two simulation backends.
//!
//! Register layout (qubit 0 is the least-significant bit of a basis index):
//!
//! | qubits            | content                      |
//! |-------------------|------------------------------|
//! | `[0, n)`          | X coordinate, LSB first      |
//! | `[n, 2n)`         | Y coordinate, LSB first      |
//! | `[2n, 2n+q)`      | lightness code, LSB first    |
//! | `2n+q`            | chromaticity qubit           |
//! | `2n+q+1 …`        | ancillas used by transforms  |
//!
//! The image state is `2^{-n} Σ_{YX} |HS_{YX}⟩|L_{YX}⟩|YX⟩`. The structured
//! backend stores one chroma 2-vector plus the basis bits of every other
//! qubit per pixel branch; the dense backend materializes all amplitudes and
//! is only used to verify the structured one on small registers.

use num_complex::Complex64;
use rand::Rng;

use crate::color::{max_code, ChromaState, LightnessMapping};
use crate::error::{QhslError, Result};
use crate::sim::{Circuit, ControlPattern, Gate, Instruction, StateVector, SET_TOLERANCE};

/// Default cap on the number of qubits the dense backend will allocate.
pub const DEFAULT_QUBIT_BUDGET: usize = 26;

/// Qubit positions of the image registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterLayout {
    pub n: u32,
    pub q: u32,
}

impl RegisterLayout {
    pub fn new(n: u32, q: u32) -> Self {
        RegisterLayout { n, q }
    }

    pub fn side(&self) -> usize {
        1 << self.n
    }

    pub fn num_pixels(&self) -> usize {
        1 << (2 * self.n)
    }

    pub fn x_qubits(&self) -> Vec<usize> {
        (0..self.n as usize).collect()
    }

    pub fn y_qubits(&self) -> Vec<usize> {
        let n = self.n as usize;
        (n..2 * n).collect()
    }

    /// X qubits followed by Y qubits; the branch index is read from these.
    pub fn position_qubits(&self) -> Vec<usize> {
        (0..2 * self.n as usize).collect()
    }

    pub fn lightness_qubits(&self) -> Vec<usize> {
        let start = 2 * self.n as usize;
        (start..start + self.q as usize).collect()
    }

    pub fn chroma(&self) -> usize {
        (2 * self.n + self.q) as usize
    }

    /// Qubits of the image itself, without ancillas.
    pub fn num_qubits(&self) -> usize {
        (2 * self.n + self.q + 1) as usize
    }

    /// First qubit index available for ancillas.
    pub fn first_ancilla(&self) -> usize {
        self.num_qubits()
    }

    pub fn position_index(&self, addr: PixelAddress) -> u64 {
        (addr.x as u64) | (addr.y as u64) << self.n
    }

    pub fn basis_index(&self, addr: PixelAddress, lightness: u32, chroma_bit: bool) -> u64 {
        self.position_index(addr)
            | u64::from(lightness) << (2 * self.n)
            | u64::from(chroma_bit) << self.chroma()
    }

    pub fn address_of(&self, position: u64) -> PixelAddress {
        let mask = (1u64 << self.n) - 1;
        PixelAddress {
            y: ((position >> self.n) & mask) as usize,
            x: (position & mask) as usize,
        }
    }

    pub fn lightness_of(&self, index: u64) -> u32 {
        ((index >> (2 * self.n)) & u64::from(max_code(self.q))) as u32
    }

    /// Position pattern selecting the branch of `addr`.
    pub fn position_pattern(&self, addr: PixelAddress) -> ControlPattern {
        ControlPattern::from_value(&self.position_qubits(), self.position_index(addr))
    }
}

/// Row `y`, column `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelAddress {
    pub y: usize,
    pub x: usize,
}

impl PixelAddress {
    pub fn new(y: usize, x: usize) -> Self {
        PixelAddress { y, x }
    }
}

/// Chromaticity and lightness code of one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pixel {
    pub chroma: ChromaState,
    pub lightness: u32,
}

/// A `2ⁿ×2ⁿ` image in QHSL form, pixels in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct QhslImage {
    layout: RegisterLayout,
    mapping: LightnessMapping,
    pixels: Vec<Pixel>,
}

impl QhslImage {
    pub fn new(n: u32, q: u32, mapping: LightnessMapping, pixels: Vec<Pixel>) -> Result<Self> {
        let layout = RegisterLayout::new(n, q);
        if n > 15 {
            return Err(QhslError::InvalidImage(format!("n={n} is too large")));
        }
        if q > 31 {
            return Err(QhslError::InvalidImage(format!("q={q} is too large")));
        }
        if pixels.len() != layout.num_pixels() {
            return Err(QhslError::InvalidImage(format!(
                "expected {} pixels for n={n}, got {}",
                layout.num_pixels(),
                pixels.len()
            )));
        }
        mapping.validate_for(q)?;
        if let Some(p) = pixels.iter().find(|p| p.lightness > max_code(q)) {
            return Err(QhslError::InvalidImage(format!(
                "lightness {} does not fit q={q}",
                p.lightness
            )));
        }
        Ok(QhslImage {
            layout,
            mapping,
            pixels,
        })
    }

    /// Every pixel identical.
    pub fn uniform(n: u32, q: u32, mapping: LightnessMapping, pixel: Pixel) -> Result<Self> {
        QhslImage::new(n, q, mapping, vec![pixel; 1 << (2 * n)])
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    pub fn n(&self) -> u32 {
        self.layout.n
    }

    pub fn q(&self) -> u32 {
        self.layout.q
    }

    pub fn side(&self) -> usize {
        self.layout.side()
    }

    pub fn mapping(&self) -> &LightnessMapping {
        &self.mapping
    }

    pub fn pixels(&self) -> &[Pixel] {
        &self.pixels
    }

    pub fn pixel(&self, addr: PixelAddress) -> &Pixel {
        &self.pixels[addr.y * self.side() + addr.x]
    }

    /// Addresses in raster order.
    pub fn addresses(&self) -> impl Iterator<Item = PixelAddress> + '_ {
        let side = self.side();
        (0..side * side).map(move |i| PixelAddress::new(i / side, i % side))
    }

    /// New image with every pixel passed through `f`.
    pub fn map_pixels(&self, mut f: impl FnMut(PixelAddress, &Pixel) -> Pixel) -> Result<QhslImage> {
        let pixels = self.addresses().zip(&self.pixels).map(|(a, p)| f(a, p)).collect();
        QhslImage::new(self.n(), self.q(), self.mapping.clone(), pixels)
    }

    /// Random image with chroma angles uniform over the whole Bloch range.
    pub fn random<R: Rng>(n: u32, q: u32, rng: &mut R) -> QhslImage {
        let count = 1usize << (2 * n);
        let pixels = (0..count)
            .map(|_| Pixel {
                chroma: ChromaState::canonical(
                    rng.random_range(0.0..=std::f64::consts::PI),
                    rng.random_range(0.0..std::f64::consts::TAU),
                ),
                lightness: if q == 0 {
                    0
                } else {
                    rng.random_range(0..=max_code(q))
                },
            })
            .collect();
        QhslImage::new(n, q, LightnessMapping::Average, pixels).expect("random image is valid")
    }
}

/// Hadamards on every position qubit.
pub fn prepare_position_superposition(n: u32, q: u32) -> Circuit {
    let layout = RegisterLayout::new(n, q);
    let mut c = Circuit::new(layout.num_qubits());
    for qubit in layout.position_qubits() {
        c.gate(Gate::H, qubit).expect("position qubit in range");
    }
    c
}

/// Color setter for one pixel: `R(Δφ, Δθ)` on the chroma qubit and X on the
/// set bits of `lightness`, all conditioned on the pixel's position.
pub fn build_pixel_setter(
    layout: RegisterLayout,
    addr: PixelAddress,
    delta_phi: f64,
    delta_theta: f64,
    lightness: u32,
) -> Result<Circuit> {
    if addr.y >= layout.side() || addr.x >= layout.side() {
        return Err(QhslError::InvalidImage(format!(
            "pixel ({}, {}) outside a {}x{} grid",
            addr.y,
            addr.x,
            layout.side(),
            layout.side()
        )));
    }
    if lightness > max_code(layout.q) {
        return Err(QhslError::InvalidImage(format!(
            "lightness {lightness} does not fit q={}",
            layout.q
        )));
    }
    let controls = layout.position_pattern(addr);
    let mut c = Circuit::new(layout.num_qubits());
    c.push(
        Gate::R {
            phi: delta_phi,
            theta: delta_theta,
        },
        layout.chroma(),
        controls.clone(),
    )?;
    for (bit, qubit) in layout.lightness_qubits().into_iter().enumerate() {
        if (lightness >> bit) & 1 == 1 {
            c.push(Gate::X, qubit, controls.clone())?;
        }
    }
    Ok(c)
}

/// Full preparation circuit: position superposition, then one setter per
/// pixel in raster order.
pub fn build_preparation_circuit(img: &QhslImage) -> Result<Circuit> {
    let layout = img.layout();
    let mut c = prepare_position_superposition(layout.n, layout.q);
    for addr in img.addresses() {
        let p = img.pixel(addr);
        c.append(&build_pixel_setter(
            layout,
            addr,
            p.chroma.phi(),
            p.chroma.theta(),
            p.lightness,
        )?)?;
    }
    Ok(c)
}

pub fn check_budget(num_qubits: usize, budget: usize) -> Result<()> {
    if num_qubits > budget {
        Err(QhslError::QubitBudget {
            needed: num_qubits,
            budget,
        })
    } else {
        Ok(())
    }
}

/// Dense simulation of the preparation circuit from `|0…0⟩`.
pub fn simulate_preparation(img: &QhslImage, budget: usize) -> Result<StateVector> {
    let circuit = build_preparation_circuit(img)?;
    check_budget(circuit.num_qubits(), budget)?;
    let mut state = StateVector::zero(circuit.num_qubits());
    state.run(&circuit)?;
    Ok(state)
}

/// Chroma amplitudes and lightness of one pixel branch, normalized to a
/// unit chroma vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelBranch {
    pub chroma: [Complex64; 2],
    pub lightness: u32,
}

impl PixelBranch {
    /// Bloch angles of the chroma amplitudes, global phase removed.
    pub fn chroma_state(&self) -> ChromaState {
        chroma_from_amplitudes(self.chroma)
    }
}

pub fn chroma_from_amplitudes(amps: [Complex64; 2]) -> ChromaState {
    let (m0, m1) = (amps[0].norm(), amps[1].norm());
    let theta = 2.0 * m1.atan2(m0);
    let phi = if m0 > 1e-15 && m1 > 1e-15 {
        amps[1].arg() - amps[0].arg()
    } else {
        0.0
    };
    ChromaState::canonical(theta, phi)
}

pub fn chroma_amplitudes(c: &ChromaState) -> [Complex64; 2] {
    let (s, co) = (c.theta() / 2.0).sin_cos();
    [Complex64::new(co, 0.0), Complex64::from_polar(s, c.phi())]
}

/// Anything from which per-pixel branches of an image state can be read.
pub trait ImageState {
    fn layout(&self) -> RegisterLayout;

    fn pixel_branch(&self, addr: PixelAddress) -> Result<PixelBranch>;

    /// Joint probability of (position, chroma bit) after `basis_change` is
    /// applied to the chroma qubit of every branch. Index `2·position + bit`.
    fn joint_distribution(&self, basis_change: Option<Gate>) -> Result<Vec<f64>> {
        let layout = self.layout();
        let scale = 1.0 / layout.num_pixels() as f64;
        let matrix = basis_change.and_then(|g| g.matrix());
        let mut out = Vec::with_capacity(2 * layout.num_pixels());
        for pos in 0..layout.num_pixels() as u64 {
            let branch = self.pixel_branch(layout.address_of(pos))?;
            let [a0, a1] = branch.chroma;
            let (b0, b1) = match &matrix {
                Some(m) => (m[0][0] * a0 + m[0][1] * a1, m[1][0] * a0 + m[1][1] * a1),
                None => (a0, a1),
            };
            out.push(b0.norm_sqr() * scale);
            out.push(b1.norm_sqr() * scale);
        }
        Ok(out)
    }

    /// Read the image back out with exact chroma angles.
    fn to_image(&self, mapping: &LightnessMapping) -> Result<QhslImage> {
        let layout = self.layout();
        let mut pixels = Vec::with_capacity(layout.num_pixels());
        for i in 0..layout.num_pixels() {
            let addr = PixelAddress::new(i / layout.side(), i % layout.side());
            let branch = self.pixel_branch(addr)?;
            pixels.push(Pixel {
                chroma: branch.chroma_state(),
                lightness: branch.lightness,
            });
        }
        QhslImage::new(layout.n, layout.q, mapping.clone(), pixels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Branch {
    chroma: [Complex64; 2],
    /// Basis values of every qubit except the chroma qubit (whose bit is 0).
    bits: u64,
}

/// Closed-form image state: one branch per pixel, each a chroma 2-vector
/// times a basis state of all other qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredState {
    layout: RegisterLayout,
    num_qubits: usize,
    branches: Vec<Branch>,
}

impl StructuredState {
    pub fn from_image(img: &QhslImage) -> Self {
        let layout = img.layout();
        let branches = img
            .addresses()
            .map(|addr| {
                let p = img.pixel(addr);
                Branch {
                    chroma: chroma_amplitudes(&p.chroma),
                    bits: layout.basis_index(addr, p.lightness, false),
                }
            })
            .collect();
        StructuredState {
            layout,
            num_qubits: layout.num_qubits(),
            branches,
        }
    }

    /// Uniform position superposition with every color register at `|0⟩`.
    pub fn uniform(layout: RegisterLayout) -> Self {
        let branches = (0..layout.num_pixels() as u64)
            .map(|pos| Branch {
                chroma: [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                bits: pos,
            })
            .collect();
        StructuredState {
            layout,
            num_qubits: layout.num_qubits(),
            branches,
        }
    }

    /// Extend the register with ancillas initialized to `|0⟩`.
    pub fn with_qubits(mut self, num_qubits: usize) -> Result<Self> {
        if num_qubits < self.num_qubits {
            return Err(QhslError::DimensionMismatch {
                expected: self.num_qubits,
                found: num_qubits,
            });
        }
        if num_qubits > 64 {
            return Err(QhslError::Config(format!(
                "structured backend supports at most 64 qubits, requested {num_qubits}"
            )));
        }
        self.num_qubits = num_qubits;
        Ok(self)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Amplitude of basis state `index`.
    pub fn amplitude(&self, index: u64) -> Complex64 {
        let chroma_bit = self.layout.chroma();
        let position = index & ((1u64 << (2 * self.layout.n)) - 1);
        let branch = &self.branches[position as usize];
        let rest = index & !(1u64 << chroma_bit);
        if rest != branch.bits || (index >> self.num_qubits) != 0 {
            return Complex64::new(0.0, 0.0);
        }
        let scale = 1.0 / self.layout.side() as f64;
        branch.chroma[((index >> chroma_bit) & 1) as usize] * scale
    }

    /// Basis bits (chroma excluded) of the branch at `addr`.
    pub fn branch_bits(&self, addr: PixelAddress) -> u64 {
        self.branches[self.layout.position_index(addr) as usize].bits
    }

    pub fn apply(&mut self, ins: &Instruction) -> Result<()> {
        if ins.target >= self.num_qubits {
            return Err(QhslError::QubitOutOfRange {
                qubit: ins.target,
                num_qubits: self.num_qubits,
            });
        }
        let chroma = self.layout.chroma();
        let position_mask = (1u64 << (2 * self.layout.n)) - 1;
        let (mask, value) = ins.controls.mask_value();
        let chroma_bit = 1u64 << chroma;
        let chroma_controlled = mask & chroma_bit != 0;
        let want_chroma = value & chroma_bit != 0;
        let (mask, value) = (mask & !chroma_bit, value & !chroma_bit);

        if ins.target == chroma {
            if chroma_controlled {
                return Err(QhslError::IndexConflict(chroma));
            }
            let matrix = ins.gate.matrix();
            for b in &mut self.branches {
                if b.bits & mask != value {
                    continue;
                }
                let [a0, a1] = b.chroma;
                b.chroma = match &matrix {
                    Some(m) => [m[0][0] * a0 + m[0][1] * a1, m[1][0] * a0 + m[1][1] * a1],
                    None => {
                        let weight = a0.norm_sqr().min(a1.norm_sqr());
                        if weight > SET_TOLERANCE {
                            return Err(QhslError::NonBasisTarget {
                                target: chroma,
                                weight,
                            });
                        }
                        let moved = a0 + a1;
                        let z = Complex64::new(0.0, 0.0);
                        if ins.gate == Gate::Set1 {
                            [z, moved]
                        } else {
                            [moved, z]
                        }
                    }
                };
            }
            return Ok(());
        }

        let tbit = 1u64 << ins.target;
        if tbit & position_mask != 0 && !matches!(ins.gate, Gate::I) {
            return Err(QhslError::NotStructured(format!(
                "{} on position qubit {}",
                ins.gate.name(),
                ins.target
            )));
        }
        if !matches!(ins.gate, Gate::X | Gate::I | Gate::Set0 | Gate::Set1) {
            return Err(QhslError::NotStructured(format!(
                "{} on non-chroma qubit {}",
                ins.gate.name(),
                ins.target
            )));
        }
        for b in &mut self.branches {
            if b.bits & mask != value {
                continue;
            }
            if chroma_controlled {
                let [a0, a1] = b.chroma;
                let (p_match, p_other) = if want_chroma {
                    (a1.norm_sqr(), a0.norm_sqr())
                } else {
                    (a0.norm_sqr(), a1.norm_sqr())
                };
                if p_match > SET_TOLERANCE && p_other > SET_TOLERANCE {
                    return Err(QhslError::NotStructured(
                        "chroma-controlled gate would entangle a superposed chroma qubit".into(),
                    ));
                }
                if p_match <= SET_TOLERANCE {
                    continue;
                }
            }
            b.bits = match ins.gate {
                Gate::X => b.bits ^ tbit,
                Gate::Set0 => b.bits & !tbit,
                Gate::Set1 => b.bits | tbit,
                _ => b.bits,
            };
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
        circuit.instructions().iter().try_for_each(|ins| self.apply(ins))
    }

    /// Materialize all amplitudes.
    pub fn to_dense(&self, budget: usize) -> Result<StateVector> {
        check_budget(self.num_qubits, budget)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << self.num_qubits];
        let scale = 1.0 / self.layout.side() as f64;
        let chroma_bit = 1u64 << self.layout.chroma();
        for b in &self.branches {
            amps[b.bits as usize] = b.chroma[0] * scale;
            amps[(b.bits | chroma_bit) as usize] = b.chroma[1] * scale;
        }
        StateVector::from_amplitudes(amps)
    }
}

impl ImageState for StructuredState {
    fn layout(&self) -> RegisterLayout {
        self.layout
    }

    fn pixel_branch(&self, addr: PixelAddress) -> Result<PixelBranch> {
        let b = &self.branches[self.layout.position_index(addr) as usize];
        Ok(PixelBranch {
            chroma: b.chroma,
            lightness: self.layout.lightness_of(b.bits),
        })
    }
}

/// Dense state vector interpreted through an image layout. Qubits beyond the
/// image registers are treated as ancillas.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseImageState {
    layout: RegisterLayout,
    state: StateVector,
}

/// Amplitudes below this squared magnitude count as structural zeros.
const SUPPORT_TOLERANCE: f64 = 1e-20;

impl DenseImageState {
    pub fn new(layout: RegisterLayout, state: StateVector) -> Result<Self> {
        if state.num_qubits() < layout.num_qubits() {
            return Err(QhslError::DimensionMismatch {
                expected: layout.num_qubits(),
                found: state.num_qubits(),
            });
        }
        Ok(DenseImageState { layout, state })
    }

    pub fn prepare(img: &QhslImage, budget: usize) -> Result<Self> {
        DenseImageState::new(img.layout(), simulate_preparation(img, budget)?)
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut StateVector {
        &mut self.state
    }

    /// Widen with ancillas at `|0⟩`.
    pub fn with_qubits(self, num_qubits: usize, budget: usize) -> Result<Self> {
        check_budget(num_qubits, budget)?;
        let extra = num_qubits
            .checked_sub(self.state.num_qubits())
            .ok_or(QhslError::DimensionMismatch {
                expected: self.state.num_qubits(),
                found: num_qubits,
            })?;
        let mut amps = self.state.amplitudes().to_vec();
        amps.resize(amps.len() << extra, Complex64::new(0.0, 0.0));
        Ok(DenseImageState {
            layout: self.layout,
            state: StateVector::from_amplitudes(amps)?,
        })
    }
}

impl ImageState for DenseImageState {
    fn layout(&self) -> RegisterLayout {
        self.layout
    }

    fn pixel_branch(&self, addr: PixelAddress) -> Result<PixelBranch> {
        let layout = self.layout;
        let position = layout.position_index(addr);
        let position_mask = (1u64 << (2 * layout.n)) - 1;
        let chroma_bit = 1u64 << layout.chroma();
        let mut rest: Option<u64> = None;
        let mut chroma = [Complex64::new(0.0, 0.0); 2];
        for (i, a) in self.state.amplitudes().iter().enumerate() {
            let i = i as u64;
            if i & position_mask != position || a.norm_sqr() <= SUPPORT_TOLERANCE {
                continue;
            }
            let others = i & !chroma_bit;
            match rest {
                None => rest = Some(others),
                Some(r) if r != others => {
                    return Err(QhslError::NonBasisLightness {
                        y: addr.y,
                        x: addr.x,
                    })
                }
                _ => {}
            }
            chroma[usize::from(i & chroma_bit != 0)] = *a;
        }
        let rest = rest.ok_or_else(|| {
            QhslError::InconsistentStatistics(format!("pixel ({}, {}) has no support", addr.y, addr.x))
        })?;
        let norm = (chroma[0].norm_sqr() + chroma[1].norm_sqr()).sqrt();
        Ok(PixelBranch {
            chroma: [chroma[0] / norm, chroma[1] / norm],
            lightness: layout.lightness_of(rest),
        })
    }
}

/// Simulator used to run circuits on an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Closed-form per-pixel branches; any image size, at most 64 qubits.
    #[default]
    Structured,
    /// Full amplitude array, limited by a qubit budget.
    Dense { budget: usize },
}

impl Backend {
    /// Largest register the backend accepts.
    pub fn max_qubits(&self) -> usize {
        match self {
            Backend::Structured => 64,
            Backend::Dense { budget } => *budget,
        }
    }
}

/// Load `img`, widen with ancillas to the circuit's width, run the circuit,
/// and read the image back. Ancillas must end in `|0⟩`.
pub fn run_on_image(img: &QhslImage, circuit: &Circuit, backend: Backend) -> Result<QhslImage> {
    let layout = img.layout();
    let nq = circuit.num_qubits();
    if nq < layout.num_qubits() {
        return Err(QhslError::DimensionMismatch {
            expected: layout.num_qubits(),
            found: nq,
        });
    }
    match backend {
        Backend::Structured => {
            let mut s = StructuredState::from_image(img).with_qubits(nq)?;
            s.run(circuit)?;
            for addr in img.addresses() {
                if s.branch_bits(addr) >> layout.num_qubits() != 0 {
                    return Err(QhslError::InconsistentStatistics(format!(
                        "ancillas not restored at pixel ({}, {})",
                        addr.y, addr.x
                    )));
                }
            }
            s.to_image(img.mapping())
        }
        Backend::Dense { budget } => {
            check_budget(nq, budget)?;
            let mut d = DenseImageState::prepare(img, budget)?.with_qubits(nq, budget)?;
            d.state_mut().run(circuit)?;
            let image_mask = (1u64 << layout.num_qubits()) - 1;
            let dirty = d
                .state()
                .amplitudes()
                .iter()
                .enumerate()
                .any(|(i, a)| (i as u64) & !image_mask != 0 && a.norm_sqr() > SUPPORT_TOLERANCE);
            if dirty {
                return Err(QhslError::InconsistentStatistics("ancillas not restored".into()));
            }
            d.to_image(img.mapping())
        }
    }
}
