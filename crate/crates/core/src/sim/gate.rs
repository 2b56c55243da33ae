use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;

/// 2×2 complex matrix, row-major.
pub type Matrix2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Single-target gate kinds.
///
/// `Rz` is the phase form `diag(1, e^{iφ})`, so `|0⟩` is left exactly
/// invariant. `R` is `Rz(phi)·Ry(theta)`. `U1` and `U2` rotate the X and Y
/// measurement bases onto Z. `Set0` and `Set1` are the non-unitary basis
/// assignments used for saturating lightness arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Ry(f64),
    Rz(f64),
    R { phi: f64, theta: f64 },
    H,
    X,
    I,
    Set0,
    Set1,
    U1,
    U2,
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::Ry(_) => "RY",
            Gate::Rz(_) => "RZ",
            Gate::R { .. } => "R",
            Gate::H => "H",
            Gate::X => "X",
            Gate::I => "I",
            Gate::Set0 => "SET0",
            Gate::Set1 => "SET1",
            Gate::U1 => "U1",
            Gate::U2 => "U2",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            Gate::Ry(t) => vec![t],
            Gate::Rz(p) => vec![p],
            Gate::R { phi, theta } => vec![phi, theta],
            _ => Vec::new(),
        }
    }

    pub fn is_unitary(&self) -> bool {
        !matches!(self, Gate::Set0 | Gate::Set1)
    }

    /// Matrix of a unitary gate; `None` for the set gates.
    pub fn matrix(&self) -> Option<Matrix2> {
        let m = match *self {
            Gate::Ry(t) => {
                let (s, c) = (t / 2.0).sin_cos();
                [[c.into(), (-s).into()], [s.into(), c.into()]]
            }
            Gate::Rz(p) => [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, p)]],
            Gate::R { phi, theta } => {
                let (s, c) = (theta / 2.0).sin_cos();
                let e = Complex64::from_polar(1.0, phi);
                [[c.into(), (-s).into()], [e * s, e * c]]
            }
            Gate::H => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            Gate::X => [[ZERO, ONE], [ONE, ZERO]],
            Gate::I => [[ONE, ZERO], [ZERO, ONE]],
            Gate::U1 => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                [[h, h], [-h, h]]
            }
            Gate::U2 => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                let mi = Complex64::new(0.0, -FRAC_1_SQRT_2);
                [[h, mi], [mi, h]]
            }
            Gate::Set0 | Gate::Set1 => return None,
        };
        Some(m)
    }

    /// Gate sequence (in application order) undoing this gate.
    pub fn inverse(&self) -> Option<Vec<Gate>> {
        match *self {
            Gate::Ry(t) => Some(vec![Gate::Ry(-t)]),
            Gate::Rz(p) => Some(vec![Gate::Rz(-p)]),
            Gate::R { phi, theta } => Some(vec![Gate::Rz(-phi), Gate::Ry(-theta)]),
            Gate::H | Gate::X | Gate::I => Some(vec![*self]),
            Gate::U1 | Gate::U2 | Gate::Set0 | Gate::Set1 => None,
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params = self.params();
        if params.is_empty() {
            write!(f, "{}", self.name())
        } else {
            let joined: Vec<String> = params.iter().map(|p| p.to_string()).collect();
            write!(f, "{}({})", self.name(), joined.join(","))
        }
    }
}
