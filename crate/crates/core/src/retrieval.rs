//! Measurement-based recovery of hue, saturation and lightness.
//!
//! The chroma qubit is read in three bases: Z directly (`K = cos θ`), and Z
//! after `U1` (`V = cos φ sin θ`) or `U2` (`W = sin φ sin θ`). Exact mode
//! evaluates these expectations analytically; shot mode estimates them from
//! seeded binomial samples, either by drawing each pixel's chroma outcomes
//! directly (oracle branch selection) or by sampling joint (position, chroma)
//! outcomes and keeping those that land on each pixel (rejection).

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::color::{decode_saturation, wrap_angle, wrap_degrees, LightnessMapping, HUE_UNDEFINED_SIN};
use crate::error::{QhslError, Result};
use crate::image::{ImageState, PixelAddress, RegisterLayout};
use crate::sim::{Gate, StateVector};

/// Slack allowed on exact expectations before they count as unphysical.
const EXACT_SLACK: f64 = 1e-9;

/// Bloch-vector expectations of one chroma qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChromaStatistics {
    pub k: f64,
    pub v: f64,
    pub w: f64,
    /// `None` for exact probabilities.
    pub shots_per_basis: Option<u64>,
}

impl ChromaStatistics {
    /// One standard deviation of a ±1-valued mean over the shot budget.
    pub fn sigma(&self) -> f64 {
        match self.shots_per_basis {
            Some(n) => 1.0 / (n as f64).sqrt(),
            None => EXACT_SLACK / 3.0,
        }
    }

    pub fn bloch_norm_sqr(&self) -> f64 {
        self.k * self.k + self.v * self.v + self.w * self.w
    }
}

/// Where the branch of each pixel comes from in shot mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchSelection {
    /// Sample each pixel's chroma qubit directly.
    #[default]
    Oracle,
    /// Sample the position register too and keep outcomes per pixel.
    Rejection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetrievalMode {
    Exact,
    Shots {
        shots: u64,
        seed: u64,
        branch: BranchSelection,
    },
}

pub fn estimate_theta(stats: &ChromaStatistics) -> Result<f64> {
    let bound = 1.0 + 3.0 * stats.sigma();
    if !stats.k.is_finite() || stats.k.abs() > bound {
        return Err(QhslError::InconsistentStatistics(format!(
            "K = {} outside [-{bound}, {bound}]",
            stats.k
        )));
    }
    Ok(stats.k.clamp(-1.0, 1.0).acos())
}

/// Azimuth estimate with the grey-axis flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiEstimate {
    pub phi: f64,
    pub hue_undefined: bool,
}

/// Quadrant-restored `arctan(W/V)` in `[0, 2π)`.
pub fn estimate_phi(stats: &ChromaStatistics) -> PhiEstimate {
    let (v, w) = (stats.v.clamp(-1.0, 1.0), stats.w.clamp(-1.0, 1.0));
    let floor = match stats.shots_per_basis {
        Some(n) => 3.0 * (2.0 / n as f64).sqrt(),
        None => HUE_UNDEFINED_SIN,
    };
    if v.hypot(w) <= floor {
        return PhiEstimate {
            phi: 0.0,
            hue_undefined: true,
        };
    }
    let phi = if v > 0.0 {
        if w >= 0.0 {
            (w / v).atan()
        } else {
            TAU + (w / v).atan()
        }
    } else if v < 0.0 {
        PI + (w / v).atan()
    } else if w > 0.0 {
        PI / 2.0
    } else {
        3.0 * PI / 2.0
    };
    PhiEstimate {
        phi: wrap_angle(phi),
        hue_undefined: false,
    }
}

fn rotate(amps: [Complex64; 2], gate: Gate) -> [Complex64; 2] {
    let m = gate.matrix().expect("basis change is unitary");
    [
        m[0][0] * amps[0] + m[0][1] * amps[1],
        m[1][0] * amps[0] + m[1][1] * amps[1],
    ]
}

fn z_expectation(amps: [Complex64; 2]) -> f64 {
    let (p0, p1) = (amps[0].norm_sqr(), amps[1].norm_sqr());
    (p0 - p1) / (p0 + p1)
}

/// Analytic expectations in the Z, U1 and U2 bases.
pub fn measure_hs_exact(chroma: [Complex64; 2]) -> ChromaStatistics {
    ChromaStatistics {
        k: z_expectation(chroma),
        v: z_expectation(rotate(chroma, Gate::U1)),
        w: z_expectation(rotate(chroma, Gate::U2)),
        shots_per_basis: None,
    }
}

/// Finite-shot expectations, `shots` per basis.
pub fn measure_hs_sampled<R: Rng>(chroma: [Complex64; 2], shots: u64, rng: &mut R) -> Result<ChromaStatistics> {
    if shots == 0 {
        return Err(QhslError::Config("shots must be at least 1".into()));
    }
    let mut sample = |amps: [Complex64; 2]| -> Result<f64> {
        let p0 = (amps[0].norm_sqr() / (amps[0].norm_sqr() + amps[1].norm_sqr())).clamp(0.0, 1.0);
        let zeros = Binomial::new(shots, p0)
            .map_err(|e| QhslError::InconsistentStatistics(e.to_string()))?
            .sample(rng);
        Ok(counts_to_expectation(zeros, shots))
    };
    Ok(ChromaStatistics {
        k: sample(chroma)?,
        v: sample(rotate(chroma, Gate::U1))?,
        w: sample(rotate(chroma, Gate::U2))?,
        shots_per_basis: Some(shots),
    })
}

fn counts_to_expectation(zeros: u64, shots: u64) -> f64 {
    (2.0 * zeros as f64 - shots as f64) / shots as f64
}

pub fn measure_hs(chroma: [Complex64; 2], shots: Option<u64>, rng: &mut impl Rng) -> Result<ChromaStatistics> {
    match shots {
        None => Ok(measure_hs_exact(chroma)),
        Some(n) => measure_hs_sampled(chroma, n, rng),
    }
}

/// Lightness code of a pixel branch. Fails when the register is superposed.
pub fn measure_lightness(state: &impl ImageState, addr: PixelAddress) -> Result<u32> {
    Ok(state.pixel_branch(addr)?.lightness)
}

/// `⟨M⟩` of the lightness register restricted to one pixel branch of a dense
/// state, with `M = Σ m|m⟩⟨m|`.
pub fn lightness_expectation(state: &StateVector, layout: RegisterLayout, addr: PixelAddress) -> f64 {
    let position = layout.position_index(addr);
    let position_mask = (1u64 << (2 * layout.n)) - 1;
    let (mut weighted, mut total) = (0.0, 0.0);
    for (i, a) in state.amplitudes().iter().enumerate() {
        let i = i as u64;
        if i & position_mask != position {
            continue;
        }
        let p = a.norm_sqr();
        weighted += p * f64::from(layout.lightness_of(i));
        total += p;
    }
    weighted / total
}

/// One recovered pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievedPixel {
    pub theta: f64,
    pub phi: f64,
    /// Degrees.
    pub hue: f64,
    pub saturation: f64,
    pub lightness: u32,
    pub hue_undefined: bool,
}

/// Recovered image plus the measurement settings that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalReport {
    pub n: u32,
    pub q: u32,
    pub mapping: LightnessMapping,
    /// `None` in exact mode.
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    /// Row-major, `2ⁿ×2ⁿ`.
    pub pixels: Vec<RetrievedPixel>,
}

impl RetrievalReport {
    pub fn side(&self) -> usize {
        1 << self.n
    }

    pub fn pixel(&self, addr: PixelAddress) -> &RetrievedPixel {
        &self.pixels[addr.y * self.side() + addr.x]
    }

    /// Three-sigma radius on each θ estimate, from the binomial variance of K
    /// propagated through arccos (`σ_θ ≈ 1/√N`).
    pub fn theta_radius(&self) -> Option<f64> {
        self.shots.map(|n| 3.0 / (n as f64).sqrt())
    }
}

fn pixel_from_stats(stats: &ChromaStatistics, lightness: u32) -> Result<RetrievedPixel> {
    let theta = estimate_theta(stats)?;
    let PhiEstimate { phi, hue_undefined } = estimate_phi(stats);
    Ok(RetrievedPixel {
        theta,
        phi,
        hue: if hue_undefined {
            0.0
        } else {
            wrap_degrees(phi * 180.0 / PI)
        },
        saturation: decode_saturation(theta),
        lightness,
        hue_undefined,
    })
}

fn pixel_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Recover every pixel of an image state.
pub fn retrieve_image<S: ImageState + Sync>(
    state: &S,
    mode: RetrievalMode,
    mapping: &LightnessMapping,
) -> Result<RetrievalReport> {
    let layout = state.layout();
    let count = layout.num_pixels();
    let pixels: Result<Vec<RetrievedPixel>> = match mode {
        RetrievalMode::Exact => (0..count)
            .into_par_iter()
            .map(|i| {
                let branch = state.pixel_branch(layout.address_of(i as u64))?;
                pixel_from_stats(&measure_hs_exact(branch.chroma), branch.lightness)
            })
            .collect(),
        RetrievalMode::Shots {
            shots,
            seed,
            branch: BranchSelection::Oracle,
        } => (0..count)
            .into_par_iter()
            .map(|i| {
                let addr = layout.address_of(i as u64);
                let branch = state.pixel_branch(addr)?;
                let mut rng = pixel_rng(seed, i as u64);
                let stats = measure_hs_sampled(branch.chroma, shots, &mut rng)?;
                pixel_from_stats(&stats, branch.lightness)
            })
            .collect(),
        RetrievalMode::Shots {
            shots,
            seed,
            branch: BranchSelection::Rejection,
        } => rejection_statistics(state, shots, seed).and_then(|all| {
            all.iter()
                .enumerate()
                .map(|(i, stats)| {
                    let lightness = state.pixel_branch(layout.address_of(i as u64))?.lightness;
                    pixel_from_stats(stats, lightness)
                })
                .collect()
        }),
    };
    let (shots, seed) = match mode {
        RetrievalMode::Exact => (None, None),
        RetrievalMode::Shots { shots, seed, .. } => (Some(shots), Some(seed)),
    };
    Ok(RetrievalReport {
        n: layout.n,
        q: layout.q,
        mapping: mapping.clone(),
        shots,
        seed,
        pixels: pixels?,
    })
}

/// Per-pixel statistics from joint (position, chroma) samples: draw from the
/// whole state and keep the first `shots` outcomes landing on each pixel.
pub fn rejection_statistics<S: ImageState>(state: &S, shots: u64, seed: u64) -> Result<Vec<ChromaStatistics>> {
    if shots == 0 {
        return Err(QhslError::Config("shots must be at least 1".into()));
    }
    let count = state.layout().num_pixels();
    let mut expectations = [vec![0.0; count], vec![0.0; count], vec![0.0; count]];
    for (basis, (slot, gate)) in expectations
        .iter_mut()
        .zip([None, Some(Gate::U1), Some(Gate::U2)])
        .enumerate()
    {
        let dist = state.joint_distribution(gate)?;
        let mut cumulative = Vec::with_capacity(dist.len());
        let mut acc = 0.0;
        for p in &dist {
            acc += p;
            cumulative.push(acc);
        }
        let mut rng = pixel_rng(seed, (count + basis) as u64);
        let mut accepted = vec![0u64; count];
        let mut zeros = vec![0u64; count];
        let mut remaining = count;
        while remaining > 0 {
            let r = rng.random::<f64>() * acc;
            let outcome = cumulative.partition_point(|&c| c <= r).min(dist.len() - 1);
            let (pixel, bit) = (outcome / 2, outcome % 2);
            if accepted[pixel] == shots {
                continue;
            }
            accepted[pixel] += 1;
            if bit == 0 {
                zeros[pixel] += 1;
            }
            if accepted[pixel] == shots {
                remaining -= 1;
            }
        }
        for (s, z) in slot.iter_mut().zip(&zeros) {
            *s = counts_to_expectation(*z, shots);
        }
    }
    Ok((0..count)
        .map(|i| ChromaStatistics {
            k: expectations[0][i],
            v: expectations[1][i],
            w: expectations[2][i],
            shots_per_basis: Some(shots),
        })
        .collect())
}
