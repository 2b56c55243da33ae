//! Quantum hue–saturation–lightness (QHSL) image toolkit.
//!
//! A pixel's hue and saturation are stored as the Bloch angles of one
//! chromaticity qubit, its lightness as an integer in a `q`-qubit register,
//! and its position in `2n` qubits addressing a `2ⁿ×2ⁿ` grid. This crate
//! encodes classical images into that form, builds the preparation and
//! processing circuits, simulates them (densely for verification, in closed
//! form for real image sizes), and recovers images from measurement
//! statistics.

pub mod color;
pub mod error;
pub mod image;
pub mod io;
pub mod retrieval;
pub mod sim;
pub mod transforms;

pub use error::{QhslError, Result};
