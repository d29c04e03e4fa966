//! Simulation and hypothesis testing for weak-value amplification with a
//! birefringent plate between two polarizers.
//!
//! The crystal splits a Gaussian beam into two nearly coincident copies, one
//! per polarization. Whether the crystal is birefringent at all is decided
//! from beam positions on a screen, either directly (`nps`) or after a second
//! polarizer postselects the photons (`ps`). This crate computes the exact
//! densities, the closed-form powers of the `|y|/w₀ ≥ c` test, and
//! photon-level Monte Carlo estimates of both.

pub mod config;
pub mod distributions;
pub mod error;
pub mod hypothesis;
pub mod montecarlo;
pub mod numerics;
pub mod optics;
pub mod verify;

pub use error::{Error, Result};
