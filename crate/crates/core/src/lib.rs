//! Numerical toolkit for parametrically driven superconducting circuits.
//!
//! A two-photon ("Mathieu") drive applied to a transmon mode dresses the
//! spectrum of a coupled circuit. This crate builds the corresponding
//! Hamiltonians, diagonalizes them, extracts the effective `ZZ` and exchange
//! couplings, shapes adiabatic drive ramps, simulates gates and runs
//! spin-chain quench dynamics.
//!
//! Frequencies in public interfaces are ordinary frequencies in GHz and times
//! are in ns. Hamiltonian matrices are stored in angular units (rad/ns), so a
//! frequency `f` enters as `2π f`.

pub mod analytic;
pub mod chain;
pub mod cli;
pub mod composite;
pub mod config;
mod error;
pub mod evolve;
pub mod fit;
pub mod gates;
pub mod io;
pub mod krylov;
pub mod linalg;
pub mod models;
pub mod presets;
pub mod pulse;
pub mod sparse;
pub mod spectral;
pub mod validate;

pub use error::{Error, Result};

pub use nalgebra::{DMatrix, DVector};

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;

/// Converts an ordinary frequency in GHz to angular units (rad/ns).
#[inline]
pub fn angular(f_ghz: f64) -> f64 {
    f_ghz * std::f64::consts::TAU
}

/// Converts an angular frequency (rad/ns) back to GHz.
#[inline]
pub fn ordinary(w: f64) -> f64 {
    w / std::f64::consts::TAU
}
