//! Pseudo-spectral solvers for three-dimensional magnetohydrodynamics with
//! zero magnetic resistivity on the periodic box `[0, 2π)³`.
//!
//! The incompressible system is integrated in background-field form
//! (`H = H̃ + B`) with an integrating-factor RK4 scheme; a low-Mach compressible
//! counterpart and an ε-sweep harness compare the two.

pub mod app;
pub mod compressible;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod incompressible;
pub mod limit;
pub mod presets;
pub mod snapshot;
pub mod spectral;
pub mod verify;

pub use error::{ConfigError, FieldError, IoError, SolverError};
pub use field::{RealVectorField, ScalarField, SpectralScalar, SpectralVectorField};
pub use grid::Grid;
pub use incompressible::{SimState, SolverParams};
