//! Spectral analysis and simulation on the periodic torus.
//!
//! The crate provides, in rough dependency order:
//!
//! - [`grid`], [`field`], [`fourier`]: torus discretization, transforms,
//!   spectral derivatives, and fractional Sobolev norms;
//! - [`dyadic`]: the Littlewood-Paley partition into dyadic frequency shells;
//! - [`besov`]: Besov norms built from shell data, with Bernstein and
//!   Sobolev-equivalence diagnostics;
//! - [`solver`]: a pseudo-spectral incompressible Navier-Stokes solver
//!   (Fourier-Galerkin truncation, Leray projection, 2/3-rule dealiasing,
//!   integrating-factor RK4);
//! - [`diagnostics`]: energy budgets per shell, energy-identity residuals,
//!   and exponential a-priori bound checks on trajectories;
//! - [`quat`]: quaternion algebra, 4x4 linearized operators, and
//!   imaginary-axis crossing scans;
//! - [`io`], [`config`], [`verify`]: field files, run configuration, and the
//!   self-verification suites behind the command-line tool.

pub mod besov;
pub mod calibration;
pub mod diagnostics;
pub mod dyadic;
pub mod quat;
pub mod solver;
mod fft;
pub mod field;
pub mod fourier;
pub mod grid;
pub mod io;
pub mod config;
pub mod synth;
pub mod verify;

pub use field::{PhysicalField, SpectralField};
pub use grid::PeriodicGrid;
