//! Simulation and analysis toolkit for Bloch oscillations and Wannier-Stark
//! localization on a chain of coupled superconducting qubits.
//!
//! Layout:
//!
//! - [`model`]: device parameters, occupation bases, Hamiltonians and
//!   observable operators.
//! - [`dynamics`]: quantum states, unitary propagation (dense spectral or
//!   Krylov) and Lindblad integration.
//! - [`observables`]: expectation values and trajectory tables.
//! - [`freefermion`]: single-particle and two-particle Slater-determinant
//!   solvers for the non-interacting chain, plus localization-length helpers.
//! - [`measurement`]: simulated single-shot readout with assignment errors and
//!   grouped error bars.
//! - [`analysis`]: wavefront fits, linear fits and localization estimates.
//! - [`config`] and [`runner`]: the experiment runner behind the `wslchain`
//!   binary.
//!
//! Frequencies at the public surface are ordinary frequencies in MHz; all
//! internal arithmetic uses angular frequency in rad/ns and times in ns.

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod freefermion;
pub mod measurement;
pub mod model;
pub mod observables;
pub mod runner;
pub mod units;

pub use error::{Error, Result};
