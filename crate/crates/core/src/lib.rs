//! Numerical laboratory for non-Hermitian matrix-valued Brownian motion:
//! eigenvalue/eigenvector-overlap diffusions, Feynman–Kac determinant
//! fields, and the Burgers-characteristics description of the limiting
//! spectral density.

pub mod burgers;
pub mod cli;
pub mod config;
pub mod error;
pub mod exec;
pub mod field;
pub mod frame;
pub mod hist;
pub mod linalg;
pub mod process;
pub mod quad;
pub mod report;
pub mod rng;
pub mod sde;
pub mod stats;
pub mod tol;

pub use error::{Error, Result};

// Compile-check the README examples alongside the unit tests.
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

/// CLI entry point; parses `std::env::args` and returns the process exit
/// code (0 success, 2 usage/config error, 3 numeric/statistical failure).
pub fn run() -> i32 {
    cli::run_from(std::env::args().skip(1))
}
