//! Numerical laboratory for spectral inequalities of Schrödinger operators
//! `H = -Δ_g + V` on periodic boxes standing in for `ℝ^d`.
//!
//! Modules:
//!
//! - [`field`]: grids, complex fields, frequency transforms, tube-slice norms.
//! - [`thick`]: thick observation sets and their verification.
//! - [`schrodinger`]: assembly, dense diagonalization, spectral projectors,
//!   Poisson operators and the short/long-range splitting.
//! - [`carleman`]: Green functions of disks, Carleman weights and
//!   constants, and the interpolation inequality checks.
//! - [`observability`]: observability constants, sweeps, exponential-law
//!   fits, the Kovrijkine baseline and the end-to-end pipeline.

pub mod carleman;
pub mod error;
pub mod field;
pub mod observability;
pub mod quadrature;
pub mod schrodinger;
pub mod thick;

pub use error::{Error, Result};
pub use field::{Field, Grid, TubeGeometry};
