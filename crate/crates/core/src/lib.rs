//! Structure-preserving simulation of the relativistic Euler equations of a
//! perfect fluid on periodic grids.
//!
//! The crate provides spectral and finite-difference operators ([`ops`]),
//! Lorentz-factor algebra ([`relativity`]), γ-barotropic closures ([`eos`]),
//! the 3D general and barotropic solvers ([`solver3d`]), the planar
//! stream-function solver ([`solver2d`]), conserved quantities and budget
//! terms ([`diagnostics`]), and the discrete Poisson operators used to check
//! the Hamiltonian structure ([`bracket`]).

pub mod bracket;
pub mod diagnostics;
pub mod eos;
pub mod error;
mod fft;
pub mod grid;
pub mod initial;
pub mod ops;
pub mod relativity;
pub mod solver2d;
pub mod solver3d;

pub use error::{Error, Result};
pub use grid::{Grid, ScalarField, VectorField};
pub use ops::{DerivativeScheme, JacobianScheme, Ops};
pub use relativity::PhysicalConstants;
