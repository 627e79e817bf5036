//! Desk-scale numerics for the coarse-geometric picture of topological
//! insulators: finite-propagation lattice Hamiltonians, Fermi projections,
//! the exponential boundary unitary, and windowed trace formulas for edge
//! indices and quantized edge currents.

// `!(a < b)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod indices;
pub mod lattice;
pub mod models;
pub mod operator;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
