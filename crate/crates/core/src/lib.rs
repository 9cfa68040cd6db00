//! Gaussian simulation of entanglement farming: successive pairs of oscillator
//! detectors interact with a Dirichlet cavity field for a fixed time and are then
//! discarded, leaving the field to evolve under an affine cycle map.

// `!(x > 0.0)` style comparisons are used on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod dynamics;
pub mod error;
pub mod farming;
pub mod fock;
pub mod gaussian;
pub mod linalg;
pub mod spectral;
pub mod thermo;

pub use error::{Error, Result};
