//! Bloch band structures of periodic Schrödinger operators in one and two
//! dimensions, and maximization of spectral gap-to-midgap ratios over
//! box-constrained periodic potentials.

pub mod bands;
pub mod driver;
pub mod eigen;
pub mod error;
pub mod hill1d;
pub mod lattice;
pub mod operator;
pub mod sdpopt;

pub use error::{Error, Result};
