//! Wavelet characterizations of Triebel–Lizorkin–Morrey spaces on the dyadic torus.
//!
//! The crate samples functions on `[0,1)^n` with `2^J` points per axis, expands them in
//! orthonormal Meyer or Daubechies bases, and evaluates the associated sequence norms,
//! fractional heat lifts, tent norms and almost-diagonal operators.

// Guards of the form `!(x > 0.0)` also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod harness;
pub mod io;
pub mod norms;
pub mod operators;
pub mod semigroup;
pub mod spectral;
pub mod tent;
pub mod wavelet;

pub use error::{OscilletError, Result};
pub use grid::{DyadicCube, GridFunction, GridSpec};
pub use wavelet::{CoeffField, Family, WaveletBasis, WaveletIndex};
