//! Numerical toolkit for critical-norm diagnostics of three-dimensional
//! incompressible Navier-Stokes flows on a periodic box.
//!
//! The crate is organized bottom-up:
//!
//! * [`grid`], [`fft`], [`field`], [`spectral`], [`newton`], [`io`] and
//!   [`spacetime`] form the spectral core.
//! * [`norms`] and [`besov`] evaluate Lebesgue, Lorentz, Morrey, Hoelder and
//!   Besov quantities.
//! * [`mild`] and [`pns`] solve the Navier-Stokes equation and its
//!   perturbation around a drift.
//! * [`pressure`], [`ckn`] and [`concentration`] implement the local
//!   regularity diagnostics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod besov;
pub mod ckn;
pub mod concentration;
pub mod cutoff;
pub mod error;
pub mod fft;
pub mod field;
pub mod fit;
pub mod grid;
pub mod io;
pub mod mild;
pub mod newton;
pub mod norms;
pub mod pns;
pub mod pressure;
pub mod quad;
pub mod spacetime;
pub mod spectral;
pub mod zoom;

pub use error::{Error, Result};
pub use field::{ScalarField, VectorField, VectorSpectrum};
pub use grid::Grid;
pub use spacetime::SpaceTimeField;
