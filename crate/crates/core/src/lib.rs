//! Numerical laboratory for square functions, semigroups, maximal operators
//! and Muckenhoupt weights attached to non-negative self-adjoint operators on
//! periodic grids.

pub mod decomp;
pub mod error;
pub(crate) mod balls;
pub(crate) mod fft;
pub mod grid;
pub mod multipliers;
pub mod quad;
pub mod spectral;
pub mod squarefuncs;
pub mod tolerances;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction, Weight};
