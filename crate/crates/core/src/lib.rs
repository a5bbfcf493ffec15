//! Pseudo-spectral laboratory for mild solutions of the generalized Hall-MHD
//! system on the periodic torus `[0, 2π)³`.
//!
//! Solutions are built by Picard iteration of the Duhamel map, measured in
//! time-weighted path norms and in `Ḃ^s_{∞,∞}` Besov norms, and checked against
//! independent oracles.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constraints;
pub mod duhamel;
pub mod emhd;
pub mod error;
pub mod io;
pub mod littlewood_paley;
pub mod picard;
pub mod random;
pub mod semigroup;
pub mod spectral;

pub use constraints::{feasibility, FeasibilityReport, ParamSet};
pub use error::{Error, Result};
pub use littlewood_paley::{BesovReport, DyadicFilter};
pub use picard::{PicardReport, Trajectory};
pub use spectral::{GridSpec, RealVectorField, ScalarField, SpectralField};
