//! Periodic-grid spectral representation and the Fourier-multiplier operators.

mod field;
mod grid;
pub mod ops;

pub use field::{RealVectorField, ScalarField, SpectralField, SOLENOIDAL_TOL};
pub use grid::{GridSpec, BOX_LENGTH, DEALIAS_FRACTION};
pub use ops::{curl, dealias, dilate, divergence, gradient, laplacian, leray_project, momentum_nonlinearity, recover_pressure};

pub(crate) use field::inverse_many;
