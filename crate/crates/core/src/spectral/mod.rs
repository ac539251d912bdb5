//! Periodic-grid fields, spectral transforms, Fourier multipliers and norms.

mod field;
mod grid;
pub mod norms;
pub mod ops;
pub mod random;

pub use field::{ScalarField, SkewTensorField, Spectrum, SymTensorField, VectorField};
pub use grid::{Grid, DEFAULT_DEALIAS_FRACTION};
pub use norms::{
    besov_norm, dyadic_block, lp_norm, max_dyadic_index, sobolev_norm, Measurable, SobolevKind,
};
pub use ops::{
    biot_savart, fractional_laplacian, leray_project, riesz_r, riesz_r_gamma, Multiplier,
    ZeroMode,
};
