//! Pseudo-spectral simulation of the 2D incompressible Oldroyd-B system with
//! fractional stress dissipation on a periodic box, with a diagnostics ledger
//! that evaluates energy balances, cancellation identities and the combined
//! quantities `Gamma = omega - R tau` and `G = omega - R_gamma tau`.

pub mod checks;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod io;
pub mod model;
pub mod spectral;
pub mod timestepper;

pub use error::{Error, Result};
