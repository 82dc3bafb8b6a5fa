//! Generalized Fisher informations, χ^β divergences and the estimation
//! bounds built on them, evaluated on uniform quadrature grids.

pub mod cramer_rao;
pub mod densities;
pub mod diffusion;
pub mod divergences;
pub mod error;
pub mod exec;
pub mod family;
pub mod fisher;
pub mod grid;
pub mod minimizer;
pub mod sampling;
pub mod sweep;
pub mod uncertainty;
pub mod zoo;

pub use error::{Error, Result};
pub use exec::Exec;
pub use grid::{Axis, GridDensity, GridSpec};
