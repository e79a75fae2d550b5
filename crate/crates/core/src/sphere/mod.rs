//! Real spherical-harmonic analysis and synthesis on a Gauss–Legendre ×
//! equiangular-longitude grid, spectral surface derivatives and quadrature.

mod field;
mod grid;
pub mod io;

pub use field::{SphericalField, SurfaceJet};
pub use grid::{coeff_degree_order, coeff_index, evaluate_at, gauss_legendre, GridSpec, SphereGrid};
