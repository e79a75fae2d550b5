//! Simulation and diagnostics for the geometric triharmonic heat flow
//! `∂f/∂t = −(Δ²H)ν` of closed surfaces in ℝ³.
//!
//! Two backends share one set of diagnostics:
//!
//! * [`radial`]: surfaces written as radial graphs `f(z) = ρ(z) z` over the
//!   unit sphere, with `ρ` expanded in real spherical harmonics ([`sphere`]).
//! * [`mesh`]: closed genus-0 triangle meshes with cotangent operators.
//!
//! Sign conventions: `Δf = −Hν` with `ν` the outer normal, so a round sphere
//! of radius `R` has `H = 2/R`, Willmore energy `¼∫H² = 4π`.

pub mod artifacts;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod mesh;
pub mod radial;
pub mod shapes;
pub mod sphere;

pub use config::{Backend, DtPolicy, FlowConfig};
pub use diagnostics::DiagnosticsRecord;
pub use error::{FlowError, Result};
pub use flow::{FlowState, MeshState, RunOutcome, StopReason, Trajectory};
pub use mesh::TriangleMesh;
pub use radial::RadialGraphState;
pub use shapes::ShapeSpec;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod test_support;
