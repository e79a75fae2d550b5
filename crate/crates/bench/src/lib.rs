//! Shared fixtures for the criterion benchmarks.

use std::sync::Arc;

use triflow::mesh::icosphere;
use triflow::shapes::{generate_radial, sample_radial_state};
use triflow::sphere::{GridSpec, SphereGrid};
use triflow::{MeshState, RadialGraphState, ShapeSpec, TriangleMesh};

/// Two-mode perturbation of the unit sphere used by every fixture.
pub fn bumpy_spec() -> ShapeSpec {
    ShapeSpec::perturbed_sphere(1.0, &[(2, 0, 0.1), (3, 2, 0.05)])
}

pub fn grid(bandlimit: usize) -> Arc<SphereGrid> {
    Arc::new(SphereGrid::new(GridSpec::dealiased(bandlimit).unwrap()).unwrap())
}

pub fn radial_state(bandlimit: usize) -> RadialGraphState {
    generate_radial(&bumpy_spec(), grid(bandlimit)).unwrap()
}

/// Icosphere of the given level with vertices displaced onto the bumpy
/// radial graph.
pub fn bumpy_mesh(level: u32) -> TriangleMesh {
    sample_radial_state(&radial_state(16), level).unwrap()
}

pub fn mesh_state(level: u32) -> MeshState {
    MeshState {
        mesh: bumpy_mesh(level),
        time: 0.0,
    }
}

pub fn round_mesh(level: u32) -> TriangleMesh {
    icosphere(level, 1.0).unwrap()
}
