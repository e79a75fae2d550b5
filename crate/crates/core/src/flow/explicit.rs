use crate::error::{FlowError, Result};
use crate::mesh::{mean_curvature, DiscreteOperators, Point, TriangleMesh};

use super::MeshState;

/// `C` in `dt ≤ C h_min⁶`.
pub const MESH_STABILITY_CONSTANT: f64 = 4e-3;

/// Successive halvings tried before a step is declared a blow-up.
pub const MAX_REJECTIONS: u32 = 20;

pub fn mesh_dt(mesh: &TriangleMesh, safety: f64) -> f64 {
    safety * MESH_STABILITY_CONSTANT * mesh.min_edge_length().powi(6)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStep {
    pub dt: f64,
    pub rejections: u32,
}

/// `Δ²H` per vertex.
pub fn bilaplacian_of_mean_curvature(mesh: &TriangleMesh) -> Vec<f64> {
    let ops = DiscreteOperators::build(mesh);
    let h = mean_curvature(mesh, &ops);
    ops.laplacian(&ops.laplacian(&h))
}

/// A face whose normal turned against its previous direction has passed
/// through a degenerate configuration.
fn first_inverted_face(before: &TriangleMesh, after: &TriangleMesh) -> Option<usize> {
    (0..before.faces().len()).find(|&f| before.face_normal_scaled(f).dot(&after.face_normal_scaled(f)) <= 0.0)
}

/// Forward Euler `v ← v − dt (Δ²H) ν`, halving `dt` on failure.
///
/// With `smoothing > 0` every vertex is also moved by that fraction of the
/// tangential part of its umbrella vector (neighbour mean minus itself).
pub fn step_mesh(state: &MeshState, dt: f64, smoothing: f64) -> Result<(MeshState, MeshStep)> {
    if !(dt > 0.0) {
        return Err(FlowError::Argument(format!("time step must be positive, got {dt}")));
    }
    let mesh = &state.mesh;
    let speed = bilaplacian_of_mean_curvature(mesh);
    let normals = mesh.vertex_normals();
    let drift: Option<Vec<Point>> = (smoothing > 0.0).then(|| {
        let nb = mesh.neighbours();
        let v = mesh.vertices();
        nb.iter()
            .enumerate()
            .map(|(i, list)| {
                let mean = list.iter().fold(Point::zeros(), |a, &j| a + v[j]) / list.len() as f64;
                let u = mean - v[i];
                (u - normals[i] * u.dot(&normals[i])) * smoothing
            })
            .collect()
    });

    let mut h = dt;
    let mut last_err = String::new();
    for rejections in 0..=MAX_REJECTIONS {
        let moved: Vec<Point> = mesh
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut q = p - normals[i] * (h * speed[i]);
                if let Some(d) = &drift {
                    q += d[i];
                }
                q
            })
            .collect();
        match mesh.with_vertices(moved).and_then(|next| match first_inverted_face(mesh, &next) {
            Some(f) => Err(FlowError::Geometry(format!("face {f} inverted"))),
            None => Ok(next),
        }) {
            Ok(next) => {
                return Ok((
                    MeshState {
                        mesh: next,
                        time: state.time + h,
                    },
                    MeshStep { dt: h, rejections },
                ))
            }
            Err(e) => {
                last_err = e.to_string();
                h *= 0.5;
            }
        }
    }
    Err(FlowError::BlowUp {
        time: state.time,
        detail: format!("step rejected {} times: {last_err}", MAX_REJECTIONS + 1),
    })
}
