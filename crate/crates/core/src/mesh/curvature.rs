use std::f64::consts::PI;

use super::{angle, DiscreteOperators, Point, TriangleMesh};

/// `H⃗ = Δf ≈ M⁻¹ L f`, per vertex.
pub fn mean_curvature_vector(mesh: &TriangleMesh, ops: &DiscreteOperators) -> Vec<Point> {
    ops.laplacian_points(mesh.vertices())
}

/// Scalar mean curvature `H = −⟨H⃗, ν⟩` with outward vertex normals; a
/// sphere of radius `R` gives `H ≈ 2/R`.
pub fn mean_curvature(mesh: &TriangleMesh, ops: &DiscreteOperators) -> Vec<f64> {
    mean_curvature_vector(mesh, ops)
        .iter()
        .zip(mesh.vertex_normals())
        .map(|(h, n)| -h.dot(n))
        .collect()
}

/// Angle defect over mixed area, `K_i = (2π − Σ θ)/M_ii`.
pub fn gauss_curvature(mesh: &TriangleMesh, ops: &DiscreteOperators) -> Vec<f64> {
    let mut defect = vec![2.0 * PI; mesh.num_vertices()];
    for (f, face) in mesh.faces().iter().enumerate() {
        let [a, b, c] = mesh.corners(f);
        defect[face[0]] -= angle(a, b, c);
        defect[face[1]] -= angle(b, c, a);
        defect[face[2]] -= angle(c, a, b);
    }
    defect.iter().zip(&ops.mass).map(|(d, m)| d / m).collect()
}

/// Per-vertex `|A°|² = max(0, ½H² − 2K)`.
#[derive(Debug, Clone)]
pub struct TracefreeNorm {
    pub values: Vec<f64>,
    /// Vertices where `½H² − 2K` came out negative and was clamped.
    pub clamped: usize,
}

pub fn tracefree_norm_sq(mean: &[f64], gauss: &[f64]) -> TracefreeNorm {
    let mut clamped = 0;
    let values = mean
        .iter()
        .zip(gauss)
        .map(|(h, k)| {
            let v = 0.5 * h * h - 2.0 * k;
            if v < 0.0 {
                clamped += 1;
                0.0
            } else {
                v
            }
        })
        .collect();
    TracefreeNorm { values, clamped }
}
