//! Closed oriented genus-0 triangle meshes and their discrete differential
//! geometry: cotangent stiffness, mixed-area mass, curvatures, concentration.

mod concentration;
mod curvature;
pub mod obj;
mod operators;

use std::collections::HashMap;
use std::sync::OnceLock;

use nalgebra::Vector3;

pub use concentration::{concentration, concentration_of_samples};
pub use curvature::{gauss_curvature, mean_curvature, mean_curvature_vector, tracefree_norm_sq, TracefreeNorm};
pub use operators::{CsrMatrix, DiscreteOperators};

use crate::error::{FlowError, Result};

pub type Point = Vector3<f64>;

/// Relative floor on face area, in units of the mean face area.
pub const DEGENERATE_FACE_RATIO: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Point>,
    faces: Vec<[usize; 3]>,
    normals: OnceLock<Vec<Point>>,
}

impl PartialEq for TriangleMesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.faces == other.faces
    }
}

impl TriangleMesh {
    /// Builds a mesh and checks that it is a closed, consistently oriented
    /// 2-manifold of Euler characteristic 2 without degenerate faces.
    pub fn new(vertices: Vec<Point>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = TriangleMesh {
            vertices,
            faces,
            normals: OnceLock::new(),
        };
        mesh.validate_topology()?;
        mesh.validate_geometry()?;
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Same connectivity, new positions. Geometry is re-validated.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(FlowError::Argument("vertex count changed".into()));
        }
        let mesh = TriangleMesh {
            vertices,
            faces: self.faces.clone(),
            normals: OnceLock::new(),
        };
        mesh.validate_geometry()?;
        Ok(mesh)
    }

    pub fn map_vertices(&self, f: impl Fn(&Point) -> Point) -> Result<Self> {
        self.with_vertices(self.vertices.iter().map(f).collect())
    }

    /// Reverses every face.
    pub fn flipped(&self) -> Self {
        TriangleMesh {
            vertices: self.vertices.clone(),
            faces: self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect(),
            normals: OnceLock::new(),
        }
    }

    fn validate_topology(&self) -> Result<()> {
        let nv = self.vertices.len();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * self.faces.len());
        for (fi, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&v| v >= nv) {
                return Err(FlowError::Topology(format!("face {fi} references a missing vertex")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(FlowError::Topology(format!("face {fi} repeats a vertex")));
            }
            for e in 0..3 {
                let key = (f[e], f[(e + 1) % 3]);
                if directed.insert(key, fi).is_some() {
                    return Err(FlowError::Topology(format!(
                        "edge ({}, {}) is used twice in the same direction (non-manifold or inconsistent orientation)",
                        key.0, key.1
                    )));
                }
            }
        }
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) {
                return Err(FlowError::Topology(format!(
                    "edge ({a}, {b}) borders only one face"
                )));
            }
        }
        let edges = directed.len() / 2;
        let chi = nv as i64 - edges as i64 + self.faces.len() as i64;
        if chi != 2 {
            return Err(FlowError::Topology(format!(
                "Euler characteristic {chi}, expected 2 (sphere topology)"
            )));
        }
        Ok(())
    }

    fn validate_geometry(&self) -> Result<()> {
        if self.vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(FlowError::Geometry("non-finite vertex position".into()));
        }
        let areas: Vec<f64> = (0..self.faces.len()).map(|f| self.face_area(f)).collect();
        let mean = areas.iter().sum::<f64>() / areas.len() as f64;
        if let Some((f, a)) = areas
            .iter()
            .enumerate()
            .find(|(_, &a)| !(a > DEGENERATE_FACE_RATIO * mean))
        {
            return Err(FlowError::Geometry(format!(
                "face {f} is degenerate (area {a:e}, mean {mean:e})"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn corners(&self, f: usize) -> [&Point; 3] {
        let [a, b, c] = self.faces[f];
        [&self.vertices[a], &self.vertices[b], &self.vertices[c]]
    }

    /// Area-weighted normal `(b − a) × (c − a)`; twice the face area long.
    #[inline]
    pub fn face_normal_scaled(&self, f: usize) -> Point {
        let [a, b, c] = self.corners(f);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * self.face_normal_scaled(f).norm()
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// `Σ_faces ⟨a, b × c⟩ / 6`.
    pub fn signed_volume(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.corners(f);
                a.dot(&b.cross(c))
            })
            .sum::<f64>()
            / 6.0
    }

    /// A message when the enclosed volume is negative, i.e. the faces are
    /// wound with inward normals.
    pub fn orientation_warning(&self) -> Option<String> {
        let v = self.signed_volume();
        (v < 0.0).then(|| format!("negative signed volume {v:e}: faces appear to be oriented inwards"))
    }

    /// Area-weighted unit vertex normals.
    pub fn vertex_normals(&self) -> &[Point] {
        self.normals.get_or_init(|| {
            let mut n = vec![Point::zeros(); self.vertices.len()];
            for (f, face) in self.faces.iter().enumerate() {
                let fn_ = self.face_normal_scaled(f);
                for &v in face {
                    n[v] += fn_;
                }
            }
            n.iter().map(|v| v.normalize()).collect()
        })
    }

    pub fn edge_lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.faces.iter().flat_map(move |f| {
            (0..3).filter_map(move |e| {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                (a < b).then(|| (self.vertices[a] - self.vertices[b]).norm())
            })
        })
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edge_lengths().fold(f64::INFINITY, f64::min)
    }

    pub fn diameter_bound(&self) -> f64 {
        let (mut lo, mut hi) = (Point::repeat(f64::INFINITY), Point::repeat(f64::NEG_INFINITY));
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (hi - lo).norm()
    }

    /// Unique undirected edges `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|f| (0..3).map(move |k| (f[k], f[(k + 1) % 3])))
            .filter(|(a, b)| a < b)
            .collect();
        e.sort_unstable();
        e
    }

    /// Vertex neighbours, sorted.
    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.vertices.len()];
        for (a, b) in self.edges() {
            nb[a].push(b);
            nb[b].push(a);
        }
        for list in &mut nb {
            list.sort_unstable();
        }
        nb
    }

    /// Smallest interior angle over all faces, in radians.
    pub fn min_angle(&self) -> f64 {
        (0..self.faces.len())
            .flat_map(|f| {
                let [a, b, c] = self.corners(f);
                [angle(a, b, c), angle(b, c, a), angle(c, a, b)]
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Interior angle at `a` of triangle `(a, b, c)`.
#[inline]
pub(crate) fn angle(a: &Point, b: &Point, c: &Point) -> f64 {
    let u = b - a;
    let v = c - a;
    u.cross(&v).norm().atan2(u.dot(&v))
}

/// Icosahedron subdivided `levels` times with vertices projected to the
/// sphere of the given radius; `20·4^levels` outward-oriented faces.
pub fn icosphere(levels: u32, radius: f64) -> Result<TriangleMesh> {
    if !(radius > 0.0) {
        return Err(FlowError::Argument(format!("radius must be positive, got {radius}")));
    }
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Point> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Point::from(*p).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..levels {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Point>| {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    for v in &mut verts {
        *v *= radius;
    }
    TriangleMesh::new(verts, faces)
}

/// Regular tetrahedron inscribed in the unit sphere.
pub fn tetrahedron() -> TriangleMesh {
    let s = 1.0 / 3f64.sqrt();
    let v = vec![
        Point::new(s, s, s),
        Point::new(s, -s, -s),
        Point::new(-s, s, -s),
        Point::new(-s, -s, s),
    ];
    let f = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    TriangleMesh::new(v, f).expect("tetrahedron is a valid closed mesh")
}

#[cfg(test)]
mod tests;
