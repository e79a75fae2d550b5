use super::{Point, TriangleMesh};

/// Compressed sparse row matrix with sorted column indices.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows())
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn mul_points(&self, x: &[Point]) -> Vec<Point> {
        (0..self.nrows())
            .map(|i| self.row(i).fold(Point::zeros(), |acc, (j, v)| acc + x[j] * v))
            .collect()
    }
}

/// Cotangent stiffness `L` (negative semidefinite, `L_ij = ½(cot α + cot β)`
/// off the diagonal, zero row sums) and lumped mixed-Voronoi mass `M`.
/// The discrete Laplace–Beltrami operator is `M⁻¹ L`.
#[derive(Debug, Clone)]
pub struct DiscreteOperators {
    pub stiffness: CsrMatrix,
    pub mass: Vec<f64>,
}

#[inline]
fn cot(a: &Point, b: &Point, c: &Point) -> f64 {
    let u = b - a;
    let v = c - a;
    u.dot(&v) / u.cross(&v).norm()
}

impl DiscreteOperators {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let n = mesh.num_vertices();
        let mut triplets = Vec::with_capacity(mesh.faces().len() * 9);
        let mut mass = vec![0.0; n];
        for (f, face) in mesh.faces().iter().enumerate() {
            let [pa, pb, pc] = mesh.corners(f);
            let p = [pa, pb, pc];
            let cots = [cot(pa, pb, pc), cot(pb, pc, pa), cot(pc, pa, pb)];
            for k in 0..3 {
                // the edge opposite corner k
                let (i, j) = (face[(k + 1) % 3], face[(k + 2) % 3]);
                let w = 0.5 * cots[k];
                triplets.push((i, j, w));
                triplets.push((j, i, w));
                triplets.push((i, i, -w));
                triplets.push((j, j, -w));
            }

            let area = mesh.face_area(f);
            let obtuse = cots.iter().position(|&c| c < 0.0);
            for k in 0..3 {
                let share = match obtuse {
                    Some(o) if o == k => area / 2.0,
                    Some(_) => area / 4.0,
                    None => {
                        // Voronoi region of corner k
                        let (k1, k2) = ((k + 1) % 3, (k + 2) % 3);
                        let e1 = (p[k1] - p[k]).norm_squared();
                        let e2 = (p[k2] - p[k]).norm_squared();
                        (e1 * cots[k2] + e2 * cots[k1]) / 8.0
                    }
                };
                mass[face[k]] += share;
            }
        }
        DiscreteOperators {
            stiffness: CsrMatrix::from_triplets(n, triplets),
            mass,
        }
    }

    /// `M⁻¹ L u`.
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        self.stiffness
            .mul_vec(u)
            .iter()
            .zip(&self.mass)
            .map(|(v, m)| v / m)
            .collect()
    }

    pub fn laplacian_points(&self, x: &[Point]) -> Vec<Point> {
        self.stiffness
            .mul_points(x)
            .iter()
            .zip(&self.mass)
            .map(|(v, m)| v / *m)
            .collect()
    }

    /// `Σ u_i M_ii`.
    pub fn integrate(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.mass).map(|(a, m)| a * m).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }
}
