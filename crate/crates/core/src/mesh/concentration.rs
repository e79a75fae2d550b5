use rayon::prelude::*;

use super::{DiscreteOperators, Point, TriangleMesh};
use crate::error::{FlowError, Result};

/// `max_c Σ_{|x_i − c| ≤ r} w_i` over the candidate centres, for nonnegative
/// sample weights `w_i`.
///
/// Samples are binned into a dense grid of z-columns with prefix sums, so
/// cells wholly inside a ball cost O(1) per column and only cells crossing
/// the sphere are scanned point by point. Weights are summed in fixed point,
/// which makes the result exactly monotone in `r`; a ball that covers every
/// sample returns the plain floating-point total.
pub fn concentration_of_samples(
    points: &[Point],
    integrand: &[f64],
    centres: &[Point],
    radius: f64,
) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(FlowError::Argument(format!(
            "concentration radius must be positive, got {radius}"
        )));
    }
    if points.len() != integrand.len() {
        return Err(FlowError::Argument("one weight per sample point required".into()));
    }
    if let Some(w) = integrand.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
        return Err(FlowError::Argument(format!(
            "concentration weights must be finite and nonnegative, got {w}"
        )));
    }
    let total: f64 = integrand.iter().sum();
    if points.is_empty() || centres.is_empty() {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (Point::repeat(f64::INFINITY), Point::repeat(f64::NEG_INFINITY));
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let diag = (hi - lo).norm();
    if radius >= diag {
        return Ok(total);
    }

    let grid = ColumnGrid::new(points, integrand, lo, hi, radius);
    let r2 = radius * radius;
    let best = centres
        .par_iter()
        .map(|c| grid.ball_sum(points, c, radius, r2))
        .max()
        .unwrap_or(0);
    if best == grid.full {
        return Ok(total);
    }
    Ok(((best as f64) * grid.quantum).min(total))
}

struct ColumnGrid {
    lo: Point,
    side: f64,
    dims: [usize; 3],
    /// Samples sorted by cell; cell `k` owns `order[start[k]..start[k + 1]]`.
    start: Vec<usize>,
    order: Vec<usize>,
    /// Prefix sums of the quantized weights in cell order.
    prefix: Vec<u128>,
    weights: Vec<u128>,
    quantum: f64,
    full: u128,
}

impl ColumnGrid {
    fn new(points: &[Point], integrand: &[f64], lo: Point, hi: Point, radius: f64) -> Self {
        let max = integrand.iter().cloned().fold(0.0, f64::max);
        let quantum = if max > 0.0 {
            2f64.powi(max.log2().ceil() as i32 - 62)
        } else {
            1.0
        };
        let weights: Vec<u128> = integrand.iter().map(|w| (w / quantum).round() as u128).collect();

        // balance whole-column lookups against boundary scans
        let extent = hi - lo;
        let spacing = extent.norm() / (points.len() as f64).sqrt();
        let floor = extent.max() / 128.0;
        let side = (radius * spacing).sqrt().min(radius).max(floor).max(f64::MIN_POSITIVE);
        let dims = [0, 1, 2].map(|a| (extent[a] / side).floor() as usize + 1);

        let n_cells = dims[0] * dims[1] * dims[2];
        let mut grid = ColumnGrid {
            lo,
            side,
            dims,
            start: vec![0; n_cells + 1],
            order: vec![0; points.len()],
            prefix: vec![0; n_cells + 1],
            weights,
            quantum,
            full: 0,
        };
        let cells: Vec<usize> = points.iter().map(|p| grid.cell_of(p)).collect();
        for &k in &cells {
            grid.start[k + 1] += 1;
        }
        for k in 0..n_cells {
            grid.start[k + 1] += grid.start[k];
        }
        let mut fill = grid.start.clone();
        for (i, &k) in cells.iter().enumerate() {
            grid.order[fill[k]] = i;
            fill[k] += 1;
        }
        for k in 0..n_cells {
            let s: u128 = grid.order[grid.start[k]..grid.start[k + 1]]
                .iter()
                .map(|&i| grid.weights[i])
                .sum();
            grid.prefix[k + 1] = grid.prefix[k] + s;
        }
        grid.full = grid.prefix[n_cells];
        grid
    }

    fn coord(&self, x: f64, axis: usize) -> usize {
        (((x - self.lo[axis]) / self.side).floor().max(0.0) as usize).min(self.dims[axis] - 1)
    }

    fn cell_of(&self, p: &Point) -> usize {
        (self.coord(p.x, 0) * self.dims[1] + self.coord(p.y, 1)) * self.dims[2] + self.coord(p.z, 2)
    }

    /// Distance² from `c` to the nearest and farthest points of an interval.
    fn span(&self, axis: usize, i: usize, c: f64) -> (f64, f64) {
        let a = self.lo[axis] + i as f64 * self.side - c;
        let b = a + self.side;
        let near = if a > 0.0 {
            a
        } else if b < 0.0 {
            -b
        } else {
            0.0
        };
        (near * near, a.abs().max(b.abs()).powi(2))
    }

    fn ball_sum(&self, points: &[Point], c: &Point, radius: f64, r2: f64) -> u128 {
        let range = |axis: usize| self.coord(c[axis] - radius, axis)..=self.coord(c[axis] + radius, axis);
        let mut sum: u128 = 0;
        for ix in range(0) {
            let (nx, fx) = self.span(0, ix, c.x);
            if nx > r2 {
                continue;
            }
            for iy in range(1) {
                let (ny, fy) = self.span(1, iy, c.y);
                if nx + ny > r2 {
                    continue;
                }
                let column = (ix * self.dims[1] + iy) * self.dims[2];
                let reach = (r2 - nx - ny).sqrt();
                let (z0, z1) = (self.coord(c.z - reach, 2), self.coord(c.z + reach, 2));
                // cells wholly inside the ball form one contiguous run
                let (mut a, mut b) = (z1 + 1, z1 + 1);
                if fx + fy <= r2 {
                    let inner = (r2 - fx - fy).sqrt();
                    let first = ((c.z - inner - self.lo.z) / self.side).ceil();
                    let last = ((c.z + inner - self.lo.z) / self.side).floor() - 1.0;
                    if first <= last && last >= 0.0 {
                        a = (first.max(0.0) as usize).max(z0);
                        b = ((last as usize) + 1).min(z1 + 1);
                        if a >= b {
                            (a, b) = (z1 + 1, z1 + 1);
                        }
                    }
                }
                for iz in (z0..a).chain(b..=z1) {
                    let k = column + iz;
                    for &i in &self.order[self.start[k]..self.start[k + 1]] {
                        if (points[i] - c).norm_squared() <= r2 {
                            sum += self.weights[i];
                        }
                    }
                }
                if a < b {
                    sum += self.prefix[column + b] - self.prefix[column + a];
                }
            }
        }
        sum
    }
}

/// Concentration of `∫|A|² dμ` in extrinsic balls of the given radius,
/// centred at vertices and edge midpoints.
pub fn concentration(
    mesh: &TriangleMesh,
    ops: &DiscreteOperators,
    norm_a_sq: &[f64],
    radius: f64,
) -> Result<f64> {
    let integrand: Vec<f64> = norm_a_sq.iter().zip(&ops.mass).map(|(a, m)| a * m).collect();
    let v = mesh.vertices();
    let mut centres = v.to_vec();
    centres.extend(mesh.edges().iter().map(|&(a, b)| (v[a] + v[b]) * 0.5));
    concentration_of_samples(v, &integrand, &centres, radius)
}
