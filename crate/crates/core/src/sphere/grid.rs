use std::f64::consts::PI;

use crate::error::{FlowError, Result};

/// Resolution of a Gauss–Legendre × equiangular-longitude grid on the unit
/// sphere together with the spherical-harmonic bandlimit it carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub bandlimit: usize,
    pub nlat: usize,
    pub nlon: usize,
}

impl GridSpec {
    pub fn new(bandlimit: usize, nlat: usize, nlon: usize) -> Result<Self> {
        let spec = GridSpec {
            bandlimit,
            nlat,
            nlon,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Grid oversampled by the 3/2 rule, so that the degree-`L` projection of
    /// a product of two degree-`L` fields is computed without aliasing.
    pub fn dealiased(bandlimit: usize) -> Result<Self> {
        let nlat = (3 * bandlimit + 2) / 2;
        let nlon = 3 * bandlimit + 2;
        GridSpec::new(bandlimit, nlat, nlon)
    }

    /// Grid with `nlat ≈ factor·L` rows and twice as many longitudes.
    /// Factors at or above 1.5 satisfy the dealiasing rule; larger factors
    /// resolve the rational curvature expressions of rough surfaces better.
    pub fn oversampled(bandlimit: usize, factor: f64) -> Result<Self> {
        if !(factor >= 1.5) {
            return Err(FlowError::Config(format!(
                "oversampling factor must be >= 1.5, got {factor}"
            )));
        }
        let nlat = ((factor * bandlimit as f64).ceil() as usize + 1).max((3 * bandlimit + 2) / 2);
        let nlon = (2 * nlat).max(3 * bandlimit + 2);
        GridSpec::new(bandlimit, nlat, nlon)
    }

    /// Smallest grid on which analysis of degree-`L` fields is exact.
    pub fn minimal(bandlimit: usize) -> Result<Self> {
        GridSpec::new(bandlimit, bandlimit + 1, 2 * bandlimit + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bandlimit < 4 {
            return Err(FlowError::Config(format!(
                "bandlimit must be >= 4, got {}",
                self.bandlimit
            )));
        }
        if self.nlat < self.bandlimit + 1 {
            return Err(FlowError::Config(format!(
                "nlat = {} is below L + 1 = {}",
                self.nlat,
                self.bandlimit + 1
            )));
        }
        if self.nlon < 2 * self.bandlimit + 1 {
            return Err(FlowError::Config(format!(
                "nlon = {} is below 2L + 1 = {}",
                self.nlon,
                2 * self.bandlimit + 1
            )));
        }
        Ok(())
    }

    /// Number of real coefficients `(L + 1)^2`.
    pub fn num_coeffs(&self) -> usize {
        (self.bandlimit + 1) * (self.bandlimit + 1)
    }

    pub fn num_nodes(&self) -> usize {
        self.nlat * self.nlon
    }
}

/// Flat index of the real coefficient `(l, m)`, `-l <= m <= l`.
#[inline]
pub fn coeff_index(l: usize, m: i64) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= l);
    ((l * l + l) as i64 + m) as usize
}

/// Inverse of [`coeff_index`].
pub fn coeff_degree_order(idx: usize) -> (usize, i64) {
    let l = (idx as f64).sqrt() as usize;
    let l = if (l + 1) * (l + 1) <= idx { l + 1 } else { l };
    (l, idx as i64 - (l * l + l) as i64)
}

#[inline]
pub(crate) fn legendre_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Fully normalised associated Legendre functions (no Condon–Shortley
/// phase) and their colatitude derivatives at one node, for `0 <= m <= l <= lmax`.
///
/// Normalisation: `2π ∫ P̄_lm(x)^2 dx = 1`, so `Y_l0 = P̄_l0` and
/// `Y_l,±m = √2 P̄_lm cos/sin(mφ)` are orthonormal on the sphere.
pub(crate) fn legendre_with_derivative(
    lmax: usize,
    cos_t: f64,
    sin_t: f64,
    p: &mut [f64],
    dp: &mut [f64],
) {
    let n = legendre_index(lmax, lmax) + 1;
    debug_assert!(p.len() >= n && dp.len() >= n);

    p[0] = 1.0 / (4.0 * PI).sqrt();
    for m in 1..=lmax {
        let mf = m as f64;
        p[legendre_index(m, m)] =
            ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_t * p[legendre_index(m - 1, m - 1)];
    }
    for m in 0..lmax {
        let mf = m as f64;
        p[legendre_index(m + 1, m)] = (2.0 * mf + 3.0).sqrt() * cos_t * p[legendre_index(m, m)];
    }
    for m in 0..=lmax {
        let mf = m as f64;
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                .sqrt();
            p[legendre_index(l, m)] =
                a * (cos_t * p[legendre_index(l - 1, m)] - b * p[legendre_index(l - 2, m)]);
        }
    }

    // sinθ dP̄_lm/dθ = l cosθ P̄_lm − sqrt((2l+1)(l²−m²)/(2l−1)) P̄_{l−1,m}
    for l in 0..=lmax {
        let lf = l as f64;
        for m in 0..=l {
            let mf = m as f64;
            let lower = if m < l {
                ((2.0 * lf + 1.0) * (lf * lf - mf * mf) / (2.0 * lf - 1.0)).sqrt()
                    * p[legendre_index(l - 1, m)]
            } else {
                0.0
            };
            dp[legendre_index(l, m)] = (lf * cos_t * p[legendre_index(l, m)] - lower) / sin_t;
        }
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], ordered from x = 1 downwards
/// (north pole to south pole in colatitude).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for k in 0..n.div_ceil(2) {
        let mut z = (PI * (k as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_p_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_p_and_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[k] = z;
        w[k] = weight;
        x[n - 1 - k] = -z;
        w[n - 1 - k] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_p_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Precomputed nodes, weights, Legendre and trigonometric tables for one
/// [`GridSpec`]. Shared between fields through an `Arc`.
#[derive(Debug)]
pub struct SphereGrid {
    spec: GridSpec,
    pub(crate) theta: Vec<f64>,
    pub(crate) cos_t: Vec<f64>,
    pub(crate) sin_t: Vec<f64>,
    /// Gauss weights in `cosθ`.
    pub(crate) lat_weights: Vec<f64>,
    pub(crate) phi: Vec<f64>,
    /// `[lat][legendre_index]`
    pub(crate) plm: Vec<f64>,
    pub(crate) dplm: Vec<f64>,
    /// `[m][lon]`
    pub(crate) cos_mphi: Vec<f64>,
    pub(crate) sin_mphi: Vec<f64>,
}

impl SphereGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let lmax = spec.bandlimit;
        let (x, lat_weights) = gauss_legendre(spec.nlat);
        let theta: Vec<f64> = x.iter().map(|c| c.acos()).collect();
        let sin_t: Vec<f64> = x.iter().map(|c| (1.0 - c * c).sqrt()).collect();
        let nleg = legendre_index(lmax, lmax) + 1;
        let mut plm = vec![0.0; spec.nlat * nleg];
        let mut dplm = vec![0.0; spec.nlat * nleg];
        for i in 0..spec.nlat {
            legendre_with_derivative(
                lmax,
                x[i],
                sin_t[i],
                &mut plm[i * nleg..(i + 1) * nleg],
                &mut dplm[i * nleg..(i + 1) * nleg],
            );
        }
        let phi: Vec<f64> = (0..spec.nlon)
            .map(|j| 2.0 * PI * j as f64 / spec.nlon as f64)
            .collect();
        let mut cos_mphi = vec![0.0; (lmax + 1) * spec.nlon];
        let mut sin_mphi = vec![0.0; (lmax + 1) * spec.nlon];
        for m in 0..=lmax {
            for (j, &ph) in phi.iter().enumerate() {
                let (s, c) = (m as f64 * ph).sin_cos();
                cos_mphi[m * spec.nlon + j] = c;
                sin_mphi[m * spec.nlon + j] = s;
            }
        }
        Ok(SphereGrid {
            spec,
            theta,
            cos_t: x,
            sin_t,
            lat_weights,
            phi,
            plm,
            dplm,
            cos_mphi,
            sin_mphi,
        })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn bandlimit(&self) -> usize {
        self.spec.bandlimit
    }

    /// Colatitudes of the Gauss–Legendre rows, north to south.
    pub fn colatitudes(&self) -> &[f64] {
        &self.theta
    }

    pub fn longitudes(&self) -> &[f64] {
        &self.phi
    }

    /// Quadrature weight of node `(i, j)` for `∫_{S²} dσ`.
    #[inline]
    pub fn node_weight(&self, i: usize) -> f64 {
        self.lat_weights[i] * 2.0 * PI / self.spec.nlon as f64
    }

    /// Unit vector of grid node `(i, j)`.
    pub fn direction(&self, i: usize, j: usize) -> [f64; 3] {
        let (s, c) = (self.sin_t[i], self.cos_t[i]);
        let (sp, cp) = self.phi[j].sin_cos();
        [s * cp, s * sp, c]
    }

    #[inline]
    fn nleg(&self) -> usize {
        legendre_index(self.spec.bandlimit, self.spec.bandlimit) + 1
    }

    /// Weighted sum `Σ w_ij f_ij`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let nlon = self.spec.nlon;
        values
            .chunks_exact(nlon)
            .enumerate()
            .map(|(i, row)| self.node_weight(i) * row.iter().sum::<f64>())
            .sum()
    }

    /// Projection of grid values onto the real orthonormal harmonics of
    /// degree `<= L`.
    pub fn analyze(&self, values: &[f64]) -> Vec<f64> {
        let lmax = self.spec.bandlimit;
        let nlon = self.spec.nlon;
        let nleg = self.nleg();
        let mut coeffs = vec![0.0; self.spec.num_coeffs()];
        let dphi = 2.0 * PI / nlon as f64;
        let mut a = vec![0.0; lmax + 1];
        let mut b = vec![0.0; lmax + 1];
        for (i, row) in values.chunks_exact(nlon).enumerate() {
            for m in 0..=lmax {
                let cm = &self.cos_mphi[m * nlon..(m + 1) * nlon];
                let sm = &self.sin_mphi[m * nlon..(m + 1) * nlon];
                let mut sa = 0.0;
                let mut sb = 0.0;
                for j in 0..nlon {
                    sa += row[j] * cm[j];
                    sb += row[j] * sm[j];
                }
                a[m] = sa * dphi;
                b[m] = sb * dphi;
            }
            let w = self.lat_weights[i];
            let p = &self.plm[i * nleg..(i + 1) * nleg];
            for l in 0..=lmax {
                coeffs[coeff_index(l, 0)] += w * p[legendre_index(l, 0)] * a[0];
                for m in 1..=l {
                    let pw = w * std::f64::consts::SQRT_2 * p[legendre_index(l, m)];
                    coeffs[coeff_index(l, m as i64)] += pw * a[m];
                    coeffs[coeff_index(l, -(m as i64))] += pw * b[m];
                }
            }
        }
        coeffs
    }

    /// Evaluates `Σ c_lm ∂_φ^k (T Y_lm)` at the grid nodes, where `T` is the
    /// identity or `∂_θ`.
    pub(crate) fn synthesize_with(
        &self,
        coeffs: &[f64],
        dtheta: bool,
        dphi_order: u8,
    ) -> Vec<f64> {
        let lmax = self.spec.bandlimit;
        let nlon = self.spec.nlon;
        let nleg = self.nleg();
        let table = if dtheta { &self.dplm } else { &self.plm };
        let mut out = vec![0.0; self.spec.num_nodes()];
        let mut a = vec![0.0; lmax + 1];
        let mut b = vec![0.0; lmax + 1];
        for i in 0..self.spec.nlat {
            let p = &table[i * nleg..(i + 1) * nleg];
            for m in 0..=lmax {
                let norm = if m == 0 { 1.0 } else { std::f64::consts::SQRT_2 };
                let mut sa = 0.0;
                let mut sb = 0.0;
                for l in m..=lmax {
                    let pl = p[legendre_index(l, m)];
                    sa += coeffs[coeff_index(l, m as i64)] * pl;
                    if m > 0 {
                        sb += coeffs[coeff_index(l, -(m as i64))] * pl;
                    }
                }
                let (sa, sb) = (sa * norm, sb * norm);
                let mf = m as f64;
                // d/dφ (a cos mφ + b sin mφ) = m b cos mφ − m a sin mφ
                (a[m], b[m]) = match dphi_order {
                    0 => (sa, sb),
                    1 => (mf * sb, -mf * sa),
                    2 => (-mf * mf * sa, -mf * mf * sb),
                    _ => unreachable!("longitude derivative order above 2"),
                };
            }
            let row = &mut out[i * nlon..(i + 1) * nlon];
            for m in 0..=lmax {
                if a[m] == 0.0 && b[m] == 0.0 {
                    continue;
                }
                let cm = &self.cos_mphi[m * nlon..(m + 1) * nlon];
                let sm = &self.sin_mphi[m * nlon..(m + 1) * nlon];
                for j in 0..nlon {
                    row[j] += a[m] * cm[j] + b[m] * sm[j];
                }
            }
        }
        out
    }

    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        self.synthesize_with(coeffs, false, 0)
    }
}

/// Evaluates a degree-`lmax` expansion at an arbitrary direction.
pub fn evaluate_at(coeffs: &[f64], lmax: usize, dir: [f64; 3]) -> f64 {
    let r = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    let cos_t = (dir[2] / r).clamp(-1.0, 1.0);
    let rho_xy = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
    let sin_t = rho_xy / r;
    let phi = dir[1].atan2(dir[0]);
    let n = legendre_index(lmax, lmax) + 1;
    let mut p = vec![0.0; n];
    let mut dp = vec![0.0; n];
    // The derivative table is unused here; a tiny positive sine keeps the
    // division in it finite at the poles.
    legendre_with_derivative(lmax, cos_t, sin_t.max(1e-300), &mut p, &mut dp);
    let mut sum = 0.0;
    for l in 0..=lmax {
        sum += coeffs[coeff_index(l, 0)] * p[legendre_index(l, 0)];
        for m in 1..=l {
            let (s, c) = (m as f64 * phi).sin_cos();
            let pl = std::f64::consts::SQRT_2 * p[legendre_index(l, m)];
            sum += pl * (coeffs[coeff_index(l, m as i64)] * c + coeffs[coeff_index(l, -(m as i64))] * s);
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // ∫ x^12 dx = 2/13, degree 12 <= 2n-1 = 13
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((s - 2.0 / 13.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] > p[1]));
    }

    #[test]
    fn coeff_index_roundtrip() {
        for idx in 0..200 {
            let (l, m) = coeff_degree_order(idx);
            assert_eq!(coeff_index(l, m), idx);
        }
    }

    #[test]
    fn legendre_derivative_matches_finite_difference() {
        let lmax = 12;
        let n = legendre_index(lmax, lmax) + 1;
        let t = 0.7_f64;
        let h = 1e-6;
        let mut p = vec![0.0; n];
        let mut dp = vec![0.0; n];
        let mut pp = vec![0.0; n];
        let mut pm = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        legendre_with_derivative(lmax, t.cos(), t.sin(), &mut p, &mut dp);
        legendre_with_derivative(lmax, (t + h).cos(), (t + h).sin(), &mut pp, &mut scratch);
        legendre_with_derivative(lmax, (t - h).cos(), (t - h).sin(), &mut pm, &mut scratch);
        for k in 0..n {
            let fd = (pp[k] - pm[k]) / (2.0 * h);
            assert!((fd - dp[k]).abs() < 1e-7 * (1.0 + dp[k].abs()), "k={k}");
        }
    }

    #[test]
    fn rejects_undersized_grids() {
        assert!(GridSpec::new(8, 8, 17).is_err());
        assert!(GridSpec::new(8, 9, 16).is_err());
        assert!(GridSpec::new(3, 9, 17).is_err());
        assert!(GridSpec::new(8, 9, 17).is_ok());
    }
}
