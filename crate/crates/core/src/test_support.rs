//! Independent analytic oracles shared by unit tests.

use crate::sphere::gauss_legendre;

/// Point of `x²/a² + y²/b² + z²/c² = 1` along the ray `dir`.
pub fn ellipsoid_point(axes: [f64; 3], dir: [f64; 3]) -> [f64; 3] {
    let s = (dir[0] / axes[0]).powi(2) + (dir[1] / axes[1]).powi(2) + (dir[2] / axes[2]).powi(2);
    let r = 1.0 / s.sqrt();
    [r * dir[0], r * dir[1], r * dir[2]]
}

/// `(H, K)` of the ellipsoid at a point on it, `H = κ₁ + κ₂`.
pub fn ellipsoid_curvatures(axes: [f64; 3], p: [f64; 3]) -> (f64, f64) {
    let [a, b, c] = axes;
    let s = (p[0] / (a * a)).powi(2) + (p[1] / (b * b)).powi(2) + (p[2] / (c * c)).powi(2);
    let abc2 = (a * b * c).powi(2);
    let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    ((a * a + b * b + c * c - r2) / (abc2 * s.powf(1.5)), 1.0 / (abc2 * s * s))
}

#[derive(Debug, Clone, Copy)]
pub struct EllipsoidIntegrals {
    pub area: f64,
    pub willmore: f64,
    pub ao2: f64,
    pub int_k: f64,
}

/// Integrals over the ellipsoid from its `(u, v)` parametrisation with
/// Gauss–Legendre in `u` and the trapezoid rule in `v`.
pub fn ellipsoid_integrals(axes: [f64; 3], nu: usize, nv: usize) -> EllipsoidIntegrals {
    let [a, b, c] = axes;
    let (x, w) = gauss_legendre(nu);
    let mut out = EllipsoidIntegrals { area: 0.0, willmore: 0.0, ao2: 0.0, int_k: 0.0 };
    let pi = std::f64::consts::PI;
    for (xi, wi) in x.iter().zip(&w) {
        let u = pi * (xi + 1.0) / 2.0;
        let wu = wi * pi / 2.0;
        let (su, cu) = u.sin_cos();
        for j in 0..nv {
            let v = 2.0 * pi * j as f64 / nv as f64;
            let (sv, cv) = v.sin_cos();
            let fu = [a * cu * cv, b * cu * sv, -c * su];
            let fv = [-a * su * sv, b * su * cv, 0.0];
            let n = [
                fu[1] * fv[2] - fu[2] * fv[1],
                fu[2] * fv[0] - fu[0] * fv[2],
                fu[0] * fv[1] - fu[1] * fv[0],
            ];
            let da = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt() * wu * 2.0 * pi / nv as f64;
            let p = [a * su * cv, b * su * sv, c * cu];
            let (h, k) = ellipsoid_curvatures(axes, p);
            out.area += da;
            out.willmore += 0.25 * h * h * da;
            out.ao2 += (0.5 * h * h - 2.0 * k) * da;
            out.int_k += k * da;
        }
    }
    out
}

#[test]
fn ellipsoid_oracle_reduces_to_sphere() {
    let r = ellipsoid_integrals([1.5, 1.5, 1.5], 40, 80);
    let pi = std::f64::consts::PI;
    assert!((r.area - 4.0 * pi * 2.25).abs() < 1e-12);
    assert!((r.willmore - 4.0 * pi).abs() < 1e-12);
    assert!(r.ao2.abs() < 1e-12);
    let e = ellipsoid_integrals([1.0, 1.0, 1.2], 200, 64);
    assert!((e.int_k - 4.0 * pi).abs() < 1e-12);
}
