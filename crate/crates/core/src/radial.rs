//! Geometry of radial graphs `f(z) = ρ(z) z` over the unit sphere.
//!
//! Everything is evaluated pointwise on the spherical grid in the orthonormal
//! frame `(e_θ, e_φ / sinθ)` of the round metric `σ`, where `σ_ij = δ_ij`.
//! With `p = ∇̄ρ` and `Φ = ρ² + |p|²`:
//!
//! * `g_ij = ρ² δ_ij + p_i p_j`, `g^ij = ρ⁻² (δ_ij − p_i p_j / Φ)`, `det g = ρ² Φ`
//! * `A_ij = −Φ^{-1/2} (ρ ∇̄_ij ρ − 2 p_i p_j − δ_ij ρ²)`
//! * `H = −ρ⁻¹Φ^{-1/2} Δ̄ρ + ρ⁻¹Φ^{-3/2} p^i p^j ∇̄_ij ρ + 2Φ^{-1/2} + Φ^{-3/2}|p|²`
//!
//! The induced Laplacian uses the difference of Levi-Civita connections
//! `Γ(g) − Γ(σ) = g^{kl} C_lij` with
//! `C_lij = ρ (p_i δ_jl + p_j δ_il − p_l δ_ij) + p_l ∇̄_ij ρ`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{FlowError, Result};
use crate::sphere::{SphereGrid, SphericalField, SurfaceJet};

/// Tolerance on the disagreement between the two mean-curvature formulas
/// before a step is refused.
pub const MEAN_CURVATURE_CONSISTENCY: f64 = 1e-6;

/// The flow unknown: radius function `ρ > 0` over the unit sphere and the
/// flow time it belongs to.
#[derive(Debug, Clone)]
pub struct RadialGraphState {
    rho: SphericalField,
    time: f64,
}

impl RadialGraphState {
    /// Validates and wraps a radius field. Only the coefficients are used;
    /// the grid values are regenerated so both representations agree.
    pub fn new(rho: SphericalField, time: f64) -> Result<Self> {
        let rho = match rho.coeffs() {
            Some(_) => rho.synthesize()?,
            None => rho.truncated()?,
        };
        let state = RadialGraphState { rho, time };
        state.check_graph()?;
        Ok(state)
    }

    pub fn from_coeffs(grid: Arc<SphereGrid>, coeffs: Vec<f64>, time: f64) -> Result<Self> {
        RadialGraphState::new(SphericalField::from_coeffs(grid, coeffs)?, time)
    }

    pub fn sphere(grid: Arc<SphereGrid>, radius: f64) -> Result<Self> {
        RadialGraphState::new(SphericalField::constant(grid, radius), 0.0)
    }

    pub fn rho(&self) -> &SphericalField {
        &self.rho
    }

    pub fn coeffs(&self) -> &[f64] {
        self.rho.coeffs().expect("state always carries coefficients")
    }

    pub fn values(&self) -> &[f64] {
        self.rho.values().expect("state always carries grid values")
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        self.rho.grid()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// Mean of `ρ` over the sphere, `c_00 / √(4π)`.
    pub fn mean_radius(&self) -> f64 {
        self.coeffs()[0] / (4.0 * PI).sqrt()
    }

    pub fn min_radius(&self) -> f64 {
        self.values().iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn check_graph(&self) -> Result<()> {
        let values = self.values();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::BlowUp {
                time: self.time,
                detail: "non-finite radius".into(),
            });
        }
        let min = self.min_radius();
        if min <= 0.0 {
            return Err(FlowError::ChartExit {
                time: self.time,
                detail: format!("min ρ = {min:e}"),
            });
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<RadialGeometry> {
        RadialGeometry::new(self)
    }
}

/// Pointwise curvature quantities of one snapshot.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    pub mean_curvature: SphericalField,
    pub gauss_curvature: SphericalField,
    pub norm_a_sq: SphericalField,
    pub norm_ao_sq: SphericalField,
    /// `dμ/dσ = ρ√Φ`
    pub measure_density: SphericalField,
    pub phi: SphericalField,
}

/// Per-node metric data of a radial graph, reused across operators.
#[derive(Debug, Clone)]
pub struct RadialGeometry {
    grid: Arc<SphereGrid>,
    jet: SurfaceJet,
    phi: Vec<f64>,
    time: f64,
}

type Sym2 = [[f64; 2]; 2];

#[inline]
fn contract(a: &Sym2, b: &Sym2) -> f64 {
    a[0][0] * b[0][0] + 2.0 * a[0][1] * b[0][1] + a[1][1] * b[1][1]
}

impl RadialGeometry {
    pub fn new(state: &RadialGraphState) -> Result<Self> {
        let jet = state.rho.jet()?;
        let phi: Vec<f64> = (0..jet.len())
            .map(|k| {
                let [a, b] = jet.gradient(k);
                jet.value[k].powi(2) + a * a + b * b
            })
            .collect();
        if phi.iter().any(|v| !(*v > 0.0)) {
            return Err(FlowError::ChartExit {
                time: state.time,
                detail: "Φ(ρ) is not positive".into(),
            });
        }
        Ok(RadialGeometry {
            grid: state.grid().clone(),
            jet,
            phi,
            time: state.time,
        })
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    fn field(&self, values: Vec<f64>) -> SphericalField {
        SphericalField::from_values(self.grid.clone(), values)
            .expect("node count matches grid by construction")
    }

    fn len(&self) -> usize {
        self.phi.len()
    }

    #[inline]
    fn inverse_metric(&self, k: usize) -> Sym2 {
        let r2 = self.jet.value[k].powi(2);
        let [p0, p1] = self.jet.gradient(k);
        let f = self.phi[k];
        [
            [(1.0 - p0 * p0 / f) / r2, -p0 * p1 / f / r2],
            [-p0 * p1 / f / r2, (1.0 - p1 * p1 / f) / r2],
        ]
    }

    #[inline]
    fn second_fundamental_form(&self, k: usize) -> Sym2 {
        let r = self.jet.value[k];
        let [p0, p1] = self.jet.gradient(k);
        let h = self.jet.hessian(k);
        let s = -1.0 / self.phi[k].sqrt();
        [
            [
                s * (r * h[0][0] - 2.0 * p0 * p0 - r * r),
                s * (r * h[0][1] - 2.0 * p0 * p1),
            ],
            [
                s * (r * h[0][1] - 2.0 * p0 * p1),
                s * (r * h[1][1] - 2.0 * p1 * p1 - r * r),
            ],
        ]
    }

    /// `Φ(ρ) = ρ² + |∇̄ρ|²`.
    pub fn phi(&self) -> SphericalField {
        self.field(self.phi.clone())
    }

    /// `dμ/dσ = ρ√Φ`.
    pub fn measure_density(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.jet.value[k] * self.phi[k].sqrt())
            .collect()
    }

    /// Mean curvature from the closed-form radial-graph expression.
    pub fn mean_curvature(&self) -> SphericalField {
        let values = (0..self.len())
            .map(|k| {
                let r = self.jet.value[k];
                let p = self.jet.gradient(k);
                let h = self.jet.hessian(k);
                let f = self.phi[k];
                let grad_sq = p[0] * p[0] + p[1] * p[1];
                let php = p[0] * p[0] * h[0][0] + 2.0 * p[0] * p[1] * h[0][1] + p[1] * p[1] * h[1][1];
                let fs = f.sqrt();
                let f3 = f * fs;
                -self.jet.laplacian[k] / (r * fs) + php / (r * f3) + 2.0 / fs + grad_sq / f3
            })
            .collect();
        self.field(values)
    }

    /// Assembles `A_ij` and `g^ij` and contracts them. The trace `g^ij A_ij`
    /// is checked against [`RadialGeometry::mean_curvature`].
    pub fn curvature_bundle(&self) -> Result<CurvatureBundle> {
        let n = self.len();
        let mut h_trace = vec![0.0; n];
        let mut gauss = vec![0.0; n];
        let mut norm_a = vec![0.0; n];
        let mut norm_ao = vec![0.0; n];
        for k in 0..n {
            let gi = self.inverse_metric(k);
            let a = self.second_fundamental_form(k);
            // shape operator S = g⁻¹A
            let s = [
                [
                    gi[0][0] * a[0][0] + gi[0][1] * a[1][0],
                    gi[0][0] * a[0][1] + gi[0][1] * a[1][1],
                ],
                [
                    gi[1][0] * a[0][0] + gi[1][1] * a[1][0],
                    gi[1][0] * a[0][1] + gi[1][1] * a[1][1],
                ],
            ];
            let h = s[0][0] + s[1][1];
            let a2 = s[0][0] * s[0][0] + 2.0 * s[0][1] * s[1][0] + s[1][1] * s[1][1];
            h_trace[k] = h;
            gauss[k] = s[0][0] * s[1][1] - s[0][1] * s[1][0];
            norm_a[k] = a2;
            norm_ao[k] = a2 - 0.5 * h * h;
        }
        let h_closed = self.mean_curvature();
        let hv = h_closed.values().expect("values");
        let scale = hv.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let discrepancy = hv
            .iter()
            .zip(&h_trace)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
            / scale;
        if !(discrepancy <= MEAN_CURVATURE_CONSISTENCY) {
            return Err(FlowError::Consistency {
                what: "mean curvature (closed form vs trace of A)",
                discrepancy,
                limit: MEAN_CURVATURE_CONSISTENCY,
            });
        }
        Ok(CurvatureBundle {
            mean_curvature: self.field(h_trace),
            gauss_curvature: self.field(gauss),
            norm_a_sq: self.field(norm_a),
            norm_ao_sq: self.field(norm_ao),
            measure_density: self.field(self.measure_density()),
            phi: self.phi(),
        })
    }

    /// `∫ u dμ` for grid values `u`.
    pub fn integrate(&self, u: &[f64]) -> f64 {
        let w: Vec<f64> = self
            .measure_density()
            .iter()
            .zip(u)
            .map(|(d, v)| d * v)
            .collect();
        self.grid.integrate(&w)
    }

    pub fn area(&self) -> f64 {
        self.grid.integrate(&self.measure_density())
    }

    fn jet_of(&self, u: &SphericalField) -> Result<SurfaceJet> {
        if u.has_coeffs() {
            u.jet()
        } else {
            u.analyze()?.jet()
        }
    }

    /// Laplace–Beltrami operator of the induced metric. Fields without
    /// coefficients are projected to the bandlimit first.
    pub fn induced_laplacian(&self, u: &SphericalField) -> Result<SphericalField> {
        let uj = self.jet_of(u)?;
        let values = (0..self.len())
            .map(|k| {
                let gi = self.inverse_metric(k);
                let r = self.jet.value[k];
                let p = self.jet.gradient(k);
                let hr = self.jet.hessian(k);
                let du = uj.gradient(k);
                let hu = uj.hessian(k);
                let v = [
                    gi[0][0] * du[0] + gi[0][1] * du[1],
                    gi[1][0] * du[0] + gi[1][1] * du[1],
                ];
                let pv = p[0] * v[0] + p[1] * v[1];
                let c = [
                    [
                        r * (2.0 * p[0] * v[0] - pv) + pv * hr[0][0],
                        r * (p[0] * v[1] + p[1] * v[0]) + pv * hr[0][1],
                    ],
                    [
                        r * (p[0] * v[1] + p[1] * v[0]) + pv * hr[0][1],
                        r * (2.0 * p[1] * v[1] - pv) + pv * hr[1][1],
                    ],
                ];
                let diff = [
                    [hu[0][0] - c[0][0], hu[0][1] - c[0][1]],
                    [hu[1][0] - c[1][0], hu[1][1] - c[1][1]],
                ];
                contract(&gi, &diff)
            })
            .collect();
        Ok(self.field(values))
    }

    /// `|∇u|²_g = g^ij ∂_i u ∂_j u`.
    pub fn gradient_norm_sq(&self, u: &SphericalField) -> Result<SphericalField> {
        let uj = self.jet_of(u)?;
        let values = (0..self.len())
            .map(|k| {
                let gi = self.inverse_metric(k);
                let d = uj.gradient(k);
                gi[0][0] * d[0] * d[0] + 2.0 * gi[0][1] * d[0] * d[1] + gi[1][1] * d[1] * d[1]
            })
            .collect();
        Ok(self.field(values))
    }

    /// `Δ_g H` and `Δ_g² H` from the closed-form mean curvature.
    pub fn laplacians_of_mean_curvature(&self) -> Result<(SphericalField, SphericalField, SphericalField)> {
        let h = self.mean_curvature();
        let lap_h = self.induced_laplacian(&h)?;
        let bilap_h = self.induced_laplacian(&lap_h)?;
        Ok((h, lap_h, bilap_h))
    }

    /// `Δ_g² H`; the normal velocity of the flow is its negative.
    pub fn flow_speed(&self) -> Result<SphericalField> {
        Ok(self.laplacians_of_mean_curvature()?.2)
    }

    /// Converts a normal speed `V` (along the outer normal) to the radial
    /// speed that keeps the graph parametrisation: `ρ_t = V √Φ / ρ`.
    pub fn radial_speed_from_normal(&self, normal_speed: &[f64]) -> SphericalField {
        let values = (0..self.len())
            .map(|k| normal_speed[k] * self.phi[k].sqrt() / self.jet.value[k])
            .collect();
        self.field(values)
    }

    /// `ρ_t = −(√Φ/ρ) Δ_g² H`.
    pub fn rho_velocity(&self) -> Result<SphericalField> {
        let speed = self.flow_speed()?;
        let neg: Vec<f64> = speed.values().expect("values").iter().map(|v| -v).collect();
        Ok(self.radial_speed_from_normal(&neg))
    }

    pub fn time(&self) -> f64 {
        self.time
    }
}

pub fn phi(state: &RadialGraphState) -> Result<SphericalField> {
    Ok(state.geometry()?.phi())
}

pub fn mean_curvature(state: &RadialGraphState) -> Result<SphericalField> {
    Ok(state.geometry()?.mean_curvature())
}

pub fn curvature_bundle(state: &RadialGraphState) -> Result<CurvatureBundle> {
    state.geometry()?.curvature_bundle()
}

/// `∫ ρ√Φ dσ`.
pub fn area(state: &RadialGraphState) -> Result<f64> {
    Ok(state.geometry()?.area())
}

/// Signed enclosed volume `∫ ρ³ dσ / 3`.
pub fn volume(state: &RadialGraphState) -> f64 {
    let cubes: Vec<f64> = state.values().iter().map(|r| r * r * r).collect();
    state.grid().integrate(&cubes) / 3.0
}

pub fn induced_laplacian(state: &RadialGraphState, u: &SphericalField) -> Result<SphericalField> {
    state.geometry()?.induced_laplacian(u)
}

pub fn flow_speed(state: &RadialGraphState) -> Result<SphericalField> {
    state.geometry()?.flow_speed()
}

pub fn rho_velocity(state: &RadialGraphState) -> Result<SphericalField> {
    state.geometry()?.rho_velocity()
}
