use std::sync::Arc;

use super::grid::{coeff_index, SphereGrid};
use crate::error::{FlowError, Result};

/// Scalar field on the unit sphere, held as grid samples, real orthonormal
/// spherical-harmonic coefficients, or both.
///
/// Basis: `Y_l0 = P̄_l0(cosθ)`, `Y_lm = √2 P̄_lm(cosθ) cos(mφ)` and
/// `Y_l,-m = √2 P̄_lm(cosθ) sin(mφ)` for `m > 0`, each with unit `L²(S²)`
/// norm and no Condon–Shortley phase.
#[derive(Debug, Clone)]
pub struct SphericalField {
    grid: Arc<SphereGrid>,
    values: Option<Vec<f64>>,
    coeffs: Option<Vec<f64>>,
}

impl SphericalField {
    pub fn from_values(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.spec().num_nodes() {
            return Err(FlowError::Argument(format!(
                "expected {} grid values, got {}",
                grid.spec().num_nodes(),
                values.len()
            )));
        }
        Ok(SphericalField {
            grid,
            values: Some(values),
            coeffs: None,
        })
    }

    pub fn from_coeffs(grid: Arc<SphereGrid>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != grid.spec().num_coeffs() {
            return Err(FlowError::Argument(format!(
                "expected {} coefficients, got {}",
                grid.spec().num_coeffs(),
                coeffs.len()
            )));
        }
        Ok(SphericalField {
            grid,
            values: None,
            coeffs: Some(coeffs),
        })
    }

    /// Builds both representations from coefficients.
    pub fn bandlimited(grid: Arc<SphereGrid>, coeffs: Vec<f64>) -> Result<Self> {
        Ok(SphericalField::from_coeffs(grid, coeffs)?.synthesize()?)
    }

    pub fn constant(grid: Arc<SphereGrid>, value: f64) -> Self {
        let mut coeffs = vec![0.0; grid.spec().num_coeffs()];
        coeffs[0] = value * (4.0 * std::f64::consts::PI).sqrt();
        let values = vec![value; grid.spec().num_nodes()];
        SphericalField {
            grid,
            values: Some(values),
            coeffs: Some(coeffs),
        }
    }

    /// The basis function `Y_lm` in both representations.
    pub fn harmonic(grid: Arc<SphereGrid>, l: usize, m: i64) -> Result<Self> {
        if l > grid.bandlimit() || m.unsigned_abs() as usize > l {
            return Err(FlowError::Argument(format!(
                "harmonic ({l}, {m}) outside bandlimit {}",
                grid.bandlimit()
            )));
        }
        let mut coeffs = vec![0.0; grid.spec().num_coeffs()];
        coeffs[coeff_index(l, m)] = 1.0;
        SphericalField::bandlimited(grid, coeffs)
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> Option<&[f64]> {
        self.values.as_deref()
    }

    pub fn coeffs(&self) -> Option<&[f64]> {
        self.coeffs.as_deref()
    }

    pub fn has_values(&self) -> bool {
        self.values.is_some()
    }

    pub fn has_coeffs(&self) -> bool {
        self.coeffs.is_some()
    }

    pub(crate) fn require_values(&self) -> Result<&[f64]> {
        self.values
            .as_deref()
            .ok_or_else(|| FlowError::Argument("grid values are not valid".into()))
    }

    pub(crate) fn require_coeffs(&self) -> Result<&[f64]> {
        self.coeffs
            .as_deref()
            .ok_or_else(|| FlowError::Argument("coefficients are not valid".into()))
    }

    /// Coefficient `(l, m)`; zero beyond the bandlimit.
    pub fn coeff(&self, l: usize, m: i64) -> Option<f64> {
        let c = self.coeffs.as_ref()?;
        if l > self.grid.bandlimit() || m.unsigned_abs() as usize > l {
            return Some(0.0);
        }
        Some(c[coeff_index(l, m)])
    }

    /// Fills in the coefficient representation by Gauss–Legendre projection.
    pub fn analyze(&self) -> Result<SphericalField> {
        let values = self.require_values()?;
        let coeffs = self.grid.analyze(values);
        Ok(SphericalField {
            grid: self.grid.clone(),
            values: self.values.clone(),
            coeffs: Some(coeffs),
        })
    }

    /// Fills in the grid representation from the coefficients.
    pub fn synthesize(&self) -> Result<SphericalField> {
        let coeffs = self.require_coeffs()?;
        let values = self.grid.synthesize(coeffs);
        Ok(SphericalField {
            grid: self.grid.clone(),
            values: Some(values),
            coeffs: self.coeffs.clone(),
        })
    }

    /// Analysis followed by synthesis: the degree-`L` truncation of the
    /// sampled field, in both representations.
    pub fn truncated(&self) -> Result<SphericalField> {
        self.analyze()?.with_coeffs_only().synthesize()
    }

    fn with_coeffs_only(self) -> SphericalField {
        SphericalField {
            grid: self.grid,
            values: None,
            coeffs: self.coeffs,
        }
    }

    /// `Δ̄^p`, applied diagonally: coefficient `(l, m)` is multiplied by
    /// `(−l(l+1))^p`.
    pub fn laplacian_power(&self, p: i32) -> Result<SphericalField> {
        if p < 1 {
            return Err(FlowError::Argument(format!(
                "laplacian power must be >= 1, got {p}"
            )));
        }
        let coeffs = self.require_coeffs()?;
        let lmax = self.grid.bandlimit();
        let mut out = coeffs.to_vec();
        // repeated multiplication keeps Δ̄^(a+b) = Δ̄^b ∘ Δ̄^a bit-exact
        for l in 0..=lmax {
            let eig = -((l * (l + 1)) as f64);
            for m in -(l as i64)..=(l as i64) {
                let c = &mut out[coeff_index(l, m)];
                for _ in 0..p {
                    *c *= eig;
                }
            }
        }
        SphericalField::bandlimited(self.grid.clone(), out)
    }

    /// Spectral first and second derivatives at the grid nodes.
    pub fn jet(&self) -> Result<SurfaceJet> {
        SurfaceJet::new(self)
    }

    /// `|∇̄u|² = u_θ² + u_φ²/sin²θ` on the grid.
    pub fn surface_gradient_sq(&self) -> Result<SphericalField> {
        let jet = self.jet()?;
        let values = jet
            .grad_theta
            .iter()
            .zip(&jet.grad_phi)
            .map(|(a, b)| a * a + b * b)
            .collect();
        SphericalField::from_values(self.grid.clone(), values)
    }

    /// Covariant Hessian of the round metric in coordinate components
    /// `(∇̄_θθ u, ∇̄_θφ u, ∇̄_φφ u)`.
    pub fn surface_hessian(&self) -> Result<[SphericalField; 3]> {
        let jet = self.jet()?;
        let nlon = self.grid.spec().nlon;
        let mut tp = jet.hess_tp.clone();
        let mut pp = jet.hess_pp.clone();
        for (k, (a, b)) in tp.iter_mut().zip(pp.iter_mut()).enumerate() {
            let s = self.grid.sin_t[k / nlon];
            *a *= s;
            *b *= s * s;
        }
        Ok([
            SphericalField::from_values(self.grid.clone(), jet.hess_tt)?,
            SphericalField::from_values(self.grid.clone(), tp)?,
            SphericalField::from_values(self.grid.clone(), pp)?,
        ])
    }

    /// `∫_{S²} u dσ` by the tensor Gauss–Legendre × trapezoid rule.
    pub fn quadrature(&self) -> Result<f64> {
        Ok(self.grid.integrate(self.require_values()?))
    }

    /// Pointwise map over grid values; the result carries values only.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<SphericalField> {
        let values = self.require_values()?.iter().map(|&v| f(v)).collect();
        SphericalField::from_values(self.grid.clone(), values)
    }

    /// Pointwise product of grid values.
    pub fn mul(&self, other: &SphericalField) -> Result<SphericalField> {
        let values = self
            .require_values()?
            .iter()
            .zip(other.require_values()?)
            .map(|(a, b)| a * b)
            .collect();
        SphericalField::from_values(self.grid.clone(), values)
    }

    pub fn max_abs(&self) -> Result<f64> {
        Ok(self
            .require_values()?
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs())))
    }
}

/// Value, gradient, Hessian and Laplacian of a bandlimited field at each
/// grid node, in the orthonormal frame `(e_θ, e_φ / sinθ)` of the round
/// metric. In this frame `σ_ij = δ_ij`.
#[derive(Debug, Clone)]
pub struct SurfaceJet {
    pub value: Vec<f64>,
    pub grad_theta: Vec<f64>,
    pub grad_phi: Vec<f64>,
    pub hess_tt: Vec<f64>,
    pub hess_tp: Vec<f64>,
    pub hess_pp: Vec<f64>,
    pub laplacian: Vec<f64>,
}

impl SurfaceJet {
    fn new(field: &SphericalField) -> Result<Self> {
        let coeffs = field.require_coeffs()?;
        let grid = &field.grid;
        let lmax = grid.bandlimit();
        let nlon = grid.spec().nlon;

        let mut lap_coeffs = coeffs.to_vec();
        for l in 0..=lmax {
            let f = -((l * (l + 1)) as f64);
            for m in -(l as i64)..=(l as i64) {
                lap_coeffs[coeff_index(l, m)] *= f;
            }
        }

        let value = match field.values() {
            Some(v) => v.to_vec(),
            None => grid.synthesize(coeffs),
        };
        let u_t = grid.synthesize_with(coeffs, true, 0);
        let u_p = grid.synthesize_with(coeffs, false, 1);
        let u_pp = grid.synthesize_with(coeffs, false, 2);
        let u_tp = grid.synthesize_with(coeffs, true, 1);
        let laplacian = grid.synthesize(&lap_coeffs);

        let n = value.len();
        let mut grad_phi = vec![0.0; n];
        let mut hess_tt = vec![0.0; n];
        let mut hess_tp = vec![0.0; n];
        let mut hess_pp = vec![0.0; n];
        for k in 0..n {
            let i = k / nlon;
            let (s, c) = (grid.sin_t[i], grid.cos_t[i]);
            let cot = c / s;
            grad_phi[k] = u_p[k] / s;
            hess_pp[k] = u_pp[k] / (s * s) + cot * u_t[k];
            hess_tt[k] = laplacian[k] - hess_pp[k];
            hess_tp[k] = (u_tp[k] - cot * u_p[k]) / s;
        }
        Ok(SurfaceJet {
            value,
            grad_theta: u_t,
            grad_phi,
            hess_tt,
            hess_tp,
            hess_pp,
            laplacian,
        })
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    #[inline]
    pub fn gradient(&self, k: usize) -> [f64; 2] {
        [self.grad_theta[k], self.grad_phi[k]]
    }

    #[inline]
    pub fn hessian(&self, k: usize) -> [[f64; 2]; 2] {
        [
            [self.hess_tt[k], self.hess_tp[k]],
            [self.hess_tp[k], self.hess_pp[k]],
        ]
    }
}
