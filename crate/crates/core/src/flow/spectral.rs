use crate::error::{FlowError, Result};
use crate::radial::RadialGraphState;
use crate::sphere::{coeff_degree_order, SphericalField};

/// Largest `|λ̂_l| dt` the stability policy allows for the fastest resolved
/// degree.
pub const SPECTRAL_ACCURACY: f64 = 0.01;

/// Degrees whose amplitude is below this fraction of the largest
/// non-constant degree do not constrain the step.
pub const ACTIVE_DEGREE_FRACTION: f64 = 1e-2;

/// `r̄⁻⁶ (λ³ + 2λ²)` with `λ = −l(l+1)`, the symbol of the flow linearised at
/// the sphere of radius `r̄`.
pub fn implicit_symbol(l: usize, mean_radius: f64) -> f64 {
    let lam = -((l * (l + 1)) as f64);
    (lam * lam * lam + 2.0 * lam * lam) / mean_radius.powi(6)
}

/// One IMEX Euler step. The linearisation about the current mean radius is
/// implicit and diagonal in the harmonic basis, the remainder explicit:
/// `c' = (c + dt (ρ̂_t − λ̂ c)) / (1 − dt λ̂)`.
///
/// The damping factors act unevenly on the degrees, which would leak into
/// the enclosed volume through the mean. The `(0,0)` coefficient is therefore
/// chosen so that the volume changes by exactly `dt ∫ρ² ρ_t dσ`, the rate
/// the explicit increment predicts.
pub fn step_spectral(state: &RadialGraphState, dt: f64) -> Result<RadialGraphState> {
    if !(dt > 0.0) {
        return Err(FlowError::Argument(format!("time step must be positive, got {dt}")));
    }
    let rho_t = state.geometry()?.rho_velocity()?.analyze()?;
    let rho_t = rho_t.coeffs().expect("analyzed");
    let rbar = state.mean_radius();
    let mut coeffs: Vec<f64> = state
        .coeffs()
        .iter()
        .zip(rho_t)
        .enumerate()
        .map(|(idx, (c, v))| {
            let lam = implicit_symbol(coeff_degree_order(idx).0, rbar);
            (c + dt * (v - lam * c)) / (1.0 - dt * lam)
        })
        .collect();

    let grid = state.grid();
    let rho = state.values();
    let rate: Vec<f64> = grid.synthesize(rho_t).iter().zip(rho).map(|(v, r)| v * r * r).collect();
    let cube = |v: &[f64]| grid.integrate(&v.iter().map(|r| r * r * r).collect::<Vec<_>>()) / 3.0;
    let target = cube(rho) + dt * grid.integrate(&rate);
    let y00 = 1.0 / (4.0 * std::f64::consts::PI).sqrt();
    let mut next = grid.synthesize(&coeffs);
    for _ in 0..8 {
        let miss = cube(&next) - target;
        let slope = y00 * grid.integrate(&next.iter().map(|r| r * r).collect::<Vec<_>>());
        let shift = miss / slope;
        if !shift.is_finite() {
            break;
        }
        coeffs[0] -= shift;
        next.iter_mut().for_each(|r| *r -= shift * y00);
        if shift.abs() <= 1e-16 * coeffs[0].abs() {
            break;
        }
    }

    let time = state.time() + dt;
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(FlowError::BlowUp {
            time,
            detail: "non-finite coefficient after spectral step".into(),
        });
    }
    RadialGraphState::new(SphericalField::from_coeffs(grid.clone(), coeffs)?, time)
}

/// Highest degree `l ≥ 2` carrying at least [`ACTIVE_DEGREE_FRACTION`] of
/// the largest degree amplitude `(Σ_m c_lm²)^½` over `l ≥ 1`; 2 if none.
pub fn active_degree(state: &RadialGraphState) -> usize {
    let lmax = state.grid().bandlimit();
    let mut amp = vec![0.0; lmax + 1];
    for (idx, c) in state.coeffs().iter().enumerate() {
        amp[coeff_degree_order(idx).0] += c * c;
    }
    let peak = amp[1..].iter().fold(0.0_f64, |m, a| m.max(*a)).sqrt();
    (2..=lmax)
        .rev()
        .find(|&l| peak > 0.0 && amp[l].sqrt() >= ACTIVE_DEGREE_FRACTION * peak)
        .unwrap_or(2)
}

/// `safety · SPECTRAL_ACCURACY / |λ̂_l(r̄)|` at the active degree.
pub fn spectral_dt(state: &RadialGraphState, safety: f64) -> f64 {
    let l = active_degree(state);
    safety * SPECTRAL_ACCURACY / implicit_symbol(l, state.mean_radius()).abs()
}
