//! Scalar energies per snapshot, trajectory checks, decay fits and the
//! closed-form spectrum of the flow linearised at a round sphere.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use crate::config::Backend;
use crate::error::{FlowError, Result};
use crate::flow::{FlowState, Trajectory};
use crate::fmt_f64;
use crate::mesh::{
    concentration, concentration_of_samples, gauss_curvature, mean_curvature, tracefree_norm_sq,
    DiscreteOperators, Point, TriangleMesh,
};
use crate::radial::{self, RadialGeometry, RadialGraphState};

/// Column order of the diagnostics CSV.
pub const CSV_HEADER: &str = "time,area,volume,willmore,ao2,intK,dH2,gradDH2,aoInf,gapResidual,alpha";

/// Allowed relative disagreement between the two spectral evaluations of
/// `∫|∇ΔH|²`, on top of an absolute floor scaled by `∫H²`.
pub const GRADIENT_ROUTE_TOLERANCE: f64 = 1e-3;
pub const GRADIENT_ROUTE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub area: f64,
    pub volume: f64,
    /// `¼∫H² dμ`
    pub willmore: f64,
    /// `∫|A°|² dμ`
    pub ao2: f64,
    pub int_k: f64,
    /// `∫|ΔH|² dμ`
    pub dh2: f64,
    /// `∫|∇ΔH|² dμ`, evaluated as `∫(−ΔH)(Δ²H) dμ`
    pub grad_dh2: f64,
    /// `max |A°|`
    pub ao_inf: f64,
    /// `max |Δ²H|`
    pub gap_residual: f64,
    /// `α(ρ_b)`, largest `∫|A|² dμ` inside an ambient ball
    pub alpha: f64,
    pub backend: Backend,
}

impl DiagnosticsRecord {
    pub fn to_csv_row(&self) -> String {
        [
            self.time,
            self.area,
            self.volume,
            self.willmore,
            self.ao2,
            self.int_k,
            self.dh2,
            self.grad_dh2,
            self.ao_inf,
            self.gap_residual,
            self.alpha,
        ]
        .map(fmt_f64)
        .join(",")
    }

    pub fn from_csv_row(row: &str, backend: Backend) -> Result<Self> {
        let v: Vec<f64> = row
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| FlowError::Argument(format!("bad diagnostics row '{row}': {e}")))?;
        if v.len() != 11 {
            return Err(FlowError::Argument(format!(
                "diagnostics row has {} columns, expected 11",
                v.len()
            )));
        }
        Ok(DiagnosticsRecord {
            time: v[0],
            area: v[1],
            volume: v[2],
            willmore: v[3],
            ao2: v[4],
            int_k: v[5],
            dh2: v[6],
            grad_dh2: v[7],
            ao_inf: v[8],
            gap_residual: v[9],
            alpha: v[10],
            backend,
        })
    }
}

pub fn write_csv<W: Write>(records: &[DiagnosticsRecord], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.to_csv_row())?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(input: R, backend: Backend, source_name: &str) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = input.lines().enumerate();
    let parse_err = |line: usize, msg: String| FlowError::Parse {
        source_name: source_name.to_string(),
        line,
        msg,
    };
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == CSV_HEADER => {}
        Some((_, Ok(h))) => return Err(parse_err(1, format!("unexpected header '{h}'"))),
        Some((_, Err(e))) => return Err(FlowError::io(source_name, e)),
        None => return Err(parse_err(1, "missing header".into())),
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        let line = line.map_err(|e| FlowError::io(source_name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(DiagnosticsRecord::from_csv_row(&line, backend).map_err(|e| parse_err(n + 1, e.to_string()))?);
    }
    Ok(out)
}

/// All diagnostics of one snapshot.
pub fn energies(state: &FlowState, concentration_radius: f64) -> Result<DiagnosticsRecord> {
    match state {
        FlowState::Radial(s) => radial_energies(s, concentration_radius),
        FlowState::Mesh(m) => mesh_energies(&m.mesh, m.time, concentration_radius),
    }
}

struct RadialSnapshot {
    geometry: RadialGeometry,
    bundle: radial::CurvatureBundle,
    lap_h: Vec<f64>,
    bilap_h: Vec<f64>,
}

fn radial_snapshot(state: &RadialGraphState) -> Result<RadialSnapshot> {
    let geometry = state.geometry()?;
    let bundle = geometry.curvature_bundle()?;
    let (_, lap_h, bilap_h) = geometry.laplacians_of_mean_curvature()?;
    Ok(RadialSnapshot {
        lap_h: lap_h.values().expect("values").to_vec(),
        bilap_h: bilap_h.values().expect("values").to_vec(),
        geometry,
        bundle,
    })
}

fn vals(f: &crate::sphere::SphericalField) -> &[f64] {
    f.values().expect("geometry fields carry values")
}

/// `∫|∇ΔH|²` by the self-adjoint rewrite `∫(−ΔH)(Δ²H)` and by direct
/// contraction `∫ g^ij ∂_iΔH ∂_jΔH`.
pub fn spectral_gradient_routes(state: &RadialGraphState) -> Result<(f64, f64)> {
    let snap = radial_snapshot(state)?;
    gradient_routes(&snap)
}

fn gradient_routes(snap: &RadialSnapshot) -> Result<(f64, f64)> {
    let g = &snap.geometry;
    let by_parts: Vec<f64> = snap.lap_h.iter().zip(&snap.bilap_h).map(|(a, b)| -a * b).collect();
    let lap = crate::sphere::SphericalField::from_values(g.grid().clone(), snap.lap_h.clone())?;
    let direct = g.integrate(vals(&g.gradient_norm_sq(&lap)?));
    Ok((g.integrate(&by_parts), direct))
}

pub fn radial_energies(state: &RadialGraphState, concentration_radius: f64) -> Result<DiagnosticsRecord> {
    let snap = radial_snapshot(state)?;
    let g = &snap.geometry;
    let b = &snap.bundle;
    let h = vals(&b.mean_curvature);
    let ao = vals(&b.norm_ao_sq);
    let h2: Vec<f64> = h.iter().map(|v| v * v).collect();
    let ao_pos: Vec<f64> = ao.iter().map(|v| v.max(0.0)).collect();
    let lap2: Vec<f64> = snap.lap_h.iter().map(|v| v * v).collect();
    let willmore = 0.25 * g.integrate(&h2);

    let (grad_dh2, direct) = gradient_routes(&snap)?;
    let limit = GRADIENT_ROUTE_TOLERANCE * grad_dh2.abs().max(direct.abs())
        + GRADIENT_ROUTE_FLOOR * 4.0 * willmore / g.area().powi(3);
    if !((grad_dh2 - direct).abs() <= limit) {
        return Err(FlowError::Consistency {
            what: "∫|∇ΔH|² (by parts vs direct gradient)",
            discrepancy: (grad_dh2 - direct).abs(),
            limit,
        });
    }

    Ok(DiagnosticsRecord {
        time: state.time(),
        area: g.area(),
        volume: radial::volume(state),
        willmore,
        ao2: g.integrate(&ao_pos),
        int_k: g.integrate(vals(&b.gauss_curvature)),
        dh2: g.integrate(&lap2),
        grad_dh2,
        ao_inf: ao_pos.iter().fold(0.0_f64, |m, v| m.max(*v)).sqrt(),
        gap_residual: snap.bilap_h.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
        alpha: radial_alpha(state, g, vals(&b.norm_a_sq), concentration_radius)?,
        backend: Backend::Spectral,
    })
}

/// Surface points of a radial state at the grid nodes with the quadrature
/// weights `dμ` attached to them.
fn radial_samples(state: &RadialGraphState, g: &RadialGeometry) -> (Vec<Point>, Vec<f64>) {
    let grid = state.grid();
    let spec = grid.spec();
    let rho = state.values();
    let density = g.measure_density();
    let mut points = Vec::with_capacity(rho.len());
    let mut weights = Vec::with_capacity(rho.len());
    for i in 0..spec.nlat {
        for j in 0..spec.nlon {
            let k = i * spec.nlon + j;
            points.push(Point::from(grid.direction(i, j)) * rho[k]);
            weights.push(grid.node_weight(i) * density[k]);
        }
    }
    (points, weights)
}

fn radial_alpha(state: &RadialGraphState, g: &RadialGeometry, norm_a_sq: &[f64], radius: f64) -> Result<f64> {
    let (points, w) = radial_samples(state, g);
    let integrand: Vec<f64> = w.iter().zip(norm_a_sq).map(|(w, a)| w * a.max(0.0)).collect();
    concentration_of_samples(&points, &integrand, &points, radius)
}

pub fn mesh_energies(mesh: &TriangleMesh, time: f64, concentration_radius: f64) -> Result<DiagnosticsRecord> {
    let ops = DiscreteOperators::build(mesh);
    let h = mean_curvature(mesh, &ops);
    let k = gauss_curvature(mesh, &ops);
    let tf = tracefree_norm_sq(&h, &k);
    let lap_h = ops.laplacian(&h);
    let bilap_h = ops.laplacian(&lap_h);
    let norm_a: Vec<f64> = tf.values.iter().zip(&h).map(|(a, h)| a + 0.5 * h * h).collect();
    let sq = |v: &[f64]| v.iter().map(|x| x * x).collect::<Vec<_>>();
    let by_parts: Vec<f64> = lap_h.iter().zip(&bilap_h).map(|(a, b)| -a * b).collect();
    Ok(DiagnosticsRecord {
        time,
        area: mesh.area(),
        volume: mesh.signed_volume(),
        willmore: 0.25 * ops.integrate(&sq(&h)),
        ao2: ops.integrate(&tf.values),
        int_k: ops.integrate(&k),
        dh2: ops.integrate(&sq(&lap_h)),
        grad_dh2: ops.integrate(&by_parts),
        ao_inf: tf.values.iter().fold(0.0_f64, |m, v| m.max(*v)).sqrt(),
        gap_residual: bilap_h.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
        alpha: concentration(mesh, &ops, &norm_a, concentration_radius)?,
        backend: Backend::Mesh,
    })
}

/// `α(r)` of a snapshot.
pub fn concentration_at(state: &FlowState, radius: f64) -> Result<f64> {
    match state {
        FlowState::Radial(s) => {
            let g = s.geometry()?;
            let b = g.curvature_bundle()?;
            radial_alpha(s, &g, vals(&b.norm_a_sq), radius)
        }
        FlowState::Mesh(m) => {
            let ops = DiscreteOperators::build(&m.mesh);
            let h = mean_curvature(&m.mesh, &ops);
            let k = gauss_curvature(&m.mesh, &ops);
            let tf = tracefree_norm_sq(&h, &k);
            let a: Vec<f64> = tf.values.iter().zip(&h).map(|(a, h)| a + 0.5 * h * h).collect();
            concentration(&m.mesh, &ops, &a, radius)
        }
    }
}

/// Largest ball radius `r` with `α(r) ≤ ε₀`, bracketed to 1e−6 relative.
/// `None` when even the smallest sampled ball exceeds `ε₀`.
pub fn concentration_radius_estimate(state: &FlowState, epsilon0: f64) -> Result<Option<f64>> {
    let diameter = match state {
        FlowState::Radial(s) => 2.0 * s.values().iter().fold(0.0_f64, |m, v| m.max(*v)),
        FlowState::Mesh(m) => m.mesh.diameter_bound(),
    };
    if concentration_at(state, diameter)? <= epsilon0 {
        return Ok(Some(diameter));
    }
    let tiny = diameter * 1e-9;
    if concentration_at(state, tiny)? > epsilon0 {
        return Ok(None);
    }
    let (mut lo, mut hi) = (tiny, diameter);
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if concentration_at(state, mid)? <= epsilon0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// Eigenvalue `−ρ∞⁻⁶ (l+2)(l+1)² l² (l−1)` of the flow linearised at the
/// sphere of radius `ρ∞`, acting on degree-`l` harmonics.
pub fn linearized_rate(l: usize, rho_inf: f64) -> Result<f64> {
    if !(rho_inf > 0.0 && rho_inf.is_finite()) {
        return Err(FlowError::Argument(format!("rho_inf must be positive, got {rho_inf}")));
    }
    let lf = l as f64;
    let base = if l < 2 {
        0.0
    } else {
        -(lf + 2.0) * (lf + 1.0).powi(2) * lf * lf * (lf - 1.0)
    };
    Ok(base * rho_inf.powi(-6))
}

/// Radius of the sphere enclosing volume `v0`.
pub fn limiting_radius(v0: f64) -> Result<f64> {
    if !(v0 > 0.0 && v0.is_finite()) {
        return Err(FlowError::Argument(format!("volume must be positive, got {v0}")));
    }
    Ok((3.0 * v0 / (4.0 * PI)).cbrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Slope of `log y` against time.
    pub rate: f64,
    pub intercept: f64,
    /// Coefficient of determination of the log-linear fit.
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares fit of `log y = a + rate·t` over the last `tail_fraction`
/// of the samples.
pub fn fit_decay_series(times: &[f64], values: &[f64], tail_fraction: f64) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(FlowError::Argument("times and values differ in length".into()));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(FlowError::Argument(format!("tail fraction {tail_fraction} outside (0, 1]")));
    }
    let n = times.len();
    let take = ((n as f64) * tail_fraction).round() as usize;
    let start = n - take.min(n);
    let (t, y) = (&times[start..], &values[start..]);
    if t.len() < 10 {
        return Err(FlowError::FitWindow(format!(
            "{} records in the fit window, need at least 10",
            t.len()
        )));
    }
    if let Some((i, v)) = y.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(FlowError::FitWindow(format!(
            "observable {v} at t = {} is not positive",
            t[i]
        )));
    }
    let logs: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = t.len() as f64;
    let tm = t.iter().sum::<f64>() / m;
    let lm = logs.iter().sum::<f64>() / m;
    let sxx: f64 = t.iter().map(|t| (t - tm).powi(2)).sum();
    let sxy: f64 = t.iter().zip(&logs).map(|(t, l)| (t - tm) * (l - lm)).sum();
    let syy: f64 = logs.iter().map(|l| (l - lm).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(FlowError::FitWindow("fit window spans no time".into()));
    }
    let rate = sxy / sxx;
    let intercept = lm - rate * tm;
    let ss_res: f64 = t
        .iter()
        .zip(&logs)
        .map(|(t, l)| (l - intercept - rate * t).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(DecayFit {
        rate,
        intercept,
        r_squared,
        samples: t.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    /// Spherical-harmonic coefficient `(l, m)` of `ρ` (spectral runs).
    Coefficient(usize, i64),
    Ao2,
    AoInf,
    GapResidual,
}

pub fn observe(traj: &Trajectory, obs: Observable) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut times = Vec::with_capacity(traj.len());
    let mut values = Vec::with_capacity(traj.len());
    for e in traj.entries() {
        times.push(e.record.time);
        values.push(match obs {
            Observable::Ao2 => e.record.ao2,
            Observable::AoInf => e.record.ao_inf,
            Observable::GapResidual => e.record.gap_residual,
            Observable::Coefficient(l, m) => match &e.state {
                FlowState::Radial(s) => s.rho().coeff(l, m).ok_or_else(|| {
                    FlowError::Argument(format!("coefficient ({l}, {m}) outside the bandlimit"))
                })?,
                FlowState::Mesh(_) => {
                    return Err(FlowError::Argument(
                        "coefficient observables need a spectral trajectory".into(),
                    ))
                }
            },
        });
    }
    Ok((times, values))
}

pub fn fit_decay(traj: &Trajectory, obs: Observable, tail_fraction: f64) -> Result<DecayFit> {
    let (t, v) = observe(traj, obs)?;
    fit_decay_series(&t, &v, tail_fraction)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityTolerances {
    /// Allowed `|V − V₀|/V₀` per unit flow time.
    pub volume_per_time: f64,
    /// Allowed `|V − V₀|/V₀` irrespective of time.
    pub volume_total: f64,
    /// Relative round-off allowance for the area and `∫|A°|²` decrease.
    pub roundoff: f64,
    /// Allowed `|ΔA/Δt + ∫|ΔH|²|` relative to `∫|ΔH|²`.
    pub dissipation: f64,
    /// Slack `s` in `Δ∫|A°|²/Δt ≤ −½ ∫|∇ΔH|² (1 − s)`.
    pub lyapunov_slack: f64,
    /// Intervals whose predicted change `rate · Δt` is below this fraction
    /// of the area (dissipation) or of `∫H²` (Lyapunov) are not compared.
    pub resolution: f64,
}

impl MonotonicityTolerances {
    pub fn for_backend(backend: Backend) -> Self {
        let base = MonotonicityTolerances {
            volume_per_time: 1e-8,
            volume_total: f64::INFINITY,
            roundoff: 1e-13,
            dissipation: 0.01,
            lyapunov_slack: 0.1,
            resolution: 1e-11,
        };
        match backend {
            Backend::Spectral => base,
            Backend::Mesh => MonotonicityTolerances {
                volume_per_time: f64::INFINITY,
                volume_total: 1e-3,
                ..base
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Volume,
    Area,
    Ao2,
    Dissipation,
    Lyapunov,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub check: Check,
    /// End time of the offending interval.
    pub time: f64,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonotonicityReport {
    pub intervals: usize,
    pub violations: Vec<Violation>,
    /// Intervals on which the Lyapunov inequality was evaluated.
    pub lyapunov_checked: usize,
    pub dissipation_checked: usize,
    pub max_dissipation_residual: f64,
}

impl MonotonicityReport {
    pub fn count(&self, check: Check) -> usize {
        self.violations.iter().filter(|v| v.check == check).count()
    }

    pub fn lyapunov_fraction(&self) -> f64 {
        if self.lyapunov_checked == 0 {
            return 1.0;
        }
        1.0 - self.count(Check::Lyapunov) as f64 / self.lyapunov_checked as f64
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Interval-by-interval checks of conservation and dissipation laws.
/// Rates use the trapezoid average of the integrands at both ends.
pub fn check_monotonicity(records: &[DiagnosticsRecord], tol: &MonotonicityTolerances) -> Result<MonotonicityReport> {
    if records.len() < 3 {
        return Err(FlowError::Argument(format!(
            "monotonicity needs at least 3 records, got {}",
            records.len()
        )));
    }
    let first = records[0];
    let mut report = MonotonicityReport::default();
    let track_ao2 = first.ao2 < 8.0 * PI;
    for w in records.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dt = b.time - a.time;
        if !(dt != 0.0) {
            return Err(FlowError::Argument(format!("repeated record time {}", b.time)));
        }
        report.intervals += 1;
        let mut flag = |check, value: f64, limit: f64| {
            report.violations.push(Violation {
                check,
                time: b.time,
                value,
                limit,
            })
        };

        let drift = ((b.volume - first.volume) / first.volume).abs();
        let vlimit = tol.volume_total.min(tol.volume_per_time * (b.time - first.time).abs());
        if drift > vlimit && drift > tol.roundoff {
            flag(Check::Volume, drift, vlimit);
        }
        if b.area > a.area * (1.0 + tol.roundoff) {
            flag(Check::Area, b.area - a.area, a.area * tol.roundoff);
        }
        if track_ao2 && b.ao2 > a.ao2 + tol.roundoff * first.willmore {
            flag(Check::Ao2, b.ao2 - a.ao2, 0.0);
        }

        let area_rate = (b.area - a.area) / dt;
        let dh2 = 0.5 * (a.dh2 + b.dh2);
        if dh2 * dt.abs() > tol.resolution * a.area {
            report.dissipation_checked += 1;
            let residual = (area_rate + dh2).abs() / dh2;
            report.max_dissipation_residual = report.max_dissipation_residual.max(residual);
            if residual > tol.dissipation {
                flag(Check::Dissipation, residual, tol.dissipation);
            }
        }

        let ao2_rate = (b.ao2 - a.ao2) / dt;
        let grad = 0.5 * (a.grad_dh2 + b.grad_dh2);
        if grad * dt.abs() > tol.resolution * first.willmore {
            report.lyapunov_checked += 1;
            let bound = -0.5 * grad * (1.0 - tol.lyapunov_slack);
            if ao2_rate > bound {
                flag(Check::Lyapunov, ao2_rate, bound);
            }
        }
    }
    Ok(report)
}

/// Thresholds under which a snapshot counts as near-stationary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapThresholds {
    pub bilaplacian: f64,
    pub grad_dh2: f64,
}

impl Default for GapThresholds {
    fn default() -> Self {
        GapThresholds {
            bilaplacian: 1e-4,
            grad_dh2: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    /// `max |Δ²H|`
    pub bilaplacian_inf: f64,
    /// `∫|∇ΔH|² dμ`
    pub grad_dh2: f64,
    pub ao2: f64,
    /// Both residuals below threshold and `∫|A°|² < 8π`.
    pub near_stationary: bool,
}

pub fn gap_residual(state: &FlowState, thresholds: &GapThresholds) -> Result<GapReport> {
    let r = energies(state, 1.0)?;
    Ok(gap_report(&r, thresholds))
}

pub fn gap_report(r: &DiagnosticsRecord, thresholds: &GapThresholds) -> GapReport {
    GapReport {
        bilaplacian_inf: r.gap_residual,
        grad_dh2: r.grad_dh2,
        ao2: r.ao2,
        near_stationary: r.gap_residual <= thresholds.bilaplacian
            && r.grad_dh2.abs() <= thresholds.grad_dh2
            && r.ao2 < 8.0 * PI,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodazziReport {
    /// `∫|∇H|² dμ`, from `∫(−ΔH) H dμ`
    pub grad_h_sq: f64,
    /// `4∫|∇a°|² dμ` with the scalar `a° = |A°|`
    pub surrogate: f64,
    /// `grad_h_sq / surrogate`, 0 when both vanish
    pub ratio: f64,
}

/// Compares `∫|∇H|²` with a scalar stand-in for `4∫|∇A°|²`.
///
/// `|∇a°|²` is evaluated as `|∇q|²/(4q)` with `q = |A°|²`, which stays
/// bounded where `A°` vanishes transversally.
pub fn codazzi_residual(state: &RadialGraphState) -> Result<CodazziReport> {
    let g = state.geometry()?;
    let b = g.curvature_bundle()?;
    let h = b.mean_curvature.analyze()?;
    let lap_h = g.induced_laplacian(&h)?;
    let integrand: Vec<f64> = vals(&lap_h).iter().zip(vals(&b.mean_curvature)).map(|(l, h)| -l * h).collect();
    let grad_h_sq = g.integrate(&integrand);

    let q = b.norm_ao_sq.map(|v| v.max(0.0))?;
    let grad_q = g.gradient_norm_sq(&q.analyze()?)?;
    let qmax = vals(&q).iter().fold(0.0_f64, |m, v| m.max(*v));
    let per_node: Vec<f64> = vals(&grad_q)
        .iter()
        .zip(vals(&q))
        .map(|(gq, q)| if *q > 1e-14 * qmax && *q > 0.0 { gq / (4.0 * q) } else { 0.0 })
        .collect();
    let surrogate = 4.0 * g.integrate(&per_node);

    let norm_a: Vec<f64> = vals(&b.norm_a_sq).to_vec();
    let floor = 1e-20 * g.integrate(&norm_a) / g.area();
    let ratio = if grad_h_sq.abs() <= floor && surrogate <= floor {
        0.0
    } else {
        grad_h_sq / surrogate.max(floor)
    };
    Ok(CodazziReport {
        grad_h_sq,
        surrogate,
        ratio,
    })
}
