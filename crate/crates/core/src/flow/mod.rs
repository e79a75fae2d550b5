//! Time integration of `∂f/∂t = −(Δ²H)ν`, run orchestration and parabolic
//! rescaling.

mod explicit;
mod spectral;

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

pub use explicit::{bilaplacian_of_mean_curvature, mesh_dt, step_mesh, MeshStep, MAX_REJECTIONS, MESH_STABILITY_CONSTANT};
pub use spectral::{active_degree, implicit_symbol, spectral_dt, step_spectral, ACTIVE_DEGREE_FRACTION, SPECTRAL_ACCURACY};

use crate::config::{Backend, DtPolicy, FlowConfig};
use crate::diagnostics::{self, concentration_radius_estimate, limiting_radius, DiagnosticsRecord};
use crate::error::{FlowError, Result};
use crate::mesh::{Point, TriangleMesh};
use crate::radial::{self, RadialGraphState};
use crate::shapes::{generate_mesh, generate_radial};
use crate::sphere::{evaluate_at, GridSpec, SphereGrid, SphericalField};

#[derive(Debug, Clone)]
pub struct MeshState {
    pub mesh: TriangleMesh,
    pub time: f64,
}

/// A snapshot of either backend.
#[derive(Debug, Clone)]
pub enum FlowState {
    Radial(RadialGraphState),
    Mesh(MeshState),
}

impl FlowState {
    pub fn time(&self) -> f64 {
        match self {
            FlowState::Radial(s) => s.time(),
            FlowState::Mesh(m) => m.time,
        }
    }

    pub fn backend(&self) -> Backend {
        match self {
            FlowState::Radial(_) => Backend::Spectral,
            FlowState::Mesh(_) => Backend::Mesh,
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            FlowState::Radial(s) => radial::volume(s),
            FlowState::Mesh(m) => m.mesh.signed_volume(),
        }
    }

    pub fn area(&self) -> Result<f64> {
        match self {
            FlowState::Radial(s) => radial::area(s),
            FlowState::Mesh(m) => Ok(m.mesh.area()),
        }
    }

    pub fn as_radial(&self) -> Option<&RadialGraphState> {
        match self {
            FlowState::Radial(s) => Some(s),
            FlowState::Mesh(_) => None,
        }
    }

    pub fn as_mesh(&self) -> Option<&MeshState> {
        match self {
            FlowState::Mesh(m) => Some(m),
            FlowState::Radial(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryEntry {
    pub step: u64,
    pub record: DiagnosticsRecord,
    pub state: FlowState,
}

/// Records of a run with the snapshots they were computed from, in
/// strictly increasing time.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    entries: Vec<TrajectoryEntry>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: TrajectoryEntry) -> Result<()> {
        if let Some(last) = self.entries.last() {
            if !(entry.record.time > last.record.time) {
                return Err(FlowError::Argument(format!(
                    "trajectory times must increase: {} after {}",
                    entry.record.time, last.record.time
                )));
            }
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[TrajectoryEntry] {
        &self.entries
    }

    pub fn records(&self) -> Vec<DiagnosticsRecord> {
        self.entries.iter().map(|e| e.record).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn first(&self) -> Option<&TrajectoryEntry> {
        self.entries.first()
    }

    pub fn last(&self) -> Option<&TrajectoryEntry> {
        self.entries.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    TEnd,
    Singular,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Converged => "converged",
            StopReason::TEnd => "t_end",
            StopReason::Singular => "singular",
        })
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub stop_reason: StopReason,
    pub steps: u64,
    /// The step budget ran out before `t_end`.
    pub budget_exhausted: bool,
    pub dt_initial: f64,
    pub dt_min: f64,
    pub dt_rejections: u64,
    pub initial_volume: f64,
    /// `(3V₀/4π)^⅓`
    pub limiting_radius: f64,
    /// The error that ended a singular run.
    pub error: Option<FlowError>,
    /// `α` at the configured radius for the last good state of a singular run.
    pub final_alpha: Option<f64>,
    /// Largest radius with `α ≤ ε₀` for the last good state of a singular run.
    pub radius_estimate: Option<f64>,
    pub wall_time: Duration,
}

impl RunOutcome {
    pub fn final_state(&self) -> &FlowState {
        &self.trajectory.last().expect("runs record their initial state").state
    }

    pub fn final_record(&self) -> &DiagnosticsRecord {
        &self.trajectory.last().expect("runs record their initial state").record
    }

    /// `key = value` lines describing the outcome, appended to the
    /// configuration echo in `run.meta`.
    pub fn footer_lines(&self) -> Vec<String> {
        use crate::fmt_f64;
        let mut lines = vec![
            format!("stop_reason = {}", self.stop_reason),
            format!("steps = {}", self.steps),
            format!("records = {}", self.trajectory.len()),
            format!("t_final = {}", fmt_f64(self.final_record().time)),
            format!("wall_time_s = {}", fmt_f64(self.wall_time.as_secs_f64())),
            format!("dt_initial = {}", fmt_f64(self.dt_initial)),
            format!("dt_min = {}", fmt_f64(self.dt_min)),
            format!("dt_rejections = {}", self.dt_rejections),
            format!("budget_exhausted = {}", self.budget_exhausted),
            format!("initial_volume = {}", fmt_f64(self.initial_volume)),
            format!("limiting_radius = {}", fmt_f64(self.limiting_radius)),
        ];
        if let FlowState::Radial(s) = self.final_state() {
            lines.push(format!("final_mean_radius = {}", fmt_f64(s.mean_radius())));
        }
        if let Some(a) = self.final_alpha {
            lines.push(format!("final_alpha = {}", fmt_f64(a)));
        }
        if self.stop_reason == StopReason::Singular {
            lines.push(match self.radius_estimate {
                Some(r) => format!("radius_estimate = {}", fmt_f64(r)),
                None => "radius_estimate = none".into(),
            });
        }
        if let Some(e) = &self.error {
            lines.push(format!("error = {}", e.to_string().replace('\n', " ")));
        }
        lines
    }
}

/// The spherical grid a configuration asks for.
pub fn grid_for(config: &FlowConfig) -> Result<Arc<SphereGrid>> {
    Ok(Arc::new(SphereGrid::new(GridSpec::oversampled(
        config.bandlimit,
        config.oversampling,
    )?)?))
}

pub fn initial_state(config: &FlowConfig) -> Result<FlowState> {
    config.validate()?;
    Ok(match config.backend {
        Backend::Spectral => FlowState::Radial(generate_radial(&config.shape, grid_for(config)?)?),
        Backend::Mesh => FlowState::Mesh(MeshState {
            mesh: generate_mesh(&config.shape, config.mesh_subdivisions)?,
            time: 0.0,
        }),
    })
}

pub fn run(config: &FlowConfig, initial: FlowState) -> Result<RunOutcome> {
    run_observed(config, initial, |_, _| Ok(()))
}

/// Integrates until `t_end`, convergence or a singularity. `observer` sees
/// every accepted state with its step number, including the initial one.
pub fn run_observed(
    config: &FlowConfig,
    initial: FlowState,
    mut observer: impl FnMut(u64, &FlowState) -> Result<()>,
) -> Result<RunOutcome> {
    config.validate()?;
    if initial.backend() != config.backend {
        return Err(FlowError::Config(format!(
            "initial state is {} but backend = {}",
            initial.backend(),
            config.backend
        )));
    }
    let started = Instant::now();
    let initial_volume = initial.volume();
    let limiting = limiting_radius(initial_volume).map_err(|_| {
        FlowError::Geometry(format!("initial volume {initial_volume} is not positive"))
    })?;
    let t_stop = initial.time() + config.t_end;
    let radius = config.concentration_radius;
    let converged = |r: &DiagnosticsRecord| config.stop_ao_inf > 0.0 && r.ao_inf < config.stop_ao_inf;

    let mut trajectory = Trajectory::new();
    let first = diagnostics::energies(&initial, radius)?;
    observer(0, &initial)?;
    let mut stop = converged(&first).then_some(StopReason::Converged);
    trajectory.push(TrajectoryEntry {
        step: 0,
        record: first,
        state: initial.clone(),
    })?;

    let policy_dt = |s: &FlowState| match (config.dt_policy, config.dt_value, s) {
        (DtPolicy::Fixed, Some(dt), _) => dt,
        (_, _, FlowState::Radial(r)) => spectral_dt(r, config.safety),
        (_, _, FlowState::Mesh(m)) => mesh_dt(&m.mesh, config.safety),
    };
    let dt_initial = policy_dt(&initial);
    let spectral_step = dt_initial;

    let mut state = initial;
    let mut steps = 0u64;
    let mut dt_min = f64::INFINITY;
    let mut rejections = 0u64;
    let mut budget_exhausted = false;
    let mut failure: Option<FlowError> = None;
    let mut last_recorded = 0u64;

    while stop.is_none() {
        let remaining = t_stop - state.time();
        if remaining <= 1e-12 * config.t_end {
            stop = Some(StopReason::TEnd);
            break;
        }
        if steps >= config.max_steps {
            budget_exhausted = true;
            stop = Some(StopReason::TEnd);
            break;
        }
        let nominal = match &state {
            FlowState::Radial(_) => spectral_step,
            FlowState::Mesh(_) => policy_dt(&state),
        };
        let h = nominal.min(remaining);
        let result = match &state {
            FlowState::Radial(s) => step_spectral(s, h).map(|n| (FlowState::Radial(n), h, 0)),
            FlowState::Mesh(m) => step_mesh(m, h, config.tangential_smoothing)
                .map(|(n, info)| (FlowState::Mesh(n), info.dt, info.rejections)),
        };
        let (next, used, rejected) = match result {
            Ok(ok) => ok,
            Err(e) if e.is_singular() => {
                failure = Some(e);
                stop = Some(StopReason::Singular);
                break;
            }
            Err(e) => return Err(e),
        };
        // the final partial step must land on t_end exactly
        let next = if used == remaining { with_time(next, t_stop) } else { next };
        steps += 1;
        dt_min = dt_min.min(used);
        rejections += u64::from(rejected);
        observer(steps, &next)?;
        state = next;
        if steps % config.cadence == 0 {
            let record = match diagnostics::energies(&state, radius) {
                Ok(r) => r,
                Err(e) if e.is_singular() => {
                    failure = Some(e);
                    stop = Some(StopReason::Singular);
                    break;
                }
                Err(e) => return Err(e),
            };
            let done = converged(&record);
            trajectory.push(TrajectoryEntry {
                step: steps,
                record,
                state: state.clone(),
            })?;
            last_recorded = steps;
            if done {
                stop = Some(StopReason::Converged);
            }
        }
    }

    if last_recorded != steps {
        let record = diagnostics::energies(&state, radius)?;
        trajectory.push(TrajectoryEntry {
            step: steps,
            record,
            state: state.clone(),
        })?;
    }

    let stop_reason = stop.expect("loop exits with a reason");
    let (final_alpha, radius_estimate) = if stop_reason == StopReason::Singular {
        (
            Some(trajectory.last().expect("recorded").record.alpha),
            concentration_radius_estimate(&state, config.epsilon0)?,
        )
    } else {
        (None, None)
    };

    Ok(RunOutcome {
        trajectory,
        stop_reason,
        steps,
        budget_exhausted,
        dt_initial,
        dt_min: if steps == 0 { dt_initial } else { dt_min },
        dt_rejections: rejections,
        initial_volume,
        limiting_radius: limiting,
        error: failure,
        final_alpha,
        radius_estimate,
        wall_time: started.elapsed(),
    })
}

fn with_time(state: FlowState, time: f64) -> FlowState {
    match state {
        FlowState::Radial(s) => FlowState::Radial(s.with_time(time)),
        FlowState::Mesh(m) => FlowState::Mesh(MeshState { time, ..m }),
    }
}

/// Parabolic rescaling `p ↦ (p − x)/r`, `t ↦ t/r⁶`.
pub fn rescale(state: &FlowState, r: f64, x: [f64; 3]) -> Result<FlowState> {
    Ok(match state {
        FlowState::Radial(s) => FlowState::Radial(rescale_radial(s, r, x)?),
        FlowState::Mesh(m) => FlowState::Mesh(rescale_mesh(m, r, x)?),
    })
}

fn check_factor(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(FlowError::Argument(format!("rescale factor must be positive, got {r}")));
    }
    Ok(())
}

pub fn rescale_mesh(state: &MeshState, r: f64, x: [f64; 3]) -> Result<MeshState> {
    check_factor(r)?;
    let x = Point::from(x);
    Ok(MeshState {
        mesh: state.mesh.map_vertices(|p| (p - x) / r)?,
        time: state.time / r.powi(6),
    })
}

/// For `x = 0` the coefficients scale exactly. Otherwise the rescaled
/// surface is re-graphed over rays from the origin, which requires the
/// surface to be star-shaped about `x`, and is projected to the bandlimit.
pub fn rescale_radial(state: &RadialGraphState, r: f64, x: [f64; 3]) -> Result<RadialGraphState> {
    check_factor(r)?;
    let time = state.time() / r.powi(6);
    let grid = state.grid().clone();
    if x == [0.0; 3] {
        let coeffs = state.coeffs().iter().map(|c| c / r).collect();
        return RadialGraphState::from_coeffs(grid, coeffs, time);
    }
    let lmax = grid.bandlimit();
    let coeffs = state.coeffs();
    let xp = Point::from(x);
    let rho_at = |q: &Point| evaluate_at(coeffs, lmax, [q.x, q.y, q.z]);
    // signed distance along the ray, negative inside
    let gap = |d: &Point, s: f64| {
        let q = xp + d * (r * s);
        q.norm() - rho_at(&q)
    };
    if rho_at(&xp) <= xp.norm() {
        return Err(FlowError::Generation(format!("centre {x:?} lies outside the surface")));
    }
    let reach = (xp.norm() + state.values().iter().fold(0.0_f64, |m, v| m.max(*v))) / r * 2.0;
    let spec = grid.spec();
    let mut values = Vec::with_capacity(spec.num_nodes());
    for i in 0..spec.nlat {
        for j in 0..spec.nlon {
            let d = Point::from(grid.direction(i, j));
            let (mut lo, mut hi) = (0.0, reach);
            if gap(&d, hi) <= 0.0 {
                return Err(FlowError::Generation("ray does not leave the surface".into()));
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if gap(&d, mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            values.push(0.5 * (lo + hi));
        }
    }
    RadialGraphState::new(SphericalField::from_values(grid, values)?, time)
}
