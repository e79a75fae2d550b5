//! Run configuration as flat `key = value` text.
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `backend` | `spectral` or `mesh` | `spectral` |
//! | `bandlimit` | spherical-harmonic degree `L` | `16` |
//! | `oversampling` | quadrature grid size relative to `L` | `2` |
//! | `shape.kind` | `sphere`, `sh-perturbed-sphere`, `ellipsoid`, `obj-file` | `sphere` |
//! | `shape.radius` | sphere radius `R` | `1` |
//! | `shape.perturb` | `l,m,amp;…`, relative amplitudes of `Y_lm` | empty |
//! | `shape.axes` | ellipsoid semi-axes `a,b,c` | `1,1,1` |
//! | `mesh` | OBJ file with the initial mesh (implies `obj-file`) | unset |
//! | `mesh.subdivisions` | icosphere levels for analytic shapes | `4` |
//! | `mesh.tangential_smoothing` | weight of tangential redistribution, 0 = off | `0` |
//! | `dt.policy` | `fixed` or `stability` | `stability` |
//! | `dt.value` | step for `fixed` | unset |
//! | `safety` | factor in `(0, 1]` applied to the stability step | `1` |
//! | `t_end` | final flow time | `1` |
//! | `max_steps` | step budget | `1000000` |
//! | `cadence` | steps between diagnostic records | `1` |
//! | `snapshot.cadence` | steps between state dumps, 0 = final only | `0` |
//! | `stop.ao_inf` | convergence threshold on `max |A°|`, 0 = never | `1e-7` |
//! | `concentration.radius` | ball radius for `α` | `0.5` |
//! | `epsilon0` | concentration threshold for singularity reports | `1` |
//! | `out.dir` | output directory | `out` |

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{FlowError, Result};
use crate::fmt_f64;
use crate::shapes::{ShapeKind, ShapeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Spectral,
    Mesh,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Spectral => "spectral",
            Backend::Mesh => "mesh",
        })
    }
}

impl FromStr for Backend {
    type Err = FlowError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Backend::Spectral),
            "mesh" => Ok(Backend::Mesh),
            other => Err(FlowError::Config(format!("unknown backend '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtPolicy {
    Fixed,
    Stability,
}

impl fmt::Display for DtPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DtPolicy::Fixed => "fixed",
            DtPolicy::Stability => "stability",
        })
    }
}

impl FromStr for DtPolicy {
    type Err = FlowError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(DtPolicy::Fixed),
            "stability" | "stability-scaled" => Ok(DtPolicy::Stability),
            other => Err(FlowError::Config(format!("unknown dt policy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub backend: Backend,
    pub bandlimit: usize,
    pub oversampling: f64,
    pub shape: ShapeSpec,
    pub mesh_subdivisions: u32,
    pub tangential_smoothing: f64,
    pub dt_policy: DtPolicy,
    pub dt_value: Option<f64>,
    pub safety: f64,
    pub t_end: f64,
    pub max_steps: u64,
    pub cadence: u64,
    pub snapshot_cadence: u64,
    pub stop_ao_inf: f64,
    pub concentration_radius: f64,
    pub epsilon0: f64,
    pub out_dir: PathBuf,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            backend: Backend::Spectral,
            bandlimit: 16,
            oversampling: 2.0,
            shape: ShapeSpec::default(),
            mesh_subdivisions: 4,
            tangential_smoothing: 0.0,
            dt_policy: DtPolicy::Stability,
            dt_value: None,
            safety: 1.0,
            t_end: 1.0,
            max_steps: 1_000_000,
            cadence: 1,
            snapshot_cadence: 0,
            stop_ao_inf: 1e-7,
            concentration_radius: 0.5,
            epsilon0: 1.0,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Keys a run appends to the configuration echo in `run.meta`.
pub const FOOTER_KEYS: &[&str] = &[
    "stop_reason",
    "steps",
    "records",
    "t_final",
    "wall_time_s",
    "dt_initial",
    "dt_min",
    "dt_rejections",
    "budget_exhausted",
    "initial_volume",
    "limiting_radius",
    "final_mean_radius",
    "final_alpha",
    "radius_estimate",
    "error",
];

impl FlowConfig {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        Self::parse_impl(text, source_name, false)
    }

    /// Reads the configuration echo of a `run.meta` footer.
    pub fn from_footer(text: &str, source_name: &str) -> Result<Self> {
        Self::parse_impl(text, source_name, true)
    }

    fn parse_impl(text: &str, source_name: &str, footer: bool) -> Result<Self> {
        let mut cfg = FlowConfig::default();
        let mut seen = HashSet::new();
        let mut kind_set = false;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| FlowError::Parse {
                source_name: source_name.to_string(),
                line: n + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if footer && FOOTER_KEYS.contains(&key) {
                continue;
            }
            if !seen.insert(key.to_string()) {
                return Err(parse_err(format!("duplicate key '{key}'")));
            }
            cfg.set(key, value, &mut kind_set)
                .map_err(|e| parse_err(e.to_string()))?;
        }
        if cfg.shape.path.is_some() {
            if !kind_set {
                cfg.shape.kind = ShapeKind::ObjFile;
            } else if cfg.shape.kind != ShapeKind::ObjFile {
                return Err(FlowError::Config(format!(
                    "'mesh' file given but shape.kind is {}",
                    cfg.shape.kind
                )));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str, kind_set: &mut bool) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| FlowError::Config(format!("{key}: cannot parse '{v}'")))
        }
        match key {
            "backend" => self.backend = value.parse()?,
            "bandlimit" => self.bandlimit = num(key, value)?,
            "oversampling" => self.oversampling = num(key, value)?,
            "shape.kind" => {
                self.shape.kind = value.parse()?;
                *kind_set = true;
            }
            "shape.radius" => self.shape.radius = num(key, value)?,
            "shape.perturb" => self.shape.perturbations = ShapeSpec::parse_perturbations(value)?,
            "shape.axes" => {
                let parts: Vec<f64> = value
                    .split(',')
                    .map(|p| num(key, p.trim()))
                    .collect::<Result<_>>()?;
                self.shape.axes = parts
                    .try_into()
                    .map_err(|_| FlowError::Config("shape.axes needs three values".into()))?;
            }
            "mesh" => self.shape.path = Some(PathBuf::from(value)),
            "mesh.subdivisions" => self.mesh_subdivisions = num(key, value)?,
            "mesh.tangential_smoothing" => self.tangential_smoothing = num(key, value)?,
            "dt.policy" => self.dt_policy = value.parse()?,
            "dt.value" => self.dt_value = Some(num(key, value)?),
            "safety" => self.safety = num(key, value)?,
            "t_end" => self.t_end = num(key, value)?,
            "max_steps" => self.max_steps = num(key, value)?,
            "cadence" => self.cadence = num(key, value)?,
            "snapshot.cadence" => self.snapshot_cadence = num(key, value)?,
            "stop.ao_inf" => self.stop_ao_inf = num(key, value)?,
            "concentration.radius" => self.concentration_radius = num(key, value)?,
            "epsilon0" => self.epsilon0 = num(key, value)?,
            "out.dir" => self.out_dir = PathBuf::from(value),
            other => return Err(FlowError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FlowError::Config(msg));
        if !(self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return bad(format!("safety must lie in (0, 1], got {}", self.safety));
        }
        if !(self.epsilon0 > 0.0) {
            return bad(format!("epsilon0 must be positive, got {}", self.epsilon0));
        }
        if !(self.concentration_radius > 0.0) {
            return bad(format!(
                "concentration.radius must be positive, got {}",
                self.concentration_radius
            ));
        }
        if !(self.stop_ao_inf >= 0.0) {
            return bad(format!("stop.ao_inf must be nonnegative, got {}", self.stop_ao_inf));
        }
        if self.cadence == 0 {
            return bad("cadence must be at least 1".into());
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        if !(self.tangential_smoothing >= 0.0 && self.tangential_smoothing < 1.0) {
            return bad(format!(
                "mesh.tangential_smoothing must lie in [0, 1), got {}",
                self.tangential_smoothing
            ));
        }
        match (self.dt_policy, self.dt_value) {
            (DtPolicy::Fixed, None) => return bad("dt.policy = fixed requires dt.value".into()),
            (_, Some(dt)) if !(dt > 0.0) => return bad(format!("dt.value must be positive, got {dt}")),
            _ => {}
        }
        if self.backend == Backend::Spectral {
            if self.bandlimit < 4 {
                return bad(format!("bandlimit must be at least 4, got {}", self.bandlimit));
            }
            if !(self.oversampling >= 1.5) {
                return bad(format!("oversampling must be at least 1.5, got {}", self.oversampling));
            }
            if self.shape.kind == ShapeKind::ObjFile {
                return bad("an OBJ initial surface requires backend = mesh".into());
            }
        }
        self.shape.validate()
    }

    /// The full configuration as `key = value` lines; parsing the text
    /// gives back an equal configuration.
    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("backend = {}", self.backend),
            format!("bandlimit = {}", self.bandlimit),
            format!("oversampling = {}", fmt_f64(self.oversampling)),
            format!("shape.kind = {}", self.shape.kind),
            format!("shape.radius = {}", fmt_f64(self.shape.radius)),
            format!("shape.perturb = {}", self.shape.perturbations_to_string()),
            format!(
                "shape.axes = {}",
                self.shape.axes.map(fmt_f64).join(",")
            ),
        ];
        if let Some(p) = &self.shape.path {
            lines.push(format!("mesh = {}", p.display()));
        }
        lines.extend([
            format!("mesh.subdivisions = {}", self.mesh_subdivisions),
            format!("mesh.tangential_smoothing = {}", fmt_f64(self.tangential_smoothing)),
            format!("dt.policy = {}", self.dt_policy),
        ]);
        if let Some(dt) = self.dt_value {
            lines.push(format!("dt.value = {}", fmt_f64(dt)));
        }
        lines.extend([
            format!("safety = {}", fmt_f64(self.safety)),
            format!("t_end = {}", fmt_f64(self.t_end)),
            format!("max_steps = {}", self.max_steps),
            format!("cadence = {}", self.cadence),
            format!("snapshot.cadence = {}", self.snapshot_cadence),
            format!("stop.ao_inf = {}", fmt_f64(self.stop_ao_inf)),
            format!("concentration.radius = {}", fmt_f64(self.concentration_radius)),
            format!("epsilon0 = {}", fmt_f64(self.epsilon0)),
            format!("out.dir = {}", self.out_dir.display()),
        ]);
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }
}
