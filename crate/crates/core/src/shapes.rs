//! Initial surfaces for either backend.

use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{FlowError, Result};
use crate::mesh::{icosphere, obj, Point, TriangleMesh};
use crate::radial::RadialGraphState;
use crate::sphere::{coeff_index, evaluate_at, SphereGrid, SphericalField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    Sphere,
    ShPerturbedSphere,
    Ellipsoid,
    ObjFile,
}

impl ShapeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ShapeKind::Sphere => "sphere",
            ShapeKind::ShPerturbedSphere => "sh-perturbed-sphere",
            ShapeKind::Ellipsoid => "ellipsoid",
            ShapeKind::ObjFile => "obj-file",
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ShapeKind {
    type Err = FlowError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(ShapeKind::Sphere),
            "sh-perturbed-sphere" => Ok(ShapeKind::ShPerturbedSphere),
            "ellipsoid" => Ok(ShapeKind::Ellipsoid),
            "obj-file" => Ok(ShapeKind::ObjFile),
            other => Err(FlowError::Config(format!("unknown shape kind '{other}'"))),
        }
    }
}

/// One term `amplitude · Y_lm` of a perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub l: usize,
    pub m: i64,
    pub amplitude: f64,
}

/// Description of an initial surface.
///
/// A perturbed sphere is `ρ = R (1 + Σ ε_lm Y_lm)` with the orthonormal
/// harmonics of [`SphericalField`], so the `(l, m)` coefficient of `ρ` is
/// `R ε_lm` and the mean coefficient is `R √(4π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub radius: f64,
    pub perturbations: Vec<Perturbation>,
    pub axes: [f64; 3],
    pub path: Option<PathBuf>,
}

impl Default for ShapeSpec {
    fn default() -> Self {
        ShapeSpec::sphere(1.0)
    }
}

impl ShapeSpec {
    pub fn sphere(radius: f64) -> Self {
        ShapeSpec {
            kind: ShapeKind::Sphere,
            radius,
            perturbations: Vec::new(),
            axes: [1.0; 3],
            path: None,
        }
    }

    pub fn perturbed_sphere(radius: f64, terms: &[(usize, i64, f64)]) -> Self {
        ShapeSpec {
            kind: ShapeKind::ShPerturbedSphere,
            perturbations: terms
                .iter()
                .map(|&(l, m, amplitude)| Perturbation { l, m, amplitude })
                .collect(),
            ..ShapeSpec::sphere(radius)
        }
    }

    pub fn ellipsoid(axes: [f64; 3]) -> Self {
        ShapeSpec {
            kind: ShapeKind::Ellipsoid,
            axes,
            ..ShapeSpec::sphere(1.0)
        }
    }

    pub fn obj_file(path: impl Into<PathBuf>) -> Self {
        ShapeSpec {
            kind: ShapeKind::ObjFile,
            path: Some(path.into()),
            ..ShapeSpec::sphere(1.0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FlowError::Config(msg));
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad(format!("shape radius must be positive, got {}", self.radius));
        }
        match self.kind {
            ShapeKind::ShPerturbedSphere => {
                for p in &self.perturbations {
                    if p.m.unsigned_abs() as usize > p.l {
                        return bad(format!("perturbation order |m| = {} exceeds l = {}", p.m.abs(), p.l));
                    }
                    if !(p.amplitude.abs() < 1.0) {
                        return bad(format!(
                            "perturbation amplitude {} must be below 1 (relative to the radius)",
                            p.amplitude
                        ));
                    }
                }
            }
            ShapeKind::Ellipsoid => {
                if self.axes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
                    return bad(format!("ellipsoid semi-axes must be positive, got {:?}", self.axes));
                }
            }
            ShapeKind::ObjFile => {
                if self.path.is_none() {
                    return bad("obj-file shape needs a mesh path".into());
                }
            }
            ShapeKind::Sphere => {}
        }
        Ok(())
    }

    /// `shape.perturb` syntax: `l,m,amp;l,m,amp`.
    pub fn perturbations_to_string(&self) -> String {
        self.perturbations
            .iter()
            .map(|p| format!("{},{},{}", p.l, p.m, crate::fmt_f64(p.amplitude)))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn parse_perturbations(text: &str) -> Result<Vec<Perturbation>> {
        text.split(';')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|term| {
                let parts: Vec<&str> = term.split(',').map(str::trim).collect();
                let bad = || FlowError::Config(format!("perturbation '{term}' is not 'l,m,amplitude'"));
                if parts.len() != 3 {
                    return Err(bad());
                }
                Ok(Perturbation {
                    l: parts[0].parse().map_err(|_| bad())?,
                    m: parts[1].parse().map_err(|_| bad())?,
                    amplitude: parts[2].parse().map_err(|_| bad())?,
                })
            })
            .collect()
    }
}

/// Distance from the origin to `x²/a² + y²/b² + z²/c² = 1` along `dir`.
pub fn ellipsoid_ray_radius(axes: [f64; 3], dir: [f64; 3]) -> f64 {
    let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    let s: f64 = (0..3).map(|i| (dir[i] / (n * axes[i])).powi(2)).sum();
    1.0 / s.sqrt()
}

/// Radial-graph initial state on `grid`.
pub fn generate_radial(spec: &ShapeSpec, grid: Arc<SphereGrid>) -> Result<RadialGraphState> {
    spec.validate()?;
    let lmax = grid.bandlimit();
    let field = match spec.kind {
        ShapeKind::Sphere => SphericalField::constant(grid, spec.radius),
        ShapeKind::ShPerturbedSphere => {
            let mut coeffs = vec![0.0; grid.spec().num_coeffs()];
            coeffs[0] = spec.radius * (4.0 * std::f64::consts::PI).sqrt();
            for p in &spec.perturbations {
                if p.l > lmax {
                    return Err(FlowError::Generation(format!(
                        "perturbation degree {} exceeds bandlimit {lmax}",
                        p.l
                    )));
                }
                coeffs[coeff_index(p.l, p.m)] += spec.radius * p.amplitude;
            }
            SphericalField::from_coeffs(grid, coeffs)?
        }
        ShapeKind::Ellipsoid => {
            let spec_g = grid.spec();
            let values = (0..spec_g.nlat)
                .flat_map(|i| (0..spec_g.nlon).map(move |j| (i, j)))
                .map(|(i, j)| ellipsoid_ray_radius(spec.axes, grid.direction(i, j)))
                .collect();
            SphericalField::from_values(grid, values)?
        }
        ShapeKind::ObjFile => {
            return Err(FlowError::Config(
                "obj-file shapes are only available on the mesh backend".into(),
            ))
        }
    };
    RadialGraphState::new(field, 0.0).map_err(|e| match e {
        FlowError::ChartExit { detail, .. } => {
            FlowError::Generation(format!("shape is not a radial graph: {detail}"))
        }
        other => other,
    })
}

/// Largest `|x²/a² + y²/b² + z²/c² − 1|` over the grid points of a state.
pub fn ellipsoid_ray_residual(state: &RadialGraphState, axes: [f64; 3]) -> f64 {
    let grid = state.grid();
    let spec = grid.spec();
    let rho = state.values();
    let mut worst = 0.0_f64;
    for i in 0..spec.nlat {
        for j in 0..spec.nlon {
            let d = grid.direction(i, j);
            let r = rho[i * spec.nlon + j];
            let q: f64 = (0..3).map(|k| (r * d[k] / axes[k]).powi(2)).sum();
            worst = worst.max((q - 1.0).abs());
        }
    }
    worst
}

/// Triangle mesh of the shape; analytic shapes use an icosphere with
/// `subdivisions` levels pushed out along rays.
pub fn generate_mesh(spec: &ShapeSpec, subdivisions: u32) -> Result<TriangleMesh> {
    spec.validate()?;
    match spec.kind {
        ShapeKind::Sphere => icosphere(subdivisions, spec.radius),
        ShapeKind::ShPerturbedSphere => {
            let lmax = spec.perturbations.iter().map(|p| p.l).max().unwrap_or(0);
            let mut coeffs = vec![0.0; (lmax + 1) * (lmax + 1)];
            coeffs[0] = spec.radius * (4.0 * std::f64::consts::PI).sqrt();
            for p in &spec.perturbations {
                coeffs[coeff_index(p.l, p.m)] += spec.radius * p.amplitude;
            }
            radial_mesh(&coeffs, lmax, subdivisions)
        }
        ShapeKind::Ellipsoid => {
            let base = icosphere(subdivisions, 1.0)?;
            base.map_vertices(|p| p * ellipsoid_ray_radius(spec.axes, [p.x, p.y, p.z]))
        }
        ShapeKind::ObjFile => {
            let path = spec.path.as_ref().expect("validated");
            let file = File::open(path).map_err(|e| FlowError::io(path, e))?;
            obj::read(BufReader::new(file), &path.display().to_string())
        }
    }
}

/// Icosphere directions scaled by the expansion `coeffs` of degree `lmax`.
pub fn radial_mesh(coeffs: &[f64], lmax: usize, subdivisions: u32) -> Result<TriangleMesh> {
    let base = icosphere(subdivisions, 1.0)?;
    let radii: Vec<f64> = base
        .vertices()
        .iter()
        .map(|p| evaluate_at(coeffs, lmax, [p.x, p.y, p.z]))
        .collect();
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0)) {
        return Err(FlowError::Generation(format!("radius {r} is not positive")));
    }
    let vertices: Vec<Point> = base.vertices().iter().zip(&radii).map(|(p, r)| p * *r).collect();
    base.with_vertices(vertices)
}

/// Mesh sampling of a radial state at the icosphere vertices.
pub fn sample_radial_state(state: &RadialGraphState, subdivisions: u32) -> Result<TriangleMesh> {
    radial_mesh(state.coeffs(), state.grid().bandlimit(), subdivisions)
}
