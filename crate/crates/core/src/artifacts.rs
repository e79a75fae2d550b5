//! Files produced by a simulation: diagnostics CSV, `run.meta` footer and
//! state snapshots (coefficient CSV for radial states, OBJ for meshes).

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::config::FlowConfig;
use crate::diagnostics::write_csv;
use crate::error::{FlowError, Result};
use crate::flow::{initial_state, run_observed, FlowState, MeshState, RunOutcome};
use crate::mesh::obj;
use crate::radial::RadialGraphState;
use crate::sphere::{io as sh_io, GridSpec, SphereGrid};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const META_FILE: &str = "run.meta";

#[derive(Debug, Clone)]
pub struct Artifacts {
    pub diagnostics: PathBuf,
    pub meta: PathBuf,
    pub final_state: PathBuf,
    pub snapshots: Vec<PathBuf>,
}

fn extension(state: &FlowState) -> &'static str {
    match state {
        FlowState::Radial(_) => "csv",
        FlowState::Mesh(_) => "obj",
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| FlowError::io(path, e))?))
}

/// Writes a snapshot: SH coefficients (`l,m,value`) or an OBJ mesh.
pub fn write_state(state: &FlowState, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    match state {
        FlowState::Radial(s) => sh_io::write_coeffs(s.rho(), &mut out)?,
        FlowState::Mesh(m) => obj::write(&m.mesh, &mut out)?,
    }
    out.flush().map_err(|e| FlowError::io(path, e))
}

/// Reads a snapshot written by [`write_state`], choosing the format by
/// extension. Coefficient files are placed on a grid oversampled by
/// `oversampling` relative to their degree.
pub fn read_state(path: &Path, oversampling: f64) -> Result<FlowState> {
    let file = File::open(path).map_err(|e| FlowError::io(path, e))?;
    let name = path.display().to_string();
    match path.extension().and_then(|e| e.to_str()) {
        Some("obj") => Ok(FlowState::Mesh(MeshState {
            mesh: obj::read(BufReader::new(file), &name)?,
            time: 0.0,
        })),
        Some("csv") => {
            let (lmax, coeffs) = sh_io::read_coeffs(BufReader::new(file), &name)?;
            let grid = Arc::new(SphereGrid::new(GridSpec::oversampled(lmax, oversampling)?)?);
            Ok(FlowState::Radial(RadialGraphState::from_coeffs(grid, coeffs, 0.0)?))
        }
        _ => Err(FlowError::Argument(format!(
            "{name}: expected a .obj mesh or a .csv coefficient file"
        ))),
    }
}

/// Runs a configuration and writes every artifact into `config.out_dir`.
/// Artifacts are written for singular runs too.
pub fn simulate(config: &FlowConfig) -> Result<(RunOutcome, Artifacts)> {
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|e| FlowError::io(dir, e))?;
    let initial = initial_state(config)?;
    let mut snapshots = Vec::new();
    let outcome = run_observed(config, initial, |step, state| {
        if config.snapshot_cadence > 0 && step % config.snapshot_cadence == 0 {
            let path = dir.join(format!("snapshot_{step:08}.{}", extension(state)));
            write_state(state, &path)?;
            snapshots.push(path);
        }
        Ok(())
    })?;

    let diagnostics = dir.join(DIAGNOSTICS_FILE);
    let mut out = create(&diagnostics)?;
    write_csv(&outcome.trajectory.records(), &mut out).map_err(|e| FlowError::io(&diagnostics, e))?;
    out.flush().map_err(|e| FlowError::io(&diagnostics, e))?;

    let final_state = dir.join(format!("final.{}", extension(outcome.final_state())));
    write_state(outcome.final_state(), &final_state)?;

    let meta = dir.join(META_FILE);
    let mut out = create(&meta)?;
    let mut text = config.to_text();
    for line in outcome.footer_lines() {
        text.push_str(&line);
        text.push('\n');
    }
    out.write_all(text.as_bytes()).map_err(|e| FlowError::io(&meta, e))?;
    out.flush().map_err(|e| FlowError::io(&meta, e))?;

    Ok((
        outcome,
        Artifacts {
            diagnostics,
            meta,
            final_state,
            snapshots,
        },
    ))
}
