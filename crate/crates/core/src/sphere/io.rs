//! CSV dumps of spherical fields: `l,m,value` for coefficients and
//! `theta,phi,value` for grid samples.

use std::io::{BufRead, Write};

use super::grid::{coeff_index, SphereGrid};
use super::SphericalField;
use crate::error::{FlowError, Result};
use crate::fmt_f64;

pub const COEFF_HEADER: &str = "l,m,value";
pub const GRID_HEADER: &str = "theta,phi,value";

pub fn write_coeffs<W: Write>(field: &SphericalField, out: &mut W) -> Result<()> {
    let coeffs = field.require_coeffs()?;
    let lmax = field.grid().bandlimit();
    let io = |e| FlowError::io("<coefficient csv>", e);
    writeln!(out, "{COEFF_HEADER}").map_err(io)?;
    for l in 0..=lmax {
        for m in -(l as i64)..=(l as i64) {
            writeln!(out, "{l},{m},{}", fmt_f64(coeffs[coeff_index(l, m)])).map_err(io)?;
        }
    }
    Ok(())
}

pub fn write_grid<W: Write>(field: &SphericalField, out: &mut W) -> Result<()> {
    let values = field.require_values()?;
    let grid: &SphereGrid = field.grid();
    let nlon = grid.spec().nlon;
    let io = |e| FlowError::io("<grid csv>", e);
    writeln!(out, "{GRID_HEADER}").map_err(io)?;
    for (i, theta) in grid.colatitudes().iter().enumerate() {
        for (j, phi) in grid.longitudes().iter().enumerate() {
            writeln!(
                out,
                "{},{},{}",
                fmt_f64(*theta),
                fmt_f64(*phi),
                fmt_f64(values[i * nlon + j])
            )
            .map_err(io)?;
        }
    }
    Ok(())
}

/// Reads an `l,m,value` dump. Returns the largest degree present and the
/// dense coefficient vector of that bandlimit; absent entries are zero.
pub fn read_coeffs<R: BufRead>(input: R, source_name: &str) -> Result<(usize, Vec<f64>)> {
    let parse_err = |line: usize, msg: String| FlowError::Parse {
        source_name: source_name.to_string(),
        line,
        msg,
    };
    let mut entries = Vec::new();
    let mut lmax = 0usize;
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| FlowError::io(source_name, e))?;
        let line = line.trim();
        if n == 0 {
            if line != COEFF_HEADER {
                return Err(parse_err(1, format!("expected header '{COEFF_HEADER}'")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(parse_err(n + 1, "expected 3 columns".into()));
        }
        let l: usize = cols[0]
            .parse()
            .map_err(|_| parse_err(n + 1, format!("bad degree '{}'", cols[0])))?;
        let m: i64 = cols[1]
            .parse()
            .map_err(|_| parse_err(n + 1, format!("bad order '{}'", cols[1])))?;
        let v: f64 = cols[2]
            .parse()
            .map_err(|_| parse_err(n + 1, format!("bad value '{}'", cols[2])))?;
        if m.unsigned_abs() as usize > l {
            return Err(parse_err(n + 1, format!("|m| > l for ({l}, {m})")));
        }
        lmax = lmax.max(l);
        entries.push((l, m, v));
    }
    let mut coeffs = vec![0.0; (lmax + 1) * (lmax + 1)];
    for (l, m, v) in entries {
        coeffs[coeff_index(l, m)] = v;
    }
    Ok((lmax, coeffs))
}
