//! Wavefront OBJ subset: `v x y z` and triangular `f a b c` records with
//! 1-based indices. Other record types are ignored on read.

use std::io::{BufRead, Write};

use super::{Point, TriangleMesh};
use crate::error::{FlowError, Result};
use crate::fmt_f64;

pub fn read<R: BufRead>(input: R, source_name: &str) -> Result<TriangleMesh> {
    let err = |line: usize, msg: String| FlowError::Parse {
        source_name: source_name.to_string(),
        line,
        msg,
    };
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| FlowError::io(source_name, e))?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| err(n + 1, format!("bad vertex coordinate: {e}")))?;
                if c.len() != 3 {
                    return Err(err(n + 1, "vertex needs 3 coordinates".into()));
                }
                vertices.push(Point::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<&str> = it.collect();
                if idx.len() != 3 {
                    return Err(err(
                        n + 1,
                        format!("only triangular faces are supported, got {} corners", idx.len()),
                    ));
                }
                let mut face = [0usize; 3];
                for (k, tok) in idx.iter().enumerate() {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: usize = head
                        .parse()
                        .map_err(|_| err(n + 1, format!("bad face index '{tok}'")))?;
                    if i == 0 {
                        return Err(err(n + 1, "face indices are 1-based".into()));
                    }
                    face[k] = i - 1;
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, faces)
}

pub fn write<W: Write>(mesh: &TriangleMesh, out: &mut W) -> Result<()> {
    let io = |e| FlowError::io("<obj>", e);
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z)).map_err(io)?;
    }
    for f in mesh.faces() {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).map_err(io)?;
    }
    Ok(())
}
