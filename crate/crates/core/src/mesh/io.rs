//! OBJ and OFF readers, OBJ writers.
//!
//! OBJ: ASCII `v`/`f` records only, 1-based indices; texture/normal fields of
//! `f` records are ignored. OFF: the plain ASCII variant. Only triangular
//! faces are accepted.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::energy::PlanarMap;
use crate::error::{Error, Result};
use crate::mesh::TriMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
}

/// Load a mesh in the given format and run full validation.
pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<TriMesh> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let (vertices, faces) = match format {
        MeshFormat::Obj => parse_obj(reader, path)?,
        MeshFormat::Off => parse_off(reader, path)?,
    };
    TriMesh::new(vertices, faces)
}

/// Load a mesh, picking the format from the file extension.
pub fn load_mesh_auto(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("obj") => load_mesh(path, MeshFormat::Obj),
        Some("off") => load_mesh(path, MeshFormat::Off),
        _ => Err(Error::Parse {
            path: path.display().to_string(),
            line: 0,
            msg: "unknown mesh extension (expected .obj or .off)".into(),
        }),
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_obj(
    reader: impl BufRead,
    path: &Path,
) -> Result<(Vec<[f64; 3]>, Vec<[usize; 3]>)> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (ln, line) in reader.lines().enumerate() {
        let ln = ln + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut p = [0.0; 3];
                for c in &mut p {
                    let tok = it
                        .next()
                        .ok_or_else(|| parse_err(path, ln, "vertex needs 3 coordinates"))?;
                    *c = tok
                        .parse::<f64>()
                        .map_err(|_| parse_err(path, ln, format!("bad coordinate '{tok}'")))?;
                    if !c.is_finite() {
                        return Err(parse_err(path, ln, "non-finite coordinate"));
                    }
                }
                vertices.push(p);
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|tok| {
                        let first = tok.split('/').next().unwrap_or(tok);
                        first
                            .parse::<i64>()
                            .ok()
                            .filter(|&i| i > 0)
                            .map(|i| (i - 1) as usize)
                            .ok_or_else(|| parse_err(path, ln, format!("bad face index '{tok}'")))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(parse_err(
                        path,
                        ln,
                        format!("face has {} vertices, only triangles are supported", idx.len()),
                    ));
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            // vt, vn, o, g, s, usemtl, mtllib, ...
            _ => {}
        }
    }
    Ok((vertices, faces))
}

fn parse_off(
    reader: impl BufRead,
    path: &Path,
) -> Result<(Vec<[f64; 3]>, Vec<[usize; 3]>)> {
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| match l {
            Ok(s) => {
                let t = s.trim();
                !t.is_empty() && !t.starts_with('#')
            }
            Err(_) => true,
        });

    let (ln, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 0, "empty file"))?;
    let header = header?;
    if header.trim() != "OFF" {
        return Err(parse_err(path, ln, "missing OFF header"));
    }

    let (ln, counts) = lines
        .next()
        .ok_or_else(|| parse_err(path, ln, "missing count line"))?;
    let counts = counts?;
    let nums: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(path, ln, "bad count line"))?;
    if nums.len() < 2 {
        return Err(parse_err(path, ln, "count line needs nV nF [nE]"));
    }
    let (nv, nf) = (nums[0], nums[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, "unexpected end of vertex list"))?;
        let line = line?;
        let mut p = [0.0; 3];
        let mut it = line.split_whitespace();
        for c in &mut p {
            let tok = it
                .next()
                .ok_or_else(|| parse_err(path, ln, "vertex needs 3 coordinates"))?;
            *c = tok
                .parse::<f64>()
                .map_err(|_| parse_err(path, ln, format!("bad coordinate '{tok}'")))?;
        }
        vertices.push(p);
    }

    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, "unexpected end of face list"))?;
        let line = line?;
        let nums: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(path, ln, "bad face line"))?;
        if nums.first() != Some(&3) || nums.len() < 4 {
            return Err(parse_err(path, ln, "only triangular faces are supported"));
        }
        faces.push([nums[1], nums[2], nums[3]]);
    }
    Ok((vertices, faces))
}

/// Write a 3D mesh as ASCII OBJ.
pub fn write_obj(path: impl AsRef<Path>, mesh: &TriMesh) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in mesh.vertices() {
        writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
    }
    for f in mesh.faces() {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

/// Write a planar map as OBJ with z = 0, reusing the mesh connectivity.
pub fn write_planar_obj(
    path: impl AsRef<Path>,
    map: &PlanarMap,
    faces: &[[usize; 3]],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for p in map.coords() {
        writeln!(w, "v {} {} 0", p[0], p[1])?;
    }
    for f in faces {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}
