//! Plain-text mesh format.
//!
//! ```text
//! nv nt nbe
//! x y              (nv lines)
//! i j k region     (nt lines)
//! i j label        (nbe lines)
//! ```
//! Indices are 0-based. Coordinates are written with the shortest decimal
//! representation that round-trips exactly.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{edge_key, TriangleMesh};
use crate::error::{CbfError, Result};

pub fn write_mesh<W: Write>(mesh: &TriangleMesh, mut out: W) -> Result<()> {
    writeln!(
        out,
        "{} {} {}",
        mesh.n_vertices(),
        mesh.n_triangles(),
        mesh.boundary_labels.len()
    )?;
    for v in &mesh.vertices {
        writeln!(out, "{} {}", v[0], v[1])?;
    }
    for (t, tri) in mesh.triangles.iter().enumerate() {
        writeln!(out, "{} {} {} {}", tri[0], tri[1], tri[2], mesh.regions[t])?;
    }
    for (&(a, b), label) in &mesh.boundary_labels {
        writeln!(out, "{a} {b} {label}")?;
    }
    Ok(())
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<TriangleMesh> {
    let mut lines = input.lines().enumerate();
    let mut next = |expected: usize| -> Result<(usize, Vec<String>)> {
        let (n, line) = lines.next().ok_or(CbfError::Parse {
            line: 0,
            msg: "unexpected end of file".into(),
        })?;
        let line = line?;
        let fields: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
        if fields.len() != expected {
            return Err(CbfError::Parse {
                line: n + 1,
                msg: format!("expected {expected} fields, found {}", fields.len()),
            });
        }
        Ok((n + 1, fields))
    };
    fn parse<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
        s.parse().map_err(|_| CbfError::Parse {
            line,
            msg: format!("cannot parse '{s}'"),
        })
    }

    let (l, header) = next(3)?;
    let nv: usize = parse(l, &header[0])?;
    let nt: usize = parse(l, &header[1])?;
    let nbe: usize = parse(l, &header[2])?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, f) = next(2)?;
        vertices.push([parse(l, &f[0])?, parse(l, &f[1])?]);
    }
    let mut triangles = Vec::with_capacity(nt);
    let mut regions = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (l, f) = next(4)?;
        triangles.push([parse(l, &f[0])?, parse(l, &f[1])?, parse(l, &f[2])?]);
        regions.push(parse(l, &f[3])?);
    }
    let mut labels = BTreeMap::new();
    for _ in 0..nbe {
        let (l, f) = next(3)?;
        let a: usize = parse(l, &f[0])?;
        let b: usize = parse(l, &f[1])?;
        labels.insert(edge_key(a, b), parse(l, &f[2])?);
    }
    TriangleMesh::new(vertices, triangles, regions, labels)
}
