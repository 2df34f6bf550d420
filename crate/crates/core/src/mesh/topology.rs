use std::collections::HashMap;

use super::{edge_key, TriangleMesh};
use crate::error::{CbfError, Result};
use crate::tensor::{norm, sub, Vec2};

/// Triangle and local edge index sharing an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    pub first: (usize, usize),
    pub second: Option<(usize, usize)>,
}

/// Edge set of a mesh with a fixed orientation per edge.
///
/// `edges[e] = [a, b]` is traversed `a -> b` by the first incident
/// triangle, whose outward normal is `normals[e]`. For interior edges the
/// first triangle is the one traversing the edge from the lower to the
/// higher vertex index, so the stored normal points from the first
/// incident triangle into the second. `tangents[e] = (-n_2, n_1)` is the
/// unit vector from `a` to `b`.
#[derive(Debug, Clone)]
pub struct EdgeTopology {
    pub edges: Vec<[usize; 2]>,
    pub incidence: Vec<Incidence>,
    /// Edge id of local edge `i` of each triangle.
    pub triangle_edges: Vec<[usize; 3]>,
    /// `true` when the triangle is the first incident triangle of that edge.
    pub is_first: Vec<[bool; 3]>,
    pub normals: Vec<Vec2>,
    pub tangents: Vec<Vec2>,
    pub lengths: Vec<f64>,
    /// Boundary label for boundary edges, `None` for interior ones.
    pub boundary: Vec<Option<i32>>,
}

impl EdgeTopology {
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_boundary(&self, e: usize) -> bool {
        self.incidence[e].second.is_none()
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_edges()).filter(|&e| self.is_boundary(e))
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_edges()).filter(|&e| !self.is_boundary(e))
    }
}

/// Enumerates edges in order of first appearance over `(triangle, local edge)`.
pub fn build_edges(mesh: &TriangleMesh) -> Result<EdgeTopology> {
    let nt = mesh.triangles.len();
    let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * nt / 2 + 4);
    let mut incidence: Vec<Incidence> = Vec::new();
    let mut triangle_edges = vec![[0usize; 3]; nt];

    for (t, tri) in mesh.triangles.iter().enumerate() {
        for i in 0..3 {
            let a = tri[(i + 1) % 3];
            let b = tri[(i + 2) % 3];
            let key = edge_key(a, b);
            match index.get(&key) {
                None => {
                    index.insert(key, incidence.len());
                    triangle_edges[t][i] = incidence.len();
                    incidence.push(Incidence {
                        first: (t, i),
                        second: None,
                    });
                }
                Some(&e) => {
                    let inc = &mut incidence[e];
                    if inc.second.is_some() {
                        return Err(CbfError::NonConforming(key.0, key.1));
                    }
                    triangle_edges[t][i] = e;
                    // lower -> higher traversal comes first
                    if a < b {
                        inc.second = Some(inc.first);
                        inc.first = (t, i);
                    } else {
                        inc.second = Some((t, i));
                    }
                }
            }
        }
    }

    let ne = incidence.len();
    let mut edges = Vec::with_capacity(ne);
    let mut normals = Vec::with_capacity(ne);
    let mut tangents = Vec::with_capacity(ne);
    let mut lengths = Vec::with_capacity(ne);
    let mut boundary = Vec::with_capacity(ne);
    let mut is_first = vec![[false; 3]; nt];
    for inc in &incidence {
        let (t, i) = inc.first;
        let tri = mesh.triangles[t];
        let a = tri[(i + 1) % 3];
        let b = tri[(i + 2) % 3];
        if let Some((t2, i2)) = inc.second {
            let tri2 = mesh.triangles[t2];
            if tri2[(i2 + 1) % 3] != b || tri2[(i2 + 2) % 3] != a {
                return Err(CbfError::Mesh(format!(
                    "triangles {t} and {t2} have inconsistent orientation"
                )));
            }
        }
        is_first[t][i] = true;
        let d = sub(mesh.vertices[b], mesh.vertices[a]);
        let len = norm(d);
        let s = [d[0] / len, d[1] / len];
        edges.push([a, b]);
        tangents.push(s);
        normals.push([s[1], -s[0]]);
        lengths.push(len);
        boundary.push(if inc.second.is_none() {
            Some(mesh.boundary_labels.get(&edge_key(a, b)).copied().unwrap_or(0))
        } else {
            None
        });
    }

    Ok(EdgeTopology {
        edges,
        incidence,
        triangle_edges,
        is_first,
        normals,
        tangents,
        lengths,
        boundary,
    })
}
