//! Newest-vertex bisection with conformity closure.
//!
//! Marking works on edges: a marked triangle marks its refinement edge,
//! and every triangle touching a marked edge must also mark its own
//! refinement edge. The closure is a fixed point over a finite edge set, so
//! it always terminates. Each triangle is then split into 2, 3 or 4
//! children in one pass.

use std::collections::{BTreeMap, HashMap};

use super::{build_edges, edge_key, EdgeKey, TriangleMesh};
use crate::error::{CbfError, Result};

pub fn refine(mesh: &TriangleMesh, marked: &[usize]) -> Result<TriangleMesh> {
    let nt = mesh.n_triangles();
    if let Some(&bad) = marked.iter().find(|&&t| t >= nt) {
        return Err(CbfError::Mesh(format!("marked triangle {bad} out of range")));
    }
    if marked.is_empty() {
        return Ok(mesh.clone());
    }
    let topo = build_edges(mesh)?;
    let ref_edge_id = |t: usize| topo.triangle_edges[t][mesh.refinement_edge[t] as usize];

    let mut edge_marked = vec![false; topo.n_edges()];
    let mut stack = Vec::new();
    for &t in marked {
        let e = ref_edge_id(t);
        if !edge_marked[e] {
            edge_marked[e] = true;
            stack.push(e);
        }
    }
    while let Some(e) = stack.pop() {
        let inc = topo.incidence[e];
        for (t, _) in std::iter::once(inc.first).chain(inc.second) {
            let r = ref_edge_id(t);
            if !edge_marked[r] {
                edge_marked[r] = true;
                stack.push(r);
            }
        }
    }

    let mut vertices = mesh.vertices.clone();
    let mut midpoint: HashMap<EdgeKey, usize> = HashMap::new();
    for (e, &m) in edge_marked.iter().enumerate() {
        if m {
            let [a, b] = topo.edges[e];
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            midpoint.insert(edge_key(a, b), vertices.len());
            vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        }
    }

    let mut out = TriangleMesh {
        vertices,
        triangles: Vec::with_capacity(nt * 2),
        regions: Vec::with_capacity(nt * 2),
        boundary_labels: BTreeMap::new(),
        refinement_edge: Vec::with_capacity(nt * 2),
        parent: Vec::with_capacity(nt * 2),
    };
    for t in 0..nt {
        bisect(
            &mut out,
            &midpoint,
            mesh.triangles[t],
            mesh.refinement_edge[t] as usize,
            mesh.regions[t],
            t,
        );
    }
    for (&(a, b), &label) in &mesh.boundary_labels {
        match midpoint.get(&(a, b)) {
            Some(&m) => {
                out.boundary_labels.insert(edge_key(a, m), label);
                out.boundary_labels.insert(edge_key(m, b), label);
            }
            None => {
                out.boundary_labels.insert((a, b), label);
            }
        }
    }
    Ok(out)
}

fn bisect(
    out: &mut TriangleMesh,
    midpoint: &HashMap<EdgeKey, usize>,
    tri: [usize; 3],
    r: usize,
    region: i32,
    parent: usize,
) {
    let v0 = tri[r];
    let v1 = tri[(r + 1) % 3];
    let v2 = tri[(r + 2) % 3];
    match midpoint.get(&edge_key(v1, v2)) {
        None => {
            out.triangles.push(tri);
            out.refinement_edge.push(r as u8);
            out.regions.push(region);
            out.parent.push(parent);
        }
        Some(&m) => {
            // the new vertex m is opposite each child's refinement edge
            bisect(out, midpoint, [v0, v1, m], 2, region, parent);
            bisect(out, midpoint, [v0, m, v2], 1, region, parent);
        }
    }
}

/// Marks every triangle `passes` times (two passes halve `h`).
pub fn refine_uniform(mesh: &TriangleMesh, passes: usize) -> Result<TriangleMesh> {
    let mut m = mesh.clone();
    for _ in 0..passes {
        let all: Vec<usize> = (0..m.n_triangles()).collect();
        m = refine(&m, &all)?;
    }
    Ok(m)
}
