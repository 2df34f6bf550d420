//! Conforming triangular meshes.

mod generate;
mod io;
mod refine;
mod topology;

use std::collections::BTreeMap;

use crate::error::{CbfError, Result};
use crate::tensor::{sub, Point};

pub use generate::{
    generate_fracture_domain, generate_fracture_domain_with, generate_lshape, generate_rectangle, generate_square,
    FractureNetwork, FRACTURE_REGION, MATRIX_REGION,
};
pub use io::{read_mesh, write_mesh};
pub use refine::{refine, refine_uniform};
pub use topology::{build_edges, EdgeTopology, Incidence};

/// Boundary edge key: the vertex pair sorted ascending.
pub type EdgeKey = (usize, usize);

#[inline]
pub fn edge_key(a: usize, b: usize) -> EdgeKey {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A triangulation with counterclockwise triangles.
///
/// Local edge `i` of a triangle is the edge opposite its local vertex `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    /// Region label per triangle (material id).
    pub regions: Vec<i32>,
    pub boundary_labels: BTreeMap<EdgeKey, i32>,
    /// Local index of the edge bisected next (opposite the newest vertex).
    pub refinement_edge: Vec<u8>,
    /// Triangle index in the mesh this one was refined from.
    pub parent: Vec<usize>,
}

impl TriangleMesh {
    /// Builds a mesh and checks all invariants. Boundary edges missing from
    /// `boundary_labels` receive label 0. Refinement edges default to the
    /// longest edge of each triangle.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        regions: Vec<i32>,
        mut boundary_labels: BTreeMap<EdgeKey, i32>,
    ) -> Result<Self> {
        if regions.len() != triangles.len() {
            return Err(CbfError::Mesh(format!(
                "{} region labels for {} triangles",
                regions.len(),
                triangles.len()
            )));
        }
        let parent = (0..triangles.len()).collect();
        let mut mesh = TriangleMesh {
            refinement_edge: vec![0; triangles.len()],
            vertices,
            triangles,
            regions,
            boundary_labels: BTreeMap::new(),
            parent,
        };
        mesh.check_indices_and_orientation()?;
        mesh.refinement_edge = mesh.triangles.iter().map(|t| longest_edge(&mesh.vertices, t)).collect();
        let topo = build_edges(&mesh)?;
        for (e, inc) in topo.incidence.iter().enumerate() {
            if inc.second.is_none() {
                let [a, b] = topo.edges[e];
                boundary_labels.entry(edge_key(a, b)).or_insert(0);
            }
        }
        mesh.boundary_labels = boundary_labels;
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_vertices(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_vertices(t);
        let u = sub(p1, p0);
        let v = sub(p2, p0);
        0.5 * (u[0] * v[1] - u[1] * v[0])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.signed_area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [p0, p1, p2] = self.triangle_vertices(t);
        [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0]
    }

    /// Longest edge length of triangle `t`.
    pub fn diameter(&self, t: usize) -> f64 {
        let p = self.triangle_vertices(t);
        (0..3)
            .map(|i| crate::tensor::norm(sub(p[(i + 1) % 3], p[(i + 2) % 3])))
            .fold(0.0, f64::max)
    }

    /// `h = max_T h_T`.
    pub fn mesh_size(&self) -> Result<f64> {
        if self.triangles.is_empty() {
            return Err(CbfError::Mesh("empty mesh has no mesh size".into()));
        }
        Ok((0..self.n_triangles()).map(|t| self.diameter(t)).fold(0.0, f64::max))
    }

    /// Copy with all coordinates multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> TriangleMesh {
        let mut m = self.clone();
        for v in &mut m.vertices {
            v[0] *= factor;
            v[1] *= factor;
        }
        m
    }

    /// Same mesh with triangles listed in the order `perm` (new index `i`
    /// holds old triangle `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> TriangleMesh {
        let mut m = self.clone();
        m.triangles = perm.iter().map(|&i| self.triangles[i]).collect();
        m.regions = perm.iter().map(|&i| self.regions[i]).collect();
        m.refinement_edge = perm.iter().map(|&i| self.refinement_edge[i]).collect();
        m.parent = perm.iter().map(|&i| self.parent[i]).collect();
        m
    }

    fn check_indices_and_orientation(&self) -> Result<()> {
        let nv = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(CbfError::Mesh(format!("triangle {t} has vertex index out of range")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(CbfError::Mesh(format!("triangle {t} is degenerate")));
            }
            if self.signed_area(t) <= 0.0 {
                return Err(CbfError::Mesh(format!("triangle {t} has non-positive signed area")));
            }
        }
        Ok(())
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let n = self.triangles.len();
        if self.regions.len() != n || self.refinement_edge.len() != n || self.parent.len() != n {
            return Err(CbfError::Mesh("per-triangle arrays have mismatched lengths".into()));
        }
        if self.refinement_edge.iter().any(|&r| r > 2) {
            return Err(CbfError::Mesh("refinement edge index out of range".into()));
        }
        self.check_indices_and_orientation()?;
        let topo = build_edges(self)?;
        let mut degree = vec![0usize; self.vertices.len()];
        let mut n_boundary = 0;
        for (e, inc) in topo.incidence.iter().enumerate() {
            if inc.second.is_none() {
                n_boundary += 1;
                let [a, b] = topo.edges[e];
                degree[a] += 1;
                degree[b] += 1;
                if !self.boundary_labels.contains_key(&edge_key(a, b)) {
                    return Err(CbfError::Mesh(format!("boundary edge ({a}, {b}) has no label")));
                }
            }
        }
        if n_boundary != self.boundary_labels.len() {
            return Err(CbfError::Mesh(
                "boundary label map contains edges that are not boundary edges".into(),
            ));
        }
        if degree.iter().any(|d| d % 2 != 0) {
            return Err(CbfError::Mesh("boundary edges do not form closed loops".into()));
        }
        Ok(())
    }
}

fn longest_edge(vertices: &[Point], tri: &[usize; 3]) -> u8 {
    let mut best = 0;
    let mut best_len = -1.0;
    for i in 0..3 {
        let a = vertices[tri[(i + 1) % 3]];
        let b = vertices[tri[(i + 2) % 3]];
        let l = crate::tensor::norm(sub(a, b));
        // strict comparison with a relative margin keeps ties on the lowest index
        if l > best_len * (1.0 + 1e-12) {
            best = i;
            best_len = l;
        }
    }
    best as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn reference_triangle() -> TriangleMesh {
        TriangleMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![0],
            BTreeMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn reference_triangle_size() {
        let m = reference_triangle();
        assert!((m.mesh_size().unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((m.scaled(2.0).mesh_size().unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.refinement_edge[0], 0);
    }

    #[test]
    fn empty_mesh_has_no_size() {
        let m = TriangleMesh {
            vertices: vec![],
            triangles: vec![],
            regions: vec![],
            boundary_labels: BTreeMap::new(),
            refinement_edge: vec![],
            parent: vec![],
        };
        assert!(m.mesh_size().is_err());
    }

    #[test]
    fn rejects_clockwise_and_out_of_range() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(TriangleMesh::new(v.clone(), vec![[0, 2, 1]], vec![0], BTreeMap::new()).is_err());
        assert!(TriangleMesh::new(v, vec![[0, 1, 3]], vec![0], BTreeMap::new()).is_err());
    }
}
