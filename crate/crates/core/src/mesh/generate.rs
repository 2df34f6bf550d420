use std::collections::{BTreeMap, HashMap};

use super::{build_edges, edge_key, TriangleMesh};
use crate::error::{CbfError, Result};
use crate::tensor::Point;

pub const MATRIX_REGION: i32 = 0;
pub const FRACTURE_REGION: i32 = 1;

const FRACTURE_GEOMETRY: &str = include_str!("../../data/fracture_network.txt");
const DEFAULT_FRACTURE_RESOLUTION: usize = 40;

/// Structured mesh of `[x0,x1] x [y0,y1]` with `nx * ny` cells split along
/// the `/` diagonal. Cells whose center fails `keep` are dropped. Boundary
/// edges are labelled by `label(midpoint)`.
pub fn generate_rectangle(
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    nx: usize,
    ny: usize,
    keep: impl Fn(Point) -> bool,
    label: impl Fn(Point) -> i32,
) -> Result<TriangleMesh> {
    if nx == 0 || ny == 0 {
        return Err(CbfError::Config("subdivision count must be at least 1".into()));
    }
    let hx = (x1 - x0) / nx as f64;
    let hy = (y1 - y0) / ny as f64;
    let grid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut vid = |g: usize, vertices: &mut Vec<Point>| -> usize {
        *remap.entry(g).or_insert_with(|| {
            let (i, j) = (g % (nx + 1), g / (nx + 1));
            vertices.push([x0 + i as f64 * hx, y0 + j as f64 * hy]);
            vertices.len() - 1
        })
    };
    for j in 0..ny {
        for i in 0..nx {
            let center = [x0 + (i as f64 + 0.5) * hx, y0 + (j as f64 + 0.5) * hy];
            if !keep(center) {
                continue;
            }
            let v00 = vid(grid(i, j), &mut vertices);
            let v10 = vid(grid(i + 1, j), &mut vertices);
            let v11 = vid(grid(i + 1, j + 1), &mut vertices);
            let v01 = vid(grid(i, j + 1), &mut vertices);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let regions = vec![MATRIX_REGION; triangles.len()];
    let mut mesh = TriangleMesh::new(vertices, triangles, regions, BTreeMap::new())?;
    let topo = build_edges(&mesh)?;
    let mut labels = BTreeMap::new();
    for e in topo.boundary_edges() {
        let [a, b] = topo.edges[e];
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        labels.insert(edge_key(a, b), label(mid));
    }
    mesh.boundary_labels = labels;
    Ok(mesh)
}

/// Side label for axis-aligned boxes: 1 = left, 2 = bottom, 3 = right, 4 = top.
fn box_label(x0: f64, x1: f64, y0: f64, y1: f64) -> impl Fn(Point) -> i32 {
    move |p: Point| {
        let tol = 1e-10 * (x1 - x0).abs().max(1.0);
        if (p[0] - x0).abs() < tol {
            1
        } else if (p[1] - y0).abs() < tol {
            2
        } else if (p[0] - x1).abs() < tol {
            3
        } else if (p[1] - y1).abs() < tol {
            4
        } else {
            0
        }
    }
}

/// Unit square `(0,1)^2` with `n x n` cells (`2 n^2` triangles).
pub fn generate_square(n: usize) -> Result<TriangleMesh> {
    generate_rectangle((0.0, 1.0), (0.0, 1.0), n, n, |_| true, box_label(0.0, 1.0, 0.0, 1.0))
}

/// L-shaped domain `(-1,1)^2 \ [0,1)^2` with `n` cells per unit length.
///
/// Labels: 1 = left, 2 = bottom, 3 = right (x = 1), 4 = inner horizontal
/// (y = 0), 5 = inner vertical (x = 0), 6 = top (y = 1).
pub fn generate_lshape(n: usize) -> Result<TriangleMesh> {
    generate_rectangle(
        (-1.0, 1.0),
        (-1.0, 1.0),
        2 * n,
        2 * n,
        |c| !(c[0] > 0.0 && c[1] > 0.0),
        |p| {
            let tol = 1e-10;
            if (p[0] + 1.0).abs() < tol {
                1
            } else if (p[1] + 1.0).abs() < tol {
                2
            } else if (p[0] - 1.0).abs() < tol {
                3
            } else if p[1].abs() < tol {
                4
            } else if p[0].abs() < tol {
                5
            } else {
                6
            }
        },
    )
}

/// Closed polygon loops given as segment lists.
#[derive(Debug, Clone, PartialEq)]
pub struct FractureNetwork {
    pub loops: Vec<Vec<[Point; 2]>>,
}

impl FractureNetwork {
    /// Parses `loop_id x1 y1 x2 y2` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut loops: BTreeMap<i64, Vec<[Point; 2]>> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(CbfError::Parse {
                    line: n + 1,
                    msg: format!("expected 5 fields, found {}", fields.len()),
                });
            }
            let id: i64 = fields[0].parse().map_err(|_| CbfError::Parse {
                line: n + 1,
                msg: "bad loop id".into(),
            })?;
            let mut xs = [0.0; 4];
            for (k, f) in fields[1..].iter().enumerate() {
                xs[k] = f.parse().map_err(|_| CbfError::Parse {
                    line: n + 1,
                    msg: format!("bad coordinate '{f}'"),
                })?;
            }
            loops.entry(id).or_default().push([[xs[0], xs[1]], [xs[2], xs[3]]]);
        }
        Ok(FractureNetwork {
            loops: loops.into_values().collect(),
        })
    }

    pub fn bundled() -> Self {
        Self::parse(FRACTURE_GEOMETRY).expect("bundled fracture geometry is well formed")
    }

    /// Even-odd ray casting against each loop; inside any loop counts.
    pub fn contains(&self, p: Point) -> bool {
        self.loops.iter().any(|segments| {
            let mut inside = false;
            for [a, b] in segments {
                if (a[1] > p[1]) != (b[1] > p[1]) {
                    let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                    if p[0] < x {
                        inside = !inside;
                    }
                }
            }
            inside
        })
    }

    /// Relabels every triangle by the position of its centroid.
    pub fn tag(&self, mesh: &mut TriangleMesh) {
        for t in 0..mesh.n_triangles() {
            mesh.regions[t] = if self.contains(mesh.centroid(t)) {
                FRACTURE_REGION
            } else {
                MATRIX_REGION
            };
        }
    }
}

/// `(-1,1)^2` with the bundled fracture network tagged as
/// [`FRACTURE_REGION`]. Labels: 1 = left, 2 = bottom, 3 = right, 4 = top.
pub fn generate_fracture_domain() -> Result<TriangleMesh> {
    generate_fracture_domain_with(DEFAULT_FRACTURE_RESOLUTION, &FractureNetwork::bundled())
}

pub fn generate_fracture_domain_with(n: usize, network: &FractureNetwork) -> Result<TriangleMesh> {
    let mut mesh = generate_rectangle(
        (-1.0, 1.0),
        (-1.0, 1.0),
        n,
        n,
        |_| true,
        box_label(-1.0, 1.0, -1.0, 1.0),
    )?;
    network.tag(&mut mesh);
    Ok(mesh)
}
