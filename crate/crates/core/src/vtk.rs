//! Legacy ASCII VTK output.
//!
//! Velocity lives on the points, everything else is sampled at triangle
//! centroids. Numbers use a fixed `{:.10e}` format so that repeated runs
//! produce identical files.

use std::io::Write;

use crate::error::Result;
use crate::estimator::IndicatorField;
use crate::postprocess::recover_fields;
use crate::spaces::{DiscreteSolution, Discretization};
use crate::tensor::Mat2;

fn num(x: f64) -> String {
    format!("{x:.10e}")
}

fn tensor_rows(m: &Mat2) -> String {
    format!(
        "{} {} 0\n{} {} 0\n0 0 0\n",
        num(m[0][0]),
        num(m[0][1]),
        num(m[1][0]),
        num(m[1][1])
    )
}

/// Writes the mesh with `u_h`, `|u_h|`, `σ_h`, `G_h`, `p_h`, the region
/// label and, when given, the local indicator `Θ_T`.
pub fn write_vtk<W: Write>(
    mut out: W,
    disc: &Discretization,
    sol: &DiscreteSolution,
    nu: f64,
    indicator: Option<&IndicatorField>,
    title: &str,
) -> Result<()> {
    let mesh = &disc.mesh;
    let (nv, nt) = (mesh.n_vertices(), mesh.n_triangles());
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{title}")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {nv} double")?;
    for v in &mesh.vertices {
        writeln!(out, "{} {} 0", num(v[0]), num(v[1]))?;
    }
    writeln!(out, "CELLS {nt} {}", 4 * nt)?;
    for t in &mesh.triangles {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(out, "5")?;
    }

    // velocity is continuous: any incident triangle gives the vertex value
    let mut owner = vec![usize::MAX; nv];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for &v in tri {
            if owner[v] == usize::MAX {
                owner[v] = t;
            }
        }
    }
    let mut u = vec![[0.0; 2]; nv];
    for (v, &t) in owner.iter().enumerate() {
        if t != usize::MAX {
            u[v] = disc.evaluate(sol, mesh.vertices[v], t)?.u;
        }
    }
    writeln!(out, "POINT_DATA {nv}")?;
    writeln!(out, "VECTORS u double")?;
    for w in &u {
        writeln!(out, "{} {} 0", num(w[0]), num(w[1]))?;
    }
    writeln!(out, "SCALARS u_magnitude double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for w in &u {
        writeln!(out, "{}", num(w[0].hypot(w[1])))?;
    }

    let fields = recover_fields(disc, sol, nu);
    let mut sigma = Vec::with_capacity(nt);
    let mut grad = Vec::with_capacity(nt);
    let mut pressure = Vec::with_capacity(nt);
    for t in 0..nt {
        let x = mesh.centroid(t);
        let v = disc.evaluate(sol, x, t)?;
        let r = fields.at_values(&v);
        sigma.push(v.sigma);
        grad.push(r.grad_u);
        pressure.push(r.pressure);
    }
    writeln!(out, "CELL_DATA {nt}")?;
    writeln!(out, "TENSORS sigma double")?;
    for s in &sigma {
        write!(out, "{}", tensor_rows(s))?;
    }
    writeln!(out, "TENSORS grad_u double")?;
    for g in &grad {
        write!(out, "{}", tensor_rows(g))?;
    }
    writeln!(out, "SCALARS pressure double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for p in &pressure {
        writeln!(out, "{}", num(*p))?;
    }
    writeln!(out, "SCALARS region int 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for r in &mesh.regions {
        writeln!(out, "{r}")?;
    }
    if let Some(ind) = indicator {
        writeln!(out, "SCALARS {} double 1", ind.kind)?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in ind.local_values() {
            writeln!(out, "{}", num(v))?;
        }
    }
    Ok(())
}
