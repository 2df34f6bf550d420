//! Pressure, velocity gradient, vorticity and shear stress recovered from
//! a discrete pseudostress-velocity pair.
//!
//! Fields are evaluated on demand from the coefficients; nothing is
//! projected or stored per element.

use crate::quadrature::QuadratureRule;
use crate::spaces::{DiscreteSolution, Discretization, FieldValues};
use crate::tensor::{dev, mat_add, mat_scale, mat_sub, outer, trace, transpose, Mat2, Point, IDENTITY};

/// Recovered quantities at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recovered {
    pub pressure: f64,
    pub grad_u: Mat2,
    pub vorticity: Mat2,
    pub shear: Mat2,
}

/// Pointwise recovery formulas for `d = 2`.
pub fn recover(sigma: &Mat2, u: [f64; 2], ell: f64, nu: f64) -> Recovered {
    let uu = outer(u, u);
    let pressure = -0.5 * trace(&mat_add(sigma, &uu)) - ell;
    let dev_sum = mat_add(&dev(sigma), &dev(&uu));
    let grad_u = mat_scale(&dev_sum, 1.0 / nu);
    let vorticity = mat_scale(&mat_sub(sigma, &transpose(sigma)), 0.5 / nu);
    let shear = mat_add(
        &mat_add(&dev_sum, &transpose(sigma)),
        &mat_add(&uu, &mat_scale(&IDENTITY, ell)),
    );
    Recovered {
        pressure,
        grad_u,
        vorticity,
        shear,
    }
}

/// Calls `f(t, x, weight, values)` at every quadrature point of the mesh,
/// in triangle order.
pub fn for_each_point(
    disc: &Discretization,
    sol: &DiscreteSolution,
    rule: QuadratureRule,
    mut f: impl FnMut(usize, Point, f64, &FieldValues),
) {
    let tables = disc.tables(rule);
    for t in 0..disc.mesh.n_triangles() {
        let local = disc.local_coefficients(sol, t);
        let map = &disc.maps[t];
        for (q, (p, w)) in tables.rule.iter().enumerate() {
            let v = disc.evaluate_local(t, &local, &tables.rt[q], &tables.lag[q]);
            f(t, map.map(p), w * map.det, &v);
        }
    }
}

/// Area-weighted mean of `|u_h|` per region label.
pub fn mean_speed_by_region(disc: &Discretization, sol: &DiscreteSolution) -> std::collections::BTreeMap<i32, f64> {
    let mut acc: std::collections::BTreeMap<i32, (f64, f64)> = Default::default();
    for_each_point(disc, sol, crate::forms::volume_rule(disc.k), |t, _, w, v| {
        let e = acc.entry(disc.mesh.regions[t]).or_default();
        e.0 += w * v.u[0].hypot(v.u[1]);
        e.1 += w;
    });
    acc.into_iter().map(|(r, (s, a))| (r, s / a)).collect()
}

/// `ℓ_h = -(1/(2|Ω|)) ∫ tr(u_h ⊗ u_h)`.
pub fn compute_ell(disc: &Discretization, sol: &DiscreteSolution) -> f64 {
    let rule = crate::forms::volume_rule(disc.k);
    let mut integral = 0.0;
    for_each_point(disc, sol, rule, |_, _, w, v| {
        integral += w * (v.u[0] * v.u[0] + v.u[1] * v.u[1]);
    });
    -integral / (2.0 * disc.mesh.total_area())
}

/// A solved pair together with its global shift `ℓ_h`.
#[derive(Debug, Clone)]
pub struct RecoveredFields<'a> {
    pub disc: &'a Discretization,
    pub solution: &'a DiscreteSolution,
    pub ell: f64,
    pub nu: f64,
}

pub fn recover_fields<'a>(disc: &'a Discretization, solution: &'a DiscreteSolution, nu: f64) -> RecoveredFields<'a> {
    RecoveredFields {
        disc,
        solution,
        ell: compute_ell(disc, solution),
        nu,
    }
}

impl RecoveredFields<'_> {
    pub fn at_values(&self, v: &FieldValues) -> Recovered {
        recover(&v.sigma, v.u, self.ell, self.nu)
    }

    /// Recovered fields at a physical point of triangle `t`.
    pub fn evaluate(&self, t: usize, x: Point) -> crate::Result<Recovered> {
        let v = self.disc.evaluate(self.solution, x, t)?;
        Ok(self.at_values(&v))
    }

    /// `σ_h + ℓ_h I`: the pseudostress without the zero-mean normalization.
    pub fn full_sigma(&self, t: usize, x: Point) -> crate::Result<Mat2> {
        let v = self.disc.evaluate(self.solution, x, t)?;
        Ok(mat_add(&v.sigma, &mat_scale(&IDENTITY, self.ell)))
    }
}
