//! Assembly of the augmented bilinear form `A`, the nonlinear form `B_w`,
//! its Newton derivative, the load functional and the side constraints.
//!
//! All operators are returned as square matrices over the full unknown
//! vector `[σ | u | λ]`; rows are test functions, columns trial functions.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{CbfError, Result};
use crate::quadrature::{edge_rule, triangle_rule, QuadratureRule};
use crate::spaces::rt::{legendre, REF_VERTICES};
use crate::spaces::{Discretization, LagrangeValue, ReferenceTables, RtValue};
use crate::sparse::{CsrMatrix, Triplets};
use crate::tensor::{Mat2, Point, Vec2, IDENTITY};

pub type VectorField = Arc<dyn Fn(Point) -> Vec2 + Send + Sync>;
pub type TensorField = Arc<dyn Fn(Point) -> Mat2 + Send + Sync>;

/// Below this speed the Forchheimer power and its derivative are taken as 0.
pub const SPEED_GUARD: f64 = 1e-14;

/// Piecewise constant coefficient looked up by region label.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub default: f64,
    pub by_region: BTreeMap<i32, f64>,
}

impl Coefficient {
    pub fn constant(v: f64) -> Self {
        Coefficient {
            default: v,
            by_region: BTreeMap::new(),
        }
    }

    pub fn piecewise(default: f64, regions: &[(i32, f64)]) -> Self {
        Coefficient {
            default,
            by_region: regions.iter().copied().collect(),
        }
    }

    #[inline]
    pub fn value(&self, region: i32) -> f64 {
        *self.by_region.get(&region).unwrap_or(&self.default)
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.default).chain(self.by_region.values().copied())
    }
}

/// Physical parameters and data of one problem.
#[derive(Clone)]
pub struct ProblemData {
    pub nu: f64,
    pub alpha: Coefficient,
    pub forch: Coefficient,
    pub p_exp: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Weight of the momentum least-squares term; only needed when no
    /// part of the boundary carries Dirichlet data.
    pub kappa3: f64,
    pub f: VectorField,
    pub u_d: VectorField,
    /// Gradient of the Dirichlet datum, used by the estimators.
    pub grad_u_d: Option<TensorField>,
    /// Prescribed `σ n` by boundary label; remaining labels are Dirichlet.
    pub traction: BTreeMap<i32, VectorField>,
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("nu", &self.nu)
            .field("alpha", &self.alpha)
            .field("forch", &self.forch)
            .field("p_exp", &self.p_exp)
            .field("kappa1", &self.kappa1)
            .field("kappa2", &self.kappa2)
            .field("kappa3", &self.kappa3)
            .field("traction_labels", &self.traction.keys().collect::<Vec<_>>())
            .finish_non_exhaustive()
    }
}

impl ProblemData {
    /// Zero source and boundary data, `κ₁ = ν`, `κ₂ = ν/2`.
    pub fn new(nu: f64, alpha: Coefficient, forch: Coefficient, p_exp: f64) -> Self {
        ProblemData {
            nu,
            alpha,
            forch,
            p_exp,
            kappa1: nu,
            kappa2: 0.5 * nu,
            kappa3: 0.0,
            f: Arc::new(|_| [0.0, 0.0]),
            u_d: Arc::new(|_| [0.0, 0.0]),
            grad_u_d: Some(Arc::new(|_| [[0.0; 2]; 2])),
            traction: BTreeMap::new(),
        }
    }

    pub fn with_source(mut self, f: impl Fn(Point) -> Vec2 + Send + Sync + 'static) -> Self {
        self.f = Arc::new(f);
        self
    }

    pub fn with_dirichlet(
        mut self,
        u_d: impl Fn(Point) -> Vec2 + Send + Sync + 'static,
        grad: Option<TensorField>,
    ) -> Self {
        self.u_d = Arc::new(u_d);
        self.grad_u_d = grad;
        self
    }

    pub fn with_traction(mut self, label: i32, g: impl Fn(Point) -> Vec2 + Send + Sync + 'static) -> Self {
        self.traction.insert(label, Arc::new(g));
        self
    }

    pub fn with_kappas(mut self, kappa1: f64, kappa2: f64) -> Self {
        self.kappa1 = kappa1;
        self.kappa2 = kappa2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CbfError::Config(m));
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("nu must be positive, got {}", self.nu));
        }
        if self.alpha.values().any(|a| !(a > 0.0 && a.is_finite())) {
            return bad("alpha must be positive in every region".into());
        }
        if self.forch.values().any(|a| !(a > 0.0 && a.is_finite())) {
            return bad("Forchheimer coefficient must be positive in every region".into());
        }
        if !(3.0..=4.0).contains(&self.p_exp) {
            return bad(format!("inertial power must lie in [3, 4], got {}", self.p_exp));
        }
        if !(self.kappa1 > 0.0 && self.kappa1 < 2.0 * self.nu) {
            return bad(format!("kappa1 must lie in (0, 2 nu), got {}", self.kappa1));
        }
        if !(self.kappa2 > 0.0 && self.kappa2.is_finite()) {
            return bad(format!("kappa2 must be positive, got {}", self.kappa2));
        }
        if !(self.kappa3 >= 0.0 && self.kappa3.is_finite()) {
            return bad(format!("kappa3 must be non-negative, got {}", self.kappa3));
        }
        Ok(())
    }

    pub fn is_traction(&self, label: i32) -> bool {
        self.traction.contains_key(&label)
    }

    /// The zero-mean-trace constraint is needed only for pure Dirichlet
    /// problems. Any prescribed `σ n` already fixes the identity mode.
    pub fn uses_trace_constraint(&self, disc: &Discretization) -> bool {
        !disc.topo.boundary.iter().flatten().any(|&l| self.is_traction(l))
    }

    /// `|w|^{p-2}` with the zero limit below [`SPEED_GUARD`].
    #[inline]
    pub fn power(&self, w: Vec2) -> f64 {
        let s = (w[0] * w[0] + w[1] * w[1]).sqrt();
        if s < SPEED_GUARD {
            0.0
        } else {
            s.powf(self.p_exp - 2.0)
        }
    }

    /// `(p-2)|w|^{p-4}` with the same guard.
    #[inline]
    fn power_derivative(&self, w: Vec2) -> f64 {
        let s = (w[0] * w[0] + w[1] * w[1]).sqrt();
        if s < SPEED_GUARD {
            0.0
        } else {
            (self.p_exp - 2.0) * s.powf(self.p_exp - 4.0)
        }
    }
}

/// Triangle rule used for all volume terms with RT_k / P_{k+1}.
pub fn volume_rule(k: usize) -> QuadratureRule {
    triangle_rule(3 * k + 5).expect("supported degree")
}

pub fn boundary_rule(k: usize) -> QuadratureRule {
    edge_rule(2 * k + 6).expect("supported degree")
}

/// Reference basis values at edge quadrature points, per local edge.
pub(crate) struct EdgeTables {
    pub rule: QuadratureRule,
    /// `[local edge][point]`
    pub rt: [Vec<Vec<RtValue>>; 3],
    pub lag: [Vec<Vec<LagrangeValue>>; 3],
}

pub(crate) fn reference_edge_point(i: usize, s: f64) -> Point {
    let a = REF_VERTICES[(i + 1) % 3];
    let b = REF_VERTICES[(i + 2) % 3];
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

impl EdgeTables {
    pub fn new(disc: &Discretization, rule: QuadratureRule) -> Self {
        let rt = [0, 1, 2].map(|i| {
            rule.points
                .iter()
                .map(|p| disc.rt_ref.eval(reference_edge_point(i, p[0])))
                .collect()
        });
        let lag = [0, 1, 2].map(|i| {
            rule.points
                .iter()
                .map(|p| disc.lag_ref.eval(reference_edge_point(i, p[0])))
                .collect()
        });
        EdgeTables { rule, rt, lag }
    }
}

#[derive(Clone, Copy, Default)]
struct Terms<'a> {
    linear: bool,
    picard: Option<&'a [f64]>,
    derivative: Option<&'a [f64]>,
}

/// Local unknown layout: `[σ row 0 | σ row 1 | u_1 | u_2]`.
fn local_globals(disc: &Discretization, t: usize) -> Vec<usize> {
    let (sd, _) = disc.sigma.local(t);
    let (ud, _) = disc.u.local(t);
    let mut g = Vec::with_capacity(2 * (sd.len() + ud.len()));
    for r in 0..2 {
        g.extend(sd.iter().map(|&d| disc.sigma_index(r, d)));
    }
    for c in 0..2 {
        g.extend(ud.iter().map(|&d| disc.u_index(c, d)));
    }
    g
}

/// Velocity value at a point from global velocity coefficients.
#[inline]
fn velocity_at(disc: &Discretization, t: usize, coeffs: &[f64], lag: &[LagrangeValue]) -> (Vec2, Mat2) {
    let (ud, _) = disc.u.local(t);
    let n = disc.u.total_dofs;
    let mut w = [0.0; 2];
    let mut g = [[0.0; 2]; 2];
    for (l, &d) in ud.iter().enumerate() {
        for c in 0..2 {
            let a = coeffs[c * n + d];
            w[c] += a * lag[l].value;
            g[c][0] += a * lag[l].grad[0];
            g[c][1] += a * lag[l].grad[1];
        }
    }
    (w, g)
}

fn element_matrix(
    disc: &Discretization,
    data: &ProblemData,
    t: usize,
    terms: Terms<'_>,
    vol: &ReferenceTables,
    edges: &EdgeTables,
) -> (Vec<usize>, Vec<f64>) {
    let nr = disc.rt_ref.n_dofs();
    let nl = disc.lag_ref.n_dofs();
    let n = 2 * nr + 2 * nl;
    let sig = |r: usize, l: usize| r * nr + l;
    let vel = |c: usize, l: usize| 2 * nr + c * nl + l;
    let mut k = vec![0.0; n * n];
    let mut add = |i: usize, j: usize, v: f64| k[i * n + j] += v;

    let region = disc.mesh.regions[t];
    let nu = data.nu;
    let alpha = data.alpha.value(region);
    let fa = data.forch.value(region) / alpha;
    let (k1, k3) = (data.kappa1, data.kappa3);
    let det = disc.maps[t].det;

    for (q, (_, wq)) in vol.rule.iter().enumerate() {
        let wt = wq * det;
        let phi = disc.rt_values(t, &vol.rt[q]);
        let psi = disc.lag_values(t, &vol.lag[q]);

        if terms.linear {
            for r in 0..2 {
                for (l, pl) in phi.iter().enumerate() {
                    for s in 0..2 {
                        for (m, pm) in phi.iter().enumerate() {
                            let mut v = -0.5 * pm.value[s] * pl.value[r];
                            if r == s {
                                v += pm.value[0] * pl.value[0] + pm.value[1] * pl.value[1];
                            }
                            v /= nu;
                            if r == s {
                                v += pm.div * pl.div / alpha;
                            }
                            add(sig(r, l), sig(s, m), wt * v);
                        }
                    }
                }
            }
            for c in 0..2 {
                for (l, ql) in psi.iter().enumerate() {
                    for s in 0..2 {
                        for (m, pm) in phi.iter().enumerate() {
                            let mut v = -0.5 * pm.value[s] * ql.grad[c];
                            if s == c {
                                v += pm.value[0] * ql.grad[0] + pm.value[1] * ql.grad[1];
                            }
                            let mut val = -k1 / nu * v;
                            if s == c {
                                val -= k3 / alpha * pm.div * ql.value;
                            }
                            add(vel(c, l), sig(s, m), wt * val);
                        }
                    }
                    for (m, qm) in psi.iter().enumerate() {
                        let v = k1 * (qm.grad[0] * ql.grad[0] + qm.grad[1] * ql.grad[1]) + k3 * qm.value * ql.value;
                        add(vel(c, l), vel(c, m), wt * v);
                    }
                }
            }
        }

        if let Some(wc) = terms.picard {
            let (w, _) = velocity_at(disc, t, wc, &vol.lag[q]);
            let pw = data.power(w);
            for (m, qm) in psi.iter().enumerate() {
                for d in 0..2 {
                    for r in 0..2 {
                        for (l, pl) in phi.iter().enumerate() {
                            let mut v = qm.value * (w[r] * pl.value[d] - 0.5 * w[d] * pl.value[r]) / nu;
                            if d == r {
                                v -= fa * pw * qm.value * pl.div;
                            }
                            add(sig(r, l), vel(d, m), wt * v);
                        }
                    }
                    for c in 0..2 {
                        for (l, ql) in psi.iter().enumerate() {
                            let mut v = -k1 / nu * qm.value * (w[c] * ql.grad[d] - 0.5 * w[d] * ql.grad[c]);
                            if c == d {
                                v += k3 * fa * pw * qm.value * ql.value;
                            }
                            add(vel(c, l), vel(d, m), wt * v);
                        }
                    }
                }
            }
        }

        if let Some(uc) = terms.derivative {
            let (u, _) = velocity_at(disc, t, uc, &vol.lag[q]);
            let dp = data.power_derivative(u);
            for (m, qm) in psi.iter().enumerate() {
                for d in 0..2 {
                    for r in 0..2 {
                        for (l, pl) in phi.iter().enumerate() {
                            let mut v = -0.5 * u[d] * pl.value[r];
                            if r == d {
                                v += u[0] * pl.value[0] + u[1] * pl.value[1];
                            }
                            v *= qm.value / nu;
                            v -= fa * dp * u[d] * u[r] * qm.value * pl.div;
                            add(sig(r, l), vel(d, m), wt * v);
                        }
                    }
                    for c in 0..2 {
                        for (l, ql) in psi.iter().enumerate() {
                            let mut v = -0.5 * u[d] * ql.grad[c];
                            if c == d {
                                v += u[0] * ql.grad[0] + u[1] * ql.grad[1];
                            }
                            v *= -k1 / nu * qm.value;
                            v += k3 * fa * dp * u[d] * u[c] * qm.value * ql.value;
                            add(vel(c, l), vel(d, m), wt * v);
                        }
                    }
                }
            }
        }
    }

    if terms.linear {
        for i in 0..3 {
            let e = disc.topo.triangle_edges[t][i];
            let Some(label) = disc.topo.boundary[e] else {
                continue;
            };
            if data.is_traction(label) {
                continue;
            }
            let len = disc.topo.lengths[e];
            for (q, (_, wq)) in edges.rule.iter().enumerate() {
                let ds = wq * len;
                let psi = &edges.lag[i][q];
                for c in 0..2 {
                    for (l, ql) in psi.iter().enumerate() {
                        for (m, qm) in psi.iter().enumerate() {
                            add(vel(c, l), vel(c, m), ds * data.kappa2 * qm.value * ql.value);
                        }
                    }
                }
            }
        }
    }

    (local_globals(disc, t), k)
}

fn assemble_operator(disc: &Discretization, data: &ProblemData, terms: Terms<'_>) -> Result<CsrMatrix> {
    data.validate()?;
    for w in [terms.picard, terms.derivative].into_iter().flatten() {
        if w.len() != disc.n_u() {
            return Err(CbfError::Config(format!(
                "velocity vector of length {} for {} velocity DOFs",
                w.len(),
                disc.n_u()
            )));
        }
    }
    let vol = disc.tables(volume_rule(disc.k));
    let edges = EdgeTables::new(disc, boundary_rule(disc.k));
    let blocks: Vec<(Vec<usize>, Vec<f64>)> = (0..disc.mesh.n_triangles())
        .into_par_iter()
        .map(|t| element_matrix(disc, data, t, terms, &vol, &edges))
        .collect();
    let n = disc.n_unknowns();
    let mut trip = Triplets::new(n, n);
    for (g, k) in &blocks {
        let m = g.len();
        for i in 0..m {
            for j in 0..m {
                let v = k[i * m + j];
                if v != 0.0 {
                    trip.push(g[i], g[j], v);
                }
            }
        }
    }
    Ok(trip.to_csr())
}

/// The linear form `A`.
pub fn assemble_a(disc: &Discretization, data: &ProblemData) -> Result<CsrMatrix> {
    assemble_operator(
        disc,
        data,
        Terms {
            linear: true,
            ..Terms::default()
        },
    )
}

/// `B_w` for the velocity coefficients `w` (length `disc.n_u()`).
pub fn assemble_b(disc: &Discretization, data: &ProblemData, w: &[f64]) -> Result<CsrMatrix> {
    assemble_operator(
        disc,
        data,
        Terms {
            picard: Some(w),
            ..Terms::default()
        },
    )
}

/// Derivative of `w ↦ B_w(u)` at `w = u`: the part of the Jacobian not
/// already contained in `B_u`.
pub fn assemble_newton_derivative(disc: &Discretization, data: &ProblemData, u: &[f64]) -> Result<CsrMatrix> {
    assemble_operator(
        disc,
        data,
        Terms {
            derivative: Some(u),
            ..Terms::default()
        },
    )
}

/// `A + B_u + ∂_w B_w(u)|_{w=u}`.
pub fn assemble_newton_jacobian(disc: &Discretization, data: &ProblemData, u: &[f64]) -> Result<CsrMatrix> {
    assemble_operator(
        disc,
        data,
        Terms {
            linear: true,
            picard: Some(u),
            derivative: Some(u),
        },
    )
}

/// `A + B_w`.
pub fn assemble_picard(disc: &Discretization, data: &ProblemData, w: &[f64]) -> Result<CsrMatrix> {
    assemble_operator(
        disc,
        data,
        Terms {
            linear: true,
            picard: Some(w),
            derivative: None,
        },
    )
}

/// Load functional over the full unknown vector (multiplier entry 0).
pub fn assemble_f(disc: &Discretization, data: &ProblemData) -> Result<Vec<f64>> {
    data.validate()?;
    let vol = disc.tables(volume_rule(disc.k));
    let edges = EdgeTables::new(disc, boundary_rule(disc.k));
    let nr = disc.rt_ref.n_dofs();
    let nl = disc.lag_ref.n_dofs();
    let blocks: Vec<(Vec<usize>, Vec<f64>)> = (0..disc.mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let mut b = vec![0.0; 2 * nr + 2 * nl];
            let alpha = data.alpha.value(disc.mesh.regions[t]);
            let map = &disc.maps[t];
            for (q, (p, wq)) in vol.rule.iter().enumerate() {
                let wt = wq * map.det;
                let f = (data.f)(map.map(p));
                let phi = disc.rt_values(t, &vol.rt[q]);
                for r in 0..2 {
                    for (l, pl) in phi.iter().enumerate() {
                        b[r * nr + l] -= wt * f[r] * pl.div / alpha;
                    }
                }
                if data.kappa3 > 0.0 {
                    for c in 0..2 {
                        for (l, ql) in vol.lag[q].iter().enumerate() {
                            b[2 * nr + c * nl + l] += wt * data.kappa3 * f[c] / alpha * ql.value;
                        }
                    }
                }
            }
            for i in 0..3 {
                let e = disc.topo.triangle_edges[t][i];
                let Some(label) = disc.topo.boundary[e] else {
                    continue;
                };
                if data.is_traction(label) {
                    continue;
                }
                let len = disc.topo.lengths[e];
                let n = disc.topo.normals[e];
                for (q, (p, wq)) in edges.rule.iter().enumerate() {
                    let ds = wq * len;
                    let x = map.map(reference_edge_point(i, p[0]));
                    let ud = (data.u_d)(x);
                    let phi = disc.rt_values(t, &edges.rt[i][q]);
                    for r in 0..2 {
                        for (l, pl) in phi.iter().enumerate() {
                            let flux = pl.value[0] * n[0] + pl.value[1] * n[1];
                            b[r * nr + l] += ds * flux * ud[r];
                        }
                    }
                    for c in 0..2 {
                        for (l, ql) in edges.lag[i][q].iter().enumerate() {
                            b[2 * nr + c * nl + l] += ds * data.kappa2 * ud[c] * ql.value;
                        }
                    }
                }
            }
            (local_globals(disc, t), b)
        })
        .collect();
    let mut out = vec![0.0; disc.n_unknowns()];
    for (g, b) in &blocks {
        for (i, &gi) in g.iter().enumerate() {
            out[gi] += b[i];
        }
    }
    Ok(out)
}

/// Row `r` over the σ block with `r · σ_coeffs = ∫_Ω tr σ_h`.
pub fn assemble_trace_constraint(disc: &Discretization) -> Vec<f64> {
    let vol = disc.tables(volume_rule(disc.k));
    let mut row = vec![0.0; disc.n_sigma()];
    for t in 0..disc.mesh.n_triangles() {
        let g = local_globals(disc, t);
        let nr = disc.rt_ref.n_dofs();
        let det = disc.maps[t].det;
        for (q, (_, wq)) in vol.rule.iter().enumerate() {
            let phi = disc.rt_values(t, &vol.rt[q]);
            for r in 0..2 {
                for (l, pl) in phi.iter().enumerate() {
                    row[g[r * nr + l]] += wq * det * pl.value[r];
                }
            }
        }
    }
    row
}

/// Essential conditions from prescribed `σ n`: global σ DOF and the value
/// of its edge moment.
pub fn traction_constraints(disc: &Discretization, data: &ProblemData) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    if data.traction.is_empty() {
        return out;
    }
    let per_edge = disc.k + 1;
    let rule = boundary_rule(disc.k);
    for e in disc.topo.boundary_edges() {
        let Some(g) = disc.topo.boundary[e].and_then(|l| data.traction.get(&l)) else {
            continue;
        };
        let [a, b] = disc.topo.edges[e];
        let (pa, pb) = (disc.mesh.vertices[a], disc.mesh.vertices[b]);
        let len = disc.topo.lengths[e];
        let mut moments = [[0.0; 2]; 2];
        for (p, w) in rule.iter() {
            let s = p[0];
            let val = g([pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]);
            for r in 0..2 {
                for (j, m) in moments[r].iter_mut().enumerate().take(per_edge) {
                    *m += w * len * val[r] * legendre(j, s);
                }
            }
        }
        for (r, row) in moments.iter().enumerate() {
            for (j, &m) in row.iter().enumerate().take(per_edge) {
                out.push((disc.sigma_index(r, e * per_edge + j), m));
            }
        }
    }
    out
}

/// Zero-mean-trace constraint in bordered form: `K x + λ r = F`, `rᵀ x = 0`.
///
/// `kernel` is the coefficient vector of the identity tensor, which every
/// operator of the scheme annihilates from both sides. The solver uses it
/// to avoid factoring the dense border.
#[derive(Debug, Clone)]
pub struct TraceConstraint {
    pub row: Vec<f64>,
    pub kernel: Vec<f64>,
}

/// Assembled linear system. `matrix` holds the sparse block only; when a
/// constraint is present the multiplier row and column live in
/// [`TraceConstraint`], otherwise the multiplier row is the identity.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub constraint: Option<TraceConstraint>,
}

impl LinearSystem {
    /// The full square matrix including the multiplier border.
    pub fn bordered_matrix(&self) -> CsrMatrix {
        let Some(c) = &self.constraint else {
            return self.matrix.clone();
        };
        let lam = self.matrix.n_rows - 1;
        let mut t = self.matrix.to_triplets();
        for (i, &v) in c.row.iter().enumerate() {
            if v != 0.0 {
                t.push(lam, i, v);
                t.push(i, lam, v);
            }
        }
        t.to_csr()
    }

    /// `M x - rhs` for the bordered matrix `M`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.matrix.matvec(x);
        if let Some(c) = &self.constraint {
            let lam = self.matrix.n_rows - 1;
            for (i, &v) in c.row.iter().enumerate() {
                r[i] += v * x[lam];
                r[lam] += v * x[i];
            }
        }
        r.iter_mut().zip(&self.rhs).for_each(|(ri, b)| *ri -= b);
        r
    }
}

/// Replaces rows of traction DOFs and attaches the multiplier.
pub fn finalize_system(
    disc: &Discretization,
    data: &ProblemData,
    operator: &CsrMatrix,
    mut rhs: Vec<f64>,
) -> LinearSystem {
    let n = disc.n_unknowns();
    let lam = disc.multiplier_index();
    let constraints = traction_constraints(disc, data);
    let mut fixed = vec![false; n];
    for &(i, v) in &constraints {
        fixed[i] = true;
        rhs[i] = v;
    }
    let mut trip = Triplets::new(n, n);
    for r in 0..n {
        if fixed[r] || r == lam {
            continue;
        }
        for (c, v) in operator.row(r) {
            trip.push(r, c, v);
        }
    }
    for &(i, _) in &constraints {
        trip.push(i, i, 1.0);
    }
    rhs[lam] = 0.0;
    let constraint = if data.uses_trace_constraint(disc) {
        let mut row = assemble_trace_constraint(disc);
        row.resize(n, 0.0);
        let mut kernel = disc.rt_interpolate(|_| IDENTITY);
        kernel.resize(n, 0.0);
        Some(TraceConstraint { row, kernel })
    } else {
        trip.push(lam, lam, 1.0);
        None
    };
    LinearSystem {
        matrix: trip.to_csr(),
        rhs,
        constraint,
    }
}
