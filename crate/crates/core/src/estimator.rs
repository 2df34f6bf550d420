//! Residual a posteriori indicators.
//!
//! Both indicators are stored as squared per-element contributions.
//! Interior edge jumps are split evenly between the two incident
//! triangles, boundary terms go to the owning triangle. Edges carrying
//! traction data have no Dirichlet misfit and contribute nothing.

use rayon::prelude::*;

use crate::error::{CbfError, Result};
use crate::forms::ProblemData;
use crate::quadrature::{edge_rule, triangle_rule, QuadratureRule, MAX_TRIANGLE_DEGREE};
use crate::spaces::{DiscreteSolution, Discretization, FieldValues, LocalCoefficients};
use crate::tensor::{dev, mat_add, mat_scale, mat_sub, mat_vec, outer, Mat2, Point, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndicatorKind {
    Theta1,
    Theta2Hat,
}

impl std::fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IndicatorKind::Theta1 => "theta1",
            IndicatorKind::Theta2Hat => "theta2hat",
        })
    }
}

/// Per-element squared indicators `Θ_T²`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorField {
    pub kind: IndicatorKind,
    pub per_element: Vec<f64>,
}

impl IndicatorField {
    /// `Θ = (Σ_T Θ_T²)^{1/2}`.
    pub fn global(&self) -> f64 {
        self.per_element.iter().sum::<f64>().sqrt()
    }

    /// Local values `Θ_T` (not squared), as used for marking.
    pub fn local_values(&self) -> Vec<f64> {
        self.per_element.iter().map(|v| v.sqrt()).collect()
    }

    pub fn len(&self) -> usize {
        self.per_element.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_element.is_empty()
    }
}

/// `e / Θ` for a global estimator value `Θ`.
pub fn effectivity(error: f64, theta: f64) -> Result<f64> {
    if !(error >= 0.0 && error.is_finite()) {
        return Err(CbfError::Config(format!(
            "error must be finite and non-negative, got {error}"
        )));
    }
    if !(theta > 0.0) {
        return Err(CbfError::Inconsistent(error));
    }
    Ok(error / theta)
}

/// Row-wise curl `(∂τ₁₂/∂x₁ − ∂τ₁₁/∂x₂, ∂τ₂₂/∂x₁ − ∂τ₂₁/∂x₂)` from the
/// gradient `grad[r][a][b] = ∂τ_{ra}/∂x_b`.
pub fn tensor_curl_2d(grad: &[Mat2; 2]) -> Vec2 {
    [grad[0][1][0] - grad[0][0][1], grad[1][1][0] - grad[1][0][1]]
}

/// `γ_*(τ) = τ s` for the edge tangent `s`.
pub fn tangential_trace(tau: &Mat2, tangent: Vec2) -> Vec2 {
    mat_vec(tau, tangent)
}

/// `ψ_h = (1/ν)(σ_h + u_h ⊗ u_h)^d`.
pub fn discrete_psi(v: &FieldValues, nu: f64) -> Mat2 {
    mat_scale(&dev(&mat_add(&v.sigma, &outer(v.u, v.u))), 1.0 / nu)
}

/// Gradient of [`discrete_psi`] in the layout of [`tensor_curl_2d`].
pub fn discrete_psi_gradient(v: &FieldValues, nu: f64) -> [Mat2; 2] {
    let mut m = [[[0.0; 2]; 2]; 2];
    for (r, mr) in m.iter_mut().enumerate() {
        for (a, mra) in mr.iter_mut().enumerate() {
            for (b, g) in mra.iter_mut().enumerate() {
                *g = v.grad_sigma[r][a][b] + v.grad_u[r][b] * v.u[a] + v.u[r] * v.grad_u[a][b];
            }
        }
    }
    let mut out = [[[0.0; 2]; 2]; 2];
    for b in 0..2 {
        let tr = m[0][0][b] + m[1][1][b];
        for r in 0..2 {
            for a in 0..2 {
                let iso = if r == a { 0.5 * tr } else { 0.0 };
                out[r][a][b] = (m[r][a][b] - iso) / nu;
            }
        }
    }
    out
}

fn volume_rule(k: usize) -> QuadratureRule {
    triangle_rule((3 * k + 9).min(MAX_TRIANGLE_DEGREE)).expect("supported degree")
}

fn edge_quadrature(k: usize) -> QuadratureRule {
    edge_rule(4 * k + 8).expect("supported degree")
}

fn norm2(v: Vec2) -> f64 {
    v[0] * v[0] + v[1] * v[1]
}

fn frob2(m: &Mat2) -> f64 {
    crate::tensor::frob2(m)
}

/// Squared constitutive and momentum residuals, plus `‖curl ψ_h‖²`.
fn volume_terms(
    disc: &Discretization,
    sol: &DiscreteSolution,
    data: &ProblemData,
    rule: &QuadratureRule,
) -> Vec<[f64; 3]> {
    let tables = disc.tables(rule.clone());
    (0..disc.mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let local = disc.local_coefficients(sol, t);
            let map = &disc.maps[t];
            let region = disc.mesh.regions[t];
            let alpha = data.alpha.value(region);
            let forch = data.forch.value(region);
            let mut acc = [0.0; 3];
            for (q, (p, w)) in tables.rule.iter().enumerate() {
                let v = disc.evaluate_local(t, &local, &tables.rt[q], &tables.lag[q]);
                let wt = w * map.det;
                let x = map.map(p);
                let psi = discrete_psi(&v, data.nu);
                acc[0] += wt * frob2(&mat_sub(&v.grad_u, &psi));
                let f = (data.f)(x);
                let nl = forch * data.power(v.u);
                let m: Vec2 = std::array::from_fn(|c| alpha * v.u[c] + nl * v.u[c] - v.div_sigma[c] - f[c]);
                acc[1] += wt * norm2(m);
                acc[2] += wt * norm2(tensor_curl_2d(&discrete_psi_gradient(&v, data.nu)));
            }
            acc
        })
        .collect()
}

fn evaluate_at(disc: &Discretization, local: &LocalCoefficients, t: usize, x: Point) -> FieldValues {
    let xh = disc.maps[t].pullback(x);
    disc.evaluate_local(t, local, &disc.rt_ref.eval(xh), &disc.lag_ref.eval(xh))
}

/// What each edge contributes, before distribution to triangles.
#[derive(Clone, Copy, Default)]
struct EdgeTerms {
    /// `h_e ‖[[γ_*(ψ_h)]]‖²`, interior edges.
    jump: f64,
    /// `h_e ‖γ_*(∇u_D − ψ_h)‖²`, Dirichlet edges.
    tangential: f64,
    /// `‖u_D − u_h‖²_{0,e}`.
    misfit: f64,
    /// `‖∂_s(u_D − u_h)‖²_{0,e}`.
    misfit_derivative: f64,
}

fn edge_terms(
    disc: &Discretization,
    sol: &DiscreteSolution,
    data: &ProblemData,
    need_jumps: bool,
) -> Result<Vec<EdgeTerms>> {
    let topo = &disc.topo;
    let dirichlet_edges = topo
        .boundary_edges()
        .any(|e| topo.boundary[e].is_some_and(|l| !data.is_traction(l)));
    if dirichlet_edges && data.grad_u_d.is_none() {
        return Err(CbfError::Config(
            "the estimator needs the gradient of the Dirichlet datum on Dirichlet edges".into(),
        ));
    }
    let rule = edge_quadrature(disc.k);
    let terms = (0..topo.n_edges())
        .into_par_iter()
        .map(|e| {
            let [a, b] = topo.edges[e];
            let (pa, pb) = (disc.mesh.vertices[a], disc.mesh.vertices[b]);
            let len = topo.lengths[e];
            let s_e = topo.tangents[e];
            let (t1, _) = topo.incidence[e].first;
            let mut out = EdgeTerms::default();
            match topo.incidence[e].second {
                Some((t2, _)) => {
                    if !need_jumps {
                        return out;
                    }
                    let l1 = disc.local_coefficients(sol, t1);
                    let l2 = disc.local_coefficients(sol, t2);
                    for (p, w) in rule.iter() {
                        let x = [pa[0] + p[0] * (pb[0] - pa[0]), pa[1] + p[0] * (pb[1] - pa[1])];
                        let g1 = tangential_trace(&discrete_psi(&evaluate_at(disc, &l1, t1, x), data.nu), s_e);
                        let g2 = tangential_trace(&discrete_psi(&evaluate_at(disc, &l2, t2, x), data.nu), s_e);
                        out.jump += w * len * norm2([g1[0] - g2[0], g1[1] - g2[1]]);
                    }
                    out.jump *= len;
                }
                None => {
                    if topo.boundary[e].is_some_and(|l| data.is_traction(l)) {
                        return out;
                    }
                    let grad_d = data.grad_u_d.as_ref().expect("checked above");
                    let l1 = disc.local_coefficients(sol, t1);
                    for (p, w) in rule.iter() {
                        let x = [pa[0] + p[0] * (pb[0] - pa[0]), pa[1] + p[0] * (pb[1] - pa[1])];
                        let v = evaluate_at(disc, &l1, t1, x);
                        let gd = grad_d(x);
                        let ud = (data.u_d)(x);
                        let wt = w * len;
                        let mis = tangential_trace(&mat_sub(&gd, &discrete_psi(&v, data.nu)), s_e);
                        out.tangential += wt * norm2(mis);
                        out.misfit += wt * norm2([ud[0] - v.u[0], ud[1] - v.u[1]]);
                        let ds = tangential_trace(&mat_sub(&gd, &v.grad_u), s_e);
                        out.misfit_derivative += wt * norm2(ds);
                    }
                    out.tangential *= len;
                }
            }
            out
        })
        .collect();
    Ok(terms)
}

/// Six-term residual indicator with curl and tangential jump terms.
pub fn theta1(disc: &Discretization, sol: &DiscreteSolution, data: &ProblemData) -> Result<IndicatorField> {
    let vol = volume_terms(disc, sol, data, &volume_rule(disc.k));
    let edges = edge_terms(disc, sol, data, true)?;
    let mut per_element: Vec<f64> = vol
        .iter()
        .enumerate()
        .map(|(t, v)| {
            let h = disc.mesh.diameter(t);
            v[0] + v[1] + h * h * v[2]
        })
        .collect();
    for (e, et) in edges.iter().enumerate() {
        let inc = disc.topo.incidence[e];
        match inc.second {
            Some((t2, _)) => {
                per_element[inc.first.0] += 0.5 * et.jump;
                per_element[t2] += 0.5 * et.jump;
            }
            None => per_element[inc.first.0] += et.tangential + et.misfit,
        }
    }
    Ok(IndicatorField {
        kind: IndicatorKind::Theta1,
        per_element,
    })
}

/// Fully local indicator: constitutive and momentum residuals plus the
/// `H¹(e)` Dirichlet misfit (value and tangential derivative).
pub fn theta2_hat(disc: &Discretization, sol: &DiscreteSolution, data: &ProblemData) -> Result<IndicatorField> {
    let vol = volume_terms(disc, sol, data, &volume_rule(disc.k));
    let edges = edge_terms(disc, sol, data, false)?;
    let mut per_element: Vec<f64> = vol.iter().map(|v| v[0] + v[1]).collect();
    for (e, et) in edges.iter().enumerate() {
        let inc = disc.topo.incidence[e];
        if inc.second.is_none() {
            per_element[inc.first.0] += et.misfit + et.misfit_derivative;
        }
    }
    Ok(IndicatorField {
        kind: IndicatorKind::Theta2Hat,
        per_element,
    })
}

/// Dispatches on `kind`.
pub fn estimate(
    disc: &Discretization,
    sol: &DiscreteSolution,
    data: &ProblemData,
    kind: IndicatorKind,
) -> Result<IndicatorField> {
    match kind {
        IndicatorKind::Theta1 => theta1(disc, sol, data),
        IndicatorKind::Theta2Hat => theta2_hat(disc, sol, data),
    }
}

/// Global squared values of the individual terms, in the order
/// constitutive, momentum, curl, jump, tangential, misfit, misfit derivative.
pub fn breakdown(disc: &Discretization, sol: &DiscreteSolution, data: &ProblemData) -> Result<[f64; 7]> {
    let vol = volume_terms(disc, sol, data, &volume_rule(disc.k));
    let edges = edge_terms(disc, sol, data, true)?;
    let mut out = [0.0; 7];
    for (t, v) in vol.iter().enumerate() {
        let h = disc.mesh.diameter(t);
        out[0] += v[0];
        out[1] += v[1];
        out[2] += h * h * v[2];
    }
    for et in &edges {
        out[3] += et.jump;
        out[4] += et.tangential;
        out[5] += et.misfit;
        out[6] += et.misfit_derivative;
    }
    Ok(out)
}
