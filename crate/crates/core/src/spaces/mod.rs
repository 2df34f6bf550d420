//! Row-wise Raviart-Thomas tensor space and continuous vector Lagrange
//! space, with DOF maps, interpolation and evaluation.
//!
//! Global unknown layout: `[σ row 0 | σ row 1 | u_1 | u_2 | multiplier]`.

pub mod lagrange;
pub mod rt;

use crate::error::{CbfError, Result};
use crate::mesh::{build_edges, EdgeTopology, TriangleMesh};
use crate::quadrature::{edge_rule, triangle_rule, QuadratureRule};
use crate::tensor::{inverse, mat_vec, Mat2, Point, Vec2};

pub use lagrange::{LagrangeReference, LagrangeValue};
pub use rt::{RtReference, RtValue};

/// Barycentric tolerance for point location.
const INSIDE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    RtTensor,
    LagrangeVector,
}

/// Scalar DOF map shared by both components of a tensor/vector space.
#[derive(Debug, Clone)]
pub struct FeSpace {
    pub kind: SpaceKind,
    pub order: usize,
    pub local_dofs: usize,
    dofs: Vec<usize>,
    signs: Vec<f64>,
    /// Number of scalar DOFs (one row or one component).
    pub total_dofs: usize,
}

impl FeSpace {
    pub fn raviart_thomas(mesh: &TriangleMesh, topo: &EdgeTopology, k: usize) -> Result<Self> {
        if k > 1 {
            return Err(CbfError::Unsupported {
                what: "Raviart-Thomas order",
                value: k.to_string(),
            });
        }
        let per_edge = k + 1;
        let local = RtReference::dim(k);
        let nt = mesh.n_triangles();
        let mut dofs = Vec::with_capacity(nt * local);
        let mut signs = Vec::with_capacity(nt * local);
        for t in 0..nt {
            for i in 0..3 {
                let e = topo.triangle_edges[t][i];
                for j in 0..per_edge {
                    dofs.push(e * per_edge + j);
                    let flip = !topo.is_first[t][i];
                    signs.push(if flip && j % 2 == 0 { -1.0 } else { 1.0 });
                }
            }
            if k == 1 {
                for c in 0..2 {
                    dofs.push(topo.n_edges() * per_edge + 2 * t + c);
                    signs.push(1.0);
                }
            }
        }
        let total_dofs = topo.n_edges() * per_edge + if k == 1 { 2 * nt } else { 0 };
        Ok(FeSpace {
            kind: SpaceKind::RtTensor,
            order: k,
            local_dofs: local,
            dofs,
            signs,
            total_dofs,
        })
    }

    pub fn lagrange(mesh: &TriangleMesh, topo: &EdgeTopology, order: usize) -> Result<Self> {
        let r = LagrangeReference::new(order)?;
        let nv = mesh.n_vertices();
        let mut dofs = Vec::with_capacity(mesh.n_triangles() * r.n_dofs());
        for (t, tri) in mesh.triangles.iter().enumerate() {
            dofs.extend_from_slice(tri);
            if order == 2 {
                dofs.extend(topo.triangle_edges[t].iter().map(|&e| nv + e));
            }
        }
        let total_dofs = if order == 2 { nv + topo.n_edges() } else { nv };
        Ok(FeSpace {
            kind: SpaceKind::LagrangeVector,
            order,
            local_dofs: r.n_dofs(),
            signs: vec![1.0; dofs.len()],
            dofs,
            total_dofs,
        })
    }

    /// Global scalar ids and orientation signs of triangle `t`.
    pub fn local(&self, t: usize) -> (&[usize], &[f64]) {
        let r = t * self.local_dofs..(t + 1) * self.local_dofs;
        (&self.dofs[r.clone()], &self.signs[r])
    }

    /// Coefficients of the 2-component space.
    pub fn len(&self) -> usize {
        2 * self.total_dofs
    }

    pub fn is_empty(&self) -> bool {
        self.total_dofs == 0
    }
}

/// Affine map `x = p0 + J x̂` with `J = [p1 - p0, p2 - p0]`.
#[derive(Debug, Clone, Copy)]
pub struct ElementMap {
    pub p0: Point,
    pub jac: Mat2,
    pub det: f64,
    pub inv: Mat2,
}

impl ElementMap {
    pub fn new(p: [Point; 3]) -> Self {
        let jac = [
            [p[1][0] - p[0][0], p[2][0] - p[0][0]],
            [p[1][1] - p[0][1], p[2][1] - p[0][1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        ElementMap {
            p0: p[0],
            jac,
            det,
            inv: inverse(&jac),
        }
    }

    pub fn map(&self, xh: Point) -> Point {
        let d = mat_vec(&self.jac, xh);
        [self.p0[0] + d[0], self.p0[1] + d[1]]
    }

    pub fn pullback(&self, x: Point) -> Point {
        mat_vec(&self.inv, [x[0] - self.p0[0], x[1] - self.p0[1]])
    }

    /// Contravariant Piola transform of a reference RT value.
    #[inline]
    pub fn piola(&self, v: &RtValue) -> RtValue {
        let s = 1.0 / self.det;
        let j = &self.jac;
        let value = [
            s * (j[0][0] * v.value[0] + j[0][1] * v.value[1]),
            s * (j[1][0] * v.value[0] + j[1][1] * v.value[1]),
        ];
        // ∇φ = J ∇̂φ̂ J⁻¹ / det
        let mut tmp = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                tmp[a][b] = j[a][0] * v.grad[0][b] + j[a][1] * v.grad[1][b];
            }
        }
        let mut grad = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                grad[a][b] = s * (tmp[a][0] * self.inv[0][b] + tmp[a][1] * self.inv[1][b]);
            }
        }
        RtValue {
            value,
            div: s * v.div,
            grad,
        }
    }

    /// Covariant gradient map `J⁻ᵀ ∇̂`.
    #[inline]
    pub fn grad(&self, g: Vec2) -> Vec2 {
        [
            self.inv[0][0] * g[0] + self.inv[1][0] * g[1],
            self.inv[0][1] * g[0] + self.inv[1][1] * g[1],
        ]
    }
}

fn check_inside(t: usize, x: Point, xh: Point) -> Result<()> {
    let l0 = 1.0 - xh[0] - xh[1];
    if xh[0] < -INSIDE_TOL || xh[1] < -INSIDE_TOL || l0 < -INSIDE_TOL {
        return Err(CbfError::OutsideElement {
            triangle: t,
            x: x[0],
            y: x[1],
        });
    }
    Ok(())
}

/// RT_k basis on a physical triangle in local orientation (no global signs).
pub fn rt_basis(tri: [Point; 3], k: usize, x: Point) -> Result<Vec<RtValue>> {
    let r = RtReference::new(k)?;
    let m = ElementMap::new(tri);
    let xh = m.pullback(x);
    check_inside(0, x, xh)?;
    Ok(r.eval(xh).iter().map(|v| m.piola(v)).collect())
}

/// Lagrange basis on a physical triangle with physical gradients.
pub fn lagrange_basis(tri: [Point; 3], order: usize, x: Point) -> Result<Vec<LagrangeValue>> {
    let r = LagrangeReference::new(order)?;
    let m = ElementMap::new(tri);
    let xh = m.pullback(x);
    check_inside(0, x, xh)?;
    Ok(r.eval(xh)
        .into_iter()
        .map(|b| LagrangeValue {
            value: b.value,
            grad: m.grad(b.grad),
        })
        .collect())
}

/// Reference basis values tabulated at the points of a rule.
#[derive(Debug, Clone)]
pub struct ReferenceTables {
    pub rule: QuadratureRule,
    pub rt: Vec<Vec<RtValue>>,
    pub lag: Vec<Vec<LagrangeValue>>,
}

/// Mesh, edge topology and both discrete spaces.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: TriangleMesh,
    pub topo: EdgeTopology,
    pub k: usize,
    pub sigma: FeSpace,
    pub u: FeSpace,
    pub rt_ref: RtReference,
    pub lag_ref: LagrangeReference,
    pub maps: Vec<ElementMap>,
}

impl Discretization {
    /// RT_k rows with continuous P_{k+1} velocity.
    pub fn new(mesh: TriangleMesh, k: usize) -> Result<Self> {
        let topo = build_edges(&mesh)?;
        let sigma = FeSpace::raviart_thomas(&mesh, &topo, k)?;
        let u = FeSpace::lagrange(&mesh, &topo, k + 1)?;
        let maps = (0..mesh.n_triangles())
            .map(|t| ElementMap::new(mesh.triangle_vertices(t)))
            .collect();
        Ok(Discretization {
            rt_ref: RtReference::new(k)?,
            lag_ref: LagrangeReference::new(k + 1)?,
            mesh,
            topo,
            k,
            sigma,
            u,
            maps,
        })
    }

    pub fn n_sigma(&self) -> usize {
        self.sigma.len()
    }

    pub fn n_u(&self) -> usize {
        self.u.len()
    }

    /// Field DOFs, excluding the multiplier.
    pub fn n_dofs(&self) -> usize {
        self.n_sigma() + self.n_u()
    }

    pub fn n_unknowns(&self) -> usize {
        self.n_dofs() + 1
    }

    pub fn multiplier_index(&self) -> usize {
        self.n_dofs()
    }

    #[inline]
    pub fn sigma_index(&self, row: usize, dof: usize) -> usize {
        row * self.sigma.total_dofs + dof
    }

    #[inline]
    pub fn u_index(&self, comp: usize, dof: usize) -> usize {
        self.n_sigma() + comp * self.u.total_dofs + dof
    }

    pub fn tables(&self, rule: QuadratureRule) -> ReferenceTables {
        let rt = rule.points.iter().map(|&p| self.rt_ref.eval(p)).collect();
        let lag = rule.points.iter().map(|&p| self.lag_ref.eval(p)).collect();
        ReferenceTables { rule, rt, lag }
    }

    /// Physical RT basis at a reference point, global orientation applied.
    pub fn rt_values(&self, t: usize, reference: &[RtValue]) -> Vec<RtValue> {
        let m = &self.maps[t];
        let (_, signs) = self.sigma.local(t);
        reference
            .iter()
            .zip(signs)
            .map(|(v, &s)| {
                let p = m.piola(v);
                RtValue {
                    value: [s * p.value[0], s * p.value[1]],
                    div: s * p.div,
                    grad: [
                        [s * p.grad[0][0], s * p.grad[0][1]],
                        [s * p.grad[1][0], s * p.grad[1][1]],
                    ],
                }
            })
            .collect()
    }

    /// Physical Lagrange basis at a reference point.
    pub fn lag_values(&self, t: usize, reference: &[LagrangeValue]) -> Vec<LagrangeValue> {
        let m = &self.maps[t];
        reference
            .iter()
            .map(|b| LagrangeValue {
                value: b.value,
                grad: m.grad(b.grad),
            })
            .collect()
    }

    /// Locates `x` in triangle `t`, returning reference coordinates.
    pub fn locate(&self, t: usize, x: Point) -> Result<Point> {
        let xh = self.maps[t].pullback(x);
        check_inside(t, x, xh)?;
        Ok(xh)
    }

    /// Canonical interpolant of a tensor field: coefficients for both rows.
    pub fn rt_interpolate(&self, field: impl Fn(Point) -> Mat2) -> Vec<f64> {
        let k = self.k;
        let per_edge = k + 1;
        let n = self.sigma.total_dofs;
        let mut out = vec![0.0; 2 * n];
        let erule = edge_rule(2 * k + 12).expect("supported degree");
        for e in 0..self.topo.n_edges() {
            let [a, b] = self.topo.edges[e];
            let (pa, pb) = (self.mesh.vertices[a], self.mesh.vertices[b]);
            let nrm = self.topo.normals[e];
            let len = self.topo.lengths[e];
            for (p, w) in erule.iter() {
                let s = p[0];
                let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                let tau = field(x);
                for r in 0..2 {
                    let flux = tau[r][0] * nrm[0] + tau[r][1] * nrm[1];
                    for j in 0..per_edge {
                        out[r * n + e * per_edge + j] += w * len * flux * rt::legendre(j, s);
                    }
                }
            }
        }
        if k == 1 {
            let trule = triangle_rule(10).expect("supported degree");
            let base = self.topo.n_edges() * per_edge;
            for t in 0..self.mesh.n_triangles() {
                let m = &self.maps[t];
                for (p, w) in trule.iter() {
                    let tau = field(m.map(p));
                    for r in 0..2 {
                        // inverse Piola: φ̂ = det J⁻¹ φ
                        let v = mat_vec(&m.inv, tau[r]);
                        for c in 0..2 {
                            out[r * n + base + 2 * t + c] += w * m.det * v[c];
                        }
                    }
                }
            }
        }
        out
    }

    /// Nodal interpolant of a vector field: coefficients for both components.
    pub fn lagrange_interpolate(&self, field: impl Fn(Point) -> Vec2) -> Vec<f64> {
        let n = self.u.total_dofs;
        let mut out = vec![0.0; 2 * n];
        let nodes = self.lag_ref.nodes();
        for t in 0..self.mesh.n_triangles() {
            let (dofs, _) = self.u.local(t);
            for (l, &node) in nodes.iter().enumerate() {
                let v = field(self.maps[t].map(node));
                out[dofs[l]] = v[0];
                out[n + dofs[l]] = v[1];
            }
        }
        out
    }

    /// Coefficients of triangle `t` with orientation signs folded in.
    pub fn local_coefficients(&self, sol: &DiscreteSolution, t: usize) -> LocalCoefficients {
        let ns = self.sigma.total_dofs;
        let nu = self.u.total_dofs;
        let (sd, ss) = self.sigma.local(t);
        let (ud, _) = self.u.local(t);
        let sigma = [0, 1].map(|r| sd.iter().map(|&d| sol.sigma_coeffs[r * ns + d]).collect());
        let u = [0, 1].map(|c| ud.iter().map(|&d| sol.u_coeffs[c * nu + d]).collect());
        LocalCoefficients {
            sigma,
            u,
            signs: ss.to_vec(),
        }
    }

    /// Evaluates the discrete fields at reference point `xh` of triangle `t`
    /// given reference basis values there.
    pub fn evaluate_local(
        &self,
        t: usize,
        local: &LocalCoefficients,
        rt_ref: &[RtValue],
        lag_ref: &[LagrangeValue],
    ) -> FieldValues {
        let rtv = self.rt_values(t, rt_ref);
        let lagv = self.lag_values(t, lag_ref);
        let mut f = FieldValues::default();
        for r in 0..2 {
            for (l, phi) in rtv.iter().enumerate() {
                let c = local.sigma[r][l];
                f.sigma[r][0] += c * phi.value[0];
                f.sigma[r][1] += c * phi.value[1];
                f.div_sigma[r] += c * phi.div;
                for a in 0..2 {
                    for b in 0..2 {
                        f.grad_sigma[r][a][b] += c * phi.grad[a][b];
                    }
                }
            }
            for (l, b) in lagv.iter().enumerate() {
                let c = local.u[r][l];
                f.u[r] += c * b.value;
                f.grad_u[r][0] += c * b.grad[0];
                f.grad_u[r][1] += c * b.grad[1];
            }
        }
        f
    }

    /// Evaluates `σ_h` (zero-mean part), `div σ_h`, `u_h`, `∇u_h` at a
    /// physical point of triangle `t`.
    pub fn evaluate(&self, sol: &DiscreteSolution, x: Point, t: usize) -> Result<FieldValues> {
        if t >= self.mesh.n_triangles() {
            return Err(CbfError::Config(format!("triangle {t} does not exist")));
        }
        let xh = self.locate(t, x)?;
        let local = self.local_coefficients(sol, t);
        Ok(self.evaluate_local(t, &local, &self.rt_ref.eval(xh), &self.lag_ref.eval(xh)))
    }
}

/// Per-triangle coefficient gather (RT coefficients are unsigned; the
/// signs are applied by [`Discretization::rt_values`]).
#[derive(Debug, Clone)]
pub struct LocalCoefficients {
    pub sigma: [Vec<f64>; 2],
    pub u: [Vec<f64>; 2],
    pub signs: Vec<f64>,
}

/// Pointwise values of a discrete solution.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldValues {
    pub sigma: Mat2,
    /// Row-wise divergence.
    pub div_sigma: Vec2,
    /// `grad_sigma[r][a][b] = ∂σ_{ra}/∂x_b`.
    pub grad_sigma: [Mat2; 2],
    pub u: Vec2,
    pub grad_u: Mat2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    pub sigma_coeffs: Vec<f64>,
    pub u_coeffs: Vec<f64>,
    pub multiplier: f64,
}

impl DiscreteSolution {
    pub fn zeros(disc: &Discretization) -> Self {
        DiscreteSolution {
            sigma_coeffs: vec![0.0; disc.n_sigma()],
            u_coeffs: vec![0.0; disc.n_u()],
            multiplier: 0.0,
        }
    }

    /// Splits a full unknown vector `[σ | u | λ]`.
    pub fn from_vector(disc: &Discretization, x: &[f64]) -> Result<Self> {
        if x.len() != disc.n_unknowns() {
            return Err(CbfError::Config(format!(
                "vector of length {} for {} unknowns",
                x.len(),
                disc.n_unknowns()
            )));
        }
        let ns = disc.n_sigma();
        Ok(DiscreteSolution {
            sigma_coeffs: x[..ns].to_vec(),
            u_coeffs: x[ns..disc.n_dofs()].to_vec(),
            multiplier: x[disc.n_dofs()],
        })
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.sigma_coeffs.len() + self.u_coeffs.len() + 1);
        v.extend_from_slice(&self.sigma_coeffs);
        v.extend_from_slice(&self.u_coeffs);
        v.push(self.multiplier);
        v
    }
}
