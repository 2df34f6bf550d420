//! Manufactured solutions, exact error norms, convergence rates and the
//! catalogue of example configurations.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{CbfError, Result};
use crate::forms::{Coefficient, ProblemData};
use crate::mesh::{generate_fracture_domain, generate_lshape, generate_square, TriangleMesh, FRACTURE_REGION};
use crate::postprocess::{compute_ell, for_each_point, recover};
use crate::quadrature::{gauss_legendre, triangle_rule};
use crate::spaces::{DiscreteSolution, Discretization};
use crate::tensor::{frob2, mat_add, mat_scale, mat_sub, mat_vec, outer, transpose, Mat2, Point, Vec2, IDENTITY};

type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
type VecFn = Arc<dyn Fn(Point) -> Vec2 + Send + Sync>;
type MatFn = Arc<dyn Fn(Point) -> Mat2 + Send + Sync>;

/// Axis-aligned boxes whose union is the domain.
pub type Boxes = Vec<[f64; 4]>;

/// Exact solution with hand-coded derivatives.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: &'static str,
    pub nu: f64,
    pub alpha: f64,
    pub forch: f64,
    pub p_exp: f64,
    pub u: VecFn,
    pub grad_u: MatFn,
    pub laplace_u: VecFn,
    /// Pressure before the mean shift.
    pub raw_pressure: ScalarFn,
    pub grad_p: VecFn,
    /// Mean of the raw pressure over the domain.
    pub p0: f64,
    /// `ℓ = -(1/(2|Ω|)) ∫ |u|²`.
    pub ell: f64,
    pub area: f64,
}

impl fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("name", &self.name)
            .field("p_exp", &self.p_exp)
            .field("p0", &self.p0)
            .field("ell", &self.ell)
            .finish_non_exhaustive()
    }
}

impl ManufacturedCase {
    #[allow(clippy::too_many_arguments)]
    fn build(
        name: &'static str,
        p_exp: f64,
        boxes: Boxes,
        u: VecFn,
        grad_u: MatFn,
        laplace_u: VecFn,
        raw_pressure: ScalarFn,
        grad_p: VecFn,
    ) -> Self {
        let area: f64 = boxes.iter().map(|b| (b[1] - b[0]) * (b[3] - b[2])).sum();
        let p_int: f64 = boxes.iter().map(|b| integrate_box(&*raw_pressure, *b, 1e-12)).sum();
        let uu = {
            let u = u.clone();
            move |x: Point| {
                let v = u(x);
                v[0] * v[0] + v[1] * v[1]
            }
        };
        let u_int: f64 = boxes.iter().map(|b| integrate_box(&uu, *b, 1e-12)).sum();
        ManufacturedCase {
            name,
            nu: 1.0,
            alpha: 1.0,
            forch: 10.0,
            p_exp,
            u,
            grad_u,
            laplace_u,
            raw_pressure,
            grad_p,
            p0: p_int / area,
            ell: -u_int / (2.0 * area),
            area,
        }
    }

    pub fn pressure(&self, x: Point) -> f64 {
        (self.raw_pressure)(x) - self.p0
    }

    /// `σ = ν∇u - u⊗u - pI` with the zero-mean pressure.
    pub fn sigma_full(&self, x: Point) -> Mat2 {
        let u = (self.u)(x);
        let g = (self.grad_u)(x);
        mat_sub(
            &mat_sub(&mat_scale(&g, self.nu), &outer(u, u)),
            &mat_scale(&IDENTITY, self.pressure(x)),
        )
    }

    /// Pseudostress with zero mean trace: `σ - ℓ I`.
    pub fn sigma(&self, x: Point) -> Mat2 {
        mat_sub(&self.sigma_full(x), &mat_scale(&IDENTITY, self.ell))
    }

    /// `div σ = νΔu - (∇u)u - ∇p` for solenoidal `u`.
    pub fn div_sigma(&self, x: Point) -> Vec2 {
        let u = (self.u)(x);
        let g = (self.grad_u)(x);
        let lap = (self.laplace_u)(x);
        let gp = (self.grad_p)(x);
        let conv = mat_vec(&g, u);
        [self.nu * lap[0] - conv[0] - gp[0], self.nu * lap[1] - conv[1] - gp[1]]
    }

    pub fn source(&self, x: Point) -> Vec2 {
        let u = (self.u)(x);
        let s = (u[0] * u[0] + u[1] * u[1]).sqrt();
        let pw = if s > 0.0 { s.powf(self.p_exp - 2.0) } else { 0.0 };
        let d = self.div_sigma(x);
        [
            self.alpha * u[0] + self.forch * pw * u[0] - d[0],
            self.alpha * u[1] + self.forch * pw * u[1] - d[1],
        ]
    }

    pub fn vorticity(&self, x: Point) -> Mat2 {
        let g = (self.grad_u)(x);
        mat_scale(&mat_sub(&g, &transpose(&g)), 0.5)
    }

    pub fn shear(&self, x: Point) -> Mat2 {
        let g = (self.grad_u)(x);
        mat_sub(
            &mat_scale(&mat_add(&g, &transpose(&g)), self.nu),
            &mat_scale(&IDENTITY, self.pressure(x)),
        )
    }

    /// Problem data with `f` and `u_D` derived from the exact fields.
    pub fn problem_data(&self) -> ProblemData {
        let (src, ud, gud) = (self.clone(), self.u.clone(), self.grad_u.clone());
        ProblemData::new(
            self.nu,
            Coefficient::constant(self.alpha),
            Coefficient::constant(self.forch),
            self.p_exp,
        )
        .with_source(move |x| src.source(x))
        .with_dirichlet(move |x| ud(x), Some(gud))
    }
}

/// Example 1: smooth solution on the unit square, `p = 3`.
pub fn example1() -> ManufacturedCase {
    ManufacturedCase::build(
        "ex1",
        3.0,
        vec![[0.0, 1.0, 0.0, 1.0]],
        Arc::new(|x| {
            let (a, b) = (PI * x[0], PI * x[1]);
            [a.sin() * b.cos(), -a.cos() * b.sin()]
        }),
        Arc::new(|x| {
            let (a, b) = (PI * x[0], PI * x[1]);
            [
                [PI * a.cos() * b.cos(), -PI * a.sin() * b.sin()],
                [PI * a.sin() * b.sin(), -PI * a.cos() * b.cos()],
            ]
        }),
        Arc::new(|x| {
            let (a, b) = (PI * x[0], PI * x[1]);
            let c = -2.0 * PI * PI;
            [c * a.sin() * b.cos(), -c * a.cos() * b.sin()]
        }),
        Arc::new(|x| (PI * x[0]).cos() * (0.5 * PI * x[1]).sin()),
        Arc::new(|x| {
            [
                -PI * (PI * x[0]).sin() * (0.5 * PI * x[1]).sin(),
                0.5 * PI * (PI * x[0]).cos() * (0.5 * PI * x[1]).cos(),
            ]
        }),
    )
}

const EX2_CENTER: f64 = 0.09;

/// Example 2: L-shaped domain with a pressure peak near the reentrant
/// corner, `p = 3.5`.
pub fn example2() -> ManufacturedCase {
    ManufacturedCase::build(
        "ex2",
        3.5,
        vec![[-1.0, 0.0, -1.0, 0.0], [0.0, 1.0, -1.0, 0.0], [-1.0, 0.0, 0.0, 1.0]],
        Arc::new(|x| {
            let (a, b) = (PI * x[0], PI * x[1]);
            [-PI * a.sin() * b.cos(), PI * a.cos() * b.sin()]
        }),
        Arc::new(|x| {
            let (a, b) = (PI * x[0], PI * x[1]);
            let q = PI * PI;
            [
                [-q * a.cos() * b.cos(), q * a.sin() * b.sin()],
                [-q * a.sin() * b.sin(), q * a.cos() * b.cos()],
            ]
        }),
        Arc::new(|x| {
            let (a, b) = (PI * x[0], PI * x[1]);
            let c = -2.0 * PI * PI;
            [-c * PI * a.sin() * b.cos(), c * PI * a.cos() * b.sin()]
        }),
        Arc::new(|x| {
            let r2 = (x[0] - EX2_CENTER).powi(2) + (x[1] - EX2_CENTER).powi(2);
            10.0 * (1.0 - x[0]) / r2
        }),
        Arc::new(|x| {
            let (dx, dy) = (x[0] - EX2_CENTER, x[1] - EX2_CENTER);
            let r2 = dx * dx + dy * dy;
            [
                10.0 * (-r2 - 2.0 * (1.0 - x[0]) * dx) / (r2 * r2),
                -20.0 * (1.0 - x[0]) * dy / (r2 * r2),
            ]
        }),
    )
}

/// Adaptive tensor Gauss quadrature on `[x0,x1] × [y0,y1]`.
pub fn integrate_box(f: &dyn Fn(Point) -> f64, b: [f64; 4], tol: f64) -> f64 {
    let (xs, ws) = gauss_legendre(10);
    let rule = |b: [f64; 4]| -> f64 {
        let (hx, hy) = (b[1] - b[0], b[3] - b[2]);
        let mut s = 0.0;
        for (i, xi) in xs.iter().enumerate() {
            for (j, yj) in xs.iter().enumerate() {
                s += ws[i] * ws[j] * f([b[0] + hx * xi, b[2] + hy * yj]);
            }
        }
        s * hx * hy
    };
    fn recurse(rule: &dyn Fn([f64; 4]) -> f64, b: [f64; 4], whole: f64, tol: f64, depth: usize) -> f64 {
        let (xm, ym) = (0.5 * (b[0] + b[1]), 0.5 * (b[2] + b[3]));
        let kids = [
            [b[0], xm, b[2], ym],
            [xm, b[1], b[2], ym],
            [b[0], xm, ym, b[3]],
            [xm, b[1], ym, b[3]],
        ];
        let parts = kids.map(rule);
        let sum: f64 = parts.iter().sum();
        if (sum - whole).abs() <= tol || depth >= 12 {
            return sum;
        }
        kids.iter()
            .zip(parts)
            .map(|(&k, p)| recurse(rule, k, p, 0.25 * tol, depth + 1))
            .sum()
    }
    let whole = rule(b);
    recurse(&rule, b, whole, tol, 0)
}

/// Individual errors in the norms of the convergence tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSet {
    /// `H(div)` error of the pseudostress.
    pub sigma: f64,
    /// `H¹` error of the velocity.
    pub u: f64,
    pub p: f64,
    pub g: f64,
    pub omega: f64,
    pub shear: f64,
}

impl ErrorSet {
    /// Error in the product norm of `H(div) × H¹`.
    pub fn total(&self) -> f64 {
        self.sigma.hypot(self.u)
    }

    /// Values in the table order `σ, u, p, G, ω, σ̃, total`.
    pub fn as_array(&self) -> [f64; 7] {
        [self.sigma, self.u, self.p, self.g, self.omega, self.shear, self.total()]
    }
}

/// Errors against the exact fields with a quadrature four degrees above
/// the one used for assembly.
pub fn compute_errors(disc: &Discretization, sol: &DiscreteSolution, case: &ManufacturedCase) -> ErrorSet {
    let rule = triangle_rule((3 * disc.k + 9).min(crate::quadrature::MAX_TRIANGLE_DEGREE)).expect("supported degree");
    let ell_h = compute_ell(disc, sol);
    let mut acc = [0.0f64; 6];
    for_each_point(disc, sol, rule, |_, x, w, v| {
        let ds = mat_sub(&case.sigma(x), &v.sigma);
        let dd = case.div_sigma(x);
        let du = (case.u)(x);
        let dg = mat_sub(&(case.grad_u)(x), &v.grad_u);
        acc[0] += w * (frob2(&ds) + (dd[0] - v.div_sigma[0]).powi(2) + (dd[1] - v.div_sigma[1]).powi(2));
        acc[1] += w * ((du[0] - v.u[0]).powi(2) + (du[1] - v.u[1]).powi(2) + frob2(&dg));
        let r = recover(&v.sigma, v.u, ell_h, case.nu);
        acc[2] += w * (case.pressure(x) - r.pressure).powi(2);
        acc[3] += w * frob2(&mat_sub(&(case.grad_u)(x), &r.grad_u));
        acc[4] += w * frob2(&mat_sub(&case.vorticity(x), &r.vorticity));
        acc[5] += w * frob2(&mat_sub(&case.shear(x), &r.shear));
    });
    let e = acc.map(f64::sqrt);
    ErrorSet {
        sigma: e[0],
        u: e[1],
        p: e[2],
        g: e[3],
        omega: e[4],
        shear: e[5],
    }
}

/// `r = -2 log(e/e') / log(N/N')` for each consecutive pair; absent when
/// an error is zero or the DOF count does not change.
pub fn convergence_rate(runs: &[(usize, f64)]) -> Vec<Option<f64>> {
    runs.windows(2)
        .map(|w| {
            let ((n0, e0), (n1, e1)) = (w[0], w[1]);
            if e0 <= 0.0 || e1 <= 0.0 || n0 == n1 {
                None
            } else {
                Some(-2.0 * (e1 / e0).ln() / (n1 as f64 / n0 as f64).ln())
            }
        })
        .collect()
}

/// Least-squares slope of `log e` against `log N`.
pub fn loglog_slope(runs: &[(usize, f64)]) -> Option<f64> {
    if runs.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = runs.iter().map(|&(n, e)| ((n as f64).ln(), e.ln())).collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / m, sy / m);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleId {
    Ex1,
    Ex2,
    Fracture,
}

impl FromStr for ExampleId {
    type Err = CbfError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ex1" => Ok(ExampleId::Ex1),
            "ex2" => Ok(ExampleId::Ex2),
            "fracture" => Ok(ExampleId::Fracture),
            _ => Err(CbfError::Config(format!("unknown example '{s}'"))),
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExampleId::Ex1 => "ex1",
            ExampleId::Ex2 => "ex2",
            ExampleId::Fracture => "fracture",
        })
    }
}

/// A catalogue entry: data, optional exact solution, and a mesh family.
#[derive(Debug, Clone)]
pub struct Example {
    pub id: ExampleId,
    pub data: ProblemData,
    pub exact: Option<ManufacturedCase>,
}

impl Example {
    /// Structured mesh with `n` cells per unit length, or the fracture
    /// domain at its default resolution.
    pub fn mesh(&self, n: usize) -> Result<TriangleMesh> {
        match self.id {
            ExampleId::Ex1 => generate_square(n),
            ExampleId::Ex2 => generate_lshape(n),
            ExampleId::Fracture => generate_fracture_domain(),
        }
    }
}

/// Momentum least-squares weight for the traction-only demo.
pub const FRACTURE_KAPPA3: f64 = 1.0;

/// Fracture network demo: `p = 4`, `F/α = 10/1` in the fractures and
/// `1/1000` in the matrix, prescribed `σ n` on the whole boundary.
pub fn fracture_problem() -> ProblemData {
    let mut data = ProblemData::new(
        1.0,
        Coefficient::piecewise(1000.0, &[(FRACTURE_REGION, 1.0)]),
        Coefficient::piecewise(1.0, &[(FRACTURE_REGION, 10.0)]),
        4.0,
    )
    .with_traction(1, |x| [-0.5 * (x[1] - 1.0), 0.0])
    .with_traction(2, |x| [0.0, -0.5 * (x[0] - 1.0)])
    .with_traction(3, |_| [0.0, 0.0])
    .with_traction(4, |_| [0.0, 0.0]);
    data.kappa3 = FRACTURE_KAPPA3;
    data.grad_u_d = None;
    data
}

pub fn example(id: ExampleId) -> Example {
    match id {
        ExampleId::Ex1 => {
            let c = example1();
            Example {
                id,
                data: c.problem_data(),
                exact: Some(c),
            }
        }
        ExampleId::Ex2 => {
            let c = example2();
            Example {
                id,
                data: c.problem_data(),
                exact: Some(c),
            }
        }
        ExampleId::Fracture => Example {
            id,
            data: fracture_problem(),
            exact: None,
        },
    }
}

pub fn example_catalog() -> Vec<Example> {
    [ExampleId::Ex1, ExampleId::Ex2, ExampleId::Fracture]
        .into_iter()
        .map(example)
        .collect()
}
