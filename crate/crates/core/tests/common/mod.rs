//! Property checks shared by the acceptance binary and the integration
//! tests. Each returns a short summary on success and a description of
//! the first violation otherwise.

#![allow(dead_code)]

use std::sync::Arc;

use cbf_core::adapt::mark;
use cbf_core::bench::{example, ExampleId};
use cbf_core::estimator::{theta1, theta2_hat, IndicatorField, IndicatorKind};
use cbf_core::forms::{assemble_a, assemble_b, assemble_f, assemble_newton_jacobian, Coefficient, ProblemData};
use cbf_core::mesh::{generate_lshape, generate_square, refine, TriangleMesh};
use cbf_core::postprocess::{for_each_point, recover_fields};
use cbf_core::quadrature::{triangle_rule, MAX_TRIANGLE_DEGREE};
use cbf_core::solver::{solve_cbf, SolverConfig};
use cbf_core::spaces::{DiscreteSolution, Discretization};
use cbf_core::tensor::{mat_add, mat_scale, mat_vec, outer, trace, Point, IDENTITY};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

/// L-shape with a few local refinements: hanging-free but irregular.
pub fn irregular_mesh() -> TriangleMesh {
    let m = generate_lshape(2).unwrap();
    refine(&m, &[1, 4, 9]).unwrap()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `∫ x^a y^b` over the reference triangle is `a! b! / (a + b + 2)!`.
pub fn quadrature_monomials() -> Check {
    let mut worst = 0.0f64;
    let mut count = 0;
    for degree in 1..=MAX_TRIANGLE_DEGREE {
        let rule = triangle_rule(degree).map_err(|e| e.to_string())?;
        for a in 0..=degree {
            for b in 0..=(degree - a) {
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                let q: f64 = rule
                    .iter()
                    .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                    .sum();
                let err = (q - exact).abs() / exact;
                worst = worst.max(err);
                count += 1;
                if err > 1e-12 {
                    return Err(format!("degree {degree}: x^{a} y^{b} off by {err:e}"));
                }
            }
        }
    }
    Ok(format!("{count} monomials, worst relative error {worst:.1e}"))
}

/// `div Π τ` equals the elementwise `L²` projection of `div τ` onto `P_k`.
pub fn commuting_diagram() -> Check {
    let tau = |x: Point| {
        [
            [x[0] * x[0] * x[1] + 0.3 * x[1], x[1].powi(3) - x[0]],
            [x[0] * x[1] * x[1], 0.5 * x[0].powi(2) + x[0] * x[1]],
        ]
    };
    let div_tau = |x: Point| [2.0 * x[0] * x[1] + 3.0 * x[1] * x[1], x[1] * x[1] + x[0]];
    let rule = triangle_rule(8).unwrap();
    let mut worst = 0.0f64;
    for k in 0..2 {
        let d = Discretization::new(irregular_mesh(), k).unwrap();
        let sol = DiscreteSolution {
            sigma_coeffs: d.rt_interpolate(tau),
            u_coeffs: vec![0.0; d.n_u()],
            multiplier: 0.0,
        };
        let basis = |xh: Point| -> Vec<f64> {
            if k == 0 {
                vec![1.0]
            } else {
                vec![1.0, xh[0], xh[1]]
            }
        };
        let nb = 1 + 2 * k;
        for t in 0..d.mesh.n_triangles() {
            let m = d.maps[t];
            let mut mass = DMatrix::<f64>::zeros(nb, nb);
            let mut rhs = DMatrix::<f64>::zeros(nb, 2);
            for (p, w) in rule.iter() {
                let b = basis(p);
                let dv = div_tau(m.map(p));
                for i in 0..nb {
                    for j in 0..nb {
                        mass[(i, j)] += w * b[i] * b[j];
                    }
                    rhs[(i, 0)] += w * b[i] * dv[0];
                    rhs[(i, 1)] += w * b[i] * dv[1];
                }
            }
            let c = mass.lu().solve(&rhs).ok_or("singular local mass matrix")?;
            for (p, _) in rule.iter() {
                let b = basis(p);
                let v = d.evaluate(&sol, m.map(p), t).map_err(|e| e.to_string())?;
                for r in 0..2 {
                    let proj: f64 = (0..nb).map(|i| c[(i, r)] * b[i]).sum();
                    worst = worst.max((v.div_sigma[r] - proj).abs());
                }
            }
        }
    }
    if worst <= 1e-11 {
        Ok(format!("max deviation {worst:.1e}"))
    } else {
        Err(format!("max deviation {worst:.1e} > 1e-11"))
    }
}

/// `σ n` and `u` agree from both sides of every interior edge for random
/// coefficient vectors.
pub fn normal_trace_jump() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for k in 0..2 {
        let d = Discretization::new(irregular_mesh(), k).unwrap();
        let sol = DiscreteSolution {
            sigma_coeffs: (0..d.n_sigma()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            u_coeffs: (0..d.n_u()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            multiplier: 0.0,
        };
        for e in d.topo.interior_edges() {
            let inc = d.topo.incidence[e];
            let t1 = inc.first.0;
            let t2 = inc.second.expect("interior edge").0;
            let [a, b] = d.topo.edges[e];
            let (pa, pb) = (d.mesh.vertices[a], d.mesh.vertices[b]);
            let n = d.topo.normals[e];
            for s in [0.5, 0.2, 0.85] {
                let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                let v1 = d.evaluate(&sol, x, t1).map_err(|e| e.to_string())?;
                let v2 = d.evaluate(&sol, x, t2).map_err(|e| e.to_string())?;
                let (s1, s2) = (mat_vec(&v1.sigma, n), mat_vec(&v2.sigma, n));
                worst = worst.max((s1[0] - s2[0]).abs()).max((s1[1] - s2[1]).abs());
            }
        }
    }
    if worst <= 1e-12 {
        Ok(format!("max normal jump {worst:.1e}"))
    } else {
        Err(format!("max normal jump {worst:.1e} > 1e-12"))
    }
}

fn nonlinear_residual(
    a: &cbf_core::sparse::CsrMatrix,
    disc: &Discretization,
    data: &ProblemData,
    f: &[f64],
    x: &[f64],
) -> Vec<f64> {
    let b = assemble_b(disc, data, &x[disc.n_sigma()..disc.n_dofs()]).unwrap();
    let ax = a.add_scaled(&b, 1.0).matvec(x);
    ax.iter().zip(f).map(|(p, q)| p - q).collect()
}

/// The Newton Jacobian against one-sided differences of `(A + B_u) x - F`:
/// the mismatch must fall like `ε` (halving ε halves it).
pub fn fd_jacobian() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut ratios = Vec::new();
    for (k, p_exp) in [(0, 3.0), (1, 3.5), (0, 4.0)] {
        let ex = example(ExampleId::Ex1);
        let mut data = ex.data.clone();
        data.p_exp = p_exp;
        let disc = Discretization::new(irregular_mesh(), k).unwrap();
        let n = disc.n_unknowns();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = assemble_a(&disc, &data).unwrap();
        let f = assemble_f(&disc, &data).unwrap();
        let jac = assemble_newton_jacobian(&disc, &data, &x[disc.n_sigma()..disc.n_dofs()]).unwrap();
        let jd = jac.matvec(&dir);
        let r0 = nonlinear_residual(&a, &disc, &data, &f, &x);
        let mismatch = |eps: f64| -> f64 {
            let xe: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + eps * b).collect();
            let re = nonlinear_residual(&a, &disc, &data, &f, &xe);
            re.iter()
                .zip(&r0)
                .zip(&jd)
                .map(|((p, q), j)| ((p - q) / eps - j).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let (m1, m2) = (mismatch(1e-3), mismatch(5e-4));
        let ratio = m1 / m2;
        if !(1.8..=2.2).contains(&ratio) {
            return Err(format!(
                "k={k} p={p_exp}: mismatch ratio {ratio:.3} (errors {m1:.2e}, {m2:.2e})"
            ));
        }
        ratios.push(format!("{ratio:.3}"));
    }
    Ok(format!("mismatch ratios {}", ratios.join(", ")))
}

/// `tr G_h = 0` and `ω_h = -ω_hᵀ` at every quadrature point of a solved
/// Example 1 problem.
pub fn recovered_field_structure() -> Check {
    let ex = example(ExampleId::Ex1);
    let mut worst_trace = 0.0f64;
    let mut worst_skew = 0.0f64;
    for k in 0..2 {
        let disc = Discretization::new(ex.mesh(4).unwrap(), k).unwrap();
        let report = solve_cbf(&disc, &ex.data, &SolverConfig::default()).map_err(|e| e.to_string())?;
        let fields = recover_fields(&disc, &report.solution, ex.data.nu);
        let rule = triangle_rule(4).unwrap();
        for_each_point(&disc, &report.solution, rule, |_, _, _, v| {
            let r = fields.at_values(v);
            worst_trace = worst_trace.max(trace(&r.grad_u).abs());
            for i in 0..2 {
                for j in 0..2 {
                    worst_skew = worst_skew.max((r.vorticity[i][j] + r.vorticity[j][i]).abs());
                }
            }
        });
    }
    if worst_trace <= 1e-12 && worst_skew <= 1e-12 {
        Ok(format!("max |tr G_h| {worst_trace:.1e}, max |ω + ωᵀ| {worst_skew:.1e}"))
    } else {
        Err(format!("max |tr G_h| {worst_trace:.1e}, max |ω + ωᵀ| {worst_skew:.1e}"))
    }
}

/// Vanishing source and boundary data give the zero solution.
pub fn zero_data_zero_solution() -> Check {
    let data = ProblemData::new(1.0, Coefficient::constant(1.0), Coefficient::constant(10.0), 3.0);
    let mut iters = Vec::new();
    for (k, mesh) in [(0, generate_square(4).unwrap()), (1, irregular_mesh())] {
        let disc = Discretization::new(mesh, k).unwrap();
        let report = solve_cbf(&disc, &data, &SolverConfig::default()).map_err(|e| e.to_string())?;
        let sol = &report.solution;
        let largest = sol
            .sigma_coeffs
            .iter()
            .chain(&sol.u_coeffs)
            .chain(std::iter::once(&sol.multiplier))
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if largest != 0.0 {
            return Err(format!("k={k}: largest coefficient {largest:e}"));
        }
        iters.push(report.iterations());
    }
    Ok(format!("exact zeros, iterations {iters:?}"))
}

/// `mark` against a direct filter of `√Θ²_T ≥ c · mean`.
pub fn mark_vs_brute_force() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..200 {
        let n = rng.gen_range(1..60);
        let c = rng.gen_range(0.01..0.99);
        let mut squared: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..4.0f64).powi(3)).collect();
        if case % 7 == 0 {
            squared.iter_mut().for_each(|v| *v = 2.0);
        }
        let local: Vec<f64> = squared.iter().map(|v| v.sqrt()).collect();
        let mean = local.iter().sum::<f64>() / n as f64;
        let expected: Vec<usize> = (0..n).filter(|&t| local[t] >= c * mean).collect();
        let field = IndicatorField {
            kind: IndicatorKind::Theta1,
            per_element: squared,
        };
        let got = mark(&field, c).map_err(|e| e.to_string())?;
        if got != expected {
            return Err(format!("case {case}: {got:?} vs {expected:?}"));
        }
    }
    Ok("200 random fields agree".into())
}

/// Constant flow with matching pseudostress, source and boundary data has
/// vanishing strong residuals, so both indicators are zero.
pub fn zero_residual_indicators() -> Check {
    let c: [f64; 2] = [0.3, -0.7];
    let (alpha, forch, p) = (2.0, 5.0, 3.0);
    let speed = (c[0] * c[0] + c[1] * c[1]).sqrt();
    let fval = [0, 1].map(|i| alpha * c[i] + forch * speed.powf(p - 2.0) * c[i]);
    let data = ProblemData::new(1.0, Coefficient::constant(alpha), Coefficient::constant(forch), p)
        .with_source(move |_| fval)
        .with_dirichlet(move |_| c, Some(Arc::new(|_| [[0.0; 2]; 2])));
    let sig = mat_add(
        &mat_scale(&outer(c, c), -1.0),
        &mat_scale(&IDENTITY, 0.5 * speed * speed),
    );
    let mut worst = 0.0f64;
    for k in 0..2 {
        let disc = Discretization::new(irregular_mesh(), k).unwrap();
        let mut sol = DiscreteSolution::zeros(&disc);
        sol.sigma_coeffs = disc.rt_interpolate(|_| sig);
        sol.u_coeffs = disc.lagrange_interpolate(|_| c);
        let t1 = theta1(&disc, &sol, &data).map_err(|e| e.to_string())?;
        let t2 = theta2_hat(&disc, &sol, &data).map_err(|e| e.to_string())?;
        worst = worst.max(t1.global()).max(t2.global());
    }
    if worst < 1e-12 {
        Ok(format!("largest indicator {worst:.1e}"))
    } else {
        Err(format!("largest indicator {worst:.1e}"))
    }
}

/// Random markings of square and L-shaped meshes stay conforming and keep
/// the total area.
pub fn random_refinement() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut max_triangles = 0;
    for case in 0..100 {
        let mut m = if case % 2 == 0 {
            generate_square(rng.gen_range(1..4)).unwrap()
        } else {
            generate_lshape(rng.gen_range(1..3)).unwrap()
        };
        let area = m.total_area();
        for pass in 0..rng.gen_range(1..5) {
            let marked: Vec<usize> = (0..m.n_triangles()).filter(|_| rng.gen_bool(0.3)).collect();
            let before = m.n_triangles();
            m = refine(&m, &marked).map_err(|e| format!("case {case} pass {pass}: {e}"))?;
            m.validate().map_err(|e| format!("case {case} pass {pass}: {e}"))?;
            cbf_core::mesh::build_edges(&m).map_err(|e| format!("case {case} pass {pass}: {e}"))?;
            if m.n_triangles() < before + marked.len() {
                return Err(format!("case {case}: marked triangles were not all split"));
            }
            let drift = ((m.total_area() - area) / area).abs();
            if drift > 1e-12 {
                return Err(format!("case {case}: relative area drift {drift:e}"));
            }
        }
        max_triangles = max_triangles.max(m.n_triangles());
    }
    Ok(format!("100 cases, up to {max_triangles} triangles"))
}
