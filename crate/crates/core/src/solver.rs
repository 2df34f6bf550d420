//! Sparse direct solves and the Newton / Picard iteration for the
//! discrete nonlinear problem.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{CbfError, Result};
use crate::forms::{
    assemble_a, assemble_b, assemble_f, assemble_newton_derivative, finalize_system, LinearSystem, ProblemData,
};
use crate::spaces::{DiscreteSolution, Discretization};
use crate::sparse::{CsrMatrix, Triplets};

/// Relative residual accepted from the direct solver.
pub const LINEAR_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Newton,
    Picard,
}

/// How the bordered linear systems are factored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearBackend {
    /// Sparse LU of the unbordered block with the multiplier eliminated
    /// analytically (see [`solve_system`]).
    SparseLu,
    /// Sparse LU of the full bordered matrix. Much slower, kept as a
    /// reference.
    BorderedLu,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative change of the full coefficient vector at which to stop.
    pub tol: f64,
    pub max_iter: usize,
    pub strategy: Strategy,
    /// Step length in `(0, 1]`; 1 means undamped.
    pub damping: f64,
    pub linear_backend: LinearBackend,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-6,
            max_iter: 25,
            strategy: Strategy::Newton,
            damping: 1.0,
            linear_backend: LinearBackend::SparseLu,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(CbfError::Config(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(CbfError::Config("max_iter must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(CbfError::Config(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

/// One linear solve of the nonlinear iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub relative_change: f64,
    /// Euclidean norm of the nonlinear residual at the new iterate.
    pub residual: f64,
    pub picard_step: bool,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: DiscreteSolution,
    pub history: Vec<IterationRecord>,
    /// Norm of the assembled load vector, for relative residuals.
    pub load_norm: f64,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn final_residual(&self) -> f64 {
        self.history.last().map_or(0.0, |h| h.residual)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Direct sparse LU solve with one step of iterative refinement when the
/// first residual is not already at round-off level.
pub fn solve_linear(matrix: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = matrix.n_rows;
    if matrix.n_cols != n || rhs.len() != n {
        return Err(CbfError::LinearSolver(format!(
            "shape mismatch: {}x{} matrix with right-hand side of length {}",
            matrix.n_rows,
            matrix.n_cols,
            rhs.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut entries = Vec::with_capacity(matrix.nnz());
    for r in 0..n {
        for (c, v) in matrix.row(r) {
            if !v.is_finite() {
                return Err(CbfError::LinearSolver(format!("non-finite entry at ({r}, {c})")));
            }
            entries.push(Triplet::new(r, c, v));
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &entries)
        .map_err(|e| CbfError::LinearSolver(format!("{e:?}")))?;
    let lu = a
        .sp_lu()
        .map_err(|e| CbfError::LinearSolver(format!("LU factorization failed: {e:?}")))?;
    let solve = |b: &[f64]| -> Vec<f64> {
        let rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        let x = lu.solve(&rhs);
        (0..n).map(|i| x[(i, 0)]).collect()
    };
    let mut x = solve(rhs);
    let bnorm = norm(rhs);
    let residual = |x: &[f64]| -> Vec<f64> { matrix.matvec(x).iter().zip(rhs).map(|(ax, b)| b - ax).collect() };
    let mut r = residual(&x);
    let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
    if norm(&r) > 1e-13 * scale {
        let dx = solve(&r);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        r = residual(&x);
    }
    let rel = norm(&r) / scale;
    if !(rel <= LINEAR_RESIDUAL_TOL) {
        return Err(CbfError::LinearSolver(format!(
            "relative residual {rel:.3e} exceeds {LINEAR_RESIDUAL_TOL:.0e}; matrix is singular or severely ill-conditioned"
        )));
    }
    Ok(x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn transpose_matvec(m: &CsrMatrix, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.n_cols];
    for r in 0..m.n_rows {
        for (c, v) in m.row(r) {
            out[c] += v * x[r];
        }
    }
    out
}

/// Solves an assembled system, bordered or not.
///
/// With a trace constraint the border is never factored. Since `z` spans
/// the kernel of `K` from both sides, `λ = zᵀF / zᵀr`; the remaining
/// singular block is made regular by pinning one DOF where `z` is large,
/// and the `z` component of the result is then projected out so that
/// `rᵀx = 0`. If `z` fails to be a kernel vector numerically the full
/// bordered matrix is factored instead.
pub fn solve_system(sys: &LinearSystem) -> Result<Vec<f64>> {
    let Some(c) = &sys.constraint else {
        return solve_linear(&sys.matrix, &sys.rhs);
    };
    let n = sys.matrix.n_rows;
    let lam = n - 1;
    let z = &c.kernel;
    let zr = dot(z, &c.row);
    let scale = sys.matrix.max_abs() * norm(z);
    let leak = norm(&sys.matrix.matvec(z)).max(norm(&transpose_matvec(&sys.matrix, z)));
    if zr.abs() < f64::EPSILON * norm(z) * norm(&c.row) || leak > 1e-10 * scale {
        return solve_linear(&sys.bordered_matrix(), &sys.rhs);
    }
    let lambda = dot(z, &sys.rhs) / zr;
    let mut b: Vec<f64> = sys.rhs.iter().zip(&c.row).map(|(f, r)| f - lambda * r).collect();
    b[lam] = 0.0;

    let pin = (0..lam)
        .max_by(|&i, &j| z[i].abs().total_cmp(&z[j].abs()))
        .expect("system has unknowns besides the multiplier");
    let diag = sys.matrix.get(pin, pin).abs();
    let mut t: Triplets = sys.matrix.to_triplets();
    t.push(pin, pin, if diag > 0.0 { diag } else { 1.0 });
    t.push(lam, lam, 1.0);
    let mut x = solve_linear(&t.to_csr(), &b)?;

    let shift = dot(&c.row, &x) / zr;
    for (xi, zi) in x.iter_mut().zip(z) {
        *xi -= shift * zi;
    }
    x[lam] = lambda;

    let bnorm = norm(&sys.rhs);
    let rel = norm(&sys.residual(&x)) / if bnorm > 0.0 { bnorm } else { 1.0 };
    if !(rel <= LINEAR_RESIDUAL_TOL) {
        return Err(CbfError::LinearSolver(format!(
            "bordered residual {rel:.3e} exceeds {LINEAR_RESIDUAL_TOL:.0e}"
        )));
    }
    Ok(x)
}

/// Solves the discrete problem from a zero initial guess.
///
/// Newton steps solve `J(u) x_new = ∂B(u) x + F`; Picard steps solve
/// `(A + B_u) x_new = F`. If the residual grows two steps in a row a
/// single Picard step is inserted.
pub fn solve_cbf(disc: &Discretization, data: &ProblemData, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    data.validate()?;
    let a = assemble_a(disc, data)?;
    let f = assemble_f(disc, data)?;
    let load_norm = norm(&finalize_system(disc, data, &a, f.clone()).rhs);
    let u_range = disc.n_sigma()..disc.n_dofs();

    let mut x = vec![0.0; disc.n_unknowns()];
    let mut b = assemble_b(disc, data, &x[u_range.clone()])?;
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut growth = 0usize;
    let mut force_picard = false;
    let mut last_residual = f64::INFINITY;

    for it in 1..=config.max_iter {
        let picard = config.strategy == Strategy::Picard || force_picard;
        force_picard = false;
        let (matrix, rhs) = if picard {
            (a.add_scaled(&b, 1.0), f.clone())
        } else {
            let c = assemble_newton_derivative(disc, data, &x[u_range.clone()])?;
            let cx = c.matvec(&x);
            let rhs: Vec<f64> = f.iter().zip(&cx).map(|(fi, ci)| fi + ci).collect();
            (a.add_scaled(&b, 1.0).add_scaled(&c, 1.0), rhs)
        };
        let sys = finalize_system(disc, data, &matrix, rhs);
        let solved = match config.linear_backend {
            LinearBackend::SparseLu => solve_system(&sys)?,
            LinearBackend::BorderedLu => solve_linear(&sys.bordered_matrix(), &sys.rhs)?,
        };
        let x_new: Vec<f64> = if config.damping < 1.0 {
            x.iter()
                .zip(&solved)
                .map(|(xo, xn)| xo + config.damping * (xn - xo))
                .collect()
        } else {
            solved
        };

        let diff = norm(&x.iter().zip(&x_new).map(|(p, q)| q - p).collect::<Vec<_>>());
        let size = norm(&x_new);
        let change = if diff == 0.0 { 0.0 } else { diff / size };

        b = assemble_b(disc, data, &x_new[u_range.clone()])?;
        let res_sys = finalize_system(disc, data, &a.add_scaled(&b, 1.0), f.clone());
        let res = norm(&res_sys.residual(&x_new));
        history.push(IterationRecord {
            iteration: it,
            relative_change: change,
            residual: res,
            picard_step: picard,
        });
        x = x_new;

        if change <= config.tol {
            return Ok(SolveReport {
                solution: DiscreteSolution::from_vector(disc, &x)?,
                history,
                load_norm,
            });
        }
        if res > last_residual {
            growth += 1;
            if growth >= 2 && config.strategy == Strategy::Newton {
                force_picard = true;
                growth = 0;
            }
        } else {
            growth = 0;
        }
        last_residual = res;
    }
    Err(CbfError::NonConvergence {
        iterations: config.max_iter,
        last_change: history.last().map_or(f64::NAN, |h| h.relative_change),
        history: history.iter().map(|h| h.relative_change).collect(),
    })
}
