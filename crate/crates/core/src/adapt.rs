//! Solve, estimate, mark, refine.

use crate::bench::{compute_errors, ErrorSet, ManufacturedCase};
use crate::error::{CbfError, Result};
use crate::estimator::{theta1, theta2_hat, IndicatorField, IndicatorKind};
use crate::forms::ProblemData;
use crate::mesh::{refine, TriangleMesh};
use crate::solver::{solve_cbf, SolveReport, SolverConfig};
use crate::spaces::Discretization;

/// Triangles with `Θ_T ≥ c_adm · mean(Θ_T)`, in increasing order.
///
/// Works on the square roots of the stored `Θ_T²`.
pub fn mark(indicators: &IndicatorField, c_adm: f64) -> Result<Vec<usize>> {
    if !(c_adm > 0.0 && c_adm < 1.0) {
        return Err(CbfError::Config(format!("c_adm must lie in (0, 1), got {c_adm}")));
    }
    if indicators.is_empty() {
        return Err(CbfError::Config("cannot mark an empty indicator field".into()));
    }
    let local = indicators.local_values();
    let mean = local.iter().sum::<f64>() / local.len() as f64;
    let threshold = c_adm * mean;
    Ok(local
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v >= threshold)
        .map(|(t, _)| t)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    pub order: usize,
    /// Indicator that drives the marking.
    pub estimator: IndicatorKind,
    pub c_adm: f64,
    /// Refinement steps after the initial solve.
    pub max_steps: usize,
    /// No mesh with more DOF than this is solved (the initial one excepted).
    pub dof_budget: usize,
    pub solver: SolverConfig,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            order: 0,
            estimator: IndicatorKind::Theta1,
            c_adm: 0.75,
            max_steps: 10,
            dof_budget: 500_000,
            solver: SolverConfig::default(),
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_adm > 0.0 && self.c_adm < 1.0) {
            return Err(CbfError::Config(format!(
                "c_adm must lie in (0, 1), got {}",
                self.c_adm
            )));
        }
        if self.order > 1 {
            return Err(CbfError::Unsupported {
                what: "polynomial order",
                value: self.order.to_string(),
            });
        }
        self.solver.validate()
    }
}

/// One solved level of an adaptive or uniform sequence.
#[derive(Debug, Clone)]
pub struct Step {
    pub disc: Discretization,
    pub report: SolveReport,
    pub theta1: IndicatorField,
    pub theta2_hat: IndicatorField,
    pub errors: Option<ErrorSet>,
}

impl Step {
    pub fn dofs(&self) -> usize {
        self.disc.n_dofs()
    }

    pub fn indicator(&self, kind: IndicatorKind) -> &IndicatorField {
        match kind {
            IndicatorKind::Theta1 => &self.theta1,
            IndicatorKind::Theta2Hat => &self.theta2_hat,
        }
    }
}

/// Solves on `mesh` and evaluates both indicators and, when an exact
/// solution is known, the errors.
pub fn solve_step(
    mesh: TriangleMesh,
    data: &ProblemData,
    order: usize,
    solver: &SolverConfig,
    exact: Option<&ManufacturedCase>,
) -> Result<Step> {
    let disc = Discretization::new(mesh, order)?;
    let report = solve_cbf(&disc, data, solver)?;
    let t1 = theta1(&disc, &report.solution, data)?;
    let t2 = theta2_hat(&disc, &report.solution, data)?;
    let errors = exact.map(|c| compute_errors(&disc, &report.solution, c));
    Ok(Step {
        disc,
        report,
        theta1: t1,
        theta2_hat: t2,
        errors,
    })
}

/// Quasi-uniform sequence on `mesh(n0)`, `mesh(2 n0)`, ... with `levels`
/// entries. `on_step` sees each level as soon as it is solved.
#[allow(clippy::too_many_arguments)]
pub fn uniform_sequence(
    mesh: impl Fn(usize) -> Result<TriangleMesh>,
    initial: usize,
    levels: usize,
    data: &ProblemData,
    order: usize,
    solver: &SolverConfig,
    exact: Option<&ManufacturedCase>,
    mut on_step: impl FnMut(&Step),
) -> Result<Vec<Step>> {
    if initial == 0 || levels == 0 {
        return Err(CbfError::Config(
            "initial subdivision and level count must be positive".into(),
        ));
    }
    let mut steps = Vec::with_capacity(levels);
    for level in 0..levels {
        let n = initial << level;
        let step = solve_step(mesh(n)?, data, order, solver, exact).map_err(|e| CbfError::Adaptive {
            step: level,
            source: Box::new(e),
        })?;
        on_step(&step);
        steps.push(step);
    }
    Ok(steps)
}

/// `dim RT_k` rows plus `P_{k+1}` components on `mesh`, without building
/// the spaces.
fn predicted_dofs(mesh: &TriangleMesh, order: usize) -> Result<usize> {
    let topo = crate::mesh::build_edges(mesh)?;
    let (nv, ne, nt) = (mesh.n_vertices(), topo.n_edges(), mesh.n_triangles());
    let rt = (order + 1) * ne + order * (order + 1) * nt;
    let lag = match order {
        0 => nv,
        _ => nv + ne,
    };
    Ok(2 * rt + 2 * lag)
}

/// Runs the adaptive loop from `initial`. The first solve is always
/// performed; afterwards the loop stops once `max_steps` refinements have
/// been solved or the next mesh would exceed the DOF budget.
pub fn adaptive_solve(
    initial: TriangleMesh,
    data: &ProblemData,
    config: &AdaptiveConfig,
    exact: Option<&ManufacturedCase>,
) -> Result<Vec<Step>> {
    adaptive_solve_with(initial, data, config, exact, |_| {})
}

/// [`adaptive_solve`] with a callback invoked after every solved step.
pub fn adaptive_solve_with(
    initial: TriangleMesh,
    data: &ProblemData,
    config: &AdaptiveConfig,
    exact: Option<&ManufacturedCase>,
    mut on_step: impl FnMut(&Step),
) -> Result<Vec<Step>> {
    config.validate()?;
    let wrap = |step: usize| {
        move |e: CbfError| CbfError::Adaptive {
            step,
            source: Box::new(e),
        }
    };
    let mut steps = Vec::new();
    let first = solve_step(initial, data, config.order, &config.solver, exact).map_err(wrap(0))?;
    on_step(&first);
    steps.push(first);
    for step in 1..=config.max_steps {
        let last: &Step = steps.last().expect("initial step");
        let marked = mark(last.indicator(config.estimator), config.c_adm).map_err(wrap(step))?;
        if marked.is_empty() {
            break;
        }
        let mesh = refine(&last.disc.mesh, &marked).map_err(wrap(step))?;
        if predicted_dofs(&mesh, config.order).map_err(wrap(step))? > config.dof_budget {
            break;
        }
        let next = solve_step(mesh, data, config.order, &config.solver, exact).map_err(wrap(step))?;
        on_step(&next);
        steps.push(next);
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(v: &[f64]) -> IndicatorField {
        IndicatorField {
            kind: IndicatorKind::Theta1,
            per_element: v.iter().map(|x| x * x).collect(),
        }
    }

    #[test]
    fn mean_value_marking() {
        assert_eq!(mark(&field(&[1.0, 2.0, 3.0, 4.0]), 0.75).unwrap(), vec![1, 2, 3]);
        assert_eq!(mark(&field(&[0.5; 5]), 0.99).unwrap(), vec![0, 1, 2, 3, 4]);
        for bad in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(matches!(mark(&field(&[1.0]), bad), Err(CbfError::Config(_))));
        }
    }

    #[test]
    fn predicted_dofs_match_spaces() {
        let mesh = crate::mesh::generate_lshape(2).unwrap();
        for k in 0..2 {
            let d = Discretization::new(mesh.clone(), k).unwrap();
            assert_eq!(predicted_dofs(&mesh, k).unwrap(), d.n_dofs());
        }
    }
}
