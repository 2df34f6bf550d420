//! Python module `pycbf`: meshes, solves, indicators and studies.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;

use cbf_core::adapt::{self, AdaptiveConfig, Step};
use cbf_core::bench::{self, ExampleId};
use cbf_core::estimator::{IndicatorField, IndicatorKind};
use cbf_core::mesh::{self, TriangleMesh};
use cbf_core::postprocess::{mean_speed_by_region, recover_fields};
use cbf_core::report::{csv_table, RowData};
use cbf_core::solver::{SolverConfig, Strategy};
use cbf_core::vtk::write_vtk;
use cbf_core::CbfError;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: CbfError) -> PyErr {
    match e {
        CbfError::Config(_) | CbfError::Unsupported { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn example_id(name: &str) -> PyResult<ExampleId> {
    match name {
        "ex1" => Ok(ExampleId::Ex1),
        "ex2" => Ok(ExampleId::Ex2),
        "fracture" => Ok(ExampleId::Fracture),
        _ => Err(PyValueError::new_err(format!(
            "unknown example {name:?}; expected ex1, ex2 or fracture"
        ))),
    }
}

fn indicator_kind(name: &str) -> PyResult<IndicatorKind> {
    match name {
        "theta1" => Ok(IndicatorKind::Theta1),
        "theta2hat" => Ok(IndicatorKind::Theta2Hat),
        _ => Err(PyValueError::new_err(format!(
            "unknown estimator {name:?}; expected theta1 or theta2hat"
        ))),
    }
}

fn solver_config(tol: f64, strategy: &str) -> PyResult<SolverConfig> {
    let strategy = match strategy {
        "newton" => Strategy::Newton,
        "picard" => Strategy::Picard,
        _ => return Err(PyValueError::new_err(format!("unknown strategy {strategy:?}"))),
    };
    let config = SolverConfig {
        tol,
        strategy,
        ..SolverConfig::default()
    };
    config.validate().map_err(to_py)?;
    Ok(config)
}

/// Conforming triangulation with region and boundary labels.
#[pyclass(name = "Mesh", module = "pycbf", from_py_object)]
#[derive(Clone)]
pub struct PyMesh {
    inner: TriangleMesh,
}

#[pymethods]
impl PyMesh {
    /// Unit square split into `2 n²` triangles.
    #[staticmethod]
    fn square(n: usize) -> PyResult<Self> {
        Ok(PyMesh {
            inner: mesh::generate_square(n).map_err(to_py)?,
        })
    }

    /// The L-shaped domain `(-1,1)² \ [0,1)²` with `n` cells per unit length.
    #[staticmethod]
    fn lshape(n: usize) -> PyResult<Self> {
        Ok(PyMesh {
            inner: mesh::generate_lshape(n).map_err(to_py)?,
        })
    }

    /// The fractured unit square used by the demonstration problem.
    #[staticmethod]
    fn fracture() -> PyResult<Self> {
        Ok(PyMesh {
            inner: mesh::generate_fracture_domain().map_err(to_py)?,
        })
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.inner.n_vertices()
    }

    #[getter]
    fn n_triangles(&self) -> usize {
        self.inner.n_triangles()
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices.iter().map(|v| (v[0], v[1])).collect()
    }

    fn triangles(&self) -> Vec<(usize, usize, usize)> {
        self.inner.triangles.iter().map(|t| (t[0], t[1], t[2])).collect()
    }

    fn regions(&self) -> Vec<i32> {
        self.inner.regions.clone()
    }

    fn area(&self) -> f64 {
        (0..self.inner.n_triangles()).map(|t| self.inner.signed_area(t)).sum()
    }

    /// Largest triangle diameter.
    fn mesh_size(&self) -> PyResult<f64> {
        self.inner.mesh_size().map_err(to_py)
    }

    /// Newest-vertex bisection of the marked triangles plus closure.
    fn refine(&self, marked: Vec<usize>) -> PyResult<Self> {
        Ok(PyMesh {
            inner: mesh::refine(&self.inner, &marked).map_err(to_py)?,
        })
    }

    #[pyo3(signature = (passes = 1))]
    fn refine_uniform(&self, passes: usize) -> PyResult<Self> {
        Ok(PyMesh {
            inner: mesh::refine_uniform(&self.inner, passes).map_err(to_py)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(vertices={}, triangles={})",
            self.inner.n_vertices(),
            self.inner.n_triangles()
        )
    }
}

/// One solved mesh: solution, both indicators and, if known, the errors.
#[pyclass(name = "Step", module = "pycbf", frozen)]
pub struct PyStep {
    inner: Step,
    nu: f64,
}

impl PyStep {
    fn field(&self, kind: &str) -> PyResult<&IndicatorField> {
        Ok(self.inner.indicator(indicator_kind(kind)?))
    }
}

#[pymethods]
impl PyStep {
    #[getter]
    fn dofs(&self) -> usize {
        self.inner.dofs()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.report.iterations()
    }

    /// Nonlinear residual norm after each iteration.
    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.report.history.iter().map(|r| r.residual).collect()
    }

    #[getter]
    fn mesh(&self) -> PyMesh {
        PyMesh {
            inner: self.inner.disc.mesh.clone(),
        }
    }

    #[getter]
    fn theta1(&self) -> f64 {
        self.inner.theta1.global()
    }

    #[getter]
    fn theta2hat(&self) -> f64 {
        self.inner.theta2_hat.global()
    }

    /// Local indicator `Θ_T` per triangle.
    #[pyo3(signature = (kind = "theta1"))]
    fn local_indicator(&self, kind: &str) -> PyResult<Vec<f64>> {
        Ok(self.field(kind)?.local_values())
    }

    /// Triangles selected for refinement by the mean-value criterion.
    #[pyo3(signature = (kind = "theta1", c_adm = 0.75))]
    fn mark(&self, kind: &str, c_adm: f64) -> PyResult<Vec<usize>> {
        adapt::mark(self.field(kind)?, c_adm).map_err(to_py)
    }

    /// Errors keyed by field name, or `None` without an exact solution.
    fn errors(&self) -> Option<BTreeMap<&'static str, f64>> {
        self.inner.errors.map(|e| {
            BTreeMap::from([
                ("sigma", e.sigma),
                ("u", e.u),
                ("p", e.p),
                ("G", e.g),
                ("omega", e.omega),
                ("stress", e.shear),
                ("total", e.total()),
            ])
        })
    }

    /// `u_h`, `σ_h` and the recovered pressure at a point of the domain.
    fn evaluate(&self, x: f64, y: f64) -> PyResult<BTreeMap<&'static str, Vec<f64>>> {
        let disc = &self.inner.disc;
        let sol = &self.inner.report.solution;
        let fields = recover_fields(disc, sol, self.nu);
        for t in 0..disc.mesh.n_triangles() {
            if let Ok(v) = disc.evaluate(sol, [x, y], t) {
                let r = fields.at_values(&v);
                let s = v.sigma;
                return Ok(BTreeMap::from([
                    ("u", v.u.to_vec()),
                    ("sigma", vec![s[0][0], s[0][1], s[1][0], s[1][1]]),
                    ("pressure", vec![r.pressure]),
                ]));
            }
        }
        Err(PyValueError::new_err(format!("({x}, {y}) lies outside the mesh")))
    }

    /// Mean `|u_h|` per region label.
    fn mean_speed_by_region(&self) -> BTreeMap<i32, f64> {
        mean_speed_by_region(&self.inner.disc, &self.inner.report.solution)
    }

    #[pyo3(signature = (path, kind = "theta1"))]
    fn write_vtk(&self, path: &str, kind: &str) -> PyResult<()> {
        let field = self.field(kind)?;
        let file = File::create(path).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        write_vtk(
            BufWriter::new(file),
            &self.inner.disc,
            &self.inner.report.solution,
            self.nu,
            Some(field),
            "pycbf",
        )
        .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Step(dofs={}, iterations={})", self.dofs(), self.iterations())
    }
}

fn wrap(steps: Vec<Step>, nu: f64) -> Vec<PyStep> {
    steps.into_iter().map(|inner| PyStep { inner, nu }).collect()
}

/// Solves one of the catalogued problems on `mesh` (default: its coarsest mesh).
#[pyfunction]
#[pyo3(signature = (example, mesh = None, order = 0, tol = 1e-6, strategy = "newton"))]
fn solve(
    py: Python<'_>,
    example: &str,
    mesh: Option<PyMesh>,
    order: usize,
    tol: f64,
    strategy: &str,
) -> PyResult<PyStep> {
    let ex = bench::example(example_id(example)?);
    let config = solver_config(tol, strategy)?;
    let mesh = match mesh {
        Some(m) => m.inner,
        None => ex.mesh(default_initial(ex.id)).map_err(to_py)?,
    };
    let step = py
        .detach(|| adapt::solve_step(mesh, &ex.data, order, &config, ex.exact.as_ref()))
        .map_err(to_py)?;
    Ok(PyStep {
        inner: step,
        nu: ex.data.nu,
    })
}

fn default_initial(id: ExampleId) -> usize {
    match id {
        ExampleId::Ex1 => 2,
        _ => 4,
    }
}

/// Uniform study on `mesh(n0)`, `mesh(2 n0)`, ...
#[pyfunction]
#[pyo3(signature = (example, order = 0, levels = 5, initial = None, tol = 1e-6))]
fn convergence(
    py: Python<'_>,
    example: &str,
    order: usize,
    levels: usize,
    initial: Option<usize>,
    tol: f64,
) -> PyResult<Vec<PyStep>> {
    let ex = bench::example(example_id(example)?);
    if ex.exact.is_none() {
        return Err(PyValueError::new_err("convergence studies need an exact solution"));
    }
    let config = solver_config(tol, "newton")?;
    let n0 = initial.unwrap_or_else(|| default_initial(ex.id));
    let steps = py
        .detach(|| {
            adapt::uniform_sequence(
                |n| ex.mesh(n),
                n0,
                levels,
                &ex.data,
                order,
                &config,
                ex.exact.as_ref(),
                |_| {},
            )
        })
        .map_err(to_py)?;
    Ok(wrap(steps, ex.data.nu))
}

/// Adaptive loop: solve, estimate, mark, refine.
#[pyfunction]
#[pyo3(signature = (
    example,
    order = 0,
    estimator = "theta1",
    c_adm = 0.75,
    max_steps = 10,
    dof_budget = 500_000,
    initial = None,
    tol = 1e-6
))]
#[allow(clippy::too_many_arguments)]
fn adaptive(
    py: Python<'_>,
    example: &str,
    order: usize,
    estimator: &str,
    c_adm: f64,
    max_steps: usize,
    dof_budget: usize,
    initial: Option<usize>,
    tol: f64,
) -> PyResult<Vec<PyStep>> {
    let ex = bench::example(example_id(example)?);
    let config = AdaptiveConfig {
        order,
        estimator: indicator_kind(estimator)?,
        c_adm,
        max_steps,
        dof_budget,
        solver: solver_config(tol, "newton")?,
    };
    let mesh = ex
        .mesh(initial.unwrap_or_else(|| default_initial(ex.id)))
        .map_err(to_py)?;
    let steps = py
        .detach(|| adapt::adaptive_solve(mesh, &ex.data, &config, ex.exact.as_ref()))
        .map_err(to_py)?;
    Ok(wrap(steps, ex.data.nu))
}

/// The CSV table the command-line tool writes for a sequence of steps.
#[pyfunction]
fn csv(steps: Vec<PyRef<'_, PyStep>>) -> String {
    let rows: Vec<RowData> = steps.iter().map(|s| RowData::from_step(&s.inner)).collect();
    csv_table(&rows)
}

/// Rates `-2 log(e_i/e_{i-1}) / log(N_i/N_{i-1})`; the first entry is `None`.
#[pyfunction]
fn convergence_rates(dofs: Vec<usize>, errors: Vec<f64>) -> PyResult<Vec<Option<f64>>> {
    if dofs.len() != errors.len() {
        return Err(PyValueError::new_err("dofs and errors differ in length"));
    }
    let runs: Vec<(usize, f64)> = dofs.into_iter().zip(errors).collect();
    let mut out = vec![None];
    out.extend(bench::convergence_rate(&runs));
    out.truncate(runs.len());
    Ok(out)
}

#[pymodule]
fn pycbf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyStep>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(convergence, m)?)?;
    m.add_function(wrap_pyfunction!(adaptive, m)?)?;
    m.add_function(wrap_pyfunction!(csv, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_rates, m)?)?;
    Ok(())
}
