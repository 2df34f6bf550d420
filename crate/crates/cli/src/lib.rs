//! Argument parsing and study drivers behind the `cbf` binary.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use cbf_core::adapt::{adaptive_solve_with, uniform_sequence, AdaptiveConfig, Step};
use cbf_core::bench::{example, Example, ExampleId};
use cbf_core::estimator::IndicatorKind;
use cbf_core::forms::ProblemData;
use cbf_core::mesh::FRACTURE_REGION;
use cbf_core::postprocess::mean_speed_by_region;
use cbf_core::report::{csv_table, format_sci, RowData};
use cbf_core::solver::SolverConfig;
use cbf_core::vtk::write_vtk;
use cbf_core::CbfError;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "cbf",
    version,
    about = "Mixed FEM studies for the convective Brinkman-Forchheimer equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quasi-uniform refinement study with errors, rates and effectivities.
    Convergence(ConvergenceArgs),
    /// Adaptive refinement driven by one of the two indicators.
    Adaptive(AdaptiveArgs),
    /// Fracture network with prescribed tractions; no exact solution.
    DemoFracture(FractureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExampleArg {
    Ex1,
    Ex2,
    Fracture,
}

impl From<ExampleArg> for ExampleId {
    fn from(e: ExampleArg) -> Self {
        match e {
            ExampleArg::Ex1 => ExampleId::Ex1,
            ExampleArg::Ex2 => ExampleId::Ex2,
            ExampleArg::Fracture => ExampleId::Fracture,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Theta1,
    Theta2hat,
}

impl From<EstimatorArg> for IndicatorKind {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Theta1 => IndicatorKind::Theta1,
            EstimatorArg::Theta2hat => IndicatorKind::Theta2Hat,
        }
    }
}

fn parse_c_adm(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie in (0, 1), got {v}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Polynomial order k (RT_k for σ, P_{k+1} for u).
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub order: u8,
    /// Stabilization weight κ₁ (default ν).
    #[arg(long, value_parser = parse_positive)]
    pub kappa1: Option<f64>,
    /// Stabilization weight κ₂ (default ν/2).
    #[arg(long, value_parser = parse_positive)]
    pub kappa2: Option<f64>,
    /// Relative coefficient change at which Newton stops.
    #[arg(long, default_value_t = 1e-6, value_parser = parse_positive)]
    pub tol: f64,
    /// Write a VTK file per level or step.
    #[arg(long)]
    pub vtk: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for assembly and estimation.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergenceArgs {
    #[arg(long, value_enum, default_value_t = ExampleArg::Ex1)]
    pub example: ExampleArg,
    /// Number of uniform levels.
    #[arg(long, default_value_t = 5)]
    pub levels: usize,
    /// Cells per unit length on the first level (default 2 for ex1, 4 for ex2).
    #[arg(long)]
    pub initial: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AdaptiveArgs {
    #[arg(long, value_enum, default_value_t = ExampleArg::Ex2)]
    pub example: ExampleArg,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Theta1)]
    pub estimator: EstimatorArg,
    #[arg(long, default_value_t = 0.75, value_parser = parse_c_adm)]
    pub c_adm: f64,
    #[arg(long, default_value_t = 500_000)]
    pub dof_budget: usize,
    /// Refinement steps after the initial solve.
    #[arg(long, default_value_t = 10)]
    pub max_steps: usize,
    /// Cells per unit length of the initial mesh (default 2 for ex1, 4 for ex2).
    #[arg(long)]
    pub initial: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FractureArgs {
    #[arg(long, value_enum, default_value_t = EstimatorArg::Theta1)]
    pub estimator: EstimatorArg,
    #[arg(long, default_value_t = 0.75, value_parser = parse_c_adm)]
    pub c_adm: f64,
    #[arg(long, default_value_t = 50_000)]
    pub dof_budget: usize,
    #[arg(long, default_value_t = 10)]
    pub max_steps: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Failure of a run, with the exit code it maps to.
#[derive(Debug)]
pub struct RunError {
    pub code: i32,
    pub message: String,
}

impl From<CbfError> for RunError {
    fn from(e: CbfError) -> Self {
        let code = match root(&e) {
            CbfError::Config(_) | CbfError::Unsupported { .. } => EXIT_USAGE,
            _ => EXIT_NUMERICAL,
        };
        let mut message = e.to_string();
        if let CbfError::NonConvergence { history, .. } = root(&e) {
            let h: Vec<String> = history.iter().map(|v| format_sci(*v)).collect();
            message.push_str(&format!("\nrelative changes: {}", h.join(" ")));
        }
        RunError { code, message }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError {
            code: EXIT_NUMERICAL,
            message: e.to_string(),
        }
    }
}

fn root(e: &CbfError) -> &CbfError {
    match e {
        CbfError::Adaptive { source, .. } => root(source),
        other => other,
    }
}

fn usage(msg: impl Into<String>) -> RunError {
    RunError {
        code: EXIT_USAGE,
        message: msg.into(),
    }
}

fn configure(common: &CommonArgs, ex: &Example) -> Result<(ProblemData, SolverConfig), RunError> {
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        // a second configuration attempt in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut data = ex.data.clone();
    data.kappa1 = common.kappa1.unwrap_or(data.kappa1);
    data.kappa2 = common.kappa2.unwrap_or(data.kappa2);
    data.validate()?;
    let solver = SolverConfig {
        tol: common.tol,
        ..SolverConfig::default()
    };
    solver.validate()?;
    Ok((data, solver))
}

fn default_initial(id: ExampleId) -> usize {
    match id {
        ExampleId::Ex1 => 2,
        _ => 4,
    }
}

fn write_step_vtk(path: &Path, step: &Step, nu: f64, kind: IndicatorKind, title: &str) -> Result<(), RunError> {
    let file = BufWriter::new(fs::File::create(path)?);
    write_vtk(
        file,
        &step.disc,
        &step.report.solution,
        nu,
        Some(step.indicator(kind)),
        title,
    )?;
    Ok(())
}

fn progress(step: &Step) {
    let errors = step
        .errors
        .map(|e| format!(" e_total={}", format_sci(e.total())))
        .unwrap_or_default();
    eprintln!(
        "DOF={} iter={} theta1={} theta2hat={}{}",
        step.dofs(),
        step.report.iterations(),
        format_sci(step.theta1.global()),
        format_sci(step.theta2_hat.global()),
        errors
    );
}

/// Runs a parsed command and returns the paths written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, RunError> {
    match &cli.command {
        Command::Convergence(a) => run_convergence(a),
        Command::Adaptive(a) => run_adaptive(a),
        Command::DemoFracture(a) => run_fracture(a),
    }
}

pub fn run_convergence(a: &ConvergenceArgs) -> Result<Vec<PathBuf>, RunError> {
    if a.example == ExampleArg::Fracture {
        return Err(usage(
            "convergence studies need an exact solution: use --example ex1 or ex2",
        ));
    }
    if a.levels == 0 {
        return Err(usage("--levels must be at least 1"));
    }
    let id: ExampleId = a.example.into();
    let ex = example(id);
    let (data, solver) = configure(&a.common, &ex)?;
    let k = a.common.order as usize;
    let initial = a.initial.unwrap_or_else(|| default_initial(id));
    fs::create_dir_all(&a.common.out)?;
    let stem = format!("convergence_{id}_k{k}");
    let mut written = Vec::new();
    let mut rows = Vec::new();
    let mut vtk_error = None;
    uniform_sequence(
        |n| ex.mesh(n),
        initial,
        a.levels,
        &data,
        k,
        &solver,
        ex.exact.as_ref(),
        |s| {
            progress(s);
            rows.push(RowData::from_step(s));
            if a.common.vtk && vtk_error.is_none() {
                let path = a.common.out.join(format!("{stem}_level{}.vtk", rows.len() - 1));
                match write_step_vtk(&path, s, data.nu, IndicatorKind::Theta1, &stem) {
                    Ok(()) => written.push(path),
                    Err(e) => vtk_error = Some(e),
                }
            }
        },
    )?;
    if let Some(e) = vtk_error {
        return Err(e);
    }
    let csv = a.common.out.join(format!("{stem}.csv"));
    fs::write(&csv, csv_table(&rows))?;
    written.insert(0, csv);
    Ok(written)
}

fn adaptive_run(
    ex: &Example,
    common: &CommonArgs,
    config: AdaptiveConfig,
    initial: usize,
    stem: &str,
    kind: IndicatorKind,
) -> Result<(Vec<PathBuf>, Vec<Step>), RunError> {
    let (data, solver) = configure(common, ex)?;
    let config = AdaptiveConfig { solver, ..config };
    fs::create_dir_all(&common.out)?;
    let mut written = Vec::new();
    let mut count = 0usize;
    let mut vtk_error = None;
    let steps = adaptive_solve_with(ex.mesh(initial)?, &data, &config, ex.exact.as_ref(), |s| {
        progress(s);
        if common.vtk && vtk_error.is_none() {
            let path = common.out.join(format!("{stem}_step{count}.vtk"));
            match write_step_vtk(&path, s, data.nu, kind, stem) {
                Ok(()) => written.push(path),
                Err(e) => vtk_error = Some(e),
            }
        }
        count += 1;
    })?;
    if let Some(e) = vtk_error {
        return Err(e);
    }
    let rows: Vec<RowData> = steps.iter().map(RowData::from_step).collect();
    let csv = common.out.join(format!("{stem}.csv"));
    fs::write(&csv, csv_table(&rows))?;
    written.insert(0, csv);
    Ok((written, steps))
}

pub fn run_adaptive(a: &AdaptiveArgs) -> Result<Vec<PathBuf>, RunError> {
    let id: ExampleId = a.example.into();
    let ex = example(id);
    let kind: IndicatorKind = a.estimator.into();
    let k = a.common.order as usize;
    let config = AdaptiveConfig {
        order: k,
        estimator: kind,
        c_adm: a.c_adm,
        max_steps: a.max_steps,
        dof_budget: a.dof_budget,
        ..AdaptiveConfig::default()
    };
    let stem = format!("adaptive_{id}_k{k}_{kind}");
    let initial = a.initial.unwrap_or_else(|| default_initial(id));
    Ok(adaptive_run(&ex, &a.common, config, initial, &stem, kind)?.0)
}

pub fn run_fracture(a: &FractureArgs) -> Result<Vec<PathBuf>, RunError> {
    let ex = example(ExampleId::Fracture);
    let kind: IndicatorKind = a.estimator.into();
    let k = a.common.order as usize;
    let config = AdaptiveConfig {
        order: k,
        estimator: kind,
        c_adm: a.c_adm,
        max_steps: a.max_steps,
        dof_budget: a.dof_budget,
        ..AdaptiveConfig::default()
    };
    let stem = format!("fracture_k{k}");
    let (mut written, steps) = adaptive_run(&ex, &a.common, config, 0, &stem, kind)?;
    let last = steps.last().expect("at least the initial solve");
    let path = a.common.out.join(format!("{stem}_final.vtk"));
    write_step_vtk(&path, last, ex.data.nu, kind, &stem)?;
    written.push(path);
    let speeds = mean_speed_by_region(&last.disc, &last.report.solution);
    for (region, speed) in &speeds {
        let name = if *region == FRACTURE_REGION {
            "fracture"
        } else {
            "matrix"
        };
        println!("mean |u_h| in {name} (region {region}): {}", format_sci(*speed));
    }
    Ok(written)
}
