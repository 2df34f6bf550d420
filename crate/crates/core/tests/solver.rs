use cbf_core::bench::{compute_errors, example, ExampleId};
use cbf_core::mesh::{generate_fracture_domain, TriangleMesh};
use cbf_core::solver::{solve_cbf, solve_linear, LinearBackend, SolverConfig, Strategy};
use cbf_core::spaces::Discretization;
use cbf_core::sparse::Triplets;
use cbf_core::CbfError;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let size: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / size
}

#[test]
fn random_spd_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in [1, 7, 100] {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for _ in 0..4 * n {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let v = rng.gen_range(-1.0..1.0);
            m[(i, j)] += v;
            m[(j, i)] += v;
        }
        for i in 0..n {
            let row: f64 = (0..n).map(|j| m[(i, j)].abs()).sum();
            m[(i, i)] = row + 1.0;
        }
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let mut trip = Triplets::new(n, n);
        for i in 0..n {
            for j in 0..n {
                if m[(i, j)] != 0.0 {
                    trip.push(i, j, m[(i, j)]);
                }
            }
        }
        let x = solve_linear(&trip.to_csr(), &rhs).unwrap();
        let oracle = m.cholesky().unwrap().solve(&DVector::from_vec(rhs));
        assert!(relative_gap(&x, oracle.as_slice()) < 1e-12, "n = {n}");
    }
}

#[test]
fn newton_and_picard_reach_the_same_solution() {
    let ex = example(ExampleId::Ex1);
    let disc = Discretization::new(ex.mesh(4).unwrap(), 0).unwrap();
    let tight = |strategy| SolverConfig {
        tol: 1e-12,
        max_iter: 200,
        strategy,
        ..SolverConfig::default()
    };
    let newton = solve_cbf(&disc, &ex.data, &tight(Strategy::Newton)).unwrap();
    let picard = solve_cbf(&disc, &ex.data, &tight(Strategy::Picard)).unwrap();
    assert!(picard.iterations() > newton.iterations());
    assert!(picard.history.iter().all(|h| h.picard_step));
    let gap = relative_gap(&newton.solution.to_vector(), &picard.solution.to_vector());
    assert!(gap < 1e-8, "{gap:e}");
}

#[test]
fn structured_elimination_matches_bordered_factorization() {
    let ex = example(ExampleId::Ex1);
    for (k, n) in [(0, 8), (1, 4)] {
        let disc = Discretization::new(ex.mesh(n).unwrap(), k).unwrap();
        let fast = solve_cbf(&disc, &ex.data, &SolverConfig::default()).unwrap();
        let bordered = SolverConfig {
            linear_backend: LinearBackend::BorderedLu,
            ..SolverConfig::default()
        };
        let slow = solve_cbf(&disc, &ex.data, &bordered).unwrap();
        assert_eq!(fast.iterations(), slow.iterations());
        let gap = relative_gap(&fast.solution.to_vector(), &slow.solution.to_vector());
        assert!(gap < 1e-10, "k = {k}: {gap:e}");
    }
}

#[test]
fn triangle_order_does_not_change_the_solution() {
    let ex = example(ExampleId::Ex1);
    let case = ex.exact.as_ref().unwrap();
    let mesh = ex.mesh(4).unwrap();
    let mut order: Vec<usize> = (0..mesh.n_triangles()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    let shuffled = TriangleMesh::new(
        mesh.vertices.clone(),
        order.iter().map(|&t| mesh.triangles[t]).collect(),
        order.iter().map(|&t| mesh.regions[t]).collect(),
        mesh.boundary_labels.clone(),
    )
    .unwrap();
    for k in 0..2 {
        let errors: Vec<[f64; 7]> = [mesh.clone(), shuffled.clone()]
            .into_iter()
            .map(|m| {
                let disc = Discretization::new(m, k).unwrap();
                let report = solve_cbf(&disc, &ex.data, &SolverConfig::default()).unwrap();
                compute_errors(&disc, &report.solution, case).as_array()
            })
            .collect();
        for (a, b) in errors[0].iter().zip(&errors[1]) {
            assert!((a - b).abs() <= 1e-10 * a, "k = {k}: {a} vs {b}");
        }
    }
}

#[test]
fn converged_residual_is_small() {
    for id in [ExampleId::Ex1, ExampleId::Ex2] {
        let ex = example(id);
        let disc = Discretization::new(ex.mesh(4).unwrap(), 1).unwrap();
        let report = solve_cbf(&disc, &ex.data, &SolverConfig::default()).unwrap();
        assert!(report.iterations() <= 8);
        assert!(report.final_residual() <= 1e-8 * report.load_norm);
        let changes: Vec<f64> = report.history.iter().map(|h| h.relative_change).collect();
        assert!(changes.last().unwrap() <= &1e-6);
    }
}

#[test]
fn iteration_cap_reports_history() {
    let ex = example(ExampleId::Ex1);
    let disc = Discretization::new(ex.mesh(2).unwrap(), 0).unwrap();
    let config = SolverConfig {
        max_iter: 2,
        ..SolverConfig::default()
    };
    match solve_cbf(&disc, &ex.data, &config) {
        Err(CbfError::NonConvergence {
            iterations, history, ..
        }) => {
            assert_eq!(iterations, 2);
            assert_eq!(history.len(), 2);
            assert!(history[1] < history[0]);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn traction_problem_converges() {
    let ex = example(ExampleId::Fracture);
    let disc = Discretization::new(generate_fracture_domain().unwrap(), 0).unwrap();
    let report = solve_cbf(&disc, &ex.data, &SolverConfig::default()).unwrap();
    assert!(report.iterations() <= 8);
    assert!(report.final_residual() <= 1e-8 * report.load_norm);
}

#[test]
fn refinement_reduces_the_error() {
    let ex = example(ExampleId::Ex2);
    let case = ex.exact.as_ref().unwrap();
    let mut last = f64::INFINITY;
    for n in [4, 8] {
        let disc = Discretization::new(ex.mesh(n).unwrap(), 0).unwrap();
        let report = solve_cbf(&disc, &ex.data, &SolverConfig::default()).unwrap();
        let e = compute_errors(&disc, &report.solution, case).total();
        assert!(e < last);
        last = e;
    }
}
