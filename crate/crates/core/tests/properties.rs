mod common;

fn assert_check(result: common::Check) {
    if let Err(e) = result {
        panic!("{e}");
    }
}

#[test]
fn quadrature_integrates_monomials_exactly() {
    assert_check(common::quadrature_monomials());
}

#[test]
fn divergence_commutes_with_interpolation() {
    assert_check(common::commuting_diagram());
}

#[test]
fn normal_traces_match_across_edges() {
    assert_check(common::normal_trace_jump());
}

#[test]
fn jacobian_matches_finite_differences() {
    assert_check(common::fd_jacobian());
}

#[test]
fn velocity_gradient_is_trace_free_and_vorticity_skew() {
    assert_check(common::recovered_field_structure());
}

#[test]
fn zero_data_gives_zero_solution() {
    assert_check(common::zero_data_zero_solution());
}

#[test]
fn marking_matches_direct_filter() {
    assert_check(common::mark_vs_brute_force());
}

#[test]
fn exact_constant_flow_has_no_residual() {
    assert_check(common::zero_residual_indicators());
}

#[test]
fn random_refinements_stay_conforming() {
    assert_check(common::random_refinement());
}

mod generated {
    use cbf_core::adapt::mark;
    use cbf_core::estimator::{IndicatorField, IndicatorKind};
    use cbf_core::mesh::{build_edges, generate_square, refine};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn marking_keeps_the_largest_indicator(
            values in prop::collection::vec(0.0f64..10.0, 1..80),
            c in 0.01f64..0.99,
        ) {
            let field = IndicatorField {
                kind: IndicatorKind::Theta2Hat,
                per_element: values.iter().map(|v| v * v).collect(),
            };
            let marked = mark(&field, c).unwrap();
            let top = values
                .iter()
                .enumerate()
                .fold(0, |best, (i, v)| if *v > values[best] { i } else { best });
            prop_assert!(marked.contains(&top));
            prop_assert!(marked.windows(2).all(|w| w[0] < w[1]));
            let scaled = IndicatorField {
                kind: IndicatorKind::Theta2Hat,
                per_element: field.per_element.iter().map(|v| 9.0 * v).collect(),
            };
            prop_assert_eq!(mark(&scaled, c).unwrap(), marked);
        }

        #[test]
        fn refinement_preserves_area_and_regions(
            n in 1usize..4,
            picks in prop::collection::vec(any::<prop::sample::Index>(), 0..6),
        ) {
            let mut mesh = generate_square(n).unwrap();
            mesh.regions = (0..mesh.n_triangles() as i32).collect();
            let parent_regions = mesh.regions.clone();
            let marked: Vec<usize> = picks.iter().map(|p| p.index(mesh.n_triangles())).collect();
            let fine = refine(&mesh, &marked).unwrap();
            prop_assert!((fine.total_area() - 1.0).abs() < 1e-13);
            build_edges(&fine).unwrap();
            for (t, &p) in fine.parent.iter().enumerate() {
                prop_assert_eq!(fine.regions[t], parent_regions[p]);
            }
        }
    }
}
