use proptest::prelude::*;
use uavlc::altitude::{AltitudeProblem, ORACLE_H_MAX, ORACLE_STEP};

fn problem() -> impl Strategy<Value = AltitudeProblem> {
    (1.0f64..=6.0, 1.0f64..=1e4, 1.0f64..=50.0)
        .prop_map(|(m, lambda, h_min)| AltitudeProblem::new(lambda, m, h_min, ORACLE_H_MAX).unwrap())
}

/// λ log-uniform and kept only when the unconstrained optimum lies inside the oracle's range.
fn interior_problem() -> impl Strategy<Value = AltitudeProblem> {
    (1.0f64..=6.0, 0.0f64..=4.0, 1.0f64..=50.0)
        .prop_map(|(m, log_lambda, h_min)| {
            AltitudeProblem::new(10f64.powf(log_lambda), m, h_min, ORACLE_H_MAX).unwrap()
        })
        .prop_filter("h0 inside the grid", |p| p.stationary_points().unwrap().h0 <= ORACLE_H_MAX - 1.0)
}

fn central_difference(p: &AltitudeProblem, h: f64) -> f64 {
    let eta = 1e-6 * h;
    (p.f_of_h(h + eta) - p.f_of_h(h - eta)) / (2.0 * eta)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn closed_form_matches_grid_in_range(p in problem()) {
        let closed = p.optimal_altitude_in_range().unwrap();
        let grid = p.oracle_grid_argmax(ORACLE_STEP).unwrap();
        prop_assert!((closed - grid).abs() <= ORACLE_STEP, "closed {} grid {}", closed, grid);
    }

    #[test]
    fn closed_form_matches_grid_unbounded(p in interior_problem()) {
        let closed = p.optimal_altitude().unwrap();
        let grid = p.oracle_grid_argmax(ORACLE_STEP).unwrap();
        prop_assert!((closed - grid).abs() <= ORACLE_STEP, "closed {} grid {}", closed, grid);
    }

    #[test]
    fn derivative_vanishes_at_h0(p in problem()) {
        let h0 = p.stationary_points().unwrap().h0;
        // f′ = λ a h^{a−1} − 2h: compare against the size of either term.
        prop_assert!(central_difference(&p, h0).abs() <= 1e-5 * 2.0 * h0);
        prop_assert!(p.f_prime(h0).abs() <= 1e-9 * 2.0 * h0);
    }

    #[test]
    fn h0_dominates_h00(p in problem()) {
        let sp = p.stationary_points().unwrap();
        match sp.h00 {
            Some(h00) => prop_assert!(sp.h0 / h00 >= 1.0),
            None => prop_assert_eq!(p.lambertian_order, 1.0),
        }
    }

    #[test]
    fn rises_to_h0_then_falls(p in problem()) {
        let sp = p.stationary_points().unwrap();
        prop_assume!(p.lambertian_order > 1.0);
        let h00 = sp.h00.unwrap();
        let grid = |a: f64, b: f64| (0..1000).map(move |k| a + (b - a) * k as f64 / 999.0);
        let up: Vec<f64> = grid(h00, sp.h0).map(|h| p.f_of_h(h)).collect();
        let down: Vec<f64> = grid(sp.h0, 2.0 * sp.h0).map(|h| p.f_of_h(h)).collect();
        prop_assert!(up.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(down.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(up[999] > up[0] && down[999] < down[0]);
    }

    #[test]
    fn linear_order_is_globally_concave(lambda in 1.0f64..1e4, h in 0.1f64..500.0) {
        let p = AltitudeProblem::new(lambda, 1.0, 1.0, ORACLE_H_MAX).unwrap();
        prop_assert_eq!(p.f_second(h), -2.0);
        let eta = 1e-3 * h;
        let fd = (p.f_of_h(h + eta) - 2.0 * p.f_of_h(h) + p.f_of_h(h - eta)) / (eta * eta);
        prop_assert!((fd + 2.0).abs() <= 1e-3 * (1.0 + lambda / h), "fd {}", fd);
        let sp = p.stationary_points().unwrap();
        prop_assert!(sp.h00.is_none());
        prop_assert!((sp.h0 - lambda / 2.0).abs() <= 1e-9 * lambda);
    }
}

#[test]
fn reference_figure_altitude() {
    let p = AltitudeProblem::new(26.0, 1.0, 10.0, ORACLE_H_MAX).unwrap();
    assert!((p.stationary_points().unwrap().h0 - 13.0).abs() < 1e-12);
    assert!((p.oracle_grid_argmax(ORACLE_STEP).unwrap() - 13.0).abs() <= ORACLE_STEP);
}
