use proptest::prelude::*;
use qbsde_core::ode::{log_ode_solution, small_time_threshold, solve_backward_ode};
use qbsde_core::{Domain, ScalarFn, TimeGrid};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn terminal_value_is_exact(a in -5.0f64..5.0, c in -1.0f64..1.0) {
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let sol = solve_backward_ode(a, |t, y| c * y.sin() + t, grid, &Domain::RealLine, None).unwrap();
        prop_assert_eq!(sol.values[64], a);
    }

    #[test]
    fn ordered_terminals_give_ordered_envelopes(a1 in -3.0f64..3.0, gap in 1e-6f64..2.0, c1 in 0.0f64..1.5, c2 in -0.5f64..0.5, c0 in -1.0f64..1.0) {
        // y -> c0 + c1 y + c2' sin y is nondecreasing when |c2'| <= c1
        let c2 = c2.clamp(-c1, c1);
        let rhs = |_t: f64, y: f64| c0 + c1 * y + c2 * y.sin();
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let lo = solve_backward_ode(a1, rhs, grid, &Domain::RealLine, None).unwrap();
        let hi = solve_backward_ode(a1 + gap, rhs, grid, &Domain::RealLine, None).unwrap();
        for (l, h) in lo.values.iter().zip(&hi.values) {
            prop_assert!(l <= h, "{} > {}", l, h);
        }
    }

    #[test]
    fn nonnegative_rhs_gives_nonincreasing_values(a in -2.0f64..2.0, c0 in 0.0f64..1.0, c1 in 0.0f64..2.0) {
        let grid = TimeGrid::new(2.0, 80).unwrap();
        let sol = solve_backward_ode(a, |_, y| c0 + c1 * y.sin().powi(2), grid, &Domain::RealLine, None).unwrap();
        for w in sol.values.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn log_envelope_stays_below_b(b in 0.01f64..0.367_879, u0 in 0.0f64..2.0, u1 in 0.0f64..1.0) {
        let grid = TimeGrid::new(1.0, 50).unwrap();
        let sol = log_ode_solution(b, &ScalarFn::Affine { intercept: u0, slope: u1 }, grid).unwrap();
        for v in &sol.values {
            prop_assert!(*v <= b && *v > 0.0);
        }
    }

    #[test]
    fn threshold_grows_with_distance_to_the_wall(a1 in -0.9f64..-0.1, shift in 0.0f64..0.08) {
        let wall = Domain::OpenInterval { lower: -1.0, upper: f64::INFINITY };
        let near = small_time_threshold(a1, |_, y| y, &wall, 5.0, None, 400).unwrap();
        let far = small_time_threshold(a1 + shift, |_, y| y, &wall, 5.0, None, 400).unwrap();
        prop_assert!(far >= near, "{} < {}", far, near);
    }

    #[test]
    fn affine_threshold_grows_with_terminal(a in 0.1f64..2.0, extra in 0.0f64..1.0, beta in 0.5f64..2.0) {
        let near = small_time_threshold(a, |_, _| -beta, &Domain::PositiveHalfLine, 10.0, None, 400).unwrap();
        let far = small_time_threshold(a + extra, |_, _| -beta, &Domain::PositiveHalfLine, 10.0, None, 400).unwrap();
        prop_assert!(far >= near);
    }
}
