use proptest::prelude::*;
use qbsde_core::regression::conditional_expectation;
use qbsde_core::{PathBundle, RegressionBasis, TimeGrid};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn a_path_ignores_the_rest_of_the_bundle(seed in any::<u64>(), n in 2usize..50, m in 1usize..20, d in 1usize..3) {
        let grid = TimeGrid::new(1.0, m).unwrap();
        let small = PathBundle::generate(seed, n, grid, d).unwrap();
        let large = PathBundle::generate(seed, n + 17, grid, d).unwrap();
        for p in 0..n {
            for i in 0..m {
                for k in 0..d {
                    prop_assert_eq!(small.increment(p, i, k), large.increment(p, i, k));
                }
            }
        }
    }

    #[test]
    fn regeneration_is_bit_identical(seed in any::<u64>(), n in 1usize..200, m in 1usize..10) {
        let grid = TimeGrid::new(0.7, m).unwrap();
        prop_assert_eq!(PathBundle::generate(seed, n, grid, 1).unwrap(), PathBundle::generate(seed, n, grid, 1).unwrap());
    }

    #[test]
    fn fit_ignores_affine_rescaling_of_the_state(seed in 0u64..10_000, scale in 0.1f64..10.0, shift in -5.0f64..5.0, degree in 1usize..4) {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let p = PathBundle::generate(seed, 400, grid, 1).unwrap();
        let x = p.brownian_at(2);
        let values: Vec<f64> = x.iter().map(|v| v.sin() + 0.1 * v * v).collect();
        let moved: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
        let basis = RegressionBasis::state(degree);
        let a = conditional_expectation(&values, &x, 1, basis, 0.5).unwrap();
        let b = conditional_expectation(&values, &moved, 1, basis, 0.5).unwrap();
        for (u, v) in a.values.iter().zip(&b.values) {
            prop_assert!((u - v).abs() <= 1e-9, "{} vs {}", u, v);
        }
    }
}

#[test]
fn terminal_variance_matches_the_horizon() {
    let grid = TimeGrid::new(1.5, 10).unwrap();
    let p = PathBundle::generate(42, 100_000, grid, 1).unwrap();
    let bt = p.terminal();
    let n = bt.len() as f64;
    let mean = bt.iter().sum::<f64>() / n;
    let var = bt.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((var / 1.5 - 1.0).abs() <= 0.02, "variance {var}");
}
