use proptest::prelude::*;
use qbsde_core::checks::{
    check_convexity, check_one_sided_growth, lattice, power_quadratic_convexity, power_quadratic_hessian, theta_gap,
    GrowthCheckOptions, PointPair, SegmentSampler, TOL_CONVEX,
};
use qbsde_core::{Domain, GeneratorFamily, GeneratorSpec, ScalarFn, Status};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_convexity_is_exact_on_the_unit_interval(r in 0.0f64..3.0, d in 1usize..=3) {
        let out = power_quadratic_convexity(r, d, false, 5).unwrap();
        prop_assert_eq!(out.convex, r <= 1.0);
        match out.witness {
            Some(w) => {
                let h = power_quadratic_hessian(r, w.y, &w.z);
                let q: f64 = (0..=d).map(|i| (0..=d).map(|j| w.v[i] * h[(i, j)] * w.v[j]).sum::<f64>()).sum();
                prop_assert!(q < 0.0);
            }
            None => prop_assert!(out.sampled_min.unwrap() >= -1e-12),
        }
    }

    #[test]
    fn theta_gap_is_small_where_convexity_passes(
        a in -1.0f64..1.0, b0 in -1.0f64..1.0, gq in 0.0f64..2.0,
        y1 in -3.0f64..3.0, z1 in -3.0f64..3.0, y2 in -3.0f64..3.0, z2 in -3.0f64..3.0,
        theta in 0.05f64..0.95,
    ) {
        let spec = GeneratorSpec::new(Domain::RealLine, GeneratorFamily::AffineQuadratic { a, b0, gamma_q: gq });
        // the segment from p2 to the θ-difference point passes through p1
        let dy = (y1 - theta * y2) / (1.0 - theta);
        let dz = (z1 - theta * z2) / (1.0 - theta);
        let seg = PointPair { t: 0.5, y1: y2, z1: vec![z2], y2: dy, z2: vec![dz] };
        let conv = check_convexity(&spec, &[seg], &[theta]).unwrap();
        prop_assume!(conv.passed());
        let gap = theta_gap(&spec, theta, (y1, &[z1]), (y2, &[z2]), 0.5).unwrap();
        prop_assert!(gap <= TOL_CONVEX, "gap {}", gap);
    }

    #[test]
    fn growth_check_is_monotone_in_the_envelope(
        a in -1.0f64..1.0, b0 in -1.0f64..1.0, gq in 0.0f64..2.0,
        du in 1.0f64..3.0, dd in 0.0f64..1.0, dg in 0.0f64..1.0, dk in 0.0f64..1.0, df in 0.0f64..1.0,
    ) {
        let family = GeneratorFamily::AffineQuadratic { a, b0, gamma_q: gq };
        let env = family.declared_envelope().unwrap();
        let spec = GeneratorSpec::new(Domain::RealLine, family);
        let pts = lattice((0.0, 1.0), (-4.0, 4.0), (-3.0, 3.0), 5, 1);
        let opts = GrowthCheckOptions { random_points: 500, ..Default::default() };
        let base = check_one_sided_growth(&spec, &env, &pts, &opts).unwrap();
        let mut big = env.clone();
        let plus = |f: &ScalarFn, c: f64| {
            let f = f.clone();
            ScalarFn::custom(move |x| f.eval(x) + c)
        };
        let u = big.u.clone();
        big.u = ScalarFn::custom(move |t| du * u.eval(t));
        big.delta = plus(&big.delta, dd);
        big.gamma = plus(&big.gamma, dg);
        big.f = plus(&big.f, df);
        big.kappa += dk;
        let grown = check_one_sided_growth(&spec, &big, &pts, &opts).unwrap();
        for (x, y) in base.items.iter().zip(&grown.items) {
            if x.status == Status::Pass {
                prop_assert_eq!(y.status, Status::Pass, "{} flipped", x.name);
            }
        }
    }
}

#[test]
fn sampled_convexity_agrees_with_the_exact_criterion() {
    for d in 1..=3 {
        for r in [0.0, 0.3, 0.9, 1.0, 1.05, 1.3, 2.5] {
            let spec = GeneratorSpec::new(Domain::PositiveHalfLine, GeneratorFamily::PowerQuadratic { coef: 1.0, r });
            let sampler = SegmentSampler { t: (0.0, 1.0), y: (0.05, 5.0), z: (-3.0, 3.0), d };
            let segs = sampler.sample(&spec.domain, 4000, 11);
            let rep = check_convexity(&spec, &segs, &[0.5, 0.9, 0.99]).unwrap();
            assert_eq!(rep.passed(), r <= 1.0, "r={r} d={d}");
        }
    }
}
