use gp_spectrum::charfunc::{char_fn, g_map, ModeProblem};
use gp_spectrum::kernel::{eval_h, eval_k, eval_kprime, KernelParams};
use gp_spectrum::oracle::{brute_k, brute_k_error_estimate};
use num_complex::Complex64;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = KernelParams> {
    // alpha in (0, 1], beta in [1, 2] always gives r in (0, 1]
    (0.05f64..=1.0, 1.0f64..=2.0).prop_map(|(a, b)| KernelParams::new(a, b).unwrap())
}

/// Points in the open sector `|arg z| < 5 pi / 6` with moderate modulus.
fn sector_point() -> impl Strategy<Value = Complex64> {
    (-1.0f64..2.5, -2.6f64..2.6).prop_map(|(lr, t)| Complex64::from_polar(10f64.powf(lr), t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kernels_commute_with_conjugation(p in params(), z in sector_point()) {
        let a = eval_k(&p, z, 1e-12).unwrap().value;
        let b = eval_k(&p, z.conj(), 1e-12).unwrap().value;
        prop_assert_eq!(a, b.conj());
        let a = eval_kprime(&p, z, 1e-12).unwrap().value;
        let b = eval_kprime(&p, z.conj(), 1e-12).unwrap().value;
        prop_assert_eq!(a, b.conj());
        let a = eval_h(&p, z, 1e-12).unwrap().value;
        let b = eval_h(&p, z.conj(), 1e-12).unwrap().value;
        prop_assert_eq!(a, b.conj());
    }

    #[test]
    fn certified_sum_matches_brute_force(p in params(), z in sector_point()) {
        let terms = 200_000;
        let est = brute_k_error_estimate(&p, z, terms);
        prop_assume!(est.is_finite());
        let k = eval_k(&p, z, 1e-12).unwrap();
        let brute = brute_k(&p, z, terms);
        prop_assert!((k.value - brute).norm() <= est + k.error_bound + 1e-12,
            "K = {} brute = {} est = {:e}", k.value, brute, est);
    }

    #[test]
    fn derivative_matches_difference_quotient(p in params(), z in sector_point()) {
        let h = 1e-4 * z.norm().max(1.0);
        let dz = Complex64::new(h, 0.0);
        let fwd = eval_k(&p, z + dz, 1e-13).unwrap().value;
        let bwd = eval_k(&p, z - dz, 1e-13).unwrap().value;
        let fd = (fwd - bwd) / (2.0 * h);
        let kp = eval_kprime(&p, z, 1e-13).unwrap().value;
        prop_assert!((fd - kp).norm() <= 1e-6 * kp.norm().max(1e-3), "fd {} vs K' {}", fd, kp);
    }

    #[test]
    fn reflection_of_char_fn(p in params(), n in 1u64..400, re in -50.0f64..5.0, im in 0.5f64..500.0) {
        let problem = ModeProblem::with_defaults(n, p).unwrap();
        let z = Complex64::new(re, im);
        let d = char_fn(&problem, z).unwrap();
        let dc = char_fn(&problem, z.conj()).unwrap();
        prop_assert_eq!(d, dc.conj());
    }

    #[test]
    fn first_iterate_is_half_kernel(p in params(), n in 1u64..10_000) {
        let problem = ModeProblem::with_defaults(n, p).unwrap();
        let k = eval_k(&p, Complex64::new(0.0, n as f64), 1e-13).unwrap();
        let expected = Complex64::new(0.0, -0.5) * k.value;
        let got = g_map(&problem, Complex64::new(0.0, 0.0)).unwrap();
        prop_assert!((got - expected).norm() <= k.error_bound + 4.0 * f64::EPSILON * k.value.norm());
    }
}
