use proptest::prelude::*;

use mmdecomp::io::{matrix_from_json, matrix_to_json, plan_from_json, plan_to_json};
use mmdecomp::robustness::perturbed_run;
use mmdecomp::{
    decompose_traced, factor_count_bound, fidelity, haar_random_unitary, reconstruct, rq_decompose,
    unitarity, Complex, ComplexMatrix, NoiseModel,
};

fn matrix(max_dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| {
        prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), r * c).prop_map(move |v| {
            ComplexMatrix::from_vec(r, c, v.into_iter().map(|(a, b)| Complex::new(a, b)).collect()).unwrap()
        })
    })
}

fn square(max_dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    (1..=max_dim).prop_flat_map(|n| {
        prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), n * n).prop_map(move |v| {
            ComplexMatrix::from_vec(n, n, v.into_iter().map(|(a, b)| Complex::new(a, b)).collect()).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rq_contract(a in square(8)) {
        let m = a.rows();
        let (r, q) = rq_decompose(&a).unwrap();
        prop_assert!(unitarity(&q, 1e-12 * m as f64).unwrap().is_unitary);
        let aq = a.matmul(&q).unwrap();
        prop_assert!(aq.max_abs_diff(&r).unwrap() <= 1e-12 * (1.0 + a.max_abs()));
        for i in 0..m {
            for j in 0..i {
                prop_assert!(aq[(i, j)].norm() <= 1e-12 * (1.0 + a.max_abs()));
            }
        }
    }

    #[test]
    fn dagger_is_an_exact_involution(a in matrix(10)) {
        prop_assert_eq!(a.dagger().dagger(), a);
    }

    #[test]
    fn matmul_is_associative(
        (x, y, z) in (1..=32usize, 1..=32usize, 1..=32usize, 1..=32usize, any::<u64>())
            .prop_map(|(a, b, c, d, s)| {
                let g = |r, k, t| {
                    let mut i = 0u64;
                    ComplexMatrix::from_fn(r, k, |_, _| {
                        i += 1;
                        let h = mmdecomp::seed::derive(s ^ t, &[i]);
                        Complex::new((h >> 11) as f64 / (1u64 << 53) as f64 - 0.5, (h & 0xffff) as f64 / 65536.0 - 0.5)
                    })
                };
                (g(a, b, 1), g(b, c, 2), g(c, d, 3))
            })
    ) {
        let left = x.matmul(&y).unwrap().matmul(&z).unwrap();
        let right = x.matmul(&y.matmul(&z).unwrap()).unwrap();
        let scale = left.max_abs().max(1e-300);
        prop_assert!(left.max_abs_diff(&right).unwrap() / scale <= 1e-12);
    }

    #[test]
    fn haar_is_unitary(n in 1..=24usize, seed in any::<u64>()) {
        let u = haar_random_unitary(n, seed).unwrap();
        prop_assert!(unitarity(&u, 1e-10).unwrap().is_unitary);
    }

    #[test]
    fn decomposition_round_trips(n in 2..=16usize, m_frac in 0.0..1.0f64, seed in any::<u64>()) {
        let m = 2 + ((n - 2) as f64 * m_frac).round() as usize;
        let u = haar_random_unitary(n, seed).unwrap();
        let d = decompose_traced(&u, m, None).unwrap();
        let plan = &d.plan;
        prop_assert!(plan.factors().len() <= factor_count_bound(n, m).unwrap());
        prop_assert!(reconstruct(plan).max_abs_diff(&u).unwrap() <= 1e-9 * n as f64);
        prop_assert_eq!(d.trace.total_zeros_created(), (n * (n - 1) / 2) as isize);
        for f in plan.factors() {
            prop_assert!(f.size() <= m);
            prop_assert!(unitarity(f.block(), 1e-10).unwrap().is_unitary);
        }
        for &p in plan.phases() {
            prop_assert!(p > -std::f64::consts::PI && p <= std::f64::consts::PI);
        }
        if m == 2 {
            prop_assert_eq!(plan.factors().len(), n * (n - 1) / 2);
        }
    }

    #[test]
    fn fidelity_ignores_global_phases(seed in any::<u64>(), a in -3.2..3.2f64, b in -3.2..3.2f64) {
        let q = haar_random_unitary(4, seed).unwrap();
        let noise = NoiseModel::new(0.3, seed).unwrap();
        let plan = mmdecomp::decompose(&q, 4, None).unwrap();
        let qp = perturbed_run(&plan, &noise).matrix;
        let f = fidelity(&q, &qp).unwrap();
        let g = fidelity(&q.scale(Complex::from_polar(1.0, a)), &qp.scale(Complex::from_polar(1.0, b))).unwrap();
        prop_assert!((f - g).abs() <= 1e-12);
        prop_assert!(f <= 1.0 + 1e-12);
    }

    #[test]
    fn files_round_trip_exactly(n in 2..=8usize, seed in any::<u64>()) {
        let u = haar_random_unitary(n, seed).unwrap();
        prop_assert_eq!(matrix_from_json(&matrix_to_json(&u).unwrap()).unwrap(), u.clone());
        let plan = mmdecomp::decompose(&u, 2.max(n / 2), None).unwrap();
        prop_assert_eq!(plan_from_json(&plan_to_json(&plan).unwrap()).unwrap(), plan);
    }
}
