use cohdist::distill::{assisted_fidelity_bound, assisted_fidelity_from_delta};
use cohdist::dnorm::{
    dual_oracle_magnitudes, mnorm_magnitudes, primal_oracle_magnitudes, PrimalOracleConfig,
};
use cohdist::hermat::random::{random_density, seeded_rng};
use cohdist::hermat::{delta_vector, dephase, fidelity, tensor_power};
use proptest::prelude::*;

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 2..9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mnorm_between_l2_and_l1(v in vector(), m in 1usize..9) {
        let n = mnorm_magnitudes(&v, m as f64).unwrap().value;
        prop_assert!(n >= l2(&v) - 1e-12);
        prop_assert!(n <= l1(&v) + 1e-12);
        prop_assert!(n <= (m as f64).sqrt() * l2(&v) + 1e-12);
    }

    #[test]
    fn mnorm_nondecreasing_in_m(v in vector(), m in 1.0f64..8.0) {
        let a = mnorm_magnitudes(&v, m).unwrap().value;
        let b = mnorm_magnitudes(&v, m + 0.5).unwrap().value;
        prop_assert!(b >= a - 1e-12);
    }

    #[test]
    fn mnorm_permutation_and_sign_invariant(v in vector(), m in 1usize..9, shift in 0usize..8) {
        let mut w: Vec<f64> = v.iter().map(|x| -x).collect();
        let len = w.len();
        w.rotate_left(shift % len);
        let a = mnorm_magnitudes(&v, m as f64).unwrap().value;
        let b = mnorm_magnitudes(&w, m as f64).unwrap().value;
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn three_evaluations_agree(v in prop::collection::vec(0.0f64..1.0, 2..7), m in 1.0f64..6.0) {
        let semi = mnorm_magnitudes(&v, m).unwrap().value;
        let dual = dual_oracle_magnitudes(&v, m).unwrap();
        let cfg = PrimalOracleConfig { restarts: 4, iterations: 1000, ..PrimalOracleConfig::default() };
        let primal = primal_oracle_magnitudes(&v, m, &cfg).unwrap();
        prop_assert!((semi - dual).abs() < 1e-5);
        prop_assert!((semi - primal).abs() < 1e-5);
    }

    #[test]
    fn fidelity_symmetric_and_dephasing_monotone(seed in any::<u64>(), d in 2usize..5) {
        let mut rng = seeded_rng(seed);
        let rho = random_density(d, &mut rng);
        let sigma = random_density(d, &mut rng);
        let a = fidelity(&rho, &sigma).unwrap();
        let b = fidelity(&sigma, &rho).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
        let c = fidelity(&dephase(&rho), &dephase(&sigma)).unwrap();
        prop_assert!(c >= a - 1e-9);
    }

    #[test]
    fn assisted_bound_nonincreasing_in_m(seed in any::<u64>(), d in 2usize..7) {
        let mut rng = seeded_rng(seed);
        let rho = random_density(d, &mut rng);
        let mut last = 1.0 + 1e-12;
        for m in 1..=d + 1 {
            let f = assisted_fidelity_bound(&rho, m).unwrap();
            prop_assert!(f <= last + 1e-12);
            last = f;
        }
        prop_assert!((assisted_fidelity_bound(&rho, 1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_power_bound_from_delta(seed in any::<u64>(), d in 2usize..4, n in 1usize..4, m in 2usize..6) {
        let mut rng = seeded_rng(seed);
        let sigma = random_density(d, &mut rng);
        let full = assisted_fidelity_bound(&tensor_power(&sigma, n).unwrap(), m).unwrap();
        let delta = delta_vector(&sigma).magnitudes();
        let mut power = vec![1.0];
        for _ in 0..n {
            power = power.iter().flat_map(|a| delta.iter().map(move |b| a * b)).collect();
        }
        let direct = assisted_fidelity_from_delta(&power, m).unwrap();
        prop_assert!((full - direct).abs() < 1e-9);
    }
}
