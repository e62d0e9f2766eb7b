mod common;

use fhtlr::rng;
use fhtlr::solver::policy_q;
use fhtlr::{backward_induction, policy_value};
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng as _;

#[test]
fn backward_induction_matches_enumeration() {
    let mut seed = 0;
    for ns in 1..=3 {
        for na in 1..=2 {
            for horizon in 1..=3 {
                seed += 1;
                let d = common::random_mdp(ns, na, seed);
                let sol = backward_induction(&d, horizon).unwrap();
                let best = common::enumerated_q_star(&d, horizon);
                for t in 0..horizon {
                    for s in 0..ns {
                        for a in 0..na {
                            let q = sol.q(t + 1, s, a);
                            assert!(
                                (q - best[t][s][a]).abs() <= 1e-9,
                                "|S|={ns} |A|={na} T={horizon} t={} s={s} a={a}: {q} vs {}",
                                t + 1,
                                best[t][s][a]
                            );
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn optimal_policy_is_not_beaten() {
    let d = common::random_mdp(3, 2, 99);
    let sol = backward_induction(&d, 3).unwrap();
    let init = d.initial().to_vec();
    let v_opt = policy_value(&d, &sol.pi_star, &init).unwrap();
    assert!((v_opt - sol.v_start).abs() <= 1e-12);
    for p in common::all_policies(3, 2, 3) {
        let table = Array2::from_shape_fn((3, 3), |(t, s)| p[t][s]);
        assert!(policy_value(&d, &table, &init).unwrap() <= v_opt + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn q_star_dominates_random_policies(ns in 1usize..=3, na in 1usize..=2, horizon in 1usize..=3, seed in any::<u64>()) {
        let d = common::random_mdp(ns, na, seed);
        let sol = backward_induction(&d, horizon).unwrap();
        let mut r = rng::stream(seed, 3);
        for _ in 0..100 {
            let policy = Array2::from_shape_fn((horizon, ns), |_| r.random_range(0..na));
            let q = policy_q(&d, &policy).unwrap();
            for ((t, s, a), v) in q.indexed_iter() {
                prop_assert!(sol.q(t + 1, s, a) >= v - 1e-9);
            }
        }
    }
}
