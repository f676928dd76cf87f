use proptest::prelude::*;
use rqfarm::rq::{check_membership_arrival, check_membership_workload};
use rqfarm::simulator::fcfs_max_form;
use rqfarm::worst_case::{
    analytic_finite_worst, brute_force_worst_fcfs, build_extremal, worst_objective, QueueParams, BRUTE_FORCE_MAX_N,
};

fn arb_queue() -> impl Strategy<Value = QueueParams> {
    (0.2f64..4.0, 0.1f64..0.95, 0.0f64..2.0, 0.0f64..3.0)
        .prop_map(|(lambda, rho, ga, gs)| QueueParams::new(lambda, lambda / rho, ga / lambda, gs).unwrap())
}

#[test]
fn zero_variability_is_deterministic() {
    let q = QueueParams::new(1.0, 1.25, 0.0, 0.0).unwrap();
    for n in 1..=6 {
        let expected = 1.0 / 1.25 + (0..n).map(|m| 2.0 * m as f64 * (0.8 - 1.0)).fold(f64::NEG_INFINITY, f64::max);
        let (v, _) = analytic_finite_worst(n, &q);
        assert!((v - expected).abs() < 1e-12);
        assert!((brute_force_worst_fcfs(n, &q).unwrap().value - expected).abs() < 1e-9);
    }
    // a deterministic overloaded queue grows with n
    let hot = QueueParams::new(1.0, 0.5, 0.0, 0.0).unwrap();
    assert!((analytic_finite_worst(4, &hot).0 - (2.0 + 2.0 * 3.0 * (2.0 - 1.0))).abs() < 1e-12);
}

#[test]
fn resource_guard_refuses_long_horizons() {
    let q = QueueParams::new(1.0, 2.0, 0.2, 0.3).unwrap();
    assert!(brute_force_worst_fcfs(BRUTE_FORCE_MAX_N + 1, &q).is_err());
}

#[test]
fn objective_agrees_with_the_fcfs_recursion() {
    let gaps = [0.7, 0.2, 1.1, 0.4, 0.3];
    let work = [1.0, 0.5, 2.0, 0.1, 0.9];
    let s = fcfs_max_form(&gaps, &work, 1.0);
    assert!((worst_objective(&gaps, &work) - (2.0 * s[4] - work[4])).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chain_holds(q in arb_queue(), n in 1usize..=5) {
        let brute = brute_force_worst_fcfs(n, &q).unwrap();
        let (analytic, _) = analytic_finite_worst(n, &q);
        let tol = 1e-9 * analytic.abs().max(1.0);
        prop_assert!(brute.value <= analytic + tol);
        prop_assert!(analytic <= q.s_ub() + tol);
        // the maximizer the search returns is itself admissible
        prop_assert!(check_membership_workload(&brute.work, &q.workload_set()).holds);
        let mut gaps = brute.gaps.clone();
        gaps[0] = 1.0 / q.lambda;
        prop_assert!((worst_objective(&gaps, &brute.work) - brute.value).abs() <= tol);
    }

    #[test]
    fn extremal_traces_attain_the_worst(q in arb_queue(), n in 1usize..=8) {
        prop_assume!(q.gamma_a * q.lambda <= 1.0);
        let e = build_extremal(n, &q).unwrap();
        let (analytic, k) = analytic_finite_worst(n, &q);
        prop_assert_eq!(e.k_star, k);
        prop_assert!((e.objective() - analytic).abs() <= 1e-9 * analytic.abs().max(1.0));
        prop_assert!(check_membership_arrival(&e.t_star, &q.arrival_set()).holds);
        prop_assert!(e.workload_membership().holds);
        prop_assert!(e.binding_workload_slack() < 1e-9);
        prop_assert!(e.binding_arrival_slack() < 1e-9);
        // the first gap is irrelevant, so the fully binding variant scores the same
        let alt = e.with_first_gap(e.formula_first_gap());
        prop_assert!((alt.objective() - e.objective()).abs() <= 1e-12 * analytic.abs().max(1.0));
        prop_assert!(alt.arrival_membership().max_abs_slack_to_last(1..=n) < 1e-9);
    }

    #[test]
    fn finite_worst_grows_with_n(q in arb_queue(), n in 1usize..30) {
        prop_assert!(analytic_finite_worst(n + 1, &q).0 >= analytic_finite_worst(n, &q).0 - 1e-12);
    }
}
