use proptest::prelude::*;
use rqfarm::primitives::AppParams;
use rqfarm::reference::reference_system;
use rqfarm::rq::normal;
use rqfarm::rq::{
    feasibility_floor, gamma_from_epsilon, min_feasible_speed_in, response_time_bound, sla_quadratic, superpose, thin,
    ServerAggregate, STABILITY_MARGIN,
};

fn arb_params() -> impl Strategy<Value = AppParams> {
    (0.05f64..20.0, 0.05f64..3.0, 0.05f64..10.0, 0.05f64..3.0).prop_map(|(lambda, ca, work, cs)| {
        let sigma_a = ca.sqrt() / lambda;
        AppParams {
            lambda,
            sigma_a,
            ca2: ca,
            mean_work: work,
            sigma_s: cs.sqrt() * work,
            omega: lambda * work,
        }
    })
}

fn arb_aggregate() -> impl Strategy<Value = ServerAggregate> {
    (0.2f64..10.0, 0.1f64..5.0, 0.5f64..3.0, 0.0f64..2.0, 0.0f64..1.5).prop_map(|(l, m, g, cs, ca)| {
        let sigma_s_bar = m * cs;
        ServerAggregate {
            lambda_bar: l,
            gamma_a_bar: g * ca / l,
            mu_bar_inv: m,
            gamma_s_bar: g * sigma_s_bar,
            sigma_s_bar,
            omega_bar: l * m,
            gamma_level: g,
        }
    })
}

#[test]
fn gamma_reference_values() {
    assert!((gamma_from_epsilon(0.01).unwrap() - 2.574_961).abs() < 1e-6);
    assert!((gamma_from_epsilon(0.1).unwrap() - 1.632_219).abs() < 1e-6);
    assert!(gamma_from_epsilon(0.0).is_err());
    assert!(gamma_from_epsilon(1.0).is_err());
}

#[test]
fn thinning_with_one_is_identity() {
    let sys = reference_system(4.0, 0.01);
    for app in sys.applications() {
        let f = thin(app, 1.0).unwrap();
        let p = app.params();
        assert_eq!(f.rate, p.lambda);
        assert_eq!(f.sigma, p.sigma_a);
    }
    assert!(thin(&sys.applications()[0], 0.0).is_err());
    assert!(thin(&sys.applications()[0], 1.2).is_err());
}

#[test]
fn reference_flow_example() {
    let sys = reference_system(4.0, 0.01);
    let f = thin(&sys.applications()[0], 0.5).unwrap();
    assert!((f.rate - 2.0).abs() < 1e-12);
    assert!((f.sigma - 0.25 * 2f64.sqrt() / 0.75f64.sqrt()).abs() < 1e-12);
}

proptest! {
    #[test]
    fn gamma_is_decreasing_and_hits_the_coverage(e1 in 1e-6f64..0.999, e2 in 1e-6f64..0.999) {
        let (g1, g2) = (gamma_from_epsilon(e1).unwrap(), gamma_from_epsilon(e2).unwrap());
        if e1 < e2 {
            prop_assert!(g1 > g2);
        }
        prop_assert!((normal::cdf(g1) - (1.0 - e1).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn single_flow_reproduces_the_stream(p in arb_params(), g in 0.1f64..4.0) {
        let agg = superpose([(&p, 1.0)], g).unwrap();
        prop_assert!((agg.lambda_bar - p.lambda).abs() <= 1e-12 * p.lambda);
        prop_assert!((agg.gamma_a_bar - g * p.sigma_a).abs() <= 1e-12 * g * p.sigma_a);
        prop_assert!((agg.mu_bar_inv - p.mean_work).abs() <= 1e-12 * p.mean_work);
        prop_assert!((agg.sigma_s_bar - p.sigma_s).abs() <= 1e-9 * p.sigma_s.max(p.mean_work));
    }

    #[test]
    fn superposition_ignores_flow_order(a in arb_params(), b in arb_params(), pa in 0.01f64..1.0, pb in 0.01f64..1.0) {
        let x = superpose([(&a, pa), (&b, pb)], 2.0).unwrap();
        let y = superpose([(&b, pb), (&a, pa)], 2.0).unwrap();
        prop_assert!((x.gamma_a_bar - y.gamma_a_bar).abs() <= 1e-12 * x.gamma_a_bar.max(1e-300));
        prop_assert!((x.sigma_s_bar - y.sigma_s_bar).abs() <= 1e-9 * x.sigma_s_bar.max(x.mu_bar_inv));
        prop_assert!((x.omega_bar - (a.omega * pa + b.omega * pb)).abs() <= 1e-12 * x.omega_bar);
    }

    #[test]
    fn identical_flows_merge_like_one_thicker_flow(p in arb_params(), g in 0.1f64..3.0) {
        // two halves of the same app: variability of the merged stream is sqrt(2/3) of the single stream at p=1
        let half = superpose([(&p, 0.5), (&p, 0.5)], g).unwrap();
        let expected = g / p.lambda * (2.0 * (0.5 / 1.5) * p.ca2).sqrt();
        prop_assert!((half.gamma_a_bar - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn floor_never_exceeds_the_bound(agg in arb_aggregate(), t in 1.0001f64..20.0) {
        let x = agg.omega_bar * t;
        prop_assert!(feasibility_floor(&agg, x) <= response_time_bound(&agg, x).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn floor_tends_to_twice_the_arrival_spread(agg in arb_aggregate()) {
        let x = 1e12;
        prop_assert!((feasibility_floor(&agg, x) - 2.0 * agg.gamma_a_bar).abs() < 1e-9 * (1.0 + agg.gamma_a_bar));
    }

    #[test]
    fn quadratic_sign_matches_the_bound(agg in arb_aggregate(), delta in 0.1f64..50.0, t in 1.001f64..30.0) {
        let x = agg.omega_bar * t;
        let q = sla_quadratic(&agg, delta);
        let s = response_time_bound(&agg, x).unwrap();
        // q(x) = 2 lambda (x^2 - omega x) (S_UB(x) - delta)
        let expected = 2.0 * agg.lambda_bar * (x * x - agg.omega_bar * x) * (s - delta);
        prop_assert!((q.eval(x) - expected).abs() <= 1e-9 * (expected.abs() + q.c.abs() + (q.a * x * x).abs()));
    }

    #[test]
    fn minimal_speed_is_tight_and_minimal(agg in arb_aggregate(), slack in 0.05f64..2.0, t in 1.05f64..5.0) {
        let delta = response_time_bound(&agg, agg.omega_bar * t).unwrap() * (1.0 + slack) ;
        let q = sla_quadratic(&agg, delta);
        let x = min_feasible_speed_in(&q, 1e-9, 1e9, STABILITY_MARGIN).unwrap();
        let at = response_time_bound(&agg, x).unwrap();
        prop_assert!((at - delta).abs() <= 1e-6 * delta);
        let below = x * (1.0 - 1e-6);
        if below > agg.omega_bar {
            prop_assert!(response_time_bound(&agg, below).unwrap() > delta);
        }
    }
}
