use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rqfarm::reference::reference_system;
use rqfarm::{load_system, ApplicationSpec, DistributionSpec, Error, ServerSpec, StaticPolicy, SystemSpec};

fn sample_moments(spec: &DistributionSpec, n: usize, seed: u64) -> (f64, f64, f64, f64) {
    let sampler = spec.sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in &xs {
        let d = (x - mean).powi(2);
        m2 += d;
        m4 += d * d;
    }
    let var = m2 / (nf - 1.0);
    (mean, var, (var / nf).sqrt(), ((m4 / nf - var * var) / nf).sqrt())
}

#[test]
fn lognormal_sampler_matches_mean_and_scov() {
    for (k, (mean, scov)) in [(0.25, 2.0), (5.0, 1.5), (2.0, 0.8), (3.0, 0.5)].into_iter().enumerate() {
        let spec = DistributionSpec::lognormal(mean, scov).unwrap();
        let (m, v, se_m, se_v) = sample_moments(&spec, 2_000_000, k as u64);
        assert!((m - mean).abs() < 4.0 * se_m, "mean {m} vs {mean}");
        assert!((v - spec.variance()).abs() < 4.0 * se_v, "variance {v} vs {}", spec.variance());
    }
}

#[test]
fn exponential_sampler_matches_mean() {
    let spec = DistributionSpec::exponential(0.25).unwrap();
    let (m, v, se_m, se_v) = sample_moments(&spec, 1_000_000, 9);
    assert!((m - 0.25).abs() < 4.0 * se_m);
    assert!((v - 0.0625).abs() < 4.0 * se_v);
}

#[test]
fn shipped_reference_config_matches_tables() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/reference.json")).unwrap();
    assert_eq!(load_system(&text).unwrap(), reference_system(4.0, 0.01));
}

#[test]
fn reference_instant_demands() {
    let sys = reference_system(4.0, 0.01);
    let omega: Vec<f64> = sys.params().iter().map(|p| p.omega).collect();
    assert_eq!(omega, vec![20.0, 20.0, 20.0, 20.0, 15.0]);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut bad = reference_system(4.0, 0.01).to_config_string();
    bad = bad.replacen("\"mean\": 0.25", "\"mean\": -0.25", 1);
    assert!(matches!(load_system(&bad), Err(Error::Validation { .. })));

    let sys = reference_system(4.0, 0.01);
    let mut servers = sys.servers().to_vec();
    servers[0].apps = vec![9];
    assert!(SystemSpec::new(sys.applications().to_vec(), servers).is_err());

    let mut servers = sys.servers().to_vec();
    servers[0].speed_min = 200.0;
    assert!(SystemSpec::new(sys.applications().to_vec(), servers).is_err());

    assert!(DistributionSpec::new(rqfarm::Family::Exponential, 1.0, 2.0).is_err());
}

#[test]
fn policy_validation_catches_each_invariant() {
    let sys = reference_system(4.0, 0.01);
    let mut routing = vec![vec![0.0; 10]; 5];
    for (i, row) in routing.iter_mut().enumerate() {
        let hosts = sys.servers_of_app(i);
        for &j in hosts {
            row[j] = 1.0 / hosts.len() as f64;
        }
    }
    let good = StaticPolicy {
        routing,
        speeds: sys.servers().iter().map(|s| s.speed_max).collect(),
    };
    assert!(good.validate(&sys).is_ok());

    let mut off_support = good.clone();
    off_support.routing[0][9] = 0.1;
    off_support.routing[0][0] -= 0.1;
    assert!(off_support.validate(&sys).is_err());

    let mut bad_sum = good.clone();
    bad_sum.routing[4][9] += 0.01;
    assert!(bad_sum.validate(&sys).is_err());

    let mut slow = good.clone();
    slow.speeds[3] = 1.0;
    assert!(slow.validate(&sys).is_err());

    let mut short = good.clone();
    short.speeds.pop();
    assert!(matches!(short.validate(&sys), Err(Error::DimensionMismatch(_))));

    let back = StaticPolicy::from_json(&good.to_json()).unwrap();
    assert_eq!(back, good);
}

fn arb_distribution() -> impl Strategy<Value = DistributionSpec> {
    prop_oneof![
        (0.01f64..10.0).prop_map(|m| DistributionSpec::exponential(m).unwrap()),
        (0.01f64..10.0, 0.05f64..4.0).prop_map(|(m, c)| DistributionSpec::lognormal(m, c).unwrap()),
    ]
}

fn arb_system() -> impl Strategy<Value = SystemSpec> {
    (1usize..5, 1usize..7)
        .prop_flat_map(|(apps, servers)| {
            (
                prop::collection::vec((arb_distribution(), arb_distribution()), apps),
                prop::collection::vec(
                    (1.0f64..10.0, 50.0f64..200.0, 1.0f64..500.0, 0.1f64..2.0, prop::collection::vec(0..apps, 1..=apps)),
                    servers,
                ),
                1.0f64..20.0,
                0.001f64..0.5,
            )
        })
        .prop_map(|(apps, servers, delta, eps)| {
            let napps = apps.len();
            let applications = apps
                .into_iter()
                .enumerate()
                .map(|(i, (a, w))| ApplicationSpec {
                    id: i + 1,
                    interarrival: a,
                    workload: w,
                })
                .collect();
            let servers = servers
                .into_iter()
                .enumerate()
                .map(|(j, (lo, hi, base, coeff, mut hosted))| {
                    // every app must have a host; server j also takes app j mod I
                    hosted.push(j % napps);
                    hosted.sort_unstable();
                    hosted.dedup();
                    ServerSpec {
                        id: j + 1,
                        speed_min: lo,
                        speed_max: hi,
                        power_base: base,
                        power_coeff: coeff,
                        power_exponent: 3.0,
                        apps: hosted.into_iter().map(|i| i + 1).collect(),
                        sla_threshold: delta,
                        sla_epsilon: eps,
                    }
                })
                .collect();
            SystemSpec::new(applications, servers)
        })
        .prop_filter_map("every app hosted", |r| r.ok())
}

proptest! {
    #[test]
    fn config_round_trips(sys in arb_system()) {
        let back = load_system(&sys.to_config_string()).unwrap();
        prop_assert_eq!(back, sys);
    }

    #[test]
    fn lognormal_log_params_invert(mean in 1e-3f64..1e3, scov in 1e-3f64..20.0) {
        let (m, s2) = DistributionSpec::lognormal(mean, scov).unwrap().log_params();
        prop_assert!(((m + 0.5 * s2).exp() - mean).abs() <= 1e-10 * mean);
        prop_assert!((s2.exp() - 1.0 - scov).abs() <= 1e-10 * scov.max(1.0));
    }

    #[test]
    fn power_is_monotone_in_speed(base in 0.0f64..500.0, coeff in 0.01f64..2.0, x in 1.0f64..100.0, dx in 0.0f64..10.0) {
        let s = ServerSpec {
            id: 1, speed_min: 1.0, speed_max: 200.0, power_base: base, power_coeff: coeff,
            power_exponent: 3.0, apps: vec![1], sla_threshold: 1.0, sla_epsilon: 0.1,
        };
        prop_assert!(s.power(x + dx) >= s.power(x));
        prop_assert!((s.power(x) - base - coeff * x.powi(3)).abs() <= 1e-9 * s.power(x));
    }
}
