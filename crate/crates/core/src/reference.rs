//! The five-application, ten-server farm used throughout the experiments.

use crate::primitives::{ApplicationSpec, DistributionSpec, ServerSpec, SystemSpec};

/// `(interarrival mean, interarrival scov, interarrival exponential?, workload mean, workload scov)`
const APPS: [(f64, f64, bool, f64, f64); 5] = [
    (0.25, 2.0, false, 5.0, 1.5),
    (0.5, 1.5, false, 10.0, 2.0),
    (0.25, 1.0, true, 5.0, 1.0),
    (0.1, 0.8, false, 2.0, 0.8),
    (0.2, 2.0, false, 3.0, 0.5),
];

/// `(speed_min, speed_max, power_base, power_coeff, apps)`
const SERVERS: [(f64, f64, f64, f64, &[usize]); 10] = [
    (5.0, 100.0, 150.0, 1.0 / 3.0, &[1]),
    (7.0, 102.0, 250.0, 0.2, &[1]),
    (6.0, 99.0, 220.0, 1.0, &[1, 2]),
    (5.0, 105.0, 150.0, 2.0 / 3.0, &[1, 2, 3]),
    (7.0, 100.0, 300.0, 0.8, &[2, 3]),
    (8.0, 102.0, 350.0, 0.4, &[2, 3]),
    (6.0, 100.0, 220.0, 3.0 / 7.0, &[3]),
    (7.0, 105.0, 350.0, 0.5, &[4, 5]),
    (8.0, 102.0, 400.0, 0.6, &[4, 5]),
    (10.0, 105.0, 700.0, 4.0 / 9.0, &[5]),
];

/// The reference farm with a uniform SLA `P(S_j >= delta) <= epsilon` on every server.
pub fn reference_system(delta: f64, epsilon: f64) -> SystemSpec {
    let applications = APPS
        .iter()
        .enumerate()
        .map(|(k, &(ia_mean, ia_scov, expo, w_mean, w_scov))| ApplicationSpec {
            id: k + 1,
            interarrival: if expo {
                DistributionSpec::exponential(ia_mean).unwrap()
            } else {
                DistributionSpec::lognormal(ia_mean, ia_scov).unwrap()
            },
            workload: DistributionSpec::lognormal(w_mean, w_scov).unwrap(),
        })
        .collect();
    let servers = SERVERS
        .iter()
        .enumerate()
        .map(|(k, &(lo, hi, base, coeff, apps))| ServerSpec {
            id: k + 1,
            speed_min: lo,
            speed_max: hi,
            power_base: base,
            power_coeff: coeff,
            power_exponent: 3.0,
            apps: apps.to_vec(),
            sla_threshold: delta,
            sla_epsilon: epsilon,
        })
        .collect();
    SystemSpec::new(applications, servers).expect("reference system is valid")
}
