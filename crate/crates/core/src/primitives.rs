//! Domain types for applications, servers and static policies, plus config ingestion.
//!
//! Distributions are always parameterized by mean and squared coefficient of
//! variation (SCOV). Log-normal shape parameters are derived internally.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Routing probabilities at or below this value are structural zeros.
pub const STRUCTURAL_ZERO: f64 = 1e-9;

/// Tolerance on `sum_j p_ij = 1`.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Lognormal,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct DistributionSpec {
    pub family: Family,
    pub mean: f64,
    pub scov: f64,
}

#[derive(Deserialize)]
struct RawDistribution {
    family: Family,
    mean: f64,
    scov: f64,
}

impl TryFrom<RawDistribution> for DistributionSpec {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        DistributionSpec::new(raw.family, raw.mean, raw.scov)
    }
}

impl DistributionSpec {
    pub fn new(family: Family, mean: f64, scov: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::validation("distribution", format!("mean must be positive, got {mean}")));
        }
        if !(scov.is_finite() && scov > 0.0) {
            return Err(Error::validation("distribution", format!("scov must be positive, got {scov}")));
        }
        if family == Family::Exponential && scov != 1.0 {
            return Err(Error::validation(
                "distribution",
                format!("exponential distribution requires scov = 1, got {scov}"),
            ));
        }
        Ok(Self { family, mean, scov })
    }

    pub fn lognormal(mean: f64, scov: f64) -> Result<Self> {
        Self::new(Family::Lognormal, mean, scov)
    }

    pub fn exponential(mean: f64) -> Result<Self> {
        Self::new(Family::Exponential, mean, 1.0)
    }

    pub fn variance(&self) -> f64 {
        self.scov * self.mean * self.mean
    }

    pub fn std_dev(&self) -> f64 {
        self.mean * self.scov.sqrt()
    }

    /// `(m, s2)` such that `exp(N(m, s2))` has this mean and SCOV.
    pub fn log_params(&self) -> (f64, f64) {
        let s2 = self.scov.ln_1p();
        (self.mean.ln() - 0.5 * s2, s2)
    }

    pub fn sampler(&self) -> Sampler {
        match self.family {
            Family::Exponential => Sampler::Exp(Exp::new(1.0 / self.mean).expect("positive rate")),
            Family::Lognormal => {
                let (m, s2) = self.log_params();
                Sampler::LogNormal(LogNormal::new(m, s2.sqrt()).expect("finite log-normal parameters"))
            }
        }
    }
}

/// A ready-to-draw random variate generator for a [`DistributionSpec`].
#[derive(Debug, Clone, Copy)]
pub enum Sampler {
    Exp(Exp<f64>),
    LogNormal(LogNormal<f64>),
}

impl Distribution<f64> for Sampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Exp(d) => d.sample(rng),
            Sampler::LogNormal(d) => d.sample(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicationSpec {
    pub id: usize,
    pub interarrival: DistributionSpec,
    pub workload: DistributionSpec,
}

/// Derived first and second moment data of one application.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppParams {
    /// Arrival rate `lambda_i`.
    pub lambda: f64,
    /// Standard deviation of inter-arrival times.
    pub sigma_a: f64,
    /// SCOV of inter-arrival times, `(lambda * sigma_a)^2`.
    pub ca2: f64,
    /// Mean workload `1/mu_i`.
    pub mean_work: f64,
    /// Standard deviation of the workload.
    pub sigma_s: f64,
    /// Instant demand rate `lambda_i / mu_i`.
    pub omega: f64,
}

impl ApplicationSpec {
    pub fn params(&self) -> AppParams {
        let lambda = 1.0 / self.interarrival.mean;
        AppParams {
            lambda,
            sigma_a: self.interarrival.std_dev(),
            ca2: self.interarrival.scov,
            mean_work: self.workload.mean,
            sigma_s: self.workload.std_dev(),
            omega: lambda * self.workload.mean,
        }
    }
}

/// Offered work per unit time, `lambda / mu`.
pub fn instant_demand(app: &ApplicationSpec) -> f64 {
    app.params().omega
}

fn default_exponent() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerSpec {
    pub id: usize,
    /// Lowest speed; also the idle speed.
    pub speed_min: f64,
    pub speed_max: f64,
    pub power_base: f64,
    pub power_coeff: f64,
    #[serde(default = "default_exponent")]
    pub power_exponent: f64,
    /// Ids of the applications installed on this server.
    pub apps: Vec<usize>,
    pub sla_threshold: f64,
    pub sla_epsilon: f64,
}

impl ServerSpec {
    /// Power draw `K + alpha * speed^n` at the given speed.
    pub fn power(&self, speed: f64) -> f64 {
        self.power_base + self.power_coeff * speed.powf(self.power_exponent)
    }

    fn validate(&self) -> Result<()> {
        let entity = || format!("server {}", self.id);
        let finite = [
            self.speed_min,
            self.speed_max,
            self.power_base,
            self.power_coeff,
            self.power_exponent,
            self.sla_threshold,
            self.sla_epsilon,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(entity(), "all numeric fields must be finite"));
        }
        if !(self.speed_min > 0.0 && self.speed_min < self.speed_max) {
            return Err(Error::validation(entity(), "requires 0 < speed_min < speed_max"));
        }
        if self.power_base < 0.0 {
            return Err(Error::validation(entity(), "power_base must be non-negative"));
        }
        if self.power_coeff <= 0.0 {
            return Err(Error::validation(entity(), "power_coeff must be positive"));
        }
        if self.power_exponent <= 0.0 {
            return Err(Error::validation(entity(), "power_exponent must be positive"));
        }
        if self.apps.is_empty() {
            return Err(Error::validation(entity(), "application set is empty"));
        }
        if !(self.sla_epsilon > 0.0 && self.sla_epsilon < 1.0) {
            return Err(Error::validation(entity(), "sla_epsilon must lie in (0, 1)"));
        }
        if self.sla_threshold <= 0.0 {
            return Err(Error::validation(entity(), "sla_threshold must be positive"));
        }
        Ok(())
    }
}

/// A validated farm: applications, servers and the bipartite installation map.
///
/// Applications and servers are addressed by position internally; the `id`
/// fields only exist for reporting and for the config file.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    applications: Vec<ApplicationSpec>,
    servers: Vec<ServerSpec>,
    params: Vec<AppParams>,
    servers_of_app: Vec<Vec<usize>>,
    apps_of_server: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct ConfigDoc {
    applications: Vec<ApplicationSpec>,
    servers: Vec<ServerSpec>,
}

impl SystemSpec {
    pub fn new(applications: Vec<ApplicationSpec>, servers: Vec<ServerSpec>) -> Result<Self> {
        if applications.is_empty() {
            return Err(Error::validation("system", "no applications"));
        }
        if servers.is_empty() {
            return Err(Error::validation("system", "no servers"));
        }
        let mut index = HashMap::new();
        for (pos, app) in applications.iter().enumerate() {
            if index.insert(app.id, pos).is_some() {
                return Err(Error::validation(format!("application {}", app.id), "duplicate id"));
            }
            let omega = instant_demand(app);
            if !(omega.is_finite() && omega > 0.0) {
                return Err(Error::validation(
                    format!("application {}", app.id),
                    "instant demand rate must be finite and positive",
                ));
            }
        }
        let mut seen = HashSet::new();
        let mut apps_of_server = Vec::with_capacity(servers.len());
        let mut servers_of_app = vec![Vec::new(); applications.len()];
        for (j, server) in servers.iter().enumerate() {
            if !seen.insert(server.id) {
                return Err(Error::validation(format!("server {}", server.id), "duplicate id"));
            }
            server.validate()?;
            let mut local = Vec::with_capacity(server.apps.len());
            for app_id in &server.apps {
                let Some(&i) = index.get(app_id) else {
                    return Err(Error::validation(
                        format!("server {}", server.id),
                        format!("unknown application id {app_id}"),
                    ));
                };
                if local.contains(&i) {
                    return Err(Error::validation(
                        format!("server {}", server.id),
                        format!("application {app_id} listed twice"),
                    ));
                }
                local.push(i);
                servers_of_app[i].push(j);
            }
            apps_of_server.push(local);
        }
        for (i, hosts) in servers_of_app.iter().enumerate() {
            if hosts.is_empty() {
                return Err(Error::validation(
                    format!("application {}", applications[i].id),
                    "not installed on any server",
                ));
            }
        }
        let params = applications.iter().map(ApplicationSpec::params).collect();
        Ok(Self {
            applications,
            servers,
            params,
            servers_of_app,
            apps_of_server,
        })
    }

    pub fn applications(&self) -> &[ApplicationSpec] {
        &self.applications
    }

    pub fn servers(&self) -> &[ServerSpec] {
        &self.servers
    }

    pub fn num_apps(&self) -> usize {
        self.applications.len()
    }

    pub fn num_servers(&self) -> usize {
        self.servers.len()
    }

    /// Precomputed moment data, indexed like [`Self::applications`].
    pub fn params(&self) -> &[AppParams] {
        &self.params
    }

    /// Positions of the servers hosting application `i` (the set `S_i`).
    pub fn servers_of_app(&self, i: usize) -> &[usize] {
        &self.servers_of_app[i]
    }

    /// Positions of the applications installed on server `j` (the set `A_j`).
    pub fn apps_of_server(&self, j: usize) -> &[usize] {
        &self.apps_of_server[j]
    }

    /// Same system with every server's SLA pair replaced.
    pub fn with_sla(&self, delta: f64, epsilon: f64) -> Result<Self> {
        let servers = self
            .servers
            .iter()
            .map(|s| ServerSpec {
                sla_threshold: delta,
                sla_epsilon: epsilon,
                ..s.clone()
            })
            .collect();
        Self::new(self.applications.clone(), servers)
    }

    pub fn to_config_string(&self) -> String {
        let doc = ConfigDoc {
            applications: self.applications.clone(),
            servers: self.servers.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("config serializes")
    }
}

/// Parse and validate a JSON config document.
pub fn load_system(config_text: &str) -> Result<SystemSpec> {
    let doc: ConfigDoc = serde_json::from_str(config_text).map_err(|e| {
        // serde wraps our own validation errors from `try_from`; keep them as such
        let msg = e.to_string();
        if msg.starts_with("invalid distribution") {
            Error::validation("distribution", msg)
        } else {
            Error::Parse(msg)
        }
    })?;
    SystemSpec::new(doc.applications, doc.servers)
}

/// Routing matrix (one row per application, one column per server) plus busy speeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticPolicy {
    pub routing: Vec<Vec<f64>>,
    pub speeds: Vec<f64>,
}

impl StaticPolicy {
    pub fn from_json(text: &str) -> Result<Self> {
        let policy: StaticPolicy = serde_json::from_str(text)?;
        if policy.routing.is_empty() || policy.speeds.is_empty() {
            return Err(Error::Parse("policy has an empty routing matrix or speed vector".into()));
        }
        Ok(policy)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }

    pub fn check_dimensions(&self, system: &SystemSpec) -> Result<()> {
        let (rows, cols) = (system.num_apps(), system.num_servers());
        if self.routing.len() != rows || self.routing.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!("routing matrix must be {rows} x {cols}")));
        }
        if self.speeds.len() != cols {
            return Err(Error::DimensionMismatch(format!("speed vector must have {cols} entries")));
        }
        Ok(())
    }

    /// Checks every policy invariant against the system.
    pub fn validate(&self, system: &SystemSpec) -> Result<()> {
        self.check_dimensions(system)?;
        for (i, row) in self.routing.iter().enumerate() {
            let entity = || format!("routing row of application {}", system.applications()[i].id);
            let mut total = 0.0;
            for (j, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::validation(entity(), format!("p[{j}] = {p} outside [0, 1]")));
                }
                if p > 0.0 && !system.apps_of_server(j).contains(&i) {
                    return Err(Error::validation(
                        entity(),
                        format!("positive probability to server {} which does not host it", system.servers()[j].id),
                    ));
                }
                total += p;
            }
            if (total - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::validation(entity(), format!("row sums to {total}")));
            }
        }
        for (j, (&x, s)) in self.speeds.iter().zip(system.servers()).enumerate() {
            if !(x >= s.speed_min && x <= s.speed_max) {
                return Err(Error::validation(
                    format!("server {}", system.servers()[j].id),
                    format!("speed {x} outside [{}, {}]", s.speed_min, s.speed_max),
                ));
            }
        }
        Ok(())
    }

    /// Column `j` as `(application position, p)` pairs over the installed set.
    pub fn flows_into(&self, system: &SystemSpec, j: usize) -> Vec<(usize, f64)> {
        system
            .apps_of_server(j)
            .iter()
            .map(|&i| (i, self.routing[i][j]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::reference_system;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn table_app_one_loads() {
        let sys = reference_system(4.0, 0.01);
        let app = &sys.applications()[0];
        assert_eq!(app.interarrival.mean, 0.25);
        assert_eq!(app.interarrival.scov, 2.0);
        assert_eq!(app.workload.mean, 5.0);
        assert_eq!(app.workload.scov, 1.5);
    }

    #[test]
    fn exponential_rejects_other_scov() {
        let err = DistributionSpec::new(Family::Exponential, 1.0, 0.5).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
        let text = r#"{"applications":[{"id":1,"interarrival":{"family":"exponential","mean":1.0,"scov":0.5},
            "workload":{"family":"lognormal","mean":1.0,"scov":1.0}}],
            "servers":[{"id":1,"speed_min":1,"speed_max":2,"power_base":0,"power_coeff":1,"apps":[1],
            "sla_threshold":1,"sla_epsilon":0.1}]}"#;
        assert!(matches!(load_system(text), Err(Error::Validation { .. })));
    }

    #[test]
    fn instant_demand_matches_table() {
        let sys = reference_system(4.0, 0.01);
        let expected = [20.0, 20.0, 20.0, 20.0, 15.0];
        for (app, want) in sys.applications().iter().zip(expected) {
            assert!((instant_demand(app) - want).abs() < 1e-12, "app {}", app.id);
        }
        let unit = ApplicationSpec {
            id: 9,
            interarrival: DistributionSpec::exponential(1.0).unwrap(),
            workload: DistributionSpec::exponential(1.0).unwrap(),
        };
        assert_eq!(instant_demand(&unit), 1.0);
    }

    #[test]
    fn power_evaluation() {
        let sys = reference_system(4.0, 0.01);
        let s1 = &sys.servers()[0];
        assert!((s1.power(10.473) - (150.0 + 10.473f64.powi(3) / 3.0)).abs() < 1e-9);
        assert!((s1.power(10.473) - 532.9).abs() < 0.1);
        assert_eq!(s1.power(0.0), 150.0);
        let s10 = &sys.servers()[9];
        assert!((s10.power(3.0) - 712.0).abs() < 1e-9);
    }

    #[test]
    fn log_params_reproduce_moments() {
        for &(mean, scov) in &[(0.25, 2.0), (5.0, 1.5), (1e-5, 1e-3), (1e5, 900.0)] {
            let d = DistributionSpec::lognormal(mean, scov).unwrap();
            let (m, s2) = d.log_params();
            let mean_back = (m + 0.5 * s2).exp();
            let scov_back = s2.exp_m1();
            assert!(((mean_back - mean) / mean).abs() < 1e-9);
            assert!(((scov_back - scov) / scov).abs() < 1e-9);
        }
    }

    #[test]
    fn lognormal_sampler_moments() {
        // 10^6 draws; SCOV 0.5 keeps the fourth moment small enough for a sharp variance check
        let d = DistributionSpec::lognormal(3.0, 0.5).unwrap();
        let sampler = d.sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se_mean = (var / n as f64).sqrt();
        assert!((mean - 3.0).abs() < 3.0 * se_mean);
        // s.e. of the sample variance uses the lognormal fourth central moment
        let s2 = d.log_params().1;
        let w = s2.exp();
        let kurt = w.powi(4) + 2.0 * w.powi(3) + 3.0 * w.powi(2) - 3.0;
        let true_var = d.variance();
        let se_var = true_var * ((kurt + 2.0) / n as f64).sqrt();
        assert!((var - true_var).abs() < 3.0 * se_var, "var {var} vs {true_var}");
    }

    #[test]
    fn unknown_app_and_uncovered_app_rejected() {
        let sys = reference_system(4.0, 0.01);
        let mut servers = sys.servers().to_vec();
        servers[9].apps = vec![42];
        let err = SystemSpec::new(sys.applications().to_vec(), servers).unwrap_err();
        assert!(err.to_string().contains("server 10"));

        let mut servers = sys.servers().to_vec();
        servers[9].apps = vec![4];
        // app 5 is still on servers 8 and 9, so this is fine
        assert!(SystemSpec::new(sys.applications().to_vec(), servers.clone()).is_ok());
        for s in servers.iter_mut() {
            s.apps.retain(|&a| a != 5);
            if s.apps.is_empty() {
                s.apps.push(4);
            }
        }
        let err = SystemSpec::new(sys.applications().to_vec(), servers).unwrap_err();
        assert!(err.to_string().contains("application 5"));
    }

    #[test]
    fn config_round_trip() {
        let sys = reference_system(4.0, 0.01);
        let back = load_system(&sys.to_config_string()).unwrap();
        assert_eq!(sys, back);
    }

    #[test]
    fn malformed_config_is_parse_error() {
        assert!(matches!(load_system("{ not json"), Err(Error::Parse(_))));
    }

    #[test]
    fn policy_validation() {
        let sys = reference_system(4.0, 0.01);
        let mut routing = vec![vec![0.0; 10]; 5];
        routing[0][0] = 1.0;
        routing[1][2] = 1.0;
        routing[2][6] = 1.0;
        routing[3][7] = 1.0;
        routing[4][9] = 1.0;
        let speeds: Vec<f64> = sys.servers().iter().map(|s| s.speed_min).collect();
        let policy = StaticPolicy { routing, speeds };
        policy.validate(&sys).unwrap();

        let mut bad = policy.clone();
        bad.routing[0][0] = 0.5;
        bad.routing[0][9] = 0.5;
        assert!(bad.validate(&sys).is_err());

        let mut short = policy.clone();
        short.speeds.pop();
        assert!(matches!(short.validate(&sys), Err(Error::DimensionMismatch(_))));
    }
}
