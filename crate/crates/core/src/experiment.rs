//! Experiment drivers: threshold/probability sweeps, the worst-case verification table,
//! random instances and the scaling benchmark.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{solve_m2, SolveOptions, SolveStatus};
use crate::primitives::{ApplicationSpec, DistributionSpec, ServerSpec, SystemSpec};
use crate::rq::bound::{min_feasible_speed_in, response_time_bound, sla_quadratic, SlaQuadratic, STABILITY_MARGIN};
use crate::rq::flows::ServerAggregate;
use crate::simulator::{simulate, SimConfig};
use crate::worst_case::{
    analytic_finite_worst, brute_force_worst_fcfs, build_extremal, combined_cap_residuals, printed_extremal_workloads,
    QueueParams,
};

/// A sweep over uniform SLA pairs, as read from the command line or a plan file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub config: PathBuf,
    pub deltas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub replications: usize,
    pub horizon: f64,
    pub warmup: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() || self.epsilons.is_empty() {
            return Err(Error::validation("experiment plan", "sweep lists must be non-empty"));
        }
        if self.deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::validation("experiment plan", "delta values must be positive"));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(Error::validation("experiment plan", "epsilon values must lie in (0, 1)"));
        }
        if self.replications == 0 {
            return Err(Error::validation("experiment plan", "replications must be at least 1"));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::validation("experiment plan", "horizon must be positive"));
        }
        Ok(())
    }

    pub fn sim_config(&self) -> SimConfig {
        let mut cfg = SimConfig::new(self.horizon, self.replications, self.seed);
        if let Some(w) = self.warmup {
            cfg.warmup = w;
        }
        cfg
    }
}

/// One `(delta, epsilon)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub delta: f64,
    pub epsilon: f64,
    pub status: SolveStatus,
    /// Busy-speed power of the plan.
    pub planned_power: f64,
    /// Simulated average power; absent for infeasible cells.
    pub simulated_power: Option<f64>,
    pub simulated_power_se: Option<f64>,
    /// Per-server empirical `P(S_j >= delta)`.
    pub violation: Vec<f64>,
}

/// Solves and (for feasible cells) simulates every `(delta, epsilon)` pair with shared seeds.
pub fn sweep(
    system: &SystemSpec,
    deltas: &[f64],
    epsilons: &[f64],
    options: &SolveOptions,
    sim: &SimConfig,
) -> Result<Vec<SweepCell>> {
    let mut cells = Vec::with_capacity(deltas.len() * epsilons.len());
    for &epsilon in epsilons {
        for &delta in deltas {
            let sys = system.with_sla(delta, epsilon)?;
            let plan = solve_m2(&sys, options)?;
            let (simulated_power, simulated_power_se, violation) = if plan.status == SolveStatus::Infeasible {
                (None, None, Vec::new())
            } else {
                let report = simulate(&sys, &plan.policy, sim)?;
                (
                    Some(report.total_power),
                    Some(report.total_power_se),
                    report.servers.iter().map(|s| s.violation.probability).collect(),
                )
            };
            cells.push(SweepCell {
                delta,
                epsilon,
                status: plan.status,
                planned_power: plan.objective,
                simulated_power,
                simulated_power_se,
                violation,
            });
        }
    }
    Ok(cells)
}

/// Tab-separated view of a sweep, one row per cell, ready for plotting.
pub fn sweep_tsv(cells: &[SweepCell]) -> String {
    let width = cells.iter().map(|c| c.violation.len()).max().unwrap_or(0);
    let mut out = String::from("delta\tepsilon\tstatus\tplanned_power\tsimulated_power\tsimulated_power_se");
    for j in 0..width {
        let _ = write!(out, "\tviolation_{}", j + 1);
    }
    out.push('\n');
    let opt = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.6}"));
    for c in cells {
        let _ = write!(
            out,
            "{}\t{}\t{}\t{:.6}\t{}\t{}",
            c.delta,
            c.epsilon,
            c.status,
            c.planned_power,
            opt(c.simulated_power),
            opt(c.simulated_power_se)
        );
        for j in 0..width {
            let _ = write!(out, "\t{}", c.violation.get(j).map_or("NA".to_string(), |v| format!("{v:.8}")));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckOutcome {
    Pass,
    Fail,
    /// Informational finding, never fails the table.
    Note,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub check: String,
    pub outcome: CheckOutcome,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub draws: usize,
    pub max_n: usize,
    pub seed: u64,
    /// Negative control: flip the sign of the quadratic's constant term.
    pub flip_constant_sign: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            draws: 200,
            max_n: 6,
            seed: 1,
            flip_constant_sign: false,
        }
    }
}

/// Random single-queue parameters with `rho` in `(0.1, 0.95)`.
///
/// When `nonnegative_gaps` is set, `gamma_a <= 1/lambda` so the extremal gaps exist.
pub fn random_queue(rng: &mut ChaCha8Rng, nonnegative_gaps: bool) -> QueueParams {
    let lambda = rng.random_range(0.2..4.0);
    let rho = rng.random_range(0.1..0.95);
    let ga_max = if nonnegative_gaps { 1.0 / lambda } else { 3.0 / lambda };
    QueueParams::new(lambda, lambda / rho, rng.random_range(0.0..ga_max), rng.random_range(0.0..3.0)).expect("valid draw")
}

/// Random aggregate with positive variability and a stable operating range.
pub fn random_aggregate(rng: &mut ChaCha8Rng) -> ServerAggregate {
    let lambda_bar = rng.random_range(0.2..10.0);
    let mu_bar_inv = rng.random_range(0.1..5.0);
    let gamma_level = rng.random_range(0.5..3.0);
    let sigma_s_bar = mu_bar_inv * rng.random_range(0.1..2.0);
    ServerAggregate {
        lambda_bar,
        gamma_a_bar: gamma_level * rng.random_range(0.05..1.5) / lambda_bar,
        mu_bar_inv,
        gamma_s_bar: gamma_level * sigma_s_bar,
        sigma_s_bar,
        omega_bar: lambda_bar * mu_bar_inv,
        gamma_level,
    }
}

/// Root/bound consistency over random aggregates; returns (checked, worst relative error).
pub fn quadratic_consistency(draws: usize, seed: u64, flip_constant_sign: bool) -> (usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut attempts = 0;
    while checked < draws && attempts < 50 * draws {
        attempts += 1;
        let agg = random_aggregate(&mut rng);
        // the threshold sits between the infinite-speed floor and the bound at a moderate speed
        let x_ref = agg.omega_bar * rng.random_range(1.05..4.0);
        let hi = response_time_bound(&agg, x_ref).expect("stable reference speed");
        let lo = 2.0 * agg.gamma_a_bar + 2.0 / agg.lambda_bar;
        let delta = lo + rng.random_range(0.05..1.0) * (hi - lo).max(1e-6);
        let mut q: SlaQuadratic = sla_quadratic(&agg, delta);
        if flip_constant_sign {
            q.c = -q.c;
        }
        let Ok(x) = min_feasible_speed_in(&q, 1e-9, 1e9, STABILITY_MARGIN) else {
            continue;
        };
        let b = response_time_bound(&agg, x).unwrap_or(f64::INFINITY);
        worst = worst.max(((b - delta) / delta).abs());
        checked += 1;
    }
    (checked, worst)
}

/// Runs the worst-case and quadratic oracles and tabulates pass/fail per invariant.
pub fn verify(options: &VerifyOptions) -> Vec<VerifyRow> {
    let mut rows = Vec::new();
    let mut push = |check: &str, ok: bool, detail: String| {
        rows.push(VerifyRow {
            check: check.to_string(),
            outcome: if ok { CheckOutcome::Pass } else { CheckOutcome::Fail },
            detail,
        })
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);

    // brute force <= analytic <= S_UB over arbitrary draws (negative extremal gaps allowed)
    let mut chain_bad = 0;
    let mut min_slack = f64::INFINITY;
    let mut rejected = 0;
    let mut equal_when_gaps_nonneg = 0;
    let mut eligible = 0;
    for d in 0..options.draws {
        let p = random_queue(&mut rng, d % 2 == 0);
        let n = 1 + d % options.max_n;
        let Ok(brute) = brute_force_worst_fcfs(n, &p) else {
            chain_bad += 1;
            continue;
        };
        let (analytic, _) = analytic_finite_worst(n, &p);
        let sub = p.s_ub();
        let tol = 1e-9 * analytic.abs().max(1.0);
        if !(brute.value <= analytic + tol && analytic <= sub + tol) {
            chain_bad += 1;
        }
        min_slack = min_slack.min(sub - analytic);
        if p.gamma_a * p.lambda <= 1.0 {
            eligible += 1;
            if (brute.value - analytic).abs() <= tol {
                equal_when_gaps_nonneg += 1;
            }
        } else {
            rejected += 1;
        }
    }
    push(
        "bound chain: brute force <= finite-n worst <= S_UB",
        chain_bad == 0,
        format!("{} draws, {chain_bad} violations, smallest S_UB slack {min_slack:.3e}", options.draws),
    );
    push(
        "brute force attains the finite-n worst when extremal gaps are non-negative",
        equal_when_gaps_nonneg == eligible,
        format!("{equal_when_gaps_nonneg}/{eligible} equal; {rejected} draws had negative extremal gaps"),
    );

    // extremal traces
    let mut worst_rel: f64 = 0.0;
    let mut worst_slack: f64 = 0.0;
    let mut outside = 0;
    let mut t1_shift: f64 = 0.0;
    let mut built = 0;
    for d in 0..options.draws {
        let p = random_queue(&mut rng, true);
        let n = 1 + d % options.max_n;
        let Ok(e) = build_extremal(n, &p) else { continue };
        built += 1;
        let (analytic, _) = analytic_finite_worst(n, &p);
        worst_rel = worst_rel.max((e.objective() - analytic).abs() / analytic.abs().max(1e-12));
        if !(e.arrival_membership().holds && e.workload_membership().holds) {
            outside += 1;
        }
        worst_slack = worst_slack.max(e.binding_workload_slack()).max(e.binding_arrival_slack());
        let moved = e.with_first_gap(e.t_star[0] * 7.0 + 1.0).objective();
        t1_shift = t1_shift.max((moved - e.objective()).abs());
    }
    push(
        "extremal traces attain the finite-n worst",
        worst_rel < 1e-9,
        format!("{built} traces, worst relative error {worst_rel:.2e}"),
    );
    push(
        "extremal traces lie in both sets with binding constraints tight",
        outside == 0 && worst_slack < 1e-9,
        format!("{outside} outside, largest binding |slack| {worst_slack:.2e}"),
    );
    push(
        "first gap has no influence",
        t1_shift == 0.0,
        format!("largest change {t1_shift:.2e}"),
    );

    // n = 1 edge
    let p = QueueParams::new(1.0, 2.0, 0.3, 0.4).expect("valid");
    let e1 = build_extremal(1, &p);
    let ok = e1.as_ref().is_ok_and(|e| {
        (e.x_star[0] - (0.5 + 0.4)).abs() < 1e-12
            && brute_force_worst_fcfs(1, &p).is_ok_and(|b| (b.value - e.objective()).abs() < 1e-12)
    });
    push("single-job horizon", ok, "X*_1 = 1/mu + Gamma_s".to_string());

    // quadratic form against the bound it encodes
    let (checked, worst) = quadratic_consistency(options.draws.max(100), options.seed ^ 0x5eed, options.flip_constant_sign);
    push(
        "bound at the minimal feasible speed equals delta",
        checked > 0 && worst < 1e-6,
        format!(
            "{checked} aggregates, worst relative error {worst:.2e}{}",
            if options.flip_constant_sign { " (constant term sign flipped)" } else { "" }
        ),
    );

    // the per-k closed forms that try to make every k bind at once
    let mut residual: f64 = 0.0;
    for n in 2..=options.max_n {
        let x = printed_extremal_workloads(n, 1.0, 1.0);
        residual = residual.max(combined_cap_residuals(&x, 1.0, 1.0).iter().fold(0.0, |m, r| m.max(r.abs())));
    }
    rows.push(VerifyRow {
        check: "single X* binding every k simultaneously".to_string(),
        outcome: CheckOutcome::Note,
        detail: format!(
            "the all-k closed form misses the combined cap by up to {residual:.4} * Gamma_s for n <= {}; \
             the k*-dependent construction is used instead",
            options.max_n
        ),
    });
    rows
}

pub fn verify_passed(rows: &[VerifyRow]) -> bool {
    rows.iter().all(|r| r.outcome != CheckOutcome::Fail)
}

pub fn verify_tsv(rows: &[VerifyRow]) -> String {
    let mut out = String::from("check\toutcome\tdetail\n");
    for r in rows {
        let outcome = match r.outcome {
            CheckOutcome::Pass => "PASS",
            CheckOutcome::Fail => "FAIL",
            CheckOutcome::Note => "NOTE",
        };
        let _ = writeln!(out, "{}\t{}\t{}", r.check, outcome, r.detail);
    }
    out
}

/// Random farm with `servers` servers and `servers / ratio` applications.
///
/// Each server hosts one to three applications; every application is guaranteed a host.
/// Parameters are drawn from ranges around the reference farm, with arrival rates high
/// enough that thinning over roughly twenty servers keeps `2 * gamma_a_bar` well below
/// the threshold.
pub fn random_instance(servers: usize, ratio: usize, delta: f64, epsilon: f64, seed: u64) -> Result<SystemSpec> {
    if servers == 0 || ratio == 0 || servers < ratio {
        return Err(Error::validation("instance", "need at least `ratio` servers and a positive ratio"));
    }
    let napps = servers / ratio;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let applications = (0..napps)
        .map(|i| {
            let ia_mean = 1.0 / rng.random_range(5.0..20.0);
            let interarrival = if rng.random_bool(0.3) {
                DistributionSpec::exponential(ia_mean)
            } else {
                DistributionSpec::lognormal(ia_mean, rng.random_range(0.5..2.0))
            }?;
            Ok(ApplicationSpec {
                id: i + 1,
                interarrival,
                workload: DistributionSpec::lognormal(rng.random_range(1.0..5.0), rng.random_range(0.5..2.0))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let servers = (0..servers)
        .map(|j| {
            let mut apps = vec![j % napps + 1];
            let extra = rng.random_range(0..=2);
            for _ in 0..extra {
                let a = rng.random_range(1..=napps);
                if !apps.contains(&a) {
                    apps.push(a);
                }
            }
            apps.sort_unstable();
            ServerSpec {
                id: j + 1,
                speed_min: rng.random_range(5.0..10.0),
                speed_max: rng.random_range(99.0..105.0),
                power_base: rng.random_range(150.0..700.0),
                power_coeff: rng.random_range(0.2..1.0),
                power_exponent: 3.0,
                apps,
                sla_threshold: delta,
                sla_epsilon: epsilon,
            }
        })
        .collect();
    SystemSpec::new(applications, servers)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub servers: usize,
    pub applications: usize,
    pub runs: usize,
    pub median_seconds: f64,
    pub status: SolveStatus,
    pub objective: f64,
}

/// Solves one random instance per size `runs` times and reports the median wall time.
pub fn scale_bench(sizes: &[usize], ratio: usize, runs: usize, seed: u64, options: &SolveOptions) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let sys = random_instance(n, ratio, 10.0, 0.01, seed ^ n as u64)?;
        let mut times = Vec::with_capacity(runs.max(1));
        let mut last = None;
        for _ in 0..runs.max(1) {
            let t0 = Instant::now();
            let res = solve_m2(&sys, options)?;
            times.push(t0.elapsed().as_secs_f64());
            last = Some(res);
        }
        times.sort_by(f64::total_cmp);
        let res = last.expect("at least one run");
        rows.push(BenchRow {
            servers: n,
            applications: sys.num_apps(),
            runs: times.len(),
            median_seconds: times[times.len() / 2],
            status: res.status,
            objective: res.objective,
        });
    }
    Ok(rows)
}

pub fn bench_tsv(rows: &[BenchRow]) -> String {
    let mut out = String::from("servers\tapplications\truns\tmedian_seconds\tstatus\tobjective\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{:.4}\t{}\t{:.4}",
            r.servers, r.applications, r.runs, r.median_seconds, r.status, r.objective
        );
    }
    out
}
