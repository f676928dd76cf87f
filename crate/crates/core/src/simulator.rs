//! Discrete-event simulation of a statically routed farm of processor-sharing servers.
//!
//! Each server serves its jobs in egalitarian processor sharing at its busy speed and
//! idles at `speed_min`. Instead of draining every job's remaining work at each event,
//! a server keeps a virtual clock `V` (work attained by any job present since the last
//! empty instant); a job arriving at `V0` with work `X` leaves when `V` reaches `V0 + X`.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::primitives::{Sampler, StaticPolicy, SystemSpec};

/// z for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Simulation horizon, warmup and replication layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub horizon: f64,
    pub warmup: f64,
    pub replications: usize,
    pub seed: u64,
    /// Width of the time buckets of the optional speed/power series (replication 0 only).
    pub series_bucket: Option<f64>,
}

impl SimConfig {
    /// Warmup defaults to 10% of the horizon.
    pub fn new(horizon: f64, replications: usize, seed: u64) -> Self {
        Self {
            horizon,
            warmup: 0.1 * horizon,
            replications,
            seed,
            series_bucket: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::validation("simulation config", "horizon must be positive"));
        }
        if !(self.warmup >= 0.0 && self.warmup < self.horizon) {
            return Err(Error::validation("simulation config", "requires 0 <= warmup < horizon"));
        }
        if self.replications == 0 {
            return Err(Error::validation("simulation config", "replications must be at least 1"));
        }
        if let Some(b) = self.series_bucket {
            if !(b > 0.0) || self.horizon / b > 1e7 {
                return Err(Error::validation("simulation config", "series bucket must be positive and not too fine"));
            }
        }
        Ok(())
    }
}

/// Violation fraction with a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    pub probability: f64,
    pub lower: f64,
    pub upper: f64,
    pub hits: u64,
    pub samples: u64,
}

/// Wilson score interval for `hits` successes out of `samples` at normal quantile `z`.
pub fn wilson(hits: u64, samples: u64, z: f64) -> Result<TailEstimate> {
    if samples == 0 {
        return Err(Error::EmptySample);
    }
    let n = samples as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Ok(TailEstimate {
        probability: p,
        lower: (center - half).max(0.0),
        upper: (center + half).min(1.0),
        hits,
        samples,
    })
}

/// Fraction of `samples` at or above `delta`, with a 95% Wilson interval.
pub fn empirical_tail(samples: &[f64], delta: f64) -> Result<TailEstimate> {
    let hits = samples.iter().filter(|&&s| s >= delta).count() as u64;
    wilson(hits, samples.len() as u64, Z95)
}

#[derive(Debug, Clone, Copy)]
struct Active {
    tag: f64,
    seq: u64,
    arrival: f64,
    work: f64,
    app: usize,
    recorded: bool,
}

impl PartialEq for Active {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Active {}
impl PartialOrd for Active {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Active {
    fn cmp(&self, other: &Self) -> Ordering {
        self.tag.total_cmp(&other.tag).then(self.seq.cmp(&other.seq))
    }
}

/// A finished job as seen by the caller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Departure {
    pub arrival: f64,
    pub completion: f64,
    pub work: f64,
    pub app: usize,
    pub recorded: bool,
}

/// Single processor-sharing queue at a fixed busy speed, driven by virtual time.
#[derive(Debug, Clone)]
pub struct PsQueue {
    speed: f64,
    virtual_time: f64,
    clock: f64,
    jobs: BinaryHeap<Reverse<Active>>,
    seq: u64,
}

impl PsQueue {
    pub fn new(speed: f64) -> Self {
        Self {
            speed,
            virtual_time: 0.0,
            clock: 0.0,
            jobs: BinaryHeap::new(),
            seq: 0,
        }
    }

    /// Number of jobs in service, `N(t)`.
    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    /// Advances the clock to `t`, sharing the elapsed capacity among the jobs present.
    pub fn advance(&mut self, t: f64) {
        let n = self.jobs.len();
        if n > 0 {
            self.virtual_time += (t - self.clock) * self.speed / n as f64;
        }
        self.clock = t;
    }

    /// Adds a job at the current clock.
    pub fn admit(&mut self, work: f64, app: usize, recorded: bool) {
        if self.jobs.is_empty() {
            self.virtual_time = 0.0;
        }
        self.seq += 1;
        self.jobs.push(Reverse(Active {
            tag: self.virtual_time + work,
            seq: self.seq,
            arrival: self.clock,
            work,
            app,
            recorded,
        }));
    }

    /// Time of the next departure if nothing else arrives.
    pub fn next_completion(&self) -> Option<f64> {
        self.jobs.peek().map(|Reverse(j)| {
            let left = (j.tag - self.virtual_time).max(0.0);
            self.clock + left * self.jobs.len() as f64 / self.speed
        })
    }

    /// Removes the job with the least remaining work; the clock must sit at its completion.
    pub fn complete(&mut self) -> Option<Departure> {
        let Reverse(j) = self.jobs.pop()?;
        self.virtual_time = j.tag;
        Some(Departure {
            arrival: j.arrival,
            completion: self.clock,
            work: j.work,
            app: j.app,
            recorded: j.recorded,
        })
    }

    /// Original work of the jobs present.
    pub fn present_work(&self) -> f64 {
        self.jobs.iter().map(|Reverse(j)| j.work).sum()
    }

    /// Work still owed to the jobs present.
    pub fn remaining_work(&self) -> f64 {
        self.jobs.iter().map(|Reverse(j)| (j.tag - self.virtual_time).max(0.0)).sum()
    }
}

/// Response times of the same trace under FCFS and PS at a fixed speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledResponse {
    pub ps: f64,
    pub fcfs: f64,
    pub work: f64,
}

/// Runs one trace through both disciplines. `gaps[0]` is the arrival time of the first job.
pub fn simulate_coupled_disciplines(gaps: &[f64], work: &[f64], speed: f64) -> Result<Vec<CoupledResponse>> {
    if gaps.len() != work.len() {
        return Err(Error::DimensionMismatch("gap and workload traces differ in length".into()));
    }
    if !(speed > 0.0) {
        return Err(Error::Domain(format!("speed must be positive, got {speed}")));
    }
    if gaps.iter().chain(work).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Domain("traces must be finite and non-negative".into()));
    }
    let n = gaps.len();
    let mut arrivals = Vec::with_capacity(n);
    let mut t = 0.0;
    for g in gaps {
        t += g;
        arrivals.push(t);
    }
    // FCFS by the Lindley recursion on waiting times
    let mut fcfs = Vec::with_capacity(n);
    let mut wait: f64 = 0.0;
    for k in 0..n {
        if k > 0 {
            wait = (wait + work[k - 1] / speed - gaps[k]).max(0.0);
        }
        fcfs.push(wait + work[k] / speed);
    }
    let mut ps = vec![f64::NAN; n];
    let mut q = PsQueue::new(speed);
    let mut next = 0;
    while next < n || !q.is_empty() {
        let arrival = if next < n { arrivals[next] } else { f64::INFINITY };
        match q.next_completion() {
            Some(c) if c <= arrival => {
                q.advance(c);
                let d = q.complete().expect("queue is non-empty");
                ps[d.app] = d.completion - d.arrival;
            }
            _ => {
                q.advance(arrival);
                q.admit(work[next], next, true);
                next += 1;
            }
        }
    }
    Ok((0..n)
        .map(|k| CoupledResponse {
            ps: ps[k],
            fcfs: fcfs[k],
            work: work[k],
        })
        .collect())
}

/// FCFS response times by the explicit maximum over earlier jobs (quadratic; for cross-checks).
pub fn fcfs_max_form(gaps: &[f64], work: &[f64], speed: f64) -> Vec<f64> {
    let n = gaps.len();
    (0..n)
        .map(|m| {
            (0..=m)
                .map(|k| {
                    let served: f64 = work[k..=m].iter().sum::<f64>() / speed;
                    let elapsed: f64 = gaps[k + 1..=m].iter().sum();
                    served - elapsed
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Per-server statistics of one replication.
#[derive(Debug, Clone, Default)]
struct ServerTally {
    jobs: u64,
    hits: u64,
    sum_response: f64,
    busy_time: f64,
    energy_integrated: f64,
    injected_work: f64,
    completed_work: f64,
    served_all_time: f64,
    min_slowdown_ratio: f64,
}

/// Consistency checks run at the end of every replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationAudit {
    pub replication: usize,
    /// `|injected - completed - remaining| / injected`, worst server.
    pub work_conservation_error: f64,
    /// Relative gap between the integrated energy and the two-level closed form, worst server.
    pub energy_identity_error: f64,
    /// Smallest `S * x / X` over recorded jobs; at least 1 for PS, up to rounding of
    /// response times taken as differences of large clock values.
    pub min_slowdown_ratio: f64,
    /// Events at which `N(t)` disagreed with arrivals minus departures.
    pub counter_mismatches: u64,
    pub recorded_jobs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServerReport {
    pub server_id: usize,
    pub delta: f64,
    pub jobs: u64,
    pub violation: TailEstimate,
    /// Standard error of the per-replication violation fractions.
    pub violation_se: f64,
    pub busy_speed: f64,
    /// Time-average speed over the window, idle periods at `speed_min` included.
    pub mean_speed: f64,
    pub mean_speed_se: f64,
    pub utilization: f64,
    pub avg_power: f64,
    pub avg_power_se: f64,
    pub mean_response: f64,
    pub mean_response_se: f64,
}

/// Speed and power per time bucket of replication 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedSeries {
    pub bucket: f64,
    /// `mean_speed[j][b]` over bucket `b` of server `j`.
    pub mean_speed: Vec<Vec<f64>>,
    pub power: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub horizon: f64,
    pub warmup: f64,
    pub replications: usize,
    pub seed: u64,
    pub servers: Vec<ServerReport>,
    pub total_power: f64,
    pub total_power_se: f64,
    /// Recorded arrivals per (application, server), summed over replications.
    pub flow_counts: Vec<Vec<u64>>,
    pub audits: Vec<ReplicationAudit>,
    pub series: Option<SpeedSeries>,
}

struct ReplicationResult {
    tallies: Vec<ServerTally>,
    flow_counts: Vec<Vec<u64>>,
    audit: ReplicationAudit,
    series: Option<SpeedSeries>,
}

/// Stream index of application `i` in replication `r`; the router takes the last slot.
fn stream_id(apps: usize, r: usize, slot: usize) -> u64 {
    (r * (apps + 1) + slot) as u64
}

fn overlap(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    (b.min(hi) - a.max(lo)).max(0.0)
}

struct ServerSim {
    queue: PsQueue,
    last: f64,
    busy_power: f64,
    idle_power: f64,
    busy_speed: f64,
    idle_speed: f64,
    arrivals: u64,
    departures: u64,
}

impl ServerSim {
    /// Accounts the interval `[last, t]` (state constant inside) and advances the queue.
    fn advance(&mut self, t: f64, window: (f64, f64), tally: &mut ServerTally, series: Option<&mut SeriesAcc>, j: usize) {
        let busy = !self.queue.is_empty();
        let w = overlap(self.last, t, window.0, window.1);
        if busy {
            tally.busy_time += w;
            tally.served_all_time += (t - self.last) * self.busy_speed;
            tally.energy_integrated += w * self.busy_power;
        } else {
            tally.energy_integrated += w * self.idle_power;
        }
        if let Some(s) = series {
            s.add(j, self.last, t, if busy { self.busy_speed } else { self.idle_speed });
        }
        self.queue.advance(t);
        self.last = t;
    }
}

struct SeriesAcc {
    bucket: f64,
    horizon: f64,
    speed_time: Vec<Vec<f64>>,
    busy_time: Vec<Vec<f64>>,
}

impl SeriesAcc {
    fn add(&mut self, j: usize, a: f64, b: f64, speed: f64) {
        let b = b.min(self.horizon);
        if b <= a {
            return;
        }
        let nb = self.speed_time[j].len();
        let mut k = ((a / self.bucket) as usize).min(nb - 1);
        let mut t = a;
        while t < b && k < nb {
            let end = ((k + 1) as f64 * self.bucket).min(b);
            let dt = (end - t).max(0.0);
            self.speed_time[j][k] += dt * speed;
            self.busy_time[j][k] += dt;
            t = end;
            k += 1;
        }
    }
}

fn run_replication(sys: &SystemSpec, policy: &StaticPolicy, cfg: &SimConfig, r: usize) -> ReplicationResult {
    let napps = sys.num_apps();
    let nserv = sys.num_servers();
    let window = (cfg.warmup, cfg.horizon);
    let mut app_rngs: Vec<ChaCha8Rng> = (0..napps)
        .map(|i| {
            let mut g = ChaCha8Rng::seed_from_u64(cfg.seed);
            g.set_stream(stream_id(napps, r, i));
            g
        })
        .collect();
    let mut router = ChaCha8Rng::seed_from_u64(cfg.seed);
    router.set_stream(stream_id(napps, r, napps));
    let gap_samplers: Vec<Sampler> = sys.applications().iter().map(|a| a.interarrival.sampler()).collect();
    let work_samplers: Vec<Sampler> = sys.applications().iter().map(|a| a.workload.sampler()).collect();
    let routes: Vec<Vec<(usize, f64)>> = (0..napps)
        .map(|i| {
            let mut cum = 0.0;
            sys.servers_of_app(i)
                .iter()
                .filter(|&&j| policy.routing[i][j] > 0.0)
                .map(|&j| {
                    cum += policy.routing[i][j];
                    (j, cum)
                })
                .collect()
        })
        .collect();
    let mut servers: Vec<ServerSim> = sys
        .servers()
        .iter()
        .zip(&policy.speeds)
        .map(|(s, &x)| ServerSim {
            queue: PsQueue::new(x),
            last: 0.0,
            busy_power: s.power(x),
            idle_power: s.power(s.speed_min),
            busy_speed: x,
            idle_speed: s.speed_min,
            arrivals: 0,
            departures: 0,
        })
        .collect();
    let mut tallies: Vec<ServerTally> = (0..nserv)
        .map(|_| ServerTally {
            min_slowdown_ratio: f64::INFINITY,
            ..Default::default()
        })
        .collect();
    let mut flow_counts = vec![vec![0u64; nserv]; napps];
    let mut series = (r == 0)
        .then_some(cfg.series_bucket)
        .flatten()
        .map(|bucket| {
            let nb = (cfg.horizon / bucket).ceil() as usize;
            SeriesAcc {
                bucket,
                horizon: cfg.horizon,
                speed_time: vec![vec![0.0; nb]; nserv],
                busy_time: vec![vec![0.0; nb]; nserv],
            }
        });
    let mut next_arrival: Vec<f64> = (0..napps).map(|i| gap_samplers[i].sample(&mut app_rngs[i])).collect();
    let mut next_completion: Vec<f64> = vec![f64::INFINITY; nserv];
    let mut outstanding: u64 = 0;
    let mut mismatches: u64 = 0;
    let mut now;

    loop {
        let (ai, at) = argmin(&next_arrival);
        let (cj, ct) = argmin(&next_completion);
        if ct <= at {
            now = ct;
            let srv = &mut servers[cj];
            srv.advance(now, window, &mut tallies[cj], series.as_mut(), cj);
            let d = srv.queue.complete().expect("scheduled completion has a job");
            srv.departures += 1;
            let t = &mut tallies[cj];
            t.completed_work += d.work;
            if d.recorded {
                let s = d.completion - d.arrival;
                t.jobs += 1;
                t.sum_response += s;
                if s >= sys.servers()[cj].sla_threshold {
                    t.hits += 1;
                }
                if d.work > 0.0 {
                    t.min_slowdown_ratio = t.min_slowdown_ratio.min(s * srv.busy_speed / d.work);
                }
                outstanding -= 1;
            }
            next_completion[cj] = srv.queue.next_completion().unwrap_or(f64::INFINITY);
            mismatches += (srv.queue.len() as u64 != srv.arrivals - srv.departures) as u64;
            debug_assert_eq!(srv.queue.len() as u64, srv.arrivals - srv.departures);
        } else {
            now = at;
            if now >= cfg.horizon && outstanding == 0 {
                break;
            }
            let u: f64 = router.random::<f64>() * routes[ai].last().map_or(1.0, |l| l.1);
            let j = routes[ai].iter().find(|(_, c)| u < *c).unwrap_or(routes[ai].last().expect("app has a route")).0;
            let work = work_samplers[ai].sample(&mut app_rngs[ai]);
            let recorded = now >= cfg.warmup && now < cfg.horizon;
            let srv = &mut servers[j];
            srv.advance(now, window, &mut tallies[j], series.as_mut(), j);
            srv.queue.admit(work, ai, recorded);
            srv.arrivals += 1;
            tallies[j].injected_work += work;
            if recorded {
                outstanding += 1;
                flow_counts[ai][j] += 1;
            }
            next_completion[j] = srv.queue.next_completion().unwrap_or(f64::INFINITY);
            mismatches += (srv.queue.len() as u64 != srv.arrivals - srv.departures) as u64;
            next_arrival[ai] = now + gap_samplers[ai].sample(&mut app_rngs[ai]);
        }
    }
    let end = now.max(cfg.horizon);
    let mut work_err: f64 = 0.0;
    let mut energy_err: f64 = 0.0;
    let span = cfg.horizon - cfg.warmup;
    for (j, srv) in servers.iter_mut().enumerate() {
        srv.advance(end, window, &mut tallies[j], series.as_mut(), j);
        let t = &tallies[j];
        if t.injected_work > 0.0 {
            let remaining = srv.queue.remaining_work();
            let ledger = (t.injected_work - t.completed_work - srv.queue.present_work()).abs();
            // capacity delivered while busy must equal the work absorbed by jobs
            let delivered = (t.served_all_time - (t.injected_work - remaining)).abs();
            work_err = work_err.max(ledger.max(delivered) / t.injected_work);
        }
        let closed = srv.busy_power * t.busy_time + srv.idle_power * (span - t.busy_time);
        energy_err = energy_err.max((closed - t.energy_integrated).abs() / closed);
    }
    let audit = ReplicationAudit {
        replication: r,
        work_conservation_error: work_err,
        energy_identity_error: energy_err,
        min_slowdown_ratio: tallies.iter().map(|t| t.min_slowdown_ratio).fold(f64::INFINITY, f64::min),
        counter_mismatches: mismatches,
        recorded_jobs: tallies.iter().map(|t| t.jobs).sum(),
    };
    let series = series.map(|s| {
        let power = s
            .speed_time
            .iter()
            .zip(&s.busy_time)
            .enumerate()
            .map(|(j, (st, bt))| {
                let srv = &servers[j];
                st.iter()
                    .zip(bt)
                    .map(|(&sp, &tm)| {
                        if tm <= 0.0 {
                            return 0.0;
                        }
                        // two-level speed: recover the busy share from the mean speed
                        let mean = sp / tm;
                        let frac = if srv.busy_speed > srv.idle_speed {
                            ((mean - srv.idle_speed) / (srv.busy_speed - srv.idle_speed)).clamp(0.0, 1.0)
                        } else {
                            1.0
                        };
                        frac * srv.busy_power + (1.0 - frac) * srv.idle_power
                    })
                    .collect()
            })
            .collect();
        let mean_speed = s
            .speed_time
            .iter()
            .zip(&s.busy_time)
            .map(|(st, bt)| st.iter().zip(bt).map(|(&a, &b)| if b > 0.0 { a / b } else { 0.0 }).collect())
            .collect();
        SpeedSeries {
            bucket: s.bucket,
            mean_speed,
            power,
        }
    });
    ReplicationResult {
        tallies,
        flow_counts,
        audit,
        series,
    }
}

fn argmin(v: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, &x) in v.iter().enumerate() {
        if x < best.1 {
            best = (k, x);
        }
    }
    best
}

/// Mean and standard error of the mean.
fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Simulates `cfg.replications` independent runs of the farm under `policy`.
pub fn simulate(system: &SystemSpec, policy: &StaticPolicy, cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    policy.validate(system)?;
    let runs: Vec<ReplicationResult> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(system, policy, cfg, r))
        .collect();
    let span = cfg.horizon - cfg.warmup;
    let mut servers = Vec::with_capacity(system.num_servers());
    for (j, s) in system.servers().iter().enumerate() {
        let x = policy.speeds[j];
        let jobs: u64 = runs.iter().map(|r| r.tallies[j].jobs).sum();
        let hits: u64 = runs.iter().map(|r| r.tallies[j].hits).sum();
        let violation = if jobs > 0 {
            wilson(hits, jobs, Z95)?
        } else {
            TailEstimate {
                probability: 0.0,
                lower: 0.0,
                upper: 1.0,
                hits: 0,
                samples: 0,
            }
        };
        let per_rep = |f: &dyn Fn(&ServerTally) -> f64| -> Vec<f64> { runs.iter().map(|r| f(&r.tallies[j])).collect() };
        let (_, violation_se) = mean_se(&per_rep(&|t| if t.jobs > 0 { t.hits as f64 / t.jobs as f64 } else { 0.0 }));
        let util = per_rep(&|t| t.busy_time / span);
        let (utilization, _) = mean_se(&util);
        let (mean_speed, mean_speed_se) = mean_se(&per_rep(&|t| (x * t.busy_time + s.speed_min * (span - t.busy_time)) / span));
        let (avg_power, avg_power_se) = mean_se(&per_rep(&|t| t.energy_integrated / span));
        let resp: Vec<f64> = runs
            .iter()
            .filter(|r| r.tallies[j].jobs > 0)
            .map(|r| r.tallies[j].sum_response / r.tallies[j].jobs as f64)
            .collect();
        let (mean_response, mean_response_se) = if resp.is_empty() { (f64::NAN, f64::NAN) } else { mean_se(&resp) };
        servers.push(ServerReport {
            server_id: s.id,
            delta: s.sla_threshold,
            jobs,
            violation,
            violation_se,
            busy_speed: x,
            mean_speed,
            mean_speed_se,
            utilization,
            avg_power,
            avg_power_se,
            mean_response,
            mean_response_se,
        });
    }
    let totals: Vec<f64> = runs
        .iter()
        .map(|r| r.tallies.iter().map(|t| t.energy_integrated / span).sum())
        .collect();
    let (total_power, total_power_se) = mean_se(&totals);
    let mut flow_counts = vec![vec![0u64; system.num_servers()]; system.num_apps()];
    for r in &runs {
        for (acc, row) in flow_counts.iter_mut().zip(&r.flow_counts) {
            for (a, c) in acc.iter_mut().zip(row) {
                *a += c;
            }
        }
    }
    let mut runs = runs;
    let series = runs.first_mut().and_then(|r| r.series.take());
    Ok(SimReport {
        horizon: cfg.horizon,
        warmup: cfg.warmup,
        replications: cfg.replications,
        seed: cfg.seed,
        servers,
        total_power,
        total_power_se,
        flow_counts,
        audits: runs.into_iter().map(|r| r.audit).collect(),
        series,
    })
}
