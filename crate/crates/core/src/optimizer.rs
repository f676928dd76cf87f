//! Power minimization over routing matrices with speeds eliminated analytically,
//! plus the min-max problem behind the feasibility condition `delta >= 2 * gamma_a_bar`.
//!
//! For a fixed routing matrix every server runs at the smallest speed that satisfies
//! its SLA quadratic, so the search only moves routing probabilities. Each restart
//! alternates block projected-gradient sweeps (one application at a time) with a
//! pairwise transfer pattern search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::primitives::{StaticPolicy, SystemSpec, STRUCTURAL_ZERO};
use crate::rq::bound::{self, min_bound_in_box, min_feasible_speed_in, sla_quadratic};
use crate::rq::flows::{superpose, ServerAggregate};
use crate::rq::uncertainty::gamma_from_epsilon;

/// Routing matrix, one row per application.
pub type Routing = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Cap on block-gradient sweeps per restart.
    pub max_iterations: usize,
    pub restarts: usize,
    /// Relative objective change below which a sweep counts as stalled.
    pub tolerance: f64,
    pub seed: u64,
    /// Relative stability margin on `x > omega_bar`.
    pub margin: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            restarts: 32,
            tolerance: 1e-10,
            seed: 1,
            margin: bound::STABILITY_MARGIN,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::validation("solve options", "max_iterations must be positive"));
        }
        if self.restarts == 0 {
            return Err(Error::validation("solve options", "restarts must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::validation("solve options", "tolerance must be positive"));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::validation("solve options", "margin must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    OptimalLocal,
    Infeasible,
    IterationLimit,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::OptimalLocal => "optimal-local",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::IterationLimit => "iteration-limit",
        })
    }
}

/// Per-server view of a routing matrix under the SLA.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServerDiagnostics {
    pub server_id: usize,
    pub lambda_bar: f64,
    pub gamma_a_bar: f64,
    pub gamma_s_bar: f64,
    pub omega_bar: f64,
    pub speed: f64,
    /// Bound at `speed`; infinite when the server is unstable or unloaded.
    pub bound: f64,
    pub delta: f64,
    /// `2 * gamma_a_bar`, the limit of the AM-GM floor at infinite speed.
    pub floor_limit: f64,
    /// AM-GM floor evaluated at the top speed.
    pub floor_at_max_speed: f64,
    pub power: f64,
    pub feasible: bool,
    /// Speed the SLA would need, when it exceeds the box.
    pub required_speed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub policy: StaticPolicy,
    /// Total power at the busy speeds, `sum_j C_j(x_j)`.
    pub objective: f64,
    pub status: SolveStatus,
    pub per_server: Vec<ServerDiagnostics>,
    pub feasible_restarts: usize,
}

/// Per-server SLA data shared by all evaluations of one system.
struct Evaluator<'a> {
    sys: &'a SystemSpec,
    gammas: Vec<f64>,
    margin: f64,
    penalty_weight: f64,
}

/// Value of one server under the current routing.
#[derive(Debug, Clone, Copy)]
struct ServerEval {
    cost: f64,
    violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    /// Sum of per-server power plus infeasibility penalty.
    Power,
    /// Log-sum-exp of `2 * gamma_a_bar` at inverse temperature `beta`.
    SoftMax(f64),
    /// Plain max of `2 * gamma_a_bar`.
    Max,
}

/// Stand-in for `2 * gamma_a_bar` on a server that receives nothing.
const UNLOADED_SPREAD: f64 = 1e6;

impl<'a> Evaluator<'a> {
    fn new(sys: &'a SystemSpec, margin: f64) -> Result<Self> {
        let gammas = sys
            .servers()
            .iter()
            .map(|s| gamma_from_epsilon(s.sla_epsilon))
            .collect::<Result<Vec<_>>>()?;
        let top: f64 = sys.servers().iter().map(|s| s.power(s.speed_max)).sum();
        Ok(Self {
            sys,
            gammas,
            margin,
            penalty_weight: 10.0 * top,
        })
    }

    fn aggregate(&self, j: usize, routing: &Routing) -> Result<ServerAggregate> {
        let params = self.sys.params();
        superpose(
            self.sys.apps_of_server(j).iter().map(|&i| (&params[i], routing[i][j])),
            self.gammas[j],
        )
    }

    /// Smallest SLA-feasible speed of server `j`, or the error explaining why none exists.
    fn speed(&self, j: usize, agg: &ServerAggregate) -> Result<f64> {
        let s = &self.sys.servers()[j];
        let q = sla_quadratic(agg, s.sla_threshold);
        min_feasible_speed_in(&q, s.speed_min, s.speed_max, self.margin)
    }

    /// Infeasibility measure in `[0, inf)`, continuous across the feasibility boundary.
    fn violation(&self, j: usize, agg: &ServerAggregate) -> f64 {
        let s = &self.sys.servers()[j];
        if agg.omega_bar * (1.0 + self.margin) >= s.speed_max {
            return (agg.omega_bar / s.speed_max).max(1.0);
        }
        match min_bound_in_box(agg, s.speed_min, s.speed_max) {
            Some((_, best)) if best > s.sla_threshold => 1.0 - s.sla_threshold / best,
            _ => 1e-12,
        }
    }

    fn server_value(&self, j: usize, routing: &Routing, mode: Mode) -> ServerEval {
        let s = &self.sys.servers()[j];
        let agg = match self.aggregate(j, routing) {
            Ok(a) => a,
            Err(_) => {
                let cost = match mode {
                    Mode::Power => s.power(s.speed_max) + self.penalty_weight,
                    _ => UNLOADED_SPREAD,
                };
                return ServerEval { cost, violation: 1.0 };
            }
        };
        match mode {
            Mode::Power => match self.speed(j, &agg) {
                Ok(x) => ServerEval {
                    cost: s.power(x),
                    violation: 0.0,
                },
                Err(_) => {
                    let v = self.violation(j, &agg);
                    ServerEval {
                        cost: s.power(s.speed_max) + self.penalty_weight * v,
                        violation: v,
                    }
                }
            },
            _ => ServerEval {
                cost: 2.0 * agg.gamma_a_bar,
                violation: 0.0,
            },
        }
    }

    /// Objective after replacing the values of `changed` servers by `new`.
    fn combine(&self, values: &[f64], changed: &[usize], new: &[f64], mode: Mode) -> f64 {
        match mode {
            // other servers are constant, so only the changed block matters for comparisons
            Mode::Power => new.iter().sum(),
            Mode::Max => {
                let mut m = f64::NEG_INFINITY;
                for (j, &v) in values.iter().enumerate() {
                    let v = changed.iter().position(|&c| c == j).map_or(v, |k| new[k]);
                    m = m.max(v);
                }
                m
            }
            Mode::SoftMax(beta) => {
                let pick = |j: usize, v: f64| changed.iter().position(|&c| c == j).map_or(v, |k| new[k]);
                let m = values.iter().enumerate().map(|(j, &v)| pick(j, v)).fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = values.iter().enumerate().map(|(j, &v)| (beta * (pick(j, v) - m)).exp()).sum();
                m + s.ln() / beta
            }
        }
    }

    fn total(&self, values: &[f64], mode: Mode) -> f64 {
        match mode {
            Mode::Power => values.iter().sum(),
            _ => self.combine(values, &[], &[], mode),
        }
    }
}

/// Euclidean projection of `v` onto the probability simplex, in place.
pub fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Zeroes structural-zero entries and rescales so the block sums to one.
fn clean_block(v: &mut [f64]) {
    for x in v.iter_mut() {
        if *x <= STRUCTURAL_ZERO {
            *x = 0.0;
        }
    }
    let s: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= s;
    }
}

fn uniform_routing(sys: &SystemSpec) -> Routing {
    let mut r = vec![vec![0.0; sys.num_servers()]; sys.num_apps()];
    for (i, row) in r.iter_mut().enumerate() {
        let hosts = sys.servers_of_app(i);
        for &j in hosts {
            row[j] = 1.0 / hosts.len() as f64;
        }
    }
    r
}

fn random_routing(sys: &SystemSpec, rng: &mut ChaCha8Rng) -> Routing {
    let mut r = vec![vec![0.0; sys.num_servers()]; sys.num_apps()];
    for (i, row) in r.iter_mut().enumerate() {
        let hosts = sys.servers_of_app(i);
        let draws: Vec<f64> = hosts.iter().map(|_| rng.sample::<f64, _>(Exp1) + 1e-3).collect();
        let total: f64 = draws.iter().sum();
        for (&j, d) in hosts.iter().zip(draws) {
            row[j] = d / total;
        }
    }
    r
}

/// State of one local search: routing plus cached per-server values.
struct Search<'e, 'a> {
    ev: &'e Evaluator<'a>,
    routing: Routing,
    values: Vec<f64>,
    violations: Vec<f64>,
    mode: Mode,
    /// Normalized step length per application.
    steps: Vec<f64>,
}

impl<'e, 'a> Search<'e, 'a> {
    fn new(ev: &'e Evaluator<'a>, routing: Routing, mode: Mode) -> Self {
        let mut s = Self {
            ev,
            routing,
            values: Vec::new(),
            violations: Vec::new(),
            mode,
            steps: vec![0.1; ev.sys.num_apps()],
        };
        s.refresh();
        s
    }

    fn refresh(&mut self) {
        let n = self.ev.sys.num_servers();
        let evals: Vec<ServerEval> = (0..n).map(|j| self.ev.server_value(j, &self.routing, self.mode)).collect();
        self.values = evals.iter().map(|e| e.cost).collect();
        self.violations = evals.iter().map(|e| e.violation).collect();
    }

    fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
        self.refresh();
    }

    fn objective(&self) -> f64 {
        self.ev.total(&self.values, self.mode)
    }

    fn feasible(&self) -> bool {
        self.violations.iter().all(|&v| v == 0.0)
    }

    /// Objective contribution when app `i`'s block is replaced by `block`; leaves routing unchanged.
    fn trial(&mut self, i: usize, block: &[f64]) -> (f64, Vec<ServerEval>) {
        let hosts = self.ev.sys.servers_of_app(i);
        let saved: Vec<f64> = hosts.iter().map(|&j| self.routing[i][j]).collect();
        for (&j, &p) in hosts.iter().zip(block) {
            self.routing[i][j] = p;
        }
        let evals: Vec<ServerEval> = hosts.iter().map(|&j| self.ev.server_value(j, &self.routing, self.mode)).collect();
        for (&j, &p) in hosts.iter().zip(&saved) {
            self.routing[i][j] = p;
        }
        let new: Vec<f64> = evals.iter().map(|e| e.cost).collect();
        (self.ev.combine(&self.values, hosts, &new, self.mode), evals)
    }

    fn current_local(&self, i: usize) -> f64 {
        let hosts = self.ev.sys.servers_of_app(i);
        let cur: Vec<f64> = hosts.iter().map(|&j| self.values[j]).collect();
        self.ev.combine(&self.values, hosts, &cur, self.mode)
    }

    fn commit(&mut self, i: usize, block: &[f64], evals: &[ServerEval]) {
        let hosts = self.ev.sys.servers_of_app(i);
        for (k, &j) in hosts.iter().enumerate() {
            self.routing[i][j] = block[k];
            self.values[j] = evals[k].cost;
            self.violations[j] = evals[k].violation;
        }
    }

    /// Central-difference gradient of the objective with respect to app `i`'s block.
    fn gradient(&mut self, i: usize) -> Vec<f64> {
        let hosts = self.ev.sys.servers_of_app(i).to_vec();
        let weights: Option<Vec<f64>> = match self.mode {
            Mode::SoftMax(beta) => {
                let m = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let w: Vec<f64> = self.values.iter().map(|&v| (beta * (v - m)).exp()).collect();
                let s: f64 = w.iter().sum();
                Some(w.into_iter().map(|x| x / s).collect())
            }
            _ => None,
        };
        let mut g = Vec::with_capacity(hosts.len());
        for &j in &hosts {
            let p = self.routing[i][j];
            let h = 1e-7;
            let up = (p + h).min(1.0);
            let down = (p - h).max(0.0);
            self.routing[i][j] = up;
            let f_up = self.ev.server_value(j, &self.routing, self.mode).cost;
            self.routing[i][j] = down;
            let f_down = self.ev.server_value(j, &self.routing, self.mode).cost;
            self.routing[i][j] = p;
            let d = (f_up - f_down) / (up - down);
            g.push(weights.as_ref().map_or(d, |w| w[j] * d));
        }
        g
    }

    /// One projected step for app `i`; returns whether the objective dropped.
    fn gradient_step(&mut self, i: usize) -> bool {
        let hosts = self.ev.sys.servers_of_app(i);
        if hosts.len() < 2 {
            return false;
        }
        let g = self.gradient(i);
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(scale > 0.0 && scale.is_finite()) {
            return false;
        }
        let base: Vec<f64> = hosts.iter().map(|&j| self.routing[i][j]).collect();
        let before = self.current_local(i);
        let mut step = self.steps[i];
        while step > 1e-12 {
            let mut block: Vec<f64> = base.iter().zip(&g).map(|(p, d)| p - step * d / scale).collect();
            project_simplex(&mut block);
            clean_block(&mut block);
            let (after, evals) = self.trial(i, &block);
            if after < before - 1e-15 * before.abs() {
                self.commit(i, &block, &evals);
                self.steps[i] = (step * 2.0).min(1.0);
                return true;
            }
            step *= 0.25;
        }
        self.steps[i] = 1e-3;
        false
    }

    /// Block sweeps until the relative change stalls; returns (sweeps, converged).
    fn gradient_phase(&mut self, max_sweeps: usize, tol: f64) -> (usize, bool) {
        let mut stalled = 0;
        for sweep in 0..max_sweeps {
            let before = self.objective();
            let mut moved = false;
            for i in 0..self.ev.sys.num_apps() {
                moved |= self.gradient_step(i);
            }
            let after = self.objective();
            if !moved || (before - after).abs() <= tol * before.abs().max(1e-300) {
                stalled += 1;
                if stalled >= 3 || !moved {
                    return (sweep + 1, true);
                }
            } else {
                stalled = 0;
            }
        }
        (max_sweeps, false)
    }

    /// Pairwise transfer pattern search on a mesh that halves from 0.25 down to `min_step`.
    ///
    /// Returns (improved, certified); `certified` means no transfer on the finest mesh
    /// improves, reached before `budget` trials were spent.
    fn pattern_phase(&mut self, min_step: f64, budget: usize) -> (bool, bool) {
        let mut any = false;
        let mut trials = 0;
        let mut eta = 0.25;
        while eta >= min_step {
            let mut improved = false;
            for i in 0..self.ev.sys.num_apps() {
                let n = self.ev.sys.servers_of_app(i).len();
                for a in 0..n {
                    for b in 0..n {
                        if a == b {
                            continue;
                        }
                        let mut tries = 0;
                        loop {
                            trials += 1;
                            if trials > budget {
                                return (any || improved, false);
                            }
                            if tries >= 64 || !self.try_transfer(i, a, b, eta) {
                                break;
                            }
                            improved = true;
                            tries += 1;
                        }
                    }
                }
            }
            any |= improved;
            if !improved {
                eta *= 0.5;
            }
        }
        (any, true)
    }

    /// Moves `eta` of app `i`'s traffic from its `a`-th host to its `b`-th host if that helps.
    fn try_transfer(&mut self, i: usize, a: usize, b: usize, eta: f64) -> bool {
        let hosts = self.ev.sys.servers_of_app(i);
        let (ja, jb) = (hosts[a], hosts[b]);
        let (pa, pb) = (self.routing[i][ja], self.routing[i][jb]);
        let amount = eta.min(pa);
        if amount <= 0.0 {
            return false;
        }
        let mut pair = [pa - amount, pb + amount];
        if pair[0] <= STRUCTURAL_ZERO {
            pair = [0.0, pa + pb];
        }
        let changed = [ja, jb];
        let before = self.ev.combine(&self.values, &changed, &[self.values[ja], self.values[jb]], self.mode);
        self.routing[i][ja] = pair[0];
        self.routing[i][jb] = pair[1];
        let ea = self.ev.server_value(ja, &self.routing, self.mode);
        let eb = self.ev.server_value(jb, &self.routing, self.mode);
        let after = self.ev.combine(&self.values, &changed, &[ea.cost, eb.cost], self.mode);
        if after < before - 1e-13 * before.abs() {
            self.values[ja] = ea.cost;
            self.values[jb] = eb.cost;
            self.violations[ja] = ea.violation;
            self.violations[jb] = eb.violation;
            true
        } else {
            self.routing[i][ja] = pa;
            self.routing[i][jb] = pb;
            false
        }
    }

    /// Trial budget of one pattern phase.
    fn pattern_budget(&self, max_iterations: usize) -> usize {
        let blocks: usize = (0..self.ev.sys.num_apps()).map(|i| self.ev.sys.servers_of_app(i).len()).sum();
        max_iterations.saturating_mul(blocks.max(1))
    }
}

/// Relative per-sweep gain below which the gradient phase hands over to the pattern search.
const GRADIENT_STALL: f64 = 1e-8;
/// Cap on gradient/pattern alternations per restart.
const MAX_ROUNDS: usize = 50;
/// Finest transfer size of the pattern search.
const PATTERN_MESH: f64 = 1e-7;

/// Outcome of one restart.
struct RestartOutcome {
    routing: Routing,
    objective: f64,
    feasible: bool,
    converged: bool,
}

fn power_restart(ev: &Evaluator, start: Routing, options: &SolveOptions) -> RestartOutcome {
    let mut search = Search::new(ev, start, Mode::Power);
    let budget = search.pattern_budget(options.max_iterations);
    let mut sweeps_left = options.max_iterations;
    let mut converged = false;
    for _round in 0..MAX_ROUNDS {
        let (used, _) = search.gradient_phase(sweeps_left, GRADIENT_STALL.max(options.tolerance));
        sweeps_left -= used.min(sweeps_left);
        let before = search.objective();
        let (_, certified) = search.pattern_phase(PATTERN_MESH, budget);
        converged = certified;
        let after = search.objective();
        if !certified || (before - after) <= options.tolerance * before.abs() || sweeps_left == 0 {
            break;
        }
    }
    RestartOutcome {
        objective: search.objective(),
        feasible: search.feasible(),
        routing: search.routing,
        converged,
    }
}

fn lexicographic_less(a: &Routing, b: &Routing) -> bool {
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            match x.total_cmp(y) {
                std::cmp::Ordering::Less => return true,
                std::cmp::Ordering::Greater => return false,
                std::cmp::Ordering::Equal => {}
            }
        }
    }
    false
}

/// Picks the best outcome: feasible before infeasible, then lower objective, then smaller routing.
fn better(candidate: &RestartOutcome, incumbent: &RestartOutcome) -> bool {
    if candidate.feasible != incumbent.feasible {
        return candidate.feasible;
    }
    let scale = incumbent.objective.abs().max(1e-300);
    if candidate.objective < incumbent.objective - 1e-12 * scale {
        return true;
    }
    if (candidate.objective - incumbent.objective).abs() <= 1e-12 * scale {
        return lexicographic_less(&candidate.routing, &incumbent.routing);
    }
    false
}

fn starting_points(sys: &SystemSpec, options: &SolveOptions) -> Vec<Routing> {
    (0..options.restarts)
        .map(|r| {
            if r == 0 {
                uniform_routing(sys)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
                rng.set_stream(r as u64);
                random_routing(sys, &mut rng)
            }
        })
        .collect()
}

/// Minimizes total busy-speed power subject to every server's SLA quadratic.
pub fn solve_m2(system: &SystemSpec, options: &SolveOptions) -> Result<SolveResult> {
    options.validate()?;
    let ev = Evaluator::new(system, options.margin)?;
    let outcomes: Vec<RestartOutcome> = starting_points(system, options)
        .into_par_iter()
        .map(|start| power_restart(&ev, start, options))
        .collect();
    let feasible_restarts = outcomes.iter().filter(|o| o.feasible).count();
    let mut best: Option<RestartOutcome> = None;
    for o in outcomes {
        if best.as_ref().map_or(true, |b| better(&o, b)) {
            best = Some(o);
        }
    }
    let best = best.expect("at least one restart");
    let status = if !best.feasible {
        SolveStatus::Infeasible
    } else if best.converged {
        SolveStatus::OptimalLocal
    } else {
        SolveStatus::IterationLimit
    };
    let (speeds, per_server) = diagnose(&ev, &best.routing);
    let objective = system.servers().iter().zip(&speeds).map(|(s, &x)| s.power(x)).sum();
    Ok(SolveResult {
        policy: StaticPolicy {
            routing: best.routing,
            speeds,
        },
        objective,
        status,
        per_server,
        feasible_restarts,
    })
}

/// Speeds (top speed where infeasible) and per-server diagnostics for a routing matrix.
fn diagnose(ev: &Evaluator, routing: &Routing) -> (Vec<f64>, Vec<ServerDiagnostics>) {
    let sys = ev.sys;
    let mut speeds = Vec::with_capacity(sys.num_servers());
    let mut diags = Vec::with_capacity(sys.num_servers());
    for (j, s) in sys.servers().iter().enumerate() {
        let (agg, speed, required, feasible) = match ev.aggregate(j, routing) {
            Ok(agg) => match ev.speed(j, &agg) {
                Ok(x) => (Some(agg), x, None, true),
                Err(Error::InfeasibleSpeed { required, .. }) => (Some(agg), s.speed_max, required, false),
                Err(_) => (Some(agg), s.speed_max, None, false),
            },
            Err(_) => (None, s.speed_max, None, false),
        };
        let d = match agg {
            Some(a) => ServerDiagnostics {
                server_id: s.id,
                lambda_bar: a.lambda_bar,
                gamma_a_bar: a.gamma_a_bar,
                gamma_s_bar: a.gamma_s_bar,
                omega_bar: a.omega_bar,
                speed,
                bound: bound::response_time_bound(&a, speed).unwrap_or(f64::INFINITY),
                delta: s.sla_threshold,
                floor_limit: 2.0 * a.gamma_a_bar,
                floor_at_max_speed: bound::feasibility_floor(&a, s.speed_max),
                power: s.power(speed),
                feasible,
                required_speed: required,
            },
            None => ServerDiagnostics {
                server_id: s.id,
                lambda_bar: 0.0,
                gamma_a_bar: f64::INFINITY,
                gamma_s_bar: 0.0,
                omega_bar: 0.0,
                speed,
                bound: f64::INFINITY,
                delta: s.sla_threshold,
                floor_limit: f64::INFINITY,
                floor_at_max_speed: f64::INFINITY,
                power: s.power(speed),
                feasible: false,
                required_speed: None,
            },
        };
        speeds.push(speed);
        diags.push(d);
    }
    (speeds, diags)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinMaxResult {
    /// `min_P max_j 2 * gamma_a_bar_j`, evaluated without smoothing.
    pub value: f64,
    pub routing: Routing,
    /// `2 * gamma_a_bar_j` per server at the returned routing.
    pub per_server: Vec<f64>,
}

/// Inverse temperatures of the soft-max continuation.
const BETA_SCHEDULE: [f64; 6] = [5.0, 20.0, 80.0, 320.0, 1280.0, 5120.0];

/// Smallest achievable largest `2 * gamma_a_bar` over all routing matrices, at a uniform `epsilon`.
///
/// Every server must receive traffic: an unloaded server has no finite spread.
pub fn feasibility_minmax(system: &SystemSpec, epsilon: f64) -> Result<MinMaxResult> {
    feasibility_minmax_with(system, epsilon, &SolveOptions::default())
}

pub fn feasibility_minmax_with(system: &SystemSpec, epsilon: f64, options: &SolveOptions) -> Result<MinMaxResult> {
    options.validate()?;
    gamma_from_epsilon(epsilon)?;
    let delta = system.servers()[0].sla_threshold;
    let sys = system.with_sla(delta, epsilon)?;
    let ev = Evaluator::new(&sys, options.margin)?;
    let outcomes: Vec<(Routing, f64)> = starting_points(&sys, options)
        .into_par_iter()
        .map(|start| {
            let mut search = Search::new(&ev, start, Mode::SoftMax(BETA_SCHEDULE[0]));
            for &beta in &BETA_SCHEDULE {
                search.set_mode(Mode::SoftMax(beta));
                search.steps.iter_mut().for_each(|s| *s = 0.1);
                search.gradient_phase(options.max_iterations, options.tolerance);
            }
            search.set_mode(Mode::Max);
            let budget = search.pattern_budget(options.max_iterations);
            search.pattern_phase(1e-9, budget);
            let v = search.objective();
            (search.routing, v)
        })
        .collect();
    let mut best: Option<(Routing, f64)> = None;
    for (r, v) in outcomes {
        let replace = match &best {
            None => true,
            Some((br, bv)) => v < *bv - 1e-12 * bv || ((v - bv).abs() <= 1e-12 * bv && lexicographic_less(&r, br)),
        };
        if replace {
            best = Some((r, v));
        }
    }
    let (routing, value) = best.expect("at least one restart");
    let per_server = (0..sys.num_servers())
        .map(|j| ev.server_value(j, &routing, Mode::Max).cost)
        .collect();
    Ok(MinMaxResult {
        value,
        routing,
        per_server,
    })
}

/// One server's constraint check for an externally supplied policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServerCheck {
    pub server_id: usize,
    pub loaded: bool,
    pub lambda_bar: f64,
    pub gamma_a_bar: f64,
    pub gamma_s_bar: f64,
    pub omega_bar: f64,
    pub speed: f64,
    pub bound: f64,
    pub delta: f64,
    /// `a x^2 + b x + c` at the policy speed; non-positive means satisfied.
    pub quadratic_residual: f64,
    pub stable: bool,
    pub sla_ok: bool,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyReport {
    pub servers: Vec<ServerCheck>,
    /// Violated policy invariant (row sums, structural zeros, speed box), if any.
    pub policy_error: Option<String>,
    pub total_power: f64,
    pub pass: bool,
}

/// Relative slack allowed on `bound <= delta` when checking a policy.
pub const CHECK_TOLERANCE: f64 = 1e-6;

/// Evaluates every constraint of the planning model at a given policy.
pub fn check_policy(system: &SystemSpec, policy: &StaticPolicy) -> Result<PolicyReport> {
    policy.check_dimensions(system)?;
    let policy_error = policy.validate(system).err().map(|e| e.to_string());
    let ev = Evaluator::new(system, 0.0)?;
    let mut servers = Vec::with_capacity(system.num_servers());
    for (j, s) in system.servers().iter().enumerate() {
        let x = policy.speeds[j];
        let check = match ev.aggregate(j, &policy.routing) {
            Ok(agg) => {
                let q = sla_quadratic(&agg, s.sla_threshold);
                let stable = x > agg.omega_bar;
                let bound = if stable { bound::response_time_bound(&agg, x)? } else { f64::INFINITY };
                ServerCheck {
                    server_id: s.id,
                    loaded: true,
                    lambda_bar: agg.lambda_bar,
                    gamma_a_bar: agg.gamma_a_bar,
                    gamma_s_bar: agg.gamma_s_bar,
                    omega_bar: agg.omega_bar,
                    speed: x,
                    bound,
                    delta: s.sla_threshold,
                    quadratic_residual: q.eval(x),
                    stable,
                    sla_ok: stable && bound <= s.sla_threshold * (1.0 + CHECK_TOLERANCE),
                    power: s.power(x),
                }
            }
            Err(_) => ServerCheck {
                server_id: s.id,
                loaded: false,
                lambda_bar: 0.0,
                gamma_a_bar: f64::INFINITY,
                gamma_s_bar: 0.0,
                omega_bar: 0.0,
                speed: x,
                bound: f64::INFINITY,
                delta: s.sla_threshold,
                quadratic_residual: 4.0 * x * x,
                stable: true,
                sla_ok: false,
                power: s.power(x),
            },
        };
        servers.push(check);
    }
    let total_power = servers.iter().map(|c| c.power).sum();
    let pass = policy_error.is_none() && servers.iter().all(|c| c.stable && c.sla_ok);
    Ok(PolicyReport {
        servers,
        policy_error,
        total_power,
        pass,
    })
}
