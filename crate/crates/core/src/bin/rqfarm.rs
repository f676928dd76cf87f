use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rqfarm::experiment::{
    bench_tsv, scale_bench, sweep, sweep_tsv, verify, verify_passed, verify_tsv, ExperimentPlan, VerifyOptions,
};
use rqfarm::optimizer::{check_policy, feasibility_minmax, solve_m2, SolveOptions, SolveResult, SolveStatus};
use rqfarm::simulator::{simulate, SimConfig, SimReport};
use rqfarm::{load_system, StaticPolicy, SystemSpec};

const EXIT_INFEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(name = "rqfarm", version, about = "Plan and validate static routing and speeds for a server farm")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize total power subject to every server's SLA bound
    Solve(SolveArgs),
    /// Simulate a policy and report violation probabilities and power
    Simulate(SimulateArgs),
    /// Evaluate a policy against the bound without simulating
    Check(CheckArgs),
    /// Solve and simulate every (delta, epsilon) pair
    Sweep(SweepArgs),
    /// Run the worst-case and quadratic oracles
    Verify(VerifyArgs),
    /// Time the solver on random farms
    ScaleBench(BenchArgs),
}

#[derive(Args)]
struct SlaArgs {
    /// Override every server's response-time threshold
    #[arg(long)]
    delta: Option<f64>,
    /// Override every server's violation probability
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    sla: SlaArgs,
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 100_000.0)]
    horizon: f64,
    /// Defaults to 10% of the horizon
    #[arg(long)]
    warmup: Option<f64>,
    #[arg(long, default_value_t = 10)]
    replications: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl SimArgs {
    fn config(&self) -> SimConfig {
        let mut cfg = SimConfig::new(self.horizon, self.replications, self.seed);
        if let Some(w) = self.warmup {
            cfg.warmup = w;
        }
        cfg
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    policy: PathBuf,
    #[command(flatten)]
    sla: SlaArgs,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    policy: PathBuf,
    #[command(flatten)]
    sla: SlaArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated thresholds
    #[arg(long, value_delimiter = ',', default_values_t = [5.0, 8.0, 11.0])]
    delta: Vec<f64>,
    /// Comma-separated violation probabilities
    #[arg(long, value_delimiter = ',', default_values_t = [0.01])]
    epsilon: Vec<f64>,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 200)]
    draws: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Negative control: flip the sign of the quadratic's constant term
    #[arg(long)]
    flip_constant_sign: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated server counts
    #[arg(long, value_delimiter = ',', default_values_t = [10, 50, 100, 200])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    ratio: usize,
    #[arg(long, default_value_t = 3)]
    runs: usize,
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_system(path: &Path, sla: &SlaArgs) -> anyhow::Result<SystemSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let sys = load_system(&text).with_context(|| format!("loading config {}", path.display()))?;
    if sla.delta.is_none() && sla.epsilon.is_none() {
        return Ok(sys);
    }
    let first = &sys.servers()[0];
    let delta = sla.delta.unwrap_or(first.sla_threshold);
    let epsilon = sla.epsilon.unwrap_or(first.sla_epsilon);
    Ok(sys.with_sla(delta, epsilon)?)
}

fn read_policy(path: &Path) -> anyhow::Result<StaticPolicy> {
    let text = fs::read_to_string(path).with_context(|| format!("reading policy {}", path.display()))?;
    if text.trim().is_empty() {
        bail!("policy file {} is empty", path.display());
    }
    StaticPolicy::from_json(&text).with_context(|| format!("loading policy {}", path.display()))
}

fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn diagnostics_tsv(res: &SolveResult) -> String {
    let mut out = String::from(
        "server\tlambda_bar\tgamma_a_bar\tgamma_s_bar\tomega_bar\tspeed\tbound\tdelta\tfloor_limit\tpower\tfeasible\n",
    );
    for d in &res.per_server {
        out.push_str(&format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\t{:.6}\t{:.6}\t{}\n",
            d.server_id,
            d.lambda_bar,
            d.gamma_a_bar,
            d.gamma_s_bar,
            d.omega_bar,
            d.speed,
            d.bound,
            d.delta,
            d.floor_limit,
            d.power,
            d.feasible
        ));
    }
    out
}

fn metrics_tsv(report: &SimReport) -> String {
    let mut out = String::from(
        "server\tdelta\tjobs\tviolation\tviolation_lower\tviolation_upper\tmean_speed\tbusy_speed\tutilization\tavg_power\tavg_power_se\tmean_response\n",
    );
    for s in &report.servers {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.8}\t{:.8}\t{:.8}\t{:.6}\t{:.6}\t{:.6}\t{:.4}\t{:.4}\t{:.6}\n",
            s.server_id,
            s.delta,
            s.jobs,
            s.violation.probability,
            s.violation.lower,
            s.violation.upper,
            s.mean_speed,
            s.busy_speed,
            s.utilization,
            s.avg_power,
            s.avg_power_se,
            s.mean_response
        ));
    }
    out
}

fn cmd_solve(args: SolveArgs) -> anyhow::Result<ExitCode> {
    let sys = read_system(&args.config, &args.sla)?;
    let options = SolveOptions {
        restarts: args.restarts,
        seed: args.seed,
        ..SolveOptions::default()
    };
    let res = solve_m2(&sys, &options)?;
    write(&args.out, "policy.json", &res.policy.to_json())?;
    write(&args.out, "diagnostics.json", &json(&res))?;
    write(&args.out, "diagnostics.tsv", &diagnostics_tsv(&res))?;
    println!("status: {}", res.status);
    println!("total power: {:.4}", res.objective);
    if res.status != SolveStatus::Infeasible {
        return Ok(ExitCode::SUCCESS);
    }
    eprintln!("no routing meets every SLA bound");
    for d in res.per_server.iter().filter(|d| !d.feasible) {
        eprintln!(
            "  server {}: floor 2*gamma_a_bar = {:.4}, floor at top speed = {:.4}, delta = {}{}",
            d.server_id,
            d.floor_limit,
            d.floor_at_max_speed,
            d.delta,
            d.required_speed.map_or(String::new(), |x| format!(", required speed {x:.4}"))
        );
    }
    let epsilon = sys.servers()[0].sla_epsilon;
    if let Ok(mm) = feasibility_minmax(&sys, epsilon) {
        let delta = sys.servers().iter().map(|s| s.sla_threshold).fold(f64::INFINITY, f64::min);
        eprintln!(
            "  smallest achievable max_j 2*gamma_a_bar at epsilon = {epsilon}: {:.4}{}",
            mm.value,
            if mm.value > delta { format!(" > delta = {delta}") } else { String::new() }
        );
    }
    Ok(ExitCode::from(EXIT_INFEASIBLE))
}

fn cmd_simulate(args: SimulateArgs) -> anyhow::Result<ExitCode> {
    let sys = read_system(&args.config, &args.sla)?;
    let policy = read_policy(&args.policy)?;
    let report = simulate(&sys, &policy, &args.sim.config())?;
    write(&args.out, "metrics.json", &json(&report))?;
    write(&args.out, "metrics.tsv", &metrics_tsv(&report))?;
    print!("{}", metrics_tsv(&report));
    println!("total power: {:.4} (se {:.4})", report.total_power, report.total_power_se);
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(args: CheckArgs) -> anyhow::Result<ExitCode> {
    let sys = read_system(&args.config, &args.sla)?;
    let policy = read_policy(&args.policy)?;
    let report = check_policy(&sys, &policy)?;
    if let Some(dir) = &args.out {
        write(dir, "check.json", &json(&report))?;
    }
    println!("server\tbound\tdelta\tstable\tsla_ok");
    for s in &report.servers {
        println!("{}\t{:.6}\t{}\t{}\t{}", s.server_id, s.bound, s.delta, s.stable, s.sla_ok);
    }
    if let Some(e) = &report.policy_error {
        println!("policy: {e}");
    }
    println!("total power: {:.4}", report.total_power);
    println!("{}", if report.pass { "PASS" } else { "FAIL" });
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(EXIT_INFEASIBLE) })
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<ExitCode> {
    let plan = ExperimentPlan {
        config: args.config,
        deltas: args.delta,
        epsilons: args.epsilon,
        replications: args.sim.replications,
        horizon: args.sim.horizon,
        warmup: args.sim.warmup,
        seed: args.sim.seed,
        out: args.out,
    };
    plan.validate()?;
    let sys = read_system(&plan.config, &SlaArgs { delta: None, epsilon: None })?;
    let options = SolveOptions {
        restarts: args.restarts,
        seed: plan.seed,
        ..SolveOptions::default()
    };
    let cells = sweep(&sys, &plan.deltas, &plan.epsilons, &options, &plan.sim_config())?;
    write(&plan.out, "sweep.json", &json(&cells))?;
    write(&plan.out, "sweep.tsv", &sweep_tsv(&cells))?;
    print!("{}", sweep_tsv(&cells));
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let rows = verify(&VerifyOptions {
        draws: args.draws,
        seed: args.seed,
        flip_constant_sign: args.flip_constant_sign,
        ..VerifyOptions::default()
    });
    let table = verify_tsv(&rows);
    if let Some(dir) = &args.out {
        write(dir, "verify.tsv", &table)?;
    }
    print!("{table}");
    if verify_passed(&rows) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_scale_bench(args: BenchArgs) -> anyhow::Result<ExitCode> {
    let options = SolveOptions {
        restarts: args.restarts,
        seed: args.seed,
        ..SolveOptions::default()
    };
    let rows = scale_bench(&args.sizes, args.ratio, args.runs, args.seed, &options)?;
    let table = bench_tsv(&rows);
    if let Some(dir) = &args.out {
        write(dir, "scale_bench.tsv", &table)?;
    }
    print!("{table}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Check(a) => cmd_check(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
        Command::ScaleBench(a) => cmd_scale_bench(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
