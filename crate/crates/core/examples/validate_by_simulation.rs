//! Plans the reference farm at `delta = 4`, `epsilon = 0.01`, then checks the SLA and
//! the power draw of the static policy by discrete-event simulation.
//!
//! Usage: `validate_by_simulation [horizon] [replications]`.

use rqfarm::optimizer::{solve_m2, SolveOptions};
use rqfarm::reference::reference_system;
use rqfarm::simulator::{simulate, SimConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let horizon: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20_000.0);
    let replications: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);
    let system = reference_system(4.0, 0.01);
    let plan = solve_m2(&system, &SolveOptions::default())?;
    println!("planned busy-speed power {:.2} ({})", plan.objective, plan.status);

    let started = std::time::Instant::now();
    let report = simulate(&system, &plan.policy, &SimConfig::new(horizon, replications, 7))?;
    println!("simulated {replications} x {horizon} time units in {:.2?}", started.elapsed());
    println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}", "server", "jobs", "P(S>=4)", "upper95", "E[x]", "busy x", "power");
    for s in &report.servers {
        println!(
            "{:>6} {:>10} {:>10.5} {:>10.5} {:>10.3} {:>10.3} {:>10.1}",
            s.server_id, s.jobs, s.violation.probability, s.violation.upper, s.mean_speed, s.busy_speed, s.avg_power
        );
    }
    println!("average power per unit time {:.2} +- {:.2}", report.total_power, report.total_power_se);
    Ok(())
}
