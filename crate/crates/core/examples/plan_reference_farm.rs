//! Plans the reference five-application, ten-server farm at `delta = 4`, `epsilon = 0.01`
//! and prints the routing matrix, the busy speeds and the per-server bound.

use rqfarm::optimizer::{solve_m2, SolveOptions};
use rqfarm::reference::reference_system;

fn main() -> anyhow::Result<()> {
    let system = reference_system(4.0, 0.01);
    let started = std::time::Instant::now();
    let options = SolveOptions::default();
    let result = solve_m2(&system, &options)?;
    println!(
        "status {}  objective {:.2}  ({} of {} restarts feasible, {:.2?})",
        result.status,
        result.objective,
        result.feasible_restarts,
        options.restarts,
        started.elapsed()
    );
    println!("routing:");
    for (i, row) in result.policy.routing.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|p| format!("{p:6.4}")).collect();
        println!("  app {}: {}", i + 1, cells.join(" "));
    }
    println!("{:>6} {:>9} {:>9} {:>9} {:>9} {:>10}", "server", "lambda", "omega", "speed", "bound", "power");
    for d in &result.per_server {
        println!("{:>6} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>10.2}",
            d.server_id, d.lambda_bar, d.omega_bar, d.speed, d.bound, d.power);
    }
    Ok(())
}
