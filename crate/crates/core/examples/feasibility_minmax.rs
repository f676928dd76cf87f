//! Computes the smallest achievable worst-server arrival spread `2 * gamma_a_bar` for the
//! reference farm and shows that a threshold below it leaves the planner without a solution.

use rqfarm::optimizer::{feasibility_minmax, solve_m2, SolveOptions};
use rqfarm::reference::reference_system;

fn main() -> anyhow::Result<()> {
    let epsilon = 0.1;
    let system = reference_system(1.0, epsilon);
    let minmax = feasibility_minmax(&system, epsilon)?;
    println!("min over routings of max_j 2*Gamma_a_j at eps={epsilon}: {:.4}", minmax.value);
    for (j, v) in minmax.per_server.iter().enumerate() {
        println!("  server {:>2}: {v:.4}", j + 1);
    }
    let res = solve_m2(&system, &SolveOptions::default())?;
    println!("planning at delta=1: {}", res.status);
    for d in res.per_server.iter().filter(|d| !d.feasible) {
        println!("  server {:>2}: floor at top speed {:.4} > delta {}", d.server_id, d.floor_at_max_speed, d.delta);
    }
    Ok(())
}
