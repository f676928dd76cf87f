//! Walks the worst-case chain for random single-queue parameters: exhaustive vertex search,
//! the finite-horizon closed form, the traces that attain it, and the horizon-free bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rqfarm::worst_case::{
    analytic_finite_worst, brute_force_worst_fcfs, build_extremal, combined_cap_residuals,
    printed_extremal_workloads, QueueParams,
};

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    println!("{:>2} {:>6} {:>7} {:>7} {:>7} {:>10} {:>10} {:>10} {:>10}", "n", "rho", "lambda", "G_a", "G_s", "brute", "analytic", "extremal", "S_UB");
    for _ in 0..12 {
        let lambda = rng.random_range(0.2..3.0);
        let rho = rng.random_range(0.1..0.95);
        let params = QueueParams::new(lambda, lambda / rho, rng.random_range(0.0..1.0) / lambda, rng.random_range(0.0..2.0))?;
        let n = rng.random_range(1..=6);
        let brute = brute_force_worst_fcfs(n, &params)?;
        let (analytic, _) = analytic_finite_worst(n, &params);
        let extremal = build_extremal(n, &params)?;
        println!(
            "{n:>2} {rho:>6.3} {lambda:>7.3} {:>7.3} {:>7.3} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            params.gamma_a, params.gamma_s, brute.value, analytic, extremal.objective(), params.s_ub()
        );
    }
    let printed = printed_extremal_workloads(4, 1.0, 0.5);
    let worst = combined_cap_residuals(&printed, 1.0, 0.5).iter().fold(0.0f64, |m, r| m.max(r.abs()));
    println!("closed-form X* that claims every k at once, n = 4: largest cap residual {worst:.4}");
    Ok(())
}
