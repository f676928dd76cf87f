//! Feeds one trace to both a FCFS and a PS queue and compares response times job by job.
//!
//! The per-job inequality `S_PS + X_n/x <= 2 S_FCFS` is tested on every job; it fails
//! for long jobs overtaken by short ones, while the path averages respect it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rqfarm::simulator::simulate_coupled_disciplines;

fn main() -> anyhow::Result<()> {
    // the three-job hand trace
    let hand = simulate_coupled_disciplines(&[0.0, 1.0, 1.0], &[3.0, 1.0, 1.0], 1.0)?;
    for (k, r) in hand.iter().enumerate() {
        println!("job {}: PS {:.3}  FCFS {:.3}  PS + X {:.3}  2 FCFS {:.3}", k + 1, r.ps, r.fcfs, r.ps + r.work, 2.0 * r.fcfs);
    }

    println!("\n{:>5} {:>9} {:>11} {:>12} {:>12} {:>12}", "rho", "jobs", "violations", "mean PS+X", "2 mean FCFS", "worst excess");
    let n = 200_000;
    for rho in [0.3, 0.6, 0.9] {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let gap = Exp::new(rho)?;
        let size = Exp::new(1.0)?;
        let gaps: Vec<f64> = (0..n).map(|_| gap.sample(&mut rng)).collect();
        let work: Vec<f64> = (0..n).map(|_| size.sample(&mut rng)).collect();
        let res = simulate_coupled_disciplines(&gaps, &work, 1.0)?;
        let excess = res.iter().map(|r| r.ps + r.work - 2.0 * r.fcfs);
        let violations = excess.clone().filter(|&e| e > 1e-9).count();
        let worst = excess.fold(f64::NEG_INFINITY, f64::max);
        let lhs = res.iter().map(|r| r.ps + r.work).sum::<f64>() / n as f64;
        let rhs = 2.0 * res.iter().map(|r| r.fcfs).sum::<f64>() / n as f64;
        println!("{rho:>5} {n:>9} {violations:>11} {lhs:>12.4} {rhs:>12.4} {worst:>12.4}");
    }
    Ok(())
}
