//! Thins a lognormal arrival stream by Bernoulli routing and compares the empirical
//! gap moments with the closed forms, then superposes the flows of one server.
//!
//! The planning model uses `sigma / sqrt(p (2 - p))` for the thinned gap deviation. A
//! thinned gap is a geometric random sum of original gaps, whose exact variance is
//! `sigma^2 / p + (1 - p) m^2 / p^2`; the last column shows it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rqfarm::reference::reference_system;
use rqfarm::rq::{gamma_from_epsilon, superpose, thin};

fn main() -> anyhow::Result<()> {
    let sys = reference_system(4.0, 0.01);
    let app = &sys.applications()[0];
    let sampler = app.interarrival.sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (m, sigma) = (app.interarrival.mean, app.interarrival.std_dev());
    println!("{:>4} {:>10} {:>10} {:>10} {:>10} {:>10}", "p", "mean", "1/(lam p)", "std dev", "model", "exact");
    for p in [0.1, 0.5, 0.9] {
        let flow = thin(app, p)?;
        let mut gaps = Vec::with_capacity(200_000);
        let mut acc = 0.0;
        while gaps.len() < 200_000 {
            acc += sampler.sample(&mut rng);
            if rng.random_bool(p) {
                gaps.push(acc);
                acc = 0.0;
            }
        }
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (gaps.len() - 1) as f64;
        let exact = (sigma * sigma / p + (1.0 - p) * m * m / (p * p)).sqrt();
        println!("{p:>4} {mean:>10.5} {:>10.5} {:>10.5} {:>10.5} {exact:>10.5}", 1.0 / flow.rate, var.sqrt(), flow.sigma);
    }

    // server 4 hosts applications 1, 2 and 3
    let gamma = gamma_from_epsilon(0.01)?;
    let params = sys.params();
    let agg = superpose([(&params[0], 0.3), (&params[1], 0.2), (&params[2], 0.4)], gamma)?;
    println!("\nserver 4 with p = (0.3, 0.2, 0.4) at gamma = {gamma:.6}");
    println!("  lambda_bar  {:.4}", agg.lambda_bar);
    println!("  gamma_a_bar {:.4}", agg.gamma_a_bar);
    println!("  1/mu_bar    {:.4}", agg.mu_bar_inv);
    println!("  sigma_s_bar {:.4}", agg.sigma_s_bar);
    println!("  omega_bar   {:.4}", agg.omega_bar);
    Ok(())
}
