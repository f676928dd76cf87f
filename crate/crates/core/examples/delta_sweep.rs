//! Sweeps the response-time threshold on the reference farm and tabulates planned and
//! simulated power plus per-server violation probabilities.
//!
//! Usage: `delta_sweep [horizon] [replications]`

use rqfarm::experiment::{sweep, sweep_tsv};
use rqfarm::optimizer::SolveOptions;
use rqfarm::reference::reference_system;
use rqfarm::simulator::SimConfig;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let horizon: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10_000.0);
    let replications: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2);
    let sys = reference_system(4.0, 0.01);
    let cells = sweep(
        &sys,
        &[1.0, 5.0, 8.0, 11.0],
        &[0.01, 0.05],
        &SolveOptions::default(),
        &SimConfig::new(horizon, replications, 3),
    )?;
    print!("{}", sweep_tsv(&cells));
    Ok(())
}
