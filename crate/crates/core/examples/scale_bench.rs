//! Solves random farms of growing size and reports wall time.
//!
//! Usage: `cargo run --release --example scale_bench -- [sizes...]`

use rqfarm::experiment::{bench_tsv, scale_bench};
use rqfarm::optimizer::SolveOptions;

fn main() -> anyhow::Result<()> {
    let mut sizes: Vec<usize> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    if sizes.is_empty() {
        sizes = vec![20, 100, 1000];
    }
    let rows = scale_bench(&sizes, 10, 1, 7, &SolveOptions::default())?;
    print!("{}", bench_tsv(&rows));
    Ok(())
}
