//! Total variation between long-run sampler histograms and exact distributions.
//!
//!     cargo run --release --example sampler_validity -- [samples_per_chain]

use fklab::engines::mc::Schedule;
use fklab::engines::validity::run_catalog;

fn main() -> fklab::Result<()> {
    let samples: usize = std::env::args().nth(1).map_or(100_000, |s| s.parse().expect("samples"));
    let sch = Schedule { burn_in: 1000, samples, thin: 1, chains: 4 };
    for c in run_catalog(&[0.5, 1.0, 2.0, 3.0, 4.0], &sch, 1)? {
        println!("{:<14} E={:<2} q={:<4} p={:.3} {:<13} tv={:.4}", c.label, c.edges, c.q, c.p, format!("{:?}", c.kind), c.tv);
    }
    Ok(())
}
