//! Monte Carlo estimates from both samplers against exact enumeration.
//!
//!     cargo run --release --example monte_carlo -- [seed]

use fklab::engines::exact::{ExactDistribution, DEFAULT_LIMIT};
use fklab::engines::mc::{estimate, SamplerKind, Schedule};
use fklab::fk::{cluster_count, BcKind, BoundaryPartition, MeasureSpec};
use fklab::geometry::build_rect;

fn main() -> fklab::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(1, |s| s.parse().expect("seed"));
    let d = build_rect(3, 3)?;
    let bc = BoundaryPartition::free(d.num_sites());
    let spec = MeasureSpec::new(0.55, 2.0, BcKind::Free)?;
    let f = |c: &fklab::fk::EdgeConfiguration| cluster_count(&d, c, &bc) as f64;
    let exact = ExactDistribution::new(&d, &bc, &spec, DEFAULT_LIMIT)?.expectation(f);
    println!("mean cluster count on a 4x4 grid, q = 2, p = 0.55");
    println!("exact          {exact:.5}");
    let sch = Schedule { burn_in: 500, samples: 20_000, thin: 1, chains: 4 };
    for kind in [SamplerKind::HeatBath, SamplerKind::ChayesMachta] {
        let e = estimate(&d, &bc, &spec, kind, &sch, seed, f)?;
        println!("{:<14} {:.5} +- {:.5}  (z = {:+.2}, ess {:.0})", format!("{kind:?}"), e.mean, e.stderr, e.z_score(exact), e.ess);
    }
    Ok(())
}
