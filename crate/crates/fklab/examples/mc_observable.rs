//! Monte Carlo estimate of the observable F against its exact value.
//!
//!     cargo run --release --example mc_observable

use fklab::engines::exact::DEFAULT_LIMIT;
use fklab::engines::mc::{SamplerKind, Schedule};
use fklab::fk::critical_point;
use fklab::geometry::build_dobrushin_box;
use fklab::parafermion::{exact_field, monte_carlo_field};

fn main() -> fklab::Result<()> {
    let d = build_dobrushin_box(3, 3)?;
    let q = 2.0;
    let pc = critical_point(q)?;
    let exact = exact_field(&d, pc, q, DEFAULT_LIMIT)?;
    let sch = Schedule { burn_in: 500, samples: 25_000, thin: 1, chains: 4 };
    let mc = monte_carlo_field(&d, pc, q, SamplerKind::ChayesMachta, &sch, 5)?;
    let se = mc.stderr.as_ref().expect("stderr");
    let mut worst: f64 = 0.0;
    for c in (0..d.num_corners() as u32).filter(|&c| d.is_included(c)) {
        let z = (mc.get(c) - exact.get(c)).norm() / se[c as usize].max(1e-12);
        worst = worst.max(z);
    }
    println!("largest |F_mc - F_exact| / stderr over all medial edges: {worst:.2}");
    Ok(())
}
