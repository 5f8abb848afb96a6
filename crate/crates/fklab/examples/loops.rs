//! Sample a critical configuration on a Dobrushin box, decompose it into loops plus the
//! exploration path, and write the polylines as JSON.
//!
//!     cargo run --example loops -- [out.json]

use fklab::engines::mc::{ChainState, SamplerKind, Sampler};
use fklab::fk::{critical_point, BcKind, BoundaryPartition, MeasureSpec};
use fklab::geometry::build_dobrushin_box;
use fklab::loops::{loops_of, polylines_json, reconstruct};

fn main() -> fklab::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("fklab_loops.json").display().to_string());
    let d = build_dobrushin_box(8, 8)?;
    let q = 2.0;
    let bc = BoundaryPartition::for_domain(&d, BcKind::Dobrushin)?;
    let spec = MeasureSpec::new(critical_point(q)?, q, BcKind::Dobrushin)?;
    let mut sampler = Sampler::new(&d, bc, spec, SamplerKind::ChayesMachta)?;
    let mut chain = ChainState::new(d.num_edges(), 7, 0);
    for _ in 0..200 {
        sampler.sweep(&mut chain);
    }
    let lc = loops_of(&d, &chain.config);
    assert_eq!(reconstruct(&d, &lc), chain.config);
    println!("open edges {} of {}", chain.config.open_count(), d.num_edges());
    println!("loops {}, exploration path length {}", lc.loop_count, lc.exploration_path.len());
    std::fs::write(&out, serde_json::to_string_pretty(&polylines_json(&d, &lc))?)?;
    println!("wrote {out}");
    Ok(())
}
