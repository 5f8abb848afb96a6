//! Exact connectivities on the truncated universal cover U_1 by the frontier transfer, and
//! the decay of P(0 <-> x) with the level |x3|.
//!
//!     cargo run --release --example cover_transfer

use fklab::engines::transfer::{connectivity_from, FrontierGraph};
use fklab::experiments::cover::{level_ratio, CoverIdentity};
use fklab::fk::{critical_point, BcKind, BoundaryPartition, MeasureSpec};
use fklab::geometry::build_universal_cover;
use fklab::parafermion::spin;

fn main() -> fklab::Result<()> {
    let (n, t) = (1, 3);
    let d = build_universal_cover(n, t)?;
    let origin = d.origin().expect("cover origin");
    let bc = BoundaryPartition::for_domain(&d, BcKind::Dobrushin)?;
    let graph = FrontierGraph::from_domain(&d, &bc);
    println!("U_{n} truncated at T = {t}: {} sites, {} edges", d.num_sites(), d.num_edges());
    for q in [2.0, 3.5] {
        let p = critical_point(q)?;
        let phi = connectivity_from(&graph, &MeasureSpec::new(p, q, BcKind::Dobrushin)?, origin)?;
        let id = CoverIdentity::new(&d, spin(q)?.sigma, p, n)?;
        println!("q = {q}: full sum {:.12}, genuine sum {:.6}, truncation bound {:.3e}", id.full_sum(|x| phi[x as usize]), id.genuine_sum(|x| phi[x as usize]), id.truncation_bound);
        for level in 1..=t as i32 {
            let max = (0..d.num_sites()).filter(|&x| d.sites[x].z.abs() == level).map(|x| phi[x]).fold(0.0, f64::max);
            println!("  level {level}: max P(0 <-> x) = {max:.4e} <= {:.4e}", level_ratio(p, n).powi(level));
        }
    }
    Ok(())
}
