//! Contour identity on the slit domain S_2: sum over the boundary of delta_x P(0 <-> x) = 1,
//! with connectivities from the frontier transfer engine.
//!
//!     cargo run --release --example slit_contour

use fklab::engines::transfer::{connectivity_from, FrontierGraph};
use fklab::fk::{critical_point, BcKind, BoundaryPartition, MeasureSpec};
use fklab::geometry::build_slit_domain;
use fklab::parafermion::{boundary_identity, delta_bound, delta_coefficients, spin};

fn main() -> fklab::Result<()> {
    let s = build_slit_domain(2)?;
    let origin = s.origin().expect("slit origin");
    let bc = BoundaryPartition::for_domain(&s, BcKind::Dobrushin)?;
    let graph = FrontierGraph::from_domain(&s, &bc);
    println!("{:>5} {:>10} {:>14} {:>12} {:>10}", "q", "sum", "residual", "max delta", "bound C");
    for q in [1.0, 2.0, 2.9, 3.5] {
        let pc = critical_point(q)?;
        let sigma = spin(q)?.sigma;
        let phi = connectivity_from(&graph, &MeasureSpec::new(pc, q, BcKind::Dobrushin)?, origin)?;
        let id = boundary_identity(&s, sigma, &phi)?;
        let max = delta_coefficients(&s, sigma)?.iter().map(|d| d.delta.abs()).fold(0.0, f64::max);
        println!("{q:>5} {:>10.6} {:>14.3e} {max:>12.6} {:>10.6}", id.lhs, id.residual, delta_bound(sigma));
    }
    Ok(())
}
