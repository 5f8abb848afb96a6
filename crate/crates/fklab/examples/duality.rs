//! Planar duality: the complement of a free-boundary configuration is distributed as the
//! FK(p*, q) measure on the dual graph.
//!
//!     cargo run --example duality

use fklab::engines::exact::{duality_deviation, DEFAULT_LIMIT};
use fklab::fk::{critical_point, dual_parameters};
use fklab::geometry::build_rect;

fn main() -> fklab::Result<()> {
    let d = build_rect(2, 2)?;
    for q in [1.0, 2.0, 3.0] {
        for p in [0.3, critical_point(q)?, 0.7] {
            let (ps, _) = dual_parameters(p, q)?;
            println!("q = {q}, p = {p:.4}, p* = {ps:.4}: max deviation {:.2e}", duality_deviation(&d, p, q, DEFAULT_LIMIT)?);
        }
    }
    Ok(())
}
