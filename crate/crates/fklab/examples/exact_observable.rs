//! Exact parafermionic observable on a Dobrushin box by enumeration, written as CSV.
//!
//!     cargo run --example exact_observable -- [q] [out.csv]

use fklab::engines::exact::DEFAULT_LIMIT;
use fklab::fk::{critical_point, BcKind, BoundaryPartition};
use fklab::geometry::build_dobrushin_box;
use fklab::parafermion::{boundary_law_deviation, exact_field, max_local_residual, spin};

fn main() -> fklab::Result<()> {
    let mut args = std::env::args().skip(1);
    let q: f64 = args.next().map_or(2.0, |s| s.parse().expect("q"));
    let out = args.next().unwrap_or_else(|| std::env::temp_dir().join("fklab_field.csv").display().to_string());
    let d = build_dobrushin_box(3, 3)?;
    let pc = critical_point(q)?;
    let sigma = spin(q)?.sigma;
    let field = exact_field(&d, pc, q, DEFAULT_LIMIT)?;
    println!("q = {q}, p_c = {pc:.6}, sigma = {sigma:.6}");
    println!("max local residual at p_c: {:.3e}", max_local_residual(&d, &field));
    let off = exact_field(&d, pc - 0.1, q, DEFAULT_LIMIT)?;
    println!("max local residual at p_c - 0.1: {:.3e}", max_local_residual(&d, &off));

    let bc = BoundaryPartition::for_domain(&d, BcKind::Dobrushin)?;
    let tally = fklab::engines::exact::PathTally::new(&d, &bc, DEFAULT_LIMIT)?;
    println!("boundary law deviation: {:.3e}", boundary_law_deviation(&d, &field, sigma, &tally.connectivity(pc, q)));
    field.write_csv(&d, std::fs::File::create(&out)?)?;
    println!("wrote {out}");
    Ok(())
}
