//! Exact crossing probabilities at the self-dual point for both readings of the wired
//! boundary, compared with the duality closed forms.
//!
//!     cargo run --release --example crossing

use fklab::experiments::crossing::{CrossingBc, CrossingDomain};

fn main() -> fklab::Result<()> {
    let r = CrossingDomain::new(2, 3)?;
    println!("[0,2] x [0,3], top and bottom rows wired");
    println!("{:>5} {:>10} {:>12} {:>10} {:>12}", "q", "distinct", "1/(1+rq)", "mutual", "rq/(1+rq)");
    for q in [0.5, 1.0, 2.0, 3.0, 4.0] {
        let (a, b) = (r.exact(q, CrossingBc::Distinct)?, r.exact(q, CrossingBc::Mutual)?);
        println!(
            "{q:>5} {a:>10.6} {:>12.6} {b:>10.6} {:>12.6}",
            CrossingBc::Distinct.closed_form(q),
            CrossingBc::Mutual.closed_form(q)
        );
    }
    Ok(())
}
