//! Build every domain family from its JSON descriptor and print its size.
//!
//!     cargo run --example domains

use fklab::geometry::DomainDescriptor;

fn main() -> fklab::Result<()> {
    let descriptors = [
        r#"{"kind":"box","n":2}"#,
        r#"{"kind":"rect","width":3,"height":2}"#,
        r#"{"kind":"dobrushin","width":3,"height":3}"#,
        r#"{"kind":"dobrushin","width":4,"height":2,"markings":{"a":[4,2],"b":[0,0]}}"#,
        r#"{"kind":"slit","n":2}"#,
        r#"{"kind":"cover","n":1,"T":2}"#,
    ];
    println!("{:<72} {:>6} {:>6} {:>8} {:>8}", "descriptor", "sites", "edges", "corners", "interior");
    for s in descriptors {
        let desc: DomainDescriptor = serde_json::from_str(s)?;
        let d = desc.build()?;
        let corners = (0..d.num_corners() as u32).filter(|&c| d.is_included(c)).count();
        println!(
            "{:<72} {:>6} {:>6} {:>8} {:>8}",
            serde_json::to_string(&d.descriptor)?,
            d.num_sites(),
            d.num_edges(),
            corners,
            d.interior_vertices().len()
        );
    }
    Ok(())
}
