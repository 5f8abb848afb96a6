//! Run a named experiment in-process with a small config and print its rows.
//!
//!     cargo run --release --example experiment -- xi '{"grids":[{"q":1.0,"ps":[0.4,0.45]}],"n_max":4,"box_half":8}'

use fklab::experiments::{run, ExperimentKind};

fn main() -> fklab::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: ExperimentKind = args.next().unwrap_or_else(|| "kappa".into()).parse()?;
    let config: serde_json::Value = serde_json::from_str(&args.next().unwrap_or_else(|| "{}".into()))?;
    let report = run(kind, &config, 1)?;
    report.write_csv(std::io::stdout())?;
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    eprintln!("passed: {} ({:.1}s)", report.passed(), report.runtime_secs);
    Ok(())
}
