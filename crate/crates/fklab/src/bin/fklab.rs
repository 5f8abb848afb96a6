use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::Value;

use fklab::experiments::{self, ExperimentKind};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Verify,
    Crossing,
    Xi,
    Chi,
    Cover,
    Kappa,
    Scaling,
}

impl From<Command> for ExperimentKind {
    fn from(c: Command) -> Self {
        match c {
            Command::Verify => ExperimentKind::Verify,
            Command::Crossing => ExperimentKind::Crossing,
            Command::Xi => ExperimentKind::Xi,
            Command::Chi => ExperimentKind::Chi,
            Command::Cover => ExperimentKind::Cover,
            Command::Kappa => ExperimentKind::Kappa,
            Command::Scaling => ExperimentKind::Scaling,
        }
    }
}

/// Run an FK percolation experiment and write `<name>.csv` and `<name>.json`.
#[derive(Parser, Debug)]
#[command(version)]
struct Args {
    command: Command,
    /// JSON config file; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match &args.config {
        None => Value::Object(Default::default()),
        Some(path) => match std::fs::read_to_string(path).map_err(|e| e.to_string()).and_then(|s| {
            serde_json::from_str::<Value>(&s).map_err(|e| e.to_string())
        }) {
            Ok(v) => v,
            Err(e) => {
                eprintln!("fklab: cannot read config {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
    };
    let kind = ExperimentKind::from(args.command);
    let report = match experiments::run(kind, &config, args.seed) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("fklab {}: {e}", kind.name());
            return ExitCode::from(2);
        }
    };
    if let Err(e) = report.write(&args.out) {
        eprintln!("fklab: cannot write to {}: {e}", args.out.display());
        return ExitCode::from(2);
    }
    let failures = report.failures();
    for r in &failures {
        eprintln!("FAIL {} q={} p={} n={:?}: {} = {} (tolerance {:?})", r.experiment, r.q, r.p, r.n, r.quantity, r.value, r.tolerance);
    }
    let asserted = report.assertions().count();
    eprintln!(
        "{}: {} rows, {} assertions, {} failed{} ({:.1}s)",
        kind.name(),
        report.rows.len(),
        asserted,
        failures.len(),
        if report.exploratory { ", exploratory" } else { "" },
        report.runtime_secs
    );
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
