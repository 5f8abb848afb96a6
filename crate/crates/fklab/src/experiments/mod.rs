//! Named experiments behind the `fklab` command line. Each one takes a JSON config and a
//! seed and returns an [`ExperimentReport`] whose rows follow the fixed CSV schema.

use std::fs::File;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub mod correlation;
pub mod cover;
pub mod crossing;
pub mod fit;
pub mod kappa;
pub mod scaling;
pub mod susceptibility;
pub mod verify;

/// One CSV record. Rows without a tolerance are informational.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: String,
    pub q: f64,
    pub p: f64,
    pub n: Option<u32>,
    pub quantity: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
}

impl Row {
    pub fn info(experiment: &str, q: f64, p: f64, n: Option<u32>, quantity: impl Into<String>, value: f64) -> Self {
        Row {
            experiment: experiment.to_string(),
            q,
            p,
            n,
            quantity: quantity.into(),
            value,
            stderr: None,
            tolerance: None,
            pass: None,
        }
    }

    pub fn with_stderr(mut self, stderr: f64) -> Self {
        self.stderr = Some(stderr);
        self
    }

    /// Attaches the tolerance the assertion was checked against and its outcome.
    pub fn checked(mut self, tolerance: f64, pass: bool) -> Self {
        self.tolerance = Some(tolerance);
        self.pass = Some(pass);
        self
    }

    /// `value < tolerance`.
    pub fn below(self, tolerance: f64) -> Self {
        let pass = self.value < tolerance;
        self.checked(tolerance, pass)
    }

    /// `value > tolerance`.
    pub fn above(self, tolerance: f64) -> Self {
        let pass = self.value > tolerance;
        self.checked(tolerance, pass)
    }

    pub fn is_assertion(&self) -> bool {
        self.pass.is_some()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: Value,
    pub seed: u64,
    pub exploratory: bool,
    pub rows: Vec<Row>,
    pub notes: Vec<String>,
    pub runtime_secs: f64,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: Value, seed: u64) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            config,
            seed,
            exploratory: false,
            rows: Vec::new(),
            notes: Vec::new(),
            runtime_secs: 0.0,
        }
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn assertions(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.is_assertion())
    }

    pub fn failures(&self) -> Vec<&Row> {
        self.assertions().filter(|r| r.pass == Some(false)).collect()
    }

    /// Exploratory reports never fail.
    pub fn passed(&self) -> bool {
        self.exploratory || self.failures().is_empty()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<experiment>.csv` and `<experiment>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(File::create(dir.join(format!("{}.csv", self.experiment)))?)?;
        serde_json::to_writer_pretty(File::create(dir.join(format!("{}.json", self.experiment)))?, self)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Verify,
    Crossing,
    Xi,
    Chi,
    Cover,
    Kappa,
    Scaling,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Verify,
        ExperimentKind::Crossing,
        ExperimentKind::Xi,
        ExperimentKind::Chi,
        ExperimentKind::Cover,
        ExperimentKind::Kappa,
        ExperimentKind::Scaling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Verify => "verify",
            ExperimentKind::Crossing => "crossing",
            ExperimentKind::Xi => "xi",
            ExperimentKind::Chi => "chi",
            ExperimentKind::Cover => "cover",
            ExperimentKind::Kappa => "kappa",
            ExperimentKind::Scaling => "scaling",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment {s}")))
    }
}

fn parse<T: for<'de> Deserialize<'de> + Serialize>(config: &Value) -> Result<(T, Value)> {
    let cfg: T = serde_json::from_value(config.clone())?;
    let full = serde_json::to_value(&cfg)?;
    Ok((cfg, full))
}

/// Runs one experiment. Missing config fields take their defaults; the report embeds the
/// completed config so that the run can be replayed.
pub fn run(kind: ExperimentKind, config: &Value, seed: u64) -> Result<ExperimentReport> {
    let t0 = Instant::now();
    let mut report = match kind {
        ExperimentKind::Verify => {
            let (c, v) = parse::<verify::VerifyConfig>(config)?;
            verify::run(&c, v, seed)?
        }
        ExperimentKind::Crossing => {
            let (c, v) = parse::<crossing::CrossingConfig>(config)?;
            crossing::run(&c, v, seed)?
        }
        ExperimentKind::Xi => {
            let (c, v) = parse::<correlation::CorrelationConfig>(config)?;
            correlation::run(&c, v, seed)?
        }
        ExperimentKind::Chi => {
            let (c, v) = parse::<susceptibility::SusceptibilityConfig>(config)?;
            susceptibility::run(&c, v, seed)?
        }
        ExperimentKind::Cover => {
            let (c, v) = parse::<cover::CoverConfig>(config)?;
            cover::run(&c, v, seed)?
        }
        ExperimentKind::Kappa => {
            let (c, v) = parse::<kappa::KappaConfig>(config)?;
            kappa::run(&c, v, seed)?
        }
        ExperimentKind::Scaling => {
            let (c, v) = parse::<scaling::ScalingConfig>(config)?;
            scaling::run(&c, v, seed)?
        }
    };
    report.runtime_secs = t0.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_schema() {
        let mut r = ExperimentReport::new("demo", Value::Null, 1);
        r.push(Row::info("demo", 2.0, 0.5, Some(3), "x", 1.5));
        r.push(Row::info("demo", 2.0, 0.5, None, "y", 1e-13).with_stderr(0.0).below(1e-12));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "experiment,q,p,n,quantity,value,stderr,tolerance,pass");
        assert_eq!(lines.next().unwrap(), "demo,2.0,0.5,3,x,1.5,,,");
        assert_eq!(lines.next().unwrap(), "demo,2.0,0.5,,y,1e-13,0.0,1e-12,true");
        assert!(r.passed());
        r.push(Row::info("demo", 2.0, 0.5, None, "z", 1.0).above(2.0));
        assert!(!r.passed());
        r.exploratory = true;
        assert!(r.passed());
    }

    #[test]
    fn kinds_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("nope".parse::<ExperimentKind>().is_err());
    }
}
