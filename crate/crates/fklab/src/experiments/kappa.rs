//! Predicted SLE parameter of the interfaces, report only.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ExperimentReport, Row};
use crate::error::Result;
use crate::fk::critical_point;
use crate::parafermion::{predicted_kappa, spin_from_arccos};

const NAME: &str = "kappa";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KappaConfig {
    pub qs: Vec<f64>,
}

impl Default for KappaConfig {
    fn default() -> Self {
        KappaConfig { qs: vec![0.0, 0.5, 1.0, 2.0, 3.0, 4.0] }
    }
}

/// Closed-form anchors: q = 0 gives 8, q = 1 gives 6, q = 4 gives 4.
const ANCHORS: [(f64, f64); 3] = [(0.0, 8.0), (1.0, 6.0), (4.0, 4.0)];

pub fn run(cfg: &KappaConfig, config: Value, seed: u64) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(NAME, config, seed);
    for &q in &cfg.qs {
        let k = predicted_kappa(q)?;
        let pc = if q > 0.0 { critical_point(q)? } else { 0.0 };
        rep.push(Row::info(NAME, q, pc, None, "kappa", k));
        if let Some(&(_, expect)) = ANCHORS.iter().find(|(a, _)| *a == q) {
            rep.push(Row::info(NAME, q, pc, None, format!("kappa_minus_{expect}"), (k - expect).abs()).below(1e-12));
        }
        rep.push(Row::info(NAME, q, pc, None, "sigma", spin_from_arccos(q)));
    }
    Ok(rep)
}
