//! Partial susceptibility sums and per-distance connectivities at criticality.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::fit::{log_linear, weighted_linear};
use super::{ExperimentReport, Row};
use crate::engines::mc::{estimate_many, Estimate, SamplerKind, Schedule};
use crate::error::{Error, Result};
use crate::fk::{clusters, critical_point, BcKind, BoundaryPartition, MeasureSpec};
use crate::geometry::{build_box, Site};

const NAME: &str = "chi";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SusceptibilityConfig {
    pub qs: Vec<f64>,
    pub r_max: u32,
    /// Half-width of the free-boundary box.
    pub box_half: u32,
    pub schedule: Schedule,
}

impl Default for SusceptibilityConfig {
    fn default() -> Self {
        SusceptibilityConfig {
            qs: vec![1.0, 2.0],
            r_max: 16,
            box_half: 32,
            schedule: Schedule { burn_in: 500, samples: 5_000, thin: 1, chains: 4 },
        }
    }
}

pub struct ShellData {
    /// S(R) for R = 1..=r_max.
    pub partial_sums: Vec<Estimate>,
    /// Mean of P(0 <-> x) over the shell max(|x1|, |x2|) = r, r = 1..=r_max.
    pub shells: Vec<Estimate>,
}

pub fn shell_connectivities(box_half: u32, r_max: u32, q: f64, schedule: &Schedule, seed: u64) -> Result<ShellData> {
    if r_max > box_half {
        return Err(Error::InvalidParameter(format!("r_max = {r_max} exceeds the box half-width {box_half}")));
    }
    let d = build_box(box_half)?;
    let bc = BoundaryPartition::free(d.num_sites());
    let p = critical_point(q)?;
    let spec = MeasureSpec::new(p, q, BcKind::Free)?;
    let o = d.index[&Site::new(0, 0)];
    let radius: Vec<usize> = d.sites.iter().map(|s| s.x.unsigned_abs().max(s.y.unsigned_abs()) as usize).collect();
    let r_max = r_max as usize;
    let kind = if q >= 1.0 { SamplerKind::ChayesMachta } else { SamplerKind::HeatBath };
    let est = estimate_many(&d, &bc, &spec, kind, schedule, seed, |c| {
        let mut uf = clusters(&d, c, &bc);
        let root = uf.find(o);
        let mut counts = vec![0.0; r_max + 1];
        for (x, &r) in radius.iter().enumerate() {
            if r <= r_max && uf.find(x as u32) == root {
                counts[r] += 1.0;
            }
        }
        let mut out = Vec::with_capacity(2 * r_max);
        let mut s = counts[0];
        for &c in &counts[1..] {
            s += c;
            out.push(s);
        }
        for (r, &c) in counts.iter().enumerate().skip(1) {
            out.push(c / (8 * r) as f64);
        }
        out
    })?;
    let (partial_sums, shells) = est.split_at(r_max);
    Ok(ShellData { partial_sums: partial_sums.to_vec(), shells: shells.to_vec() })
}

pub fn run(cfg: &SusceptibilityConfig, config: Value, seed: u64) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(NAME, config, seed);
    rep.note("shells are max(|x1|,|x2|) = r; fits use r = 1..r_max with inverse-variance weights");
    for (k, &q) in cfg.qs.iter().enumerate() {
        if !(1.0..=4.0).contains(&q) {
            return Err(Error::InvalidParameter(format!("q = {q} outside [1, 4]")));
        }
        let p = critical_point(q)?;
        let data = shell_connectivities(cfg.box_half, cfg.r_max, q, &cfg.schedule, seed.wrapping_add(k as u64))?;
        for (i, (s, c)) in data.partial_sums.iter().zip(&data.shells).enumerate() {
            let r = i as u32 + 1;
            rep.push(Row::info(NAME, q, p, Some(r), "partial_sum", s.mean).with_stderr(s.stderr));
            rep.push(Row::info(NAME, q, p, Some(r), "shell_connectivity", c.mean).with_stderr(c.stderr));
        }
        // monotonicity: every shell adds a positive amount
        let min_step = data
            .partial_sums
            .windows(2)
            .map(|w| w[1].mean - w[0].mean)
            .fold(f64::INFINITY, f64::min);
        rep.push(Row::info(NAME, q, p, Some(cfg.r_max), "min_partial_sum_increment", min_step).above(0.0));

        // S(R) against log R
        let r: Vec<f64> = (1..=cfg.r_max).map(f64::from).collect();
        let log_r: Vec<f64> = r.iter().map(|r| r.ln()).collect();
        let s: Vec<f64> = data.partial_sums.iter().map(|e| e.mean).collect();
        let w: Vec<f64> = data.partial_sums.iter().map(|e| 1.0 / e.stderr.max(1e-9).powi(2)).collect();
        if let Some(f) = weighted_linear(&log_r, &s, &w) {
            rep.push(
                Row::info(NAME, q, p, Some(cfg.r_max), "log_growth_slope", f.slope)
                    .with_stderr(f.slope_stderr)
                    .checked(3.0 * f.slope_stderr, f.slope > 3.0 * f.slope_stderr),
            );
        }

        // power law against exponential decay of the shell connectivities
        let y: Vec<f64> = data.shells.iter().map(|e| e.mean).collect();
        let se: Vec<f64> = data.shells.iter().map(|e| e.stderr).collect();
        let power = log_linear(&log_r, &y, &se, 0.5);
        let expo = log_linear(&r, &y, &se, 0.5);
        match (power, expo) {
            (Some(pw), Some(ex)) => {
                let alpha = -pw.slope;
                rep.push(
                    Row::info(NAME, q, p, Some(cfg.r_max), "alpha_hat", alpha)
                        .with_stderr(pw.slope_stderr)
                        .checked(0.0, alpha.is_finite() && alpha > 0.0),
                );
                rep.push(Row::info(NAME, q, p, Some(cfg.r_max), "power_law_chi2", pw.rss));
                rep.push(Row::info(NAME, q, p, Some(cfg.r_max), "exponential_chi2", ex.rss));
                rep.push(Row::info(NAME, q, p, Some(cfg.r_max), "exponential_xi_hat", -1.0 / ex.slope));
                // equal parameter counts, so AIC reduces to comparing chi squared
                let margin = ex.rss - pw.rss;
                rep.push(Row::info(NAME, q, p, Some(cfg.r_max), "chi2_exponential_minus_power", margin).checked(0.0, margin >= 0.0));
            }
            _ => rep.push(Row::info(NAME, q, p, Some(cfg.r_max), "fits_available", 0.0).checked(1.0, false)),
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_sums_are_consistent() {
        let sch = Schedule { burn_in: 10, samples: 50, thin: 1, chains: 1 };
        let d = shell_connectivities(3, 3, 1.0, &sch, 4).unwrap();
        for r in 0..3 {
            let prev = if r == 0 { 1.0 } else { d.partial_sums[r - 1].mean };
            let step = d.shells[r].mean * (8 * (r + 1)) as f64;
            assert!((d.partial_sums[r].mean - prev - step).abs() < 1e-9);
        }
        assert!(shell_connectivities(3, 4, 1.0, &sch, 4).is_err());
    }
}
