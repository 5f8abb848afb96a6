//! Correlation length below criticality from the decay of `P(0 <-> (n, 0))`.
//!
//! The free-boundary box stands in for the infinite-volume free measure; by comparison
//! of boundary conditions its connectivities are lower bounds of the infinite-volume ones.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::fit::log_linear;
use super::{ExperimentReport, Row};
use crate::engines::mc::{estimate_many, Estimate, SamplerKind, Schedule};
use crate::error::{Error, Result};
use crate::fk::{clusters, critical_point, BcKind, BoundaryPartition, MeasureSpec};
use crate::geometry::{build_box, Site};

const NAME: &str = "xi";
/// Points whose relative error exceeds this are left out of the fit.
pub const MAX_REL_ERR: f64 = 0.5;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Grid {
    pub q: f64,
    pub ps: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationConfig {
    pub grids: Vec<Grid>,
    pub n_max: u32,
    /// Half-width of the box; its side `2 box_half` must be at least `4 n_max`.
    pub box_half: u32,
    pub schedule: Schedule,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        CorrelationConfig {
            grids: vec![Grid { q: 1.0, ps: vec![0.35, 0.42, 0.48] }, Grid { q: 2.0, ps: vec![0.40, 0.50, 0.57] }],
            n_max: 6,
            box_half: 12,
            schedule: Schedule { burn_in: 500, samples: 20_000, thin: 1, chains: 4 },
        }
    }
}

/// Connectivity estimates `P(0 <-> (n, 0))` for `n = 1..=n_max`, averaged over the four
/// lattice directions.
pub fn connectivities(box_half: u32, n_max: u32, q: f64, p: f64, schedule: &Schedule, seed: u64) -> Result<Vec<Estimate>> {
    if 2 * box_half < 4 * n_max {
        return Err(Error::InvalidParameter(format!("box side {} below 4 n_max = {}", 2 * box_half, 4 * n_max)));
    }
    let d = build_box(box_half)?;
    let bc = BoundaryPartition::free(d.num_sites());
    let spec = MeasureSpec::new(p, q, BcKind::Free)?;
    let o = d.index[&Site::new(0, 0)];
    let targets: Vec<[u32; 4]> = (1..=n_max as i32)
        .map(|n| [(n, 0), (-n, 0), (0, n), (0, -n)].map(|(x, y)| d.index[&Site::new(x, y)]))
        .collect();
    let kind = if q >= 1.0 { SamplerKind::ChayesMachta } else { SamplerKind::HeatBath };
    estimate_many(&d, &bc, &spec, kind, schedule, seed, |c| {
        let mut uf = clusters(&d, c, &bc);
        targets
            .iter()
            .map(|t| t.iter().filter(|&&x| uf.connected(o, x)).count() as f64 / 4.0)
            .collect()
    })
}

pub fn run(cfg: &CorrelationConfig, config: Value, seed: u64) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(NAME, config, seed);
    rep.note("free-boundary box proxy; its connectivities lower-bound the infinite-volume free ones");
    rep.note("xi_hat = 1 / rate, rate = minus the slope of log P(0 <-> (n,0)) against n");
    let mut stream = 0u64;
    for g in &cfg.grids {
        let pc = critical_point(g.q)?;
        let mut rates: Vec<(f64, f64, f64)> = Vec::new();
        for &p in &g.ps {
            if p >= pc {
                return Err(Error::InvalidParameter(format!("p = {p} is not below p_c({}) = {pc}", g.q)));
            }
            let est = connectivities(cfg.box_half, cfg.n_max, g.q, p, &cfg.schedule, seed.wrapping_add(stream))?;
            stream += 1;
            for (i, e) in est.iter().enumerate() {
                rep.push(Row::info(NAME, g.q, p, Some(i as u32 + 1), "connectivity", e.mean).with_stderr(e.stderr));
            }
            // supermultiplicativity
            for n in 1..cfg.n_max as usize {
                for m in n..=cfg.n_max as usize - n {
                    let (a, b, c) = (est[n - 1], est[m - 1], est[n + m - 1]);
                    let gap = c.mean - a.mean * b.mean;
                    let se = (c.stderr.powi(2) + (b.mean * a.stderr).powi(2) + (a.mean * b.stderr).powi(2)).sqrt();
                    rep.push(
                        Row::info(NAME, g.q, p, Some((n + m) as u32), format!("supermultiplicativity_gap({n},{m})"), gap)
                            .with_stderr(se)
                            .checked(3.0 * se, gap >= -3.0 * se),
                    );
                }
            }
            let x: Vec<f64> = (1..=cfg.n_max).map(f64::from).collect();
            let y: Vec<f64> = est.iter().map(|e| e.mean).collect();
            let se: Vec<f64> = est.iter().map(|e| e.stderr).collect();
            match log_linear(&x, &y, &se, MAX_REL_ERR) {
                Some(f) => {
                    let rate = -f.slope;
                    rep.push(Row::info(NAME, g.q, p, None, "decay_rate", rate).with_stderr(f.slope_stderr));
                    rep.push(Row::info(NAME, g.q, p, None, "xi_hat", 1.0 / rate).with_stderr(f.slope_stderr / (rate * rate)));
                    rep.push(Row::info(NAME, g.q, p, None, "fit_points", f.points as f64));
                    rates.push((p, rate, f.slope_stderr));
                }
                None => {
                    rep.push(Row::info(NAME, g.q, p, None, "decay_rate_fit_available", 0.0).checked(1.0, false));
                }
            }
        }
        // xi increasing toward p_c: the decay rate must drop by more than its combined error
        for w in rates.windows(2) {
            let ((_, r0, s0), (p1, r1, s1)) = (w[0], w[1]);
            let drop = r0 - r1;
            let se = (s0 * s0 + s1 * s1).sqrt();
            rep.push(
                Row::info(NAME, g.q, p1, None, "decay_rate_drop", drop)
                    .with_stderr(se)
                    .checked(se, drop > se),
            );
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::exact::{enumerate_expectation, DEFAULT_LIMIT};
    use crate::geometry::build_rect;

    /// At q = 1 the connection events are increasing, so FKG for the product measure gives
    /// P(0 <-> 2) >= P(0 <-> 1) P(1 <-> 2) exactly.
    #[test]
    fn percolation_supermultiplicativity_by_enumeration() {
        let d = build_rect(2, 2).unwrap();
        let bc = BoundaryPartition::free(d.num_sites());
        let id = |x, y| d.index[&Site::new(x, y)];
        for p in [0.2, 0.5, 0.8] {
            let spec = MeasureSpec::new(p, 1.0, BcKind::Free).unwrap();
            let conn = |a: u32, b: u32| {
                enumerate_expectation(&d, &bc, &spec, DEFAULT_LIMIT, |c| f64::from(u8::from(clusters(&d, c, &bc).connected(a, b))))
                    .unwrap()
            };
            let both = enumerate_expectation(&d, &bc, &spec, DEFAULT_LIMIT, |c| {
                let mut uf = clusters(&d, c, &bc);
                f64::from(u8::from(uf.connected(id(0, 1), id(1, 1)) && uf.connected(id(1, 1), id(2, 1))))
            })
            .unwrap();
            let (a, b, c) = (conn(id(0, 1), id(1, 1)), conn(id(1, 1), id(2, 1)), conn(id(0, 1), id(2, 1)));
            assert!(both >= a * b - 1e-15);
            assert!(c >= both - 1e-15);
        }
    }

    #[test]
    fn small_box_is_rejected() {
        let cfg = Schedule { burn_in: 1, samples: 1, thin: 1, chains: 1 };
        assert!(connectivities(3, 2, 1.0, 0.3, &cfg, 0).is_err());
    }
}
