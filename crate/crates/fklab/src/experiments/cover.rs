//! Contour identity and level decay on the truncated universal cover.
//!
//! The truncated graph is itself a degenerate Dobrushin domain, so the identity holds
//! exactly on it once the sites cut off by the level truncation are counted as boundary.
//! The identity over the genuine boundary `|x1| = n` or `|x2| = n` differs from 1 by the
//! contribution of those truncation sites, which the level decay bound controls.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ExperimentReport, Row};
use crate::engines::mc::{estimate_many, SamplerKind, Schedule};
use crate::engines::transfer::{connectivity_from, FrontierGraph};
use crate::error::{Error, Result};
use crate::fk::{clusters, critical_point, BcKind, BoundaryPartition, MeasureSpec};
use crate::geometry::{build_universal_cover, Domain, Slot};
use crate::parafermion::{delta_coefficients, spin, DeltaCoefficient};

const NAME: &str = "cover";
pub const EXACT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverConfig {
    pub qs: Vec<f64>,
    pub n: u32,
    pub t: u32,
    /// Defaults to p_c(q).
    pub p: Option<f64>,
    pub schedule: Schedule,
}

impl Default for CoverConfig {
    fn default() -> Self {
        CoverConfig {
            qs: vec![2.0, 3.5],
            n: 1,
            t: 3,
            p: None,
            schedule: Schedule { burn_in: 1000, samples: 25_000, thin: 1, chains: 4 },
        }
    }
}

/// `1 - (1 - p)^n`: bound on the probability of climbing one level.
pub fn level_ratio(p: f64, n: u32) -> f64 {
    1.0 - (1.0 - p).powi(n as i32)
}

/// Whether site `x` lost an edge to the level truncation.
pub fn is_truncation_site(d: &Domain, x: u32) -> bool {
    let Some(t) = (match d.descriptor {
        crate::geometry::DomainDescriptor::Cover { t, .. } => Some(t as i32),
        _ => None,
    }) else {
        return false;
    };
    let s = d.sites[x as usize];
    let slots = &d.slots[x as usize];
    // east slot of (0, y<0, T) and west slot of (1, y<0, -T) lead out of the level range
    (s.x == 0 && s.y < 0 && s.z == t && slots[0] == Slot::Missing)
        || (s.x == 1 && s.y < 0 && s.z == -t && slots[2] == Slot::Missing)
}

pub struct CoverIdentity {
    pub deltas: Vec<DeltaCoefficient>,
    /// Indices into `deltas` of the genuine boundary sites.
    pub genuine: Vec<usize>,
    pub truncation: Vec<usize>,
    /// sum over truncation sites of |delta_x| (1 - (1-p)^n)^{|x3|}.
    pub truncation_bound: f64,
}

impl CoverIdentity {
    pub fn new(d: &Domain, sigma: f64, p: f64, n: u32) -> Result<Self> {
        let deltas = delta_coefficients(d, sigma)?;
        let (truncation, genuine): (Vec<usize>, Vec<usize>) =
            (0..deltas.len()).partition(|&i| is_truncation_site(d, deltas[i].x));
        let rho = level_ratio(p, n);
        let truncation_bound = truncation
            .iter()
            .map(|&i| deltas[i].delta.abs() * rho.powi(d.sites[deltas[i].x as usize].z.abs()))
            .sum();
        Ok(CoverIdentity { deltas, genuine, truncation, truncation_bound })
    }

    pub fn genuine_sum(&self, mut phi: impl FnMut(u32) -> f64) -> f64 {
        self.genuine.iter().map(|&i| self.deltas[i].delta * phi(self.deltas[i].x)).sum()
    }

    pub fn full_sum(&self, mut phi: impl FnMut(u32) -> f64) -> f64 {
        self.deltas.iter().map(|d| d.delta * phi(d.x)).sum()
    }
}

fn exact_connectivity(d: &Domain, p: f64, q: f64) -> Result<Vec<f64>> {
    let bc = BoundaryPartition::for_domain(d, BcKind::Dobrushin)?;
    let spec = MeasureSpec::new(p, q, BcKind::Dobrushin)?;
    connectivity_from(&FrontierGraph::from_domain(d, &bc), &spec, d.origin().expect("cover origin"))
}

pub fn run(cfg: &CoverConfig, config: Value, seed: u64) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(NAME, config, seed);
    rep.note("genuine boundary: |x1| = n or |x2| = n; truncation sites: cut-crossing edge beyond level T removed");
    let d = build_universal_cover(cfg.n, cfg.t)?;
    let origin = d.origin().expect("cover origin");
    let bc = BoundaryPartition::for_domain(&d, BcKind::Dobrushin)?;
    for (k, &q) in cfg.qs.iter().enumerate() {
        if q < 1.0 {
            return Err(Error::Unsupported(format!("the level decay bound needs q >= 1, got {q}")));
        }
        let p = match cfg.p {
            Some(p) => p,
            None => critical_point(q)?,
        };
        let sigma = spin(q)?.sigma;
        let (n, t) = (cfg.n, cfg.t);
        let id = CoverIdentity::new(&d, sigma, p, n)?;
        rep.push(Row::info(NAME, q, p, Some(n), "truncation_bound", id.truncation_bound));

        // exact oracle by the frontier transfer
        let phi = exact_connectivity(&d, p, q)?;
        let full = id.full_sum(|x| phi[x as usize]);
        rep.push(Row::info(NAME, q, p, Some(n), "exact_truncated_identity_residual", (full - 1.0).abs()).below(EXACT_TOL));
        let genuine = id.genuine_sum(|x| phi[x as usize]);
        let r = (genuine - 1.0).abs();
        rep.push(Row::info(NAME, q, p, Some(n), "exact_genuine_residual", r).checked(id.truncation_bound, r <= id.truncation_bound));
        let d1 = build_universal_cover(n, t + 1)?;
        let id1 = CoverIdentity::new(&d1, sigma, p, n)?;
        let phi1 = exact_connectivity(&d1, p, q)?;
        let shift = (id1.genuine_sum(|x| phi1[x as usize]) - genuine).abs();
        rep.push(Row::info(NAME, q, p, Some(n), "exact_t_sensitivity", shift).checked(id.truncation_bound, shift <= id.truncation_bound));

        // Monte Carlo
        let spec = MeasureSpec::new(p, q, BcKind::Dobrushin)?;
        let probes: Vec<u32> = (0..d.num_sites() as u32).filter(|&x| d.sites[x as usize].z != 0).collect();
        let est = estimate_many(&d, &bc, &spec, SamplerKind::HeatBath, &cfg.schedule, seed.wrapping_add(k as u64), |c| {
            let mut uf = clusters(&d, c, &bc);
            let mut conn = |x: u32| f64::from(u8::from(uf.connected(origin, x)));
            let mut out = vec![id.genuine_sum(&mut conn), id.full_sum(&mut conn)];
            out.extend(probes.iter().map(|&x| conn(x)));
            out
        })?;
        let (g, f) = (est[0], est[1]);
        let tol = 3.0 * g.stderr + id.truncation_bound;
        rep.push(
            Row::info(NAME, q, p, Some(n), "mc_genuine_residual", (g.mean - 1.0).abs())
                .with_stderr(g.stderr)
                .checked(tol, (g.mean - 1.0).abs() <= tol),
        );
        let tol = 3.0 * f.stderr;
        rep.push(
            Row::info(NAME, q, p, Some(n), "mc_truncated_identity_residual", (f.mean - 1.0).abs())
                .with_stderr(f.stderr)
                .checked(tol, (f.mean - 1.0).abs() <= tol),
        );
        let rho = level_ratio(p, n);
        for level in 1..=t as i32 {
            // worst probe on this level: estimate minus three standard errors against the bound
            let (worst, se) = probes
                .iter()
                .zip(&est[2..])
                .filter(|(x, _)| d.sites[**x as usize].z.abs() == level)
                .map(|(_, e)| (e.mean - 3.0 * e.stderr, e.stderr))
                .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a });
            let bound = rho.powi(level);
            rep.push(
                Row::info(NAME, q, p, Some(n), format!("level_{level}_max_connectivity_minus_3se"), worst)
                    .with_stderr(se)
                    .checked(bound, worst <= bound),
            );
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_sites_of_small_cover() {
        let d = build_universal_cover(1, 1).unwrap();
        let t: Vec<_> = (0..d.num_sites() as u32).filter(|&x| is_truncation_site(&d, x)).map(|x| d.sites[x as usize]).collect();
        assert_eq!(t.len(), 2);
        assert!(t.iter().any(|s| (s.x, s.y, s.z) == (0, -1, 1)));
        assert!(t.iter().any(|s| (s.x, s.y, s.z) == (1, -1, -1)));
    }

    #[test]
    fn exact_identity_on_truncated_cover() {
        for (t, q) in [(1, 2.0), (2, 3.5), (2, 4.0)] {
            let d = build_universal_cover(1, t).unwrap();
            let p = critical_point(q).unwrap();
            let id = CoverIdentity::new(&d, spin(q).unwrap().sigma, p, 1).unwrap();
            let phi = exact_connectivity(&d, p, q).unwrap();
            assert!((id.full_sum(|x| phi[x as usize]) - 1.0).abs() < 1e-12);
            assert!((id.genuine_sum(|x| phi[x as usize]) - 1.0).abs() <= id.truncation_bound);
        }
    }
}
