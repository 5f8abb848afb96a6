//! Sampler validity: long-run configuration histograms against exact enumeration.
//!
//! With `N` samples over `2^|E|` states the empirical total variation has a floor of
//! roughly `sqrt(tau 2^|E| / (2 pi N))` even for an exact sampler, `tau` being the
//! integrated autocorrelation time. Cluster moves at large q have `tau` several times that
//! of heat-bath sweeps, so the catalog keeps to domains with at most 7 random edges.

use crate::engines::exact::{ExactDistribution, DEFAULT_LIMIT};
use crate::engines::mc::{configuration_histogram, SamplerKind, Schedule};
use crate::error::Result;
use crate::fk::{critical_point, BcKind, BoundaryPartition, MeasureSpec};
use crate::geometry::{build_dobrushin_box, build_rect, build_slit_domain, Domain};

pub const TV_TOL: f64 = 0.02;

pub struct ValidityDomain {
    pub label: &'static str,
    pub domain: Domain,
    pub bc: BcKind,
}

/// Small domains with free and Dobrushin boundaries.
pub fn catalog() -> Result<Vec<ValidityDomain>> {
    Ok(vec![
        ValidityDomain { label: "rect_1x1", domain: build_rect(1, 1)?, bc: BcKind::Free },
        ValidityDomain { label: "rect_1x2", domain: build_rect(1, 2)?, bc: BcKind::Free },
        ValidityDomain { label: "dobrushin_2x1", domain: build_dobrushin_box(2, 1)?, bc: BcKind::Dobrushin },
    ])
}

/// The slit domain `S_1` (9 edges); needs a longer run than the catalog.
pub fn slit_domain() -> Result<ValidityDomain> {
    Ok(ValidityDomain { label: "slit_1", domain: build_slit_domain(1)?, bc: BcKind::Free })
}

#[derive(Clone, Debug)]
pub struct ValidityCase {
    pub label: &'static str,
    pub q: f64,
    pub p: f64,
    pub kind: SamplerKind,
    pub edges: usize,
    pub tv: f64,
}

impl ValidityCase {
    pub fn passed(&self) -> bool {
        self.tv <= TV_TOL
    }
}

pub fn tv_distance(d: &ValidityDomain, p: f64, q: f64, kind: SamplerKind, schedule: &Schedule, seed: u64) -> Result<f64> {
    let bc = BoundaryPartition::for_domain(&d.domain, d.bc)?;
    let spec = MeasureSpec::new(p, q, d.bc)?;
    let exact = ExactDistribution::new(&d.domain, &bc, &spec, DEFAULT_LIMIT)?;
    let hist = configuration_histogram(&d.domain, &bc, &spec, kind, schedule, seed)?;
    Ok(exact.total_variation(&hist))
}

/// Every catalog domain at `p in {0.3, p_c(q), 0.7}` for each `q`, with both samplers
/// where the cluster move applies.
pub fn run_catalog(qs: &[f64], schedule: &Schedule, seed: u64) -> Result<Vec<ValidityCase>> {
    let mut out = Vec::new();
    let domains = catalog()?;
    for &q in qs {
        let kinds: &[SamplerKind] =
            if q >= 1.0 { &[SamplerKind::HeatBath, SamplerKind::ChayesMachta] } else { &[SamplerKind::HeatBath] };
        for p in [0.3, critical_point(q)?, 0.7] {
            for d in &domains {
                for &kind in kinds {
                    let tv = tv_distance(d, p, q, kind, schedule, seed.wrapping_add(out.len() as u64))?;
                    out.push(ValidityCase { label: d.label, q, p, kind, edges: d.domain.num_edges(), tv });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_fits_the_histogram_budget() {
        for d in catalog().unwrap() {
            assert!(d.domain.num_edges() <= 7, "{}", d.label);
            assert!(d.domain.num_edges() >= 4, "{}", d.label);
        }
    }

    #[test]
    fn short_run_on_the_square() {
        let d = &catalog().unwrap()[0];
        let sch = Schedule { burn_in: 100, samples: 20_000, thin: 1, chains: 2 };
        for kind in [SamplerKind::HeatBath, SamplerKind::ChayesMachta] {
            assert!(tv_distance(d, 0.6, 2.5, kind, &sch, 3).unwrap() < 0.03);
        }
    }
}
