//! Crossing probabilities at the self-dual point.
//!
//! The rectangle `[0, n] x [0, n+1]` has its top and bottom rows wired (the sides the
//! crossing joins) and the two other sides free. Two readings of "wired on both sides"
//! are supported: two distinct classes (adopted) or one common class. Duality gives the
//! closed forms `1/(1+sqrt q)` and `sqrt q/(1+sqrt q)`; both equal 1/2 only at q = 1.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ExperimentReport, Row};
use crate::engines::exact::{ExactDistribution, DEFAULT_LIMIT};
use crate::engines::mc::{estimate, SamplerKind, Schedule};
use crate::error::Result;
use crate::fk::{clusters, critical_point, BcKind, BoundaryPartition, EdgeConfiguration, MeasureSpec};
use crate::geometry::{build_rect, Domain, Site};

pub const EXACT_TOL: f64 = 1e-12;

const NAME: &str = "crossing";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossingBc {
    /// Top and bottom are two different classes.
    Distinct,
    /// Top and bottom are wired to each other; the crossing must stay inside.
    Mutual,
}

impl CrossingBc {
    pub fn name(self) -> &'static str {
        match self {
            CrossingBc::Distinct => "distinct",
            CrossingBc::Mutual => "mutual",
        }
    }

    /// Self-dual crossing probability of this convention.
    pub fn closed_form(self, q: f64) -> f64 {
        match self {
            CrossingBc::Distinct => 1.0 / (1.0 + q.sqrt()),
            CrossingBc::Mutual => q.sqrt() / (1.0 + q.sqrt()),
        }
    }
}

/// `[0, width] x [0, height]` with its top and bottom rows as boundary classes.
pub struct CrossingDomain {
    pub domain: Domain,
    pub top: Vec<u32>,
    pub bottom: Vec<u32>,
}

impl CrossingDomain {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        let domain = build_rect(width, height)?;
        let row = |y: i32| -> Vec<u32> { (0..=width as i32).map(|x| domain.index[&Site::new(x, y)]).collect() };
        let (top, bottom) = (row(height as i32), row(0));
        Ok(CrossingDomain { domain, top, bottom })
    }

    pub fn partition(&self, bc: CrossingBc) -> BoundaryPartition {
        let n = self.domain.num_sites();
        match bc {
            CrossingBc::Distinct => BoundaryPartition::from_classes(n, &[self.top.clone(), self.bottom.clone()]),
            CrossingBc::Mutual => {
                let all: Vec<u32> = self.top.iter().chain(&self.bottom).copied().collect();
                BoundaryPartition::from_classes(n, &[all])
            }
        }
    }

    /// Open path from the top row to the bottom row inside the rectangle.
    pub fn crosses(&self, config: &EdgeConfiguration) -> bool {
        let sides = self.partition(CrossingBc::Distinct);
        clusters(&self.domain, config, &sides).connected(self.top[0], self.bottom[0])
    }

    pub fn exact(&self, q: f64, bc: CrossingBc) -> Result<f64> {
        let spec = MeasureSpec::new(critical_point(q)?, q, BcKind::Custom)?;
        let dist = ExactDistribution::new(&self.domain, &self.partition(bc), &spec, DEFAULT_LIMIT)?;
        Ok(dist.expectation(|c| f64::from(u8::from(self.crosses(c)))))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossingConfig {
    /// Adopted convention; the other one is reported alongside.
    pub convention: CrossingBc,
    pub exact_n: u32,
    pub exact_qs: Vec<f64>,
    pub mc_n: u32,
    pub mc_qs: Vec<f64>,
    pub square_n: u32,
    pub rect_n: u32,
    pub rect_q: f64,
    pub schedule: Schedule,
}

impl Default for CrossingConfig {
    fn default() -> Self {
        CrossingConfig {
            convention: CrossingBc::Distinct,
            exact_n: 2,
            exact_qs: vec![1.0, 2.0, 3.0],
            mc_n: 8,
            mc_qs: vec![1.0, 2.0],
            square_n: 8,
            rect_n: 4,
            rect_q: 1.5,
            schedule: Schedule { burn_in: 1000, samples: 20_000, thin: 1, chains: 4 },
        }
    }
}

/// The rectangle `R(4n, n) = [-4n, 4n] x [0, n]` wired on its top, left and right sides,
/// and the event that the origin reaches the top, left or right side of the window
/// `[-ceil(n/16), ceil(n/16)] x [0, ceil(n/4)]`.
pub struct RectangleEvent {
    pub domain: Domain,
    pub bc: BoundaryPartition,
    pub origin: u32,
    pub window: Vec<u32>,
}

impl RectangleEvent {
    pub fn new(n: u32) -> Result<Self> {
        let w = 8 * n as i32;
        let h = n as i32;
        let domain = build_rect(8 * n, n)?;
        let id = |x: i32, y: i32| domain.index[&Site::new(x, y)];
        let mut wired = Vec::new();
        for (x, y) in (0..=w).map(|x| (x, h)).chain((0..h).flat_map(|y| [(0, y), (w, y)])) {
            wired.push(id(x, y));
        }
        let bc = BoundaryPartition::from_classes(domain.num_sites(), &[wired]);
        let c = 4 * n as i32;
        let (a, b) = (n.div_ceil(16) as i32, n.div_ceil(4) as i32);
        let mut window: Vec<u32> = (-a..=a).map(|dx| id(c + dx, b)).collect();
        window.extend((0..b).flat_map(|y| [id(c - a, y), id(c + a, y)]));
        Ok(RectangleEvent { origin: id(c, 0), domain, bc, window })
    }

    pub fn occurs(&self, config: &EdgeConfiguration) -> bool {
        let mut uf = clusters(&self.domain, config, &self.bc);
        self.window.iter().any(|&x| uf.connected(self.origin, x))
    }

    pub fn bound(n: u32) -> f64 {
        1.0 / (16.0 * (n as f64).powi(3))
    }
}

pub fn run(cfg: &CrossingConfig, config: Value, seed: u64) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(NAME, config, seed);
    let adopted = cfg.convention;
    let other = match adopted {
        CrossingBc::Distinct => CrossingBc::Mutual,
        CrossingBc::Mutual => CrossingBc::Distinct,
    };
    rep.note(format!(
        "rectangle [0,n]x[0,n+1], top and bottom rows wired ({} classes adopted), left and right free",
        adopted.name()
    ));

    let n = cfg.exact_n;
    let rect = CrossingDomain::new(n, n + 1)?;
    for &q in &cfg.exact_qs {
        let pc = critical_point(q)?;
        for bc in [adopted, other] {
            let v = rect.exact(q, bc)?;
            let pre = bc.name();
            rep.push(Row::info(NAME, q, pc, Some(n), format!("{pre}:exact_crossing_probability"), v));
            rep.push(
                Row::info(NAME, q, pc, Some(n), format!("{pre}:exact_minus_closed_form"), (v - bc.closed_form(q)).abs())
                    .below(EXACT_TOL),
            );
            if bc == adopted {
                let dev = (v - 0.5).abs();
                rep.push(Row::info(NAME, q, pc, Some(n), format!("{pre}:exact_minus_half"), dev).below(EXACT_TOL));
            }
        }
    }

    let mc = |dom: &CrossingDomain, q: f64, bc: CrossingBc, stream: u64| -> Result<crate::engines::mc::Estimate> {
        let spec = MeasureSpec::new(critical_point(q)?, q, BcKind::Custom)?;
        estimate(&dom.domain, &dom.partition(bc), &spec, SamplerKind::ChayesMachta, &cfg.schedule, seed ^ stream, |c| {
            f64::from(u8::from(dom.crosses(c)))
        })
    };
    let n = cfg.mc_n;
    let rect = CrossingDomain::new(n, n + 1)?;
    let square = CrossingDomain::new(cfg.square_n, cfg.square_n)?;
    for (i, &q) in cfg.mc_qs.iter().enumerate() {
        let pc = critical_point(q)?;
        for bc in [adopted, other] {
            let pre = bc.name();
            let e = mc(&rect, q, bc, 2 * i as u64 + u64::from(bc == other) * 1000)?;
            let tol = 3.0 * e.stderr;
            let r = Row::info(NAME, q, pc, Some(n), format!("{pre}:mc_crossing_probability"), e.mean).with_stderr(e.stderr);
            rep.push(r);
            let off = e.mean - bc.closed_form(q);
            rep.push(
                Row::info(NAME, q, pc, Some(n), format!("{pre}:mc_minus_closed_form"), off)
                    .with_stderr(e.stderr)
                    .checked(tol, off.abs() <= tol),
            );
            let s = mc(&square, q, bc, 2 * i as u64 + 1 + u64::from(bc == other) * 1000)?;
            if bc == adopted {
                let off = e.mean - 0.5;
                rep.push(
                    Row::info(NAME, q, pc, Some(n), format!("{pre}:mc_minus_half"), off)
                        .with_stderr(e.stderr)
                        .checked(tol, off.abs() <= tol),
                );
                let off = s.mean - 0.5;
                let tol = 3.0 * s.stderr;
                rep.push(
                    Row::info(NAME, q, pc, Some(cfg.square_n), format!("{pre}:square_minus_half"), off)
                        .with_stderr(s.stderr)
                        .checked(tol, off >= -tol),
                );
            } else {
                rep.push(
                    Row::info(NAME, q, pc, Some(cfg.square_n), format!("{pre}:square_crossing_probability"), s.mean)
                        .with_stderr(s.stderr),
                );
            }
        }
    }

    let n = cfg.rect_n;
    let q = cfg.rect_q;
    let pc = critical_point(q)?;
    let ev = RectangleEvent::new(n)?;
    let spec = MeasureSpec::new(pc, q, BcKind::Custom)?;
    let e = estimate(&ev.domain, &ev.bc, &spec, SamplerKind::ChayesMachta, &cfg.schedule, seed ^ 0x5eed, |c| {
        f64::from(u8::from(ev.occurs(c)))
    })?;
    let bound = RectangleEvent::bound(n);
    rep.push(
        Row::info(NAME, q, pc, Some(n), "rectangle_event_probability", e.mean)
            .with_stderr(e.stderr)
            .checked(bound, e.mean >= bound),
    );
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_by_enumeration() {
        for (w, h) in [(1, 2), (2, 3)] {
            let r = CrossingDomain::new(w, h).unwrap();
            for q in [1.0, 2.0, 3.0, 0.5] {
                for bc in [CrossingBc::Distinct, CrossingBc::Mutual] {
                    let v = r.exact(q, bc).unwrap();
                    assert!((v - bc.closed_form(q)).abs() < 1e-12, "{w}x{h} q={q} {bc:?}: {v}");
                }
            }
        }
    }

    #[test]
    fn window_of_the_rectangle_event() {
        let ev = RectangleEvent::new(4).unwrap();
        // [-1, 1] x [0, 1] around (16, 0): top row of three plus the two side sites at y = 0
        assert_eq!(ev.window.len(), 5);
        assert_eq!(ev.domain.sites[ev.origin as usize], Site::new(16, 0));
        assert!(ev.occurs(&EdgeConfiguration::open(ev.domain.num_edges())));
        assert!(!ev.occurs(&EdgeConfiguration::closed(ev.domain.num_edges())));
    }
}
