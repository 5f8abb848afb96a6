//! Loop representation on the medial graph, exploration path and windings.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fk::EdgeConfiguration;
use crate::geometry::{Domain, Slot, NONE};

/// Signed rotation in quarter turns (counterclockwise positive).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Winding {
    pub quarter_turns: i32,
}

impl Winding {
    pub fn radians(self) -> f64 {
        self.quarter_turns as f64 * std::f64::consts::FRAC_PI_2
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopConfiguration {
    pub loops: Vec<Vec<u32>>,
    /// Corners from `e_a` to `e_b`; empty for domains without marked points.
    pub exploration_path: Vec<u32>,
    /// ℓ(omega): number of closed loops.
    pub loop_count: usize,
}

/// The exploration path `e_a -> e_b`.
pub fn exploration_path(domain: &Domain, config: &EdgeConfiguration) -> Vec<u32> {
    let (Some(ea), Some(eb)) = (domain.medial.e_a, domain.medial.e_b) else {
        return Vec::new();
    };
    let mut path = vec![ea];
    let mut c = ea;
    while c != eb {
        c = domain.next(c, |e| config.is_open(e as usize));
        assert!(c != NONE, "exploration path left the domain");
        path.push(c);
    }
    path
}

/// Winding from each path corner to the last one.
pub fn windings_to_end(domain: &Domain, path: &[u32]) -> Vec<i32> {
    let mut w = vec![0; path.len()];
    for i in (0..path.len().saturating_sub(1)).rev() {
        w[i] = w[i + 1] + domain.turn(path[i], path[i + 1]);
    }
    w
}

pub fn loops_of(domain: &Domain, config: &EdgeConfiguration) -> LoopConfiguration {
    let path = exploration_path(domain, config);
    let mut seen = vec![false; domain.num_corners()];
    for &c in &path {
        seen[c as usize] = true;
    }
    let mut loops = Vec::new();
    for start in 0..domain.num_corners() as u32 {
        if seen[start as usize] || !domain.is_included(start) {
            continue;
        }
        let mut lp = Vec::new();
        let mut c = start;
        loop {
            seen[c as usize] = true;
            lp.push(c);
            c = domain.next(c, |e| config.is_open(e as usize));
            assert!(c != NONE, "a closed loop hit the end of the domain");
            if c == start {
                break;
            }
        }
        loops.push(lp);
    }
    let loop_count = loops.len();
    LoopConfiguration { loops, exploration_path: path, loop_count }
}

/// Winding between two corners of a path, `e_from` before `e_to`.
pub fn winding_along(domain: &Domain, path: &[u32], e_from: u32, e_to: u32) -> Result<Winding> {
    let i = path.iter().position(|&c| c == e_from).ok_or(Error::NotOnPath(e_from))?;
    let j = path.iter().position(|&c| c == e_to).ok_or(Error::NotOnPath(e_to))?;
    let (lo, hi, sign) = if i <= j { (i, j, 1) } else { (j, i, -1) };
    let q: i32 = (lo..hi).map(|k| domain.turn(path[k], path[k + 1])).sum();
    Ok(Winding { quarter_turns: sign * q })
}

/// Turning number of a closed loop, in quarter turns.
pub fn loop_winding(domain: &Domain, lp: &[u32]) -> i32 {
    (0..lp.len()).map(|k| domain.turn(lp[k], lp[(k + 1) % lp.len()])).sum()
}

/// x^o sqrt(q)^ℓ with x = p / (sqrt(q) (1 - p)).
pub fn loop_weight(domain: &Domain, config: &EdgeConfiguration, p: f64, q: f64) -> f64 {
    let x = p / (q.sqrt() * (1.0 - p));
    let l = loops_of(domain, config).loop_count as f64;
    x.powi(config.open_count() as i32) * q.sqrt().powf(l)
}

/// Reads the primal configuration back from the way loops cross each medial vertex.
pub fn reconstruct(domain: &Domain, lc: &LoopConfiguration) -> EdgeConfiguration {
    let mut succ = vec![NONE; domain.num_corners()];
    let mut link = |seq: &[u32], closed: bool| {
        let n = seq.len();
        let m = if closed { n } else { n.saturating_sub(1) };
        for k in 0..m {
            succ[seq[k] as usize] = seq[(k + 1) % n];
        }
    };
    link(&lc.exploration_path, false);
    for lp in &lc.loops {
        link(lp, true);
    }
    let mut config = EdgeConfiguration::closed(domain.num_edges());
    for (i, e) in domain.edges.iter().enumerate() {
        let dir = e.dir as usize;
        let from_u = domain.corner(e.u, (dir + 3) % 4);
        let (c, x) = if domain.is_included(from_u) && succ[from_u as usize] != NONE {
            (from_u, e.u)
        } else {
            (domain.corner(e.v, (dir + 1) % 4), e.v)
        };
        let s = c as usize % 4;
        let arrive = (s + 1) % 4;
        debug_assert!(matches!(domain.slots[x as usize][arrive], Slot::Random { .. }));
        let cont = domain.corner(x, arrive);
        config.set(i, succ[c as usize] != cont);
    }
    config
}

#[derive(Serialize)]
struct Polyline {
    kind: &'static str,
    level: Option<i32>,
    points: Vec<[f64; 2]>,
}

/// Loops and exploration path as polylines through medial-edge midpoints and medial vertices.
pub fn polylines_json(domain: &Domain, lc: &LoopConfiguration) -> serde_json::Value {
    let line = |seq: &[u32], closed: bool, kind: &'static str| {
        let mut pts = Vec::new();
        for &c in seq {
            pts.push(domain.vertex_position(domain.tail(c)));
            pts.push(domain.corner_midpoint(c));
        }
        if let Some(&last) = seq.last() {
            pts.push(domain.vertex_position(domain.head(last)));
        }
        if closed {
            if let Some(&first) = pts.first() {
                pts.pop();
                pts.push(first);
            }
        }
        let level = if domain.is_planar() { None } else { seq.first().map(|&c| domain.sites[domain.corner_site_dir(c).0 as usize].z) };
        Polyline { kind, level, points: pts }
    };
    let mut all = Vec::new();
    if !lc.exploration_path.is_empty() {
        all.push(line(&lc.exploration_path, false, "exploration_path"));
    }
    for lp in &lc.loops {
        all.push(line(lp, true, "loop"));
    }
    serde_json::json!({ "descriptor": domain.descriptor, "polylines": all })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fk::{cluster_count, weight, BcKind, BoundaryPartition, MeasureSpec};
    use crate::geometry::{build_dobrushin_box, build_slit_domain, build_universal_cover, Site};

    fn all_configs(d: &Domain) -> impl Iterator<Item = EdgeConfiguration> + '_ {
        (0..1u64 << d.num_edges()).map(move |i| EdgeConfiguration::from_index(i, d.num_edges()))
    }

    #[test]
    fn eulerian_cover_and_round_trip() {
        for d in [build_dobrushin_box(2, 2).unwrap(), build_slit_domain(1).unwrap()] {
            let included = (0..d.num_corners() as u32).filter(|&c| d.is_included(c)).count();
            for c in all_configs(&d) {
                let lc = loops_of(&d, &c);
                let total: usize = lc.loops.iter().map(Vec::len).sum::<usize>() + lc.exploration_path.len();
                assert_eq!(total, included);
                assert_eq!(reconstruct(&d, &lc), c);
            }
        }
    }

    #[test]
    fn loop_weight_is_proportional_to_fk_weight() {
        let d = build_dobrushin_box(2, 2).unwrap();
        let part = BoundaryPartition::for_domain(&d, BcKind::Dobrushin).unwrap();
        for (p, q) in [(0.4, 2.0), (0.6, 3.0), (0.5, 0.7)] {
            let spec = MeasureSpec::new(p, q, BcKind::Dobrushin).unwrap();
            let ratios: Vec<f64> = all_configs(&d)
                .map(|c| loop_weight(&d, &c, p, q) / weight(&d, &c, &part, &spec))
                .collect();
            for r in &ratios {
                assert!((r / ratios[0] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn closed_loops_turn_once() {
        let d = build_dobrushin_box(2, 2).unwrap();
        for c in all_configs(&d) {
            for lp in loops_of(&d, &c).loops {
                assert_eq!(loop_winding(&d, &lp).abs(), 4);
            }
        }
    }

    #[test]
    fn dobrushin_extreme_configurations() {
        let d = build_dobrushin_box(2, 2).unwrap();
        let n = d.num_edges();
        // all closed: the path hugs the wired arc from inside
        let closed = exploration_path(&d, &EdgeConfiguration::closed(n));
        for &c in &closed {
            let (x, _) = d.corner_site_dir(c);
            assert!(d.sites[x as usize].y <= 1);
        }
        // all open: the path hugs the free arc
        let open = exploration_path(&d, &EdgeConfiguration::open(n));
        for &c in &open {
            assert!(d.boundary_corners().contains(&c));
        }
        // the path separates: free-arc sites are on the path iff joined to the wired arc
        let part = BoundaryPartition::for_domain(&d, BcKind::Dobrushin).unwrap();
        for c in all_configs(&d) {
            let path = exploration_path(&d, &c);
            let mut uf = crate::fk::clusters(&d, &c, &part);
            let b = d.b.unwrap();
            for &x in &d.free_arc {
                let touches = path.iter().any(|&e| {
                    d.corner_site_dir(e).0 == x && d.boundary_corners().contains(&e)
                });
                assert_eq!(touches, uf.connected(x, b));
            }
            let _ = cluster_count(&d, &c, &part);
        }
    }

    #[test]
    fn slit_windings_match_hand_values() {
        let s = build_slit_domain(2).unwrap();
        let w = |c: u32| s.medial.boundary_winding[c as usize].unwrap();
        let o = s.site_id(Site::new(0, 0)).unwrap();
        assert_eq!(w(s.medial.e_a.unwrap()), 3);
        assert_eq!(w(s.medial.e_b.unwrap()), 0);
        let up = s.site_id(Site::new(1, 1)).unwrap();
        let down = s.site_id(Site::new(1, -1)).unwrap();
        let (out_up, in_up) = s.boundary_corners_of(up);
        let (out_dn, in_dn) = s.boundary_corners_of(down);
        assert_eq!((w(in_up[0]), w(out_up[0])), (4, 5));
        assert_eq!((w(in_dn[0]), w(out_dn[0])), (-2, -1));
        assert_eq!(s.boundary_corners_of(o), (vec![s.medial.e_b.unwrap()], vec![s.medial.e_a.unwrap()]));
    }

    #[test]
    fn cover_start_end_winding() {
        let u = build_universal_cover(1, 1).unwrap();
        let w = u.medial.boundary_winding[u.medial.e_a.unwrap() as usize].unwrap();
        assert_eq!(w, 4);
    }

    #[test]
    fn winding_additivity_and_errors() {
        let d = build_dobrushin_box(2, 2).unwrap();
        let c = EdgeConfiguration::from_index(0b1011001101, d.num_edges());
        let path = exploration_path(&d, &c);
        let (a, m, b) = (path[0], path[path.len() / 2], *path.last().unwrap());
        let w1 = winding_along(&d, &path, a, m).unwrap().quarter_turns;
        let w2 = winding_along(&d, &path, m, b).unwrap().quarter_turns;
        assert_eq!(winding_along(&d, &path, a, b).unwrap().quarter_turns, w1 + w2);
        assert_eq!(winding_along(&d, &path, path[0], path[1]).unwrap().quarter_turns.abs(), 1);
        let off = (0..d.num_corners() as u32).find(|c| !path.contains(c)).unwrap();
        assert!(matches!(winding_along(&d, &path, off, b), Err(Error::NotOnPath(_))));
    }

    #[test]
    fn boundary_windings_are_deterministic() {
        let d = build_dobrushin_box(2, 2).unwrap();
        for c in all_configs(&d) {
            let path = exploration_path(&d, &c);
            let w = windings_to_end(&d, &path);
            for (k, &e) in path.iter().enumerate() {
                if let Some(b) = d.medial.boundary_winding[e as usize] {
                    assert_eq!(b, w[k]);
                }
            }
        }
    }
}
