//! Frontier transfer for FK partition functions and two-point connectivities on
//! domains too large to enumerate. Sites are swept in index order; the state is the
//! partition of the frontier into clusters.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fk::{BoundaryPartition, MeasureSpec};
use crate::geometry::Domain;

const UNSEEN: u8 = u8::MAX;
const LOST: u8 = u8::MAX - 1;

/// Graph with a list of free edges and pre-wired classes of sites.
#[derive(Clone, Debug)]
pub struct FrontierGraph {
    pub num_sites: usize,
    pub edges: Vec<(u32, u32)>,
    /// Class of each site; sites sharing a class are connected from the start.
    pub class: Vec<Option<u32>>,
}

impl FrontierGraph {
    pub fn from_domain(domain: &Domain, bc: &BoundaryPartition) -> Self {
        let mut class = bc.class.clone();
        // Fixed-open edges only ever join wired-arc sites; merge their endpoints too.
        if !domain.wired_edges.is_empty() {
            let c = domain
                .wired_arc
                .iter()
                .find_map(|&x| class[x as usize])
                .unwrap_or(u32::MAX - 1);
            for &x in &domain.wired_arc {
                class[x as usize] = Some(c);
            }
        }
        FrontierGraph {
            num_sites: domain.num_sites(),
            edges: domain.edges.iter().map(|e| (e.u, e.v)).collect(),
            class,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct State {
    labels: Vec<u8>,
    a: u8,
    b: u8,
    joined: bool,
}

struct Sweep {
    /// Virtual class blocks come first in the frontier.
    nclass: usize,
    class_slot: Vec<Option<usize>>,
    by_last: Vec<Vec<u32>>,
    edges_at: Vec<Vec<usize>>,
}

impl Sweep {
    fn new(g: &FrontierGraph) -> Self {
        let mut ids: Vec<u32> = g.class.iter().flatten().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        let class_slot = g.class.iter().map(|c| c.map(|c| ids.binary_search(&c).unwrap())).collect();
        let mut last: Vec<usize> = (0..g.num_sites).collect();
        let mut edges_at = vec![Vec::new(); g.num_sites];
        for (i, &(u, v)) in g.edges.iter().enumerate() {
            let (lo, hi) = (u.min(v) as usize, u.max(v) as usize);
            last[lo] = last[lo].max(hi);
            edges_at[hi].push(i);
        }
        let mut by_last = vec![Vec::new(); g.num_sites];
        for (x, &l) in last.iter().enumerate() {
            by_last[l].push(x as u32);
        }
        Sweep { nclass: ids.len(), class_slot, by_last, edges_at }
    }
}

fn canonical(mut s: State) -> State {
    let mut map = [UNSEEN; 256];
    let mut next = 0u8;
    for l in s.labels.iter_mut() {
        if map[*l as usize] == UNSEEN {
            map[*l as usize] = next;
            next += 1;
        }
        *l = map[*l as usize];
    }
    for m in [&mut s.a, &mut s.b] {
        if *m != UNSEEN && *m != LOST {
            *m = map[*m as usize];
        }
    }
    s
}

fn relabel(s: &mut State, from: u8, to: u8) {
    for l in s.labels.iter_mut() {
        if *l == from {
            *l = to;
        }
    }
    for m in [&mut s.a, &mut s.b] {
        if *m == from {
            *m = to;
        }
    }
}

fn add(map: &mut HashMap<State, Vec<f64>>, s: State, w: &[f64], f: impl Fn(usize) -> f64) {
    let e = map.entry(s).or_insert_with(|| vec![0.0; w.len()]);
    for (k, (x, &y)) in e.iter_mut().zip(w).enumerate() {
        *x += y * f(k);
    }
}

/// Sum over configurations of `p^o (1-p)^c q^k` for each `(p, q)`, optionally restricted to `a <-> b`.
pub(crate) fn sweep(g: &FrontierGraph, params: &[(f64, f64)], target: Option<(u32, u32)>) -> Vec<f64> {
    let nk = params.len();
    let sw = Sweep::new(g);
    let nc = sw.nclass;
    // frontier[i] = site held at position i (after the class blocks)
    let mut frontier: Vec<u32> = Vec::new();
    let start = State {
        labels: (0..nc as u8).collect(),
        a: UNSEEN,
        b: UNSEEN,
        joined: target.is_none(),
    };
    let mut states: HashMap<State, Vec<f64>> = HashMap::from([(start, vec![1.0; nk])]);
    let mut pos_of = vec![usize::MAX; g.num_sites];

    for v in 0..g.num_sites {
        // add v
        pos_of[v] = nc + frontier.len();
        frontier.push(v as u32);
        let mut next: HashMap<State, Vec<f64>> = HashMap::with_capacity(states.len());
        for (mut s, w) in states {
            let lab = match sw.class_slot[v] {
                Some(c) => s.labels[c],
                None => s.labels.iter().copied().max().map_or(0, |m| m + 1),
            };
            s.labels.push(lab);
            if let Some((a, b)) = target {
                if a as usize == v {
                    s.a = lab;
                }
                if b as usize == v {
                    s.b = lab;
                }
                if !s.joined && s.a == s.b && s.a < LOST {
                    s.joined = true;
                }
            }
            add(&mut next, canonical(s), &w, |_| 1.0);
        }
        states = next;

        for &ei in &sw.edges_at[v] {
            let (x, y) = g.edges[ei];
            let (px, py) = (pos_of[x as usize], pos_of[y as usize]);
            let mut next: HashMap<State, Vec<f64>> = HashMap::with_capacity(states.len() * 2);
            for (s, w) in states {
                let (lx, ly) = (s.labels[px], s.labels[py]);
                if lx != ly {
                    let mut o = s.clone();
                    relabel(&mut o, ly, lx);
                    if !o.joined && o.a == o.b && o.a < LOST {
                        o.joined = true;
                    }
                    add(&mut next, canonical(o), &w, |k| params[k].0);
                } else {
                    add(&mut next, s.clone(), &w, |k| params[k].0);
                }
                add(&mut next, s, &w, |k| 1.0 - params[k].0);
            }
            states = next;
        }

        // retire sites whose edges are all processed
        let retire: Vec<u32> = sw.by_last[v].clone();
        if retire.is_empty() {
            continue;
        }
        let keep: Vec<usize> = (0..frontier.len())
            .filter(|&i| !retire.contains(&frontier[i]))
            .collect();
        let mut next: HashMap<State, Vec<f64>> = HashMap::with_capacity(states.len());
        for (s, mut w) in states {
            let mut labels: Vec<u8> = s.labels[..nc].to_vec();
            labels.extend(keep.iter().map(|&i| s.labels[nc + i]));
            let mut t = State { labels, a: s.a, b: s.b, joined: s.joined };
            // blocks that vanished from the frontier are finished clusters
            let mut seen = [false; 256];
            for &l in &s.labels {
                seen[l as usize] = true;
            }
            for &l in &t.labels {
                seen[l as usize] = false;
            }
            let mut dead = false;
            for (l, &gone) in seen.iter().enumerate() {
                if gone {
                    w.iter_mut().zip(params).for_each(|(x, &(_, q))| *x *= q);
                    let l = l as u8;
                    for m in [&mut t.a, &mut t.b] {
                        if *m == l {
                            *m = LOST;
                        }
                    }
                    if !t.joined && (t.a == LOST || t.b == LOST) {
                        dead = true;
                    }
                }
            }
            if dead {
                continue;
            }
            add(&mut next, canonical(t), &w, |_| 1.0);
        }
        states = next;
        let kept: Vec<u32> = keep.iter().map(|&i| frontier[i]).collect();
        frontier = kept;
        for (i, &x) in frontier.iter().enumerate() {
            pos_of[x as usize] = nc + i;
        }
    }

    let mut total = vec![0.0; nk];
    for (s, w) in states.into_iter().filter(|(s, _)| s.joined) {
        let mut ls = s.labels;
        ls.sort_unstable();
        ls.dedup();
        for (k, t) in total.iter_mut().enumerate() {
            *t += w[k] * params[k].1.powi(ls.len() as i32);
        }
    }
    total
}

fn check(g: &FrontierGraph) -> Result<()> {
    if g.num_sites >= 200 {
        return Err(Error::TooLarge { edges: g.edges.len(), limit: 200 });
    }
    Ok(())
}

pub fn partition_function(g: &FrontierGraph, spec: &MeasureSpec) -> Result<f64> {
    check(g)?;
    Ok(sweep(g, &[(spec.p, spec.q)], None)[0])
}

/// P(a <-> b).
pub fn connection_probability(g: &FrontierGraph, spec: &MeasureSpec, a: u32, b: u32) -> Result<f64> {
    check(g)?;
    if a == b {
        return Ok(1.0);
    }
    Ok(sweep(g, &[(spec.p, spec.q)], Some((a, b)))[0] / sweep(g, &[(spec.p, spec.q)], None)[0])
}

/// P(a <-> x) for every site x.
pub fn connectivity_from(g: &FrontierGraph, spec: &MeasureSpec, a: u32) -> Result<Vec<f64>> {
    check(g)?;
    let pq = [(spec.p, spec.q)];
    let z = sweep(g, &pq, None)[0];
    Ok((0..g.num_sites as u32)
        .map(|x| if x == a { 1.0 } else { sweep(g, &pq, Some((a, x)))[0] / z })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::exact::{enumerate_expectation, DEFAULT_LIMIT};
    use crate::fk::{clusters, BcKind};
    use crate::geometry::{build_box, build_dobrushin_box, build_rect, build_slit_domain};

    fn compare(d: &Domain, kind: BcKind, p: f64, q: f64) {
        let spec = MeasureSpec::new(p, q, kind).unwrap();
        let bc = BoundaryPartition::for_domain(d, kind).unwrap();
        let g = FrontierGraph::from_domain(d, &bc);
        let a = d.b.unwrap_or(0);
        let exact = |x: u32| {
            enumerate_expectation(d, &bc, &spec, DEFAULT_LIMIT, |cfg| {
                let mut uf = clusters(d, cfg, &bc);
                f64::from(u8::from(uf.connected(a, x)))
            })
            .unwrap()
        };
        let phi = connectivity_from(&g, &spec, a).unwrap();
        for x in 0..d.num_sites() as u32 {
            assert!((phi[x as usize] - exact(x)).abs() < 1e-12, "site {x}");
        }
    }

    #[test]
    fn matches_enumeration() {
        compare(&build_box(1).unwrap(), BcKind::Free, 0.4, 2.0);
        compare(&build_rect(2, 3).unwrap(), BcKind::Free, 0.6, 3.0);
        compare(&build_box(1).unwrap(), BcKind::Wired, 0.5, 0.5);
        compare(&build_dobrushin_box(2, 2).unwrap(), BcKind::Dobrushin, 0.55, 2.5);
        compare(&build_slit_domain(1).unwrap(), BcKind::Free, 0.5, 1.5);
    }

    #[test]
    fn partition_function_of_a_cycle() {
        let g = FrontierGraph { num_sites: 4, edges: vec![(0, 1), (1, 2), (2, 3), (0, 3)], class: vec![None; 4] };
        let (p, q) = (0.3, 2.0);
        let spec = MeasureSpec::new(p, q, BcKind::Free).unwrap();
        let r: f64 = 1.0 - p;
        let z = r.powi(4) * q.powi(4) + 4.0 * p * r.powi(3) * q.powi(3) + 6.0 * p * p * r * r * q * q
            + 4.0 * p.powi(3) * r * q + p.powi(4) * q;
        assert!((partition_function(&g, &spec).unwrap() - z).abs() < 1e-12);
    }
}
