//! Exact parafermionic observables by enumerating exploration paths instead of
//! configurations. Only the edges met by the path are branched on; the remaining
//! edges are summed out by the frontier transfer, memoised on the revealed set.

use rustc_hash::FxHashMap as HashMap;

use num_complex::Complex64;

use crate::engines::transfer::{sweep, FrontierGraph};
use crate::error::{Error, Result};
use crate::fk::{BcKind, BoundaryPartition};
use crate::geometry::{Domain, NONE};

pub const MAX_PARAMS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservableParams {
    pub p: f64,
    pub q: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug)]
pub struct ExploredObservables {
    pub params: Vec<ObservableParams>,
    /// `fields[k][corner]`
    pub fields: Vec<Vec<Complex64>>,
    pub partition_functions: Vec<f64>,
    /// Number of distinct exploration paths.
    pub paths: u64,
}

type Acc = [Complex64; MAX_PARAMS];
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Neumaier-compensated complex sum; corners near `e_b` collect one term per path.
#[derive(Clone, Copy, Default)]
struct Compensated {
    sum: Complex64,
    err: Complex64,
}

impl Compensated {
    fn add(&mut self, x: Complex64) {
        let two_sum = |s: &mut f64, e: &mut f64, x: f64| {
            let t = *s + x;
            *e += if s.abs() >= x.abs() { (*s - t) + x } else { (x - t) + *s };
            *s = t;
        };
        two_sum(&mut self.sum.re, &mut self.err.re, x.re);
        two_sum(&mut self.sum.im, &mut self.err.im, x.im);
    }
    fn value(&self) -> Complex64 {
        self.sum + self.err
    }
}

struct Explorer<'d> {
    d: &'d Domain,
    nk: usize,
    params: Vec<ObservableParams>,
    turn_closed: Vec<i32>,
    turn_open: Vec<i32>,
    site_of: Vec<u32>,
    /// phase[k][t + off] = e^{i sigma_k t pi/2}
    phase: Vec<Vec<Complex64>>,
    off: i32,
    memo: HashMap<(u64, u64), [f64; MAX_PARAMS]>,
    acc: Vec<[Compensated; MAX_PARAMS]>,
    seg: Vec<(u32, i32)>,
    paths: u64,
}

impl Explorer<'_> {
    fn rest(&mut self, rev: u64, touched: u64) -> [f64; MAX_PARAMS] {
        if let Some(v) = self.memo.get(&(rev, touched)) {
            return *v;
        }
        let d = self.d;
        let ns = d.num_sites();
        let mut in_u = vec![false; ns];
        let free: Vec<(u32, u32)> = d
            .edges
            .iter()
            .enumerate()
            .filter(|&(i, _)| rev >> i & 1 == 0)
            .map(|(_, e)| {
                in_u[e.u as usize] = true;
                in_u[e.v as usize] = true;
                (e.u, e.v)
            })
            .collect();
        let mut local = vec![u32::MAX; ns];
        let mut class = Vec::new();
        let mut isolated = 0;
        let mut wired_present = false;
        for x in 0..ns {
            let t = touched >> x & 1 == 1;
            if in_u[x] {
                local[x] = class.len() as u32;
                class.push(t.then_some(0));
                wired_present |= t;
            } else if !t {
                isolated += 1;
            }
        }
        let g = FrontierGraph {
            num_sites: class.len(),
            edges: free.iter().map(|&(u, v)| (local[u as usize], local[v as usize])).collect(),
            class,
        };
        let pq: Vec<(f64, f64)> = self.params.iter().map(|c| (c.p, c.q)).collect();
        let z = sweep(&g, &pq, None);
        let mut out = [0.0; MAX_PARAMS];
        for k in 0..self.nk {
            let q = pq[k].1;
            out[k] = z[k] * q.powi(isolated) * if wired_present { 1.0 } else { q };
        }
        self.memo.insert((rev, touched), out);
        out
    }

    /// Sum over completions from `start` of (weight of edges revealed from here on) times
    /// e^{i sigma W(e_a, e_b)}, where `t0` is the winding already accumulated from `e_a`.
    /// Every corner met is credited with its share.
    fn walk(&mut self, start: u32, t0: i32, rev: u64, open: u64, mut touched: u64, prefix: &[f64; MAX_PARAMS]) -> Acc {
        let m = &self.d.medial;
        let eb = m.e_b.unwrap();
        let base = self.seg.len();
        let mut c = start;
        let mut t = t0;
        let mut end = [ZERO; MAX_PARAMS];
        loop {
            self.seg.push((c, t));
            touched |= 1 << self.site_of[c as usize];
            if c == eb {
                self.paths += 1;
                let z = self.rest(rev, touched);
                for k in 0..self.nk {
                    end[k] = z[k] * self.phase[k][(t + self.off) as usize];
                }
                break;
            }
            let g = m.gate[c as usize];
            if g == NONE || rev >> g & 1 == 1 {
                if g != NONE && open >> g & 1 == 1 {
                    t += self.turn_open[c as usize];
                    c = m.succ_open[c as usize];
                } else {
                    t += self.turn_closed[c as usize];
                    c = m.succ_closed[c as usize];
                }
                continue;
            }
            let bit = 1u64 << g;
            for is_open in [false, true] {
                let (n, tt) = if is_open {
                    (m.succ_open[c as usize], self.turn_open[c as usize])
                } else {
                    (m.succ_closed[c as usize], self.turn_closed[c as usize])
                };
                let mut w = [0.0; MAX_PARAMS];
                let mut child_prefix = [0.0; MAX_PARAMS];
                for k in 0..self.nk {
                    w[k] = if is_open { self.params[k].p } else { 1.0 - self.params[k].p };
                    child_prefix[k] = prefix[k] * w[k];
                }
                let open = if is_open { open | bit } else { open };
                let child = self.walk(n, t + tt, rev | bit, open, touched, &child_prefix);
                for k in 0..self.nk {
                    end[k] += w[k] * child[k];
                }
            }
            break;
        }
        for i in base..self.seg.len() {
            let (e, te) = self.seg[i];
            for k in 0..self.nk {
                self.acc[e as usize][k].add(prefix[k] * self.phase[k][(self.off - te) as usize] * end[k]);
            }
        }
        self.seg.truncate(base);
        end
    }
}

/// F for every corner of a planar Dobrushin-type domain, for each parameter triple.
pub fn explore_observables(domain: &Domain, params: &[ObservableParams]) -> Result<ExploredObservables> {
    if !domain.is_planar() || domain.medial.e_a.is_none() {
        return Err(Error::UnsupportedDomain("path enumeration needs a planar Dobrushin-type domain".into()));
    }
    if domain.num_edges() > 64 || domain.num_sites() > 64 {
        return Err(Error::TooLarge { edges: domain.num_edges(), limit: 64 });
    }
    if params.is_empty() || params.len() > MAX_PARAMS {
        return Err(Error::InvalidParameter(format!("between 1 and {MAX_PARAMS} parameter sets")));
    }
    let nc = domain.num_corners();
    let m = &domain.medial;
    let turn = |succ: &Vec<u32>| -> Vec<i32> {
        (0..nc).map(|c| if succ[c] == NONE { 0 } else { domain.turn(c as u32, succ[c]) }).collect()
    };
    let off = 4 * nc as i32 + 8;
    let phase = params
        .iter()
        .map(|c| {
            (-off..=off)
                .map(|t| Complex64::from_polar(1.0, c.sigma * t as f64 * std::f64::consts::FRAC_PI_2))
                .collect()
        })
        .collect();
    let mut ex = Explorer {
        d: domain,
        nk: params.len(),
        params: params.to_vec(),
        turn_closed: turn(&m.succ_closed),
        turn_open: turn(&m.succ_open),
        site_of: (0..nc as u32).map(|c| domain.corner_site_dir(c).0).collect(),
        phase,
        off,
        memo: HashMap::default(),
        acc: vec![[Compensated::default(); MAX_PARAMS]; nc],
        seg: Vec::with_capacity(nc * 2),
        paths: 0,
    };
    let mut touched = 0u64;
    for &x in domain.wired_arc.iter().chain(domain.b.iter()) {
        touched |= 1 << x;
    }
    ex.walk(m.e_a.unwrap(), 0, 0, 0, touched, &[1.0; MAX_PARAMS]);

    let bc = BoundaryPartition::for_domain(domain, BcKind::Dobrushin)?;
    let pq: Vec<(f64, f64)> = params.iter().map(|c| (c.p, c.q)).collect();
    let z = sweep(&FrontierGraph::from_domain(domain, &bc), &pq, None);
    let fields = (0..params.len())
        .map(|k| ex.acc.iter().map(|a| a[k].value() / z[k]).collect())
        .collect();
    Ok(ExploredObservables { params: params.to_vec(), fields, partition_functions: z, paths: ex.paths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::exact::{PathTally, DEFAULT_LIMIT};
    use crate::geometry::{build_dobrushin_box, build_slit_domain};

    fn agree(d: &Domain) {
        let bc = BoundaryPartition::for_domain(d, BcKind::Dobrushin).unwrap();
        let tally = PathTally::new(d, &bc, DEFAULT_LIMIT).unwrap();
        let params = [
            ObservableParams { p: 0.5, q: 2.0, sigma: 0.5 },
            ObservableParams { p: 0.3, q: 1.0, sigma: 1.0 / 3.0 },
            ObservableParams { p: 0.7, q: 3.0, sigma: 0.2 },
        ];
        let ex = explore_observables(d, &params).unwrap();
        for (k, c) in params.iter().enumerate() {
            assert!((ex.partition_functions[k] / tally.partition_function(c.p, c.q) - 1.0).abs() < 1e-12);
            let f = tally.observable_f(c.p, c.q, c.sigma);
            for (e, (a, b)) in f.iter().zip(&ex.fields[k]).enumerate() {
                assert!((a - b).norm() < 1e-13, "corner {e}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn agrees_with_configuration_enumeration() {
        agree(&build_slit_domain(1).unwrap());
        agree(&build_dobrushin_box(2, 2).unwrap());
        agree(&build_dobrushin_box(3, 3).unwrap());
    }
}
