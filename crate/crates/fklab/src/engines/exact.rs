//! Exhaustive enumeration over all `2^|E|` configurations.
//!
//! Configurations are bucketed by `(o, k)`, which fixes their weight for every `(p, q)`.
//! Tallies are integer counts, so a single pass serves any number of parameter values
//! and the parallel reduction is exact.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fk::{dual_configuration, dual_parameters, BoundaryPartition, EdgeConfiguration, MeasureSpec, UnionFind};
use crate::geometry::{dual_graph, Domain, NONE};

pub const DEFAULT_LIMIT: usize = 24;
const CHUNK: u64 = 1 << 14;

pub fn check_limit(domain: &Domain, limit: usize) -> Result<()> {
    let edges = domain.num_edges();
    if edges > limit || edges > 40 {
        return Err(Error::TooLarge { edges, limit });
    }
    Ok(())
}

/// Per-configuration kernel: union-find over at most a few dozen sites, seeded with the
/// boundary wirings and fixed-open edges.
#[derive(Clone)]
pub(crate) struct Kernel {
    eu: Vec<u32>,
    ev: Vec<u32>,
    init: Vec<u32>,
    parent: Vec<u32>,
}

impl Kernel {
    pub(crate) fn new(domain: &Domain, bc: &BoundaryPartition) -> Self {
        let n = domain.num_sites();
        let mut uf = crate::fk::UnionFind::new(n);
        for (x, r) in bc.representatives().into_iter().enumerate() {
            uf.union(x as u32, r);
        }
        for e in &domain.wired_edges {
            uf.union(e.u, e.v);
        }
        let init: Vec<u32> = (0..n as u32).map(|x| uf.find(x)).collect();
        Kernel {
            eu: domain.edges.iter().map(|e| e.u).collect(),
            ev: domain.edges.iter().map(|e| e.v).collect(),
            parent: init.clone(),
            init,
        }
    }

    #[inline]
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let g = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = g;
            x = g;
        }
        x
    }

    /// Loads configuration `idx` and returns k(omega, xi).
    #[inline]
    pub(crate) fn load(&mut self, idx: u64) -> u32 {
        self.parent.copy_from_slice(&self.init);
        let mut k = self.init.iter().enumerate().filter(|(i, &p)| *i as u32 == p).count() as u32;
        let mut bits = idx;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let (a, b) = (self.find(self.eu[i]), self.find(self.ev[i]));
            if a != b {
                self.parent[b as usize] = a;
                k -= 1;
            }
        }
        k
    }

    #[inline]
    pub(crate) fn connected(&mut self, x: u32, y: u32) -> bool {
        self.find(x) == self.find(y)
    }
}

/// Splits `0..total` into fixed chunks, maps them in parallel and returns results in chunk order.
pub(crate) fn par_chunks<T: Send>(total: u64, f: impl Fn(std::ops::Range<u64>) -> T + Sync) -> Vec<T> {
    let n = total.div_ceil(CHUNK);
    (0..n)
        .into_par_iter()
        .map(|i| f(i * CHUNK..((i + 1) * CHUNK).min(total)))
        .collect()
}

/// `Σ f(ω) w(ω) / Z` by direct summation.
pub fn enumerate_expectation(
    domain: &Domain,
    bc: &BoundaryPartition,
    spec: &MeasureSpec,
    limit: usize,
    f: impl Fn(&EdgeConfiguration) -> f64 + Sync,
) -> Result<f64> {
    spec.validate()?;
    check_limit(domain, limit)?;
    let ne = domain.num_edges();
    let parts = par_chunks(1u64 << ne, |range| {
        let mut kern = Kernel::new(domain, bc);
        let (mut num, mut z) = (0.0, 0.0);
        for idx in range {
            let k = kern.load(idx);
            let o = idx.count_ones() as i32;
            let w = spec.p.powi(o) * (1.0 - spec.p).powi(ne as i32 - o) * spec.q.powi(k as i32);
            if w != 0.0 {
                num += w * f(&EdgeConfiguration::from_index(idx, ne));
            }
            z += w;
        }
        (num, z)
    });
    let (num, z) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(num / z)
}

/// Exact law of the configuration, indexed by the configuration bits.
#[derive(Clone, Debug)]
pub struct ExactDistribution {
    pub num_edges: usize,
    pub probs: Vec<f64>,
    pub partition_function: f64,
}

impl ExactDistribution {
    pub fn new(domain: &Domain, bc: &BoundaryPartition, spec: &MeasureSpec, limit: usize) -> Result<Self> {
        spec.validate()?;
        check_limit(domain, limit.min(30))?;
        let ne = domain.num_edges();
        let parts = par_chunks(1u64 << ne, |range| {
            let mut kern = Kernel::new(domain, bc);
            range
                .map(|idx| {
                    let k = kern.load(idx);
                    let o = idx.count_ones() as i32;
                    spec.p.powi(o) * (1.0 - spec.p).powi(ne as i32 - o) * spec.q.powi(k as i32)
                })
                .collect::<Vec<f64>>()
        });
        let mut probs: Vec<f64> = parts.into_iter().flatten().collect();
        let z: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|w| *w /= z);
        Ok(ExactDistribution { num_edges: ne, probs, partition_function: z })
    }

    pub fn prob(&self, config: &EdgeConfiguration) -> f64 {
        self.probs[config.index() as usize]
    }

    pub fn expectation(&self, f: impl Fn(&EdgeConfiguration) -> f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| p * f(&EdgeConfiguration::from_index(i as u64, self.num_edges)))
            .sum()
    }

    /// Total-variation distance to an empirical histogram over configuration indices.
    pub fn total_variation(&self, counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        0.5 * self
            .probs
            .iter()
            .zip(counts)
            .map(|(p, &c)| (p - c as f64 / n as f64).abs())
            .sum::<f64>()
    }
}

/// Integer tallies of the exploration path and of connections to the reference site
/// (`b`, which lies on the wired arc), bucketed by `(o, k)`.
#[derive(Clone, Debug)]
pub struct PathTally {
    pub num_sites: usize,
    pub num_edges: usize,
    pub num_corners: usize,
    wmax: i32,
    class_count: Vec<u64>,
    hits: Vec<u32>,
    conn: Vec<u32>,
}

impl PathTally {
    fn classes(&self) -> usize {
        (self.num_edges + 1) * (self.num_sites + 1)
    }
    fn nw(&self) -> usize {
        (2 * self.wmax + 1) as usize
    }

    pub fn new(domain: &Domain, bc: &BoundaryPartition, limit: usize) -> Result<Self> {
        check_limit(domain, limit)?;
        let (Some(ea), Some(eb), Some(reference)) = (domain.medial.e_a, domain.medial.e_b, domain.b) else {
            return Err(Error::UnsupportedDomain("observables need a Dobrushin-type domain".into()));
        };
        let ne = domain.num_edges();
        let ns = domain.num_sites();
        let nc = domain.num_corners();
        let wmax = nc as i32;
        let proto = PathTally {
            num_sites: ns,
            num_edges: ne,
            num_corners: nc,
            wmax,
            class_count: Vec::new(),
            hits: Vec::new(),
            conn: Vec::new(),
        };
        let ncls = proto.classes();
        let nw = proto.nw();
        let m = &domain.medial;
        let turn_closed: Vec<i32> =
            (0..nc).map(|c| if m.succ_closed[c] == NONE { 0 } else { domain.turn(c as u32, m.succ_closed[c]) }).collect();
        let turn_open: Vec<i32> =
            (0..nc).map(|c| if m.succ_open[c] == NONE { 0 } else { domain.turn(c as u32, m.succ_open[c]) }).collect();

        let empty = || (vec![0u64; ncls], vec![0u32; nc * ncls * nw], vec![0u32; ns * ncls]);
        let total = 1u64 << ne;
        let (class_count, hits, conn) = (0..total.div_ceil(CHUNK))
            .into_par_iter()
            .fold(empty, |(mut class_count, mut hits, mut conn), chunk| {
                let mut kern = Kernel::new(domain, bc);
                let mut path: Vec<(u32, i32)> = Vec::with_capacity(nc);
                for idx in chunk * CHUNK..((chunk + 1) * CHUNK).min(total) {
                    let k = kern.load(idx) as usize;
                    let cls = idx.count_ones() as usize * (ns + 1) + k;
                    class_count[cls] += 1;
                    for x in 0..ns {
                        if kern.connected(x as u32, reference) {
                            conn[x * ncls + cls] += 1;
                        }
                    }
                    path.clear();
                    let mut c = ea;
                    let mut w = 0i32;
                    loop {
                        path.push((c, w));
                        if c == eb {
                            break;
                        }
                        let g = m.gate[c as usize];
                        let open = g != NONE && idx >> g & 1 == 1;
                        let (n, t) = if open {
                            (m.succ_open[c as usize], turn_open[c as usize])
                        } else {
                            (m.succ_closed[c as usize], turn_closed[c as usize])
                        };
                        w += t;
                        c = n;
                    }
                    for &(c, prefix) in &path {
                        let wr = w - prefix;
                        hits[(c as usize * ncls + cls) * nw + (wr + wmax) as usize] += 1;
                    }
                }
                (class_count, hits, conn)
            })
            .reduce(empty, |mut a, b| {
                a.0.iter_mut().zip(b.0).for_each(|(x, y)| *x += y);
                a.1.iter_mut().zip(b.1).for_each(|(x, y)| *x += y);
                a.2.iter_mut().zip(b.2).for_each(|(x, y)| *x += y);
                a
            });
        let mut t = proto;
        t.class_count = class_count;
        t.hits = hits;
        t.conn = conn;
        Ok(t)
    }

    fn class_weights(&self, p: f64, q: f64) -> (Vec<f64>, f64) {
        let ns = self.num_sites;
        let mut w = vec![0.0; self.classes()];
        let mut z = 0.0;
        for (cls, wc) in w.iter_mut().enumerate() {
            if self.class_count[cls] == 0 {
                continue;
            }
            let (o, k) = ((cls / (ns + 1)) as i32, (cls % (ns + 1)) as i32);
            *wc = p.powi(o) * (1.0 - p).powi(self.num_edges as i32 - o) * q.powi(k);
            z += *wc * self.class_count[cls] as f64;
        }
        (w, z)
    }

    /// Sum over configurations of `weight * g(winding)` restricted to paths through each corner.
    fn path_functional(&self, p: f64, q: f64, g: impl Fn(i32) -> Complex64) -> Vec<Complex64> {
        let (w, z) = self.class_weights(p, q);
        let (ncls, nw) = (self.classes(), self.nw());
        let phase: Vec<Complex64> = (0..nw as i32).map(|i| g(i - self.wmax)).collect();
        (0..self.num_corners)
            .map(|c| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (cls, &wc) in w.iter().enumerate() {
                    if wc == 0.0 {
                        continue;
                    }
                    let row = &self.hits[(c * ncls + cls) * nw..(c * ncls + cls + 1) * nw];
                    let mut s = Complex64::new(0.0, 0.0);
                    for (i, &h) in row.iter().enumerate() {
                        if h != 0 {
                            s += phase[i] * h as f64;
                        }
                    }
                    acc += s * wc;
                }
                acc / z
            })
            .collect()
    }

    pub fn partition_function(&self, p: f64, q: f64) -> f64 {
        self.class_weights(p, q).1
    }

    /// F(e) = E[e^{i sigma W(e, e_b)} 1{e in gamma}] for every corner.
    pub fn observable_f(&self, p: f64, q: f64, sigma: f64) -> Vec<Complex64> {
        self.path_functional(p, q, |w| Complex64::from_polar(1.0, sigma * w as f64 * std::f64::consts::FRAC_PI_2))
    }

    /// G(e) = E[W e^{i W} 1{e in gamma}] (q = 4).
    pub fn observable_g(&self, p: f64) -> Vec<Complex64> {
        self.path_functional(p, 4.0, |w| {
            let r = w as f64 * std::f64::consts::FRAC_PI_2;
            Complex64::from_polar(r, r)
        })
    }

    /// P(e in gamma).
    pub fn on_path(&self, p: f64, q: f64) -> Vec<f64> {
        self.path_functional(p, q, |_| Complex64::new(1.0, 0.0)).into_iter().map(|z| z.re).collect()
    }

    /// Law of the winding from corner `c` to `e_b` given `c` is on the path: pairs `(w, P(c in gamma, W = w))`.
    pub fn winding_law(&self, c: u32, p: f64, q: f64) -> Vec<(i32, f64)> {
        let (w, z) = self.class_weights(p, q);
        let (ncls, nw) = (self.classes(), self.nw());
        (0..nw)
            .filter_map(|i| {
                let s: f64 = (0..ncls)
                    .map(|cls| w[cls] * self.hits[(c as usize * ncls + cls) * nw + i] as f64)
                    .sum();
                (s > 0.0).then_some((i as i32 - self.wmax, s / z))
            })
            .collect()
    }

    /// P(x ↔ b) for every site.
    pub fn connectivity(&self, p: f64, q: f64) -> Vec<f64> {
        let (w, z) = self.class_weights(p, q);
        let ncls = self.classes();
        (0..self.num_sites)
            .map(|x| (0..ncls).map(|cls| w[cls] * self.conn[x * ncls + cls] as f64).sum::<f64>() / z)
            .collect()
    }
}

/// Largest difference, over configurations, between the free measure of `omega` on
/// `domain` and the (p*, q) measure of its dual on the planar dual graph, the outer face
/// being one dual vertex.
pub fn duality_deviation(domain: &Domain, p: f64, q: f64, limit: usize) -> Result<f64> {
    check_limit(domain, limit)?;
    let spec = MeasureSpec::new(p, q, crate::fk::BcKind::Free)?;
    let primal = ExactDistribution::new(domain, &BoundaryPartition::free(domain.num_sites()), &spec, limit)?;
    let dual = dual_graph(domain)?;
    let (ps, _) = dual_parameters(p, q)?;
    let ne = domain.num_edges();
    let nf = dual.faces.len();
    let mut uf = UnionFind::new(nf);
    let mut dual_w = vec![0.0; 1 << ne];
    for (idx, w) in dual_w.iter_mut().enumerate() {
        let cfg = dual_configuration(&EdgeConfiguration::from_index(idx as u64, ne), domain)?;
        uf.reset();
        let mut k = nf;
        for (e, &(a, b)) in dual.edges.iter().enumerate() {
            if cfg.is_open(e) && uf.union(a, b) {
                k -= 1;
            }
        }
        let o = cfg.open_count() as i32;
        *w = ps.powi(o) * (1.0 - ps).powi(ne as i32 - o) * q.powi(k as i32);
    }
    let z: f64 = dual_w.iter().sum();
    Ok(primal.probs.iter().zip(&dual_w).map(|(a, b)| (a - b / z).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fk::{cluster_count, weight, BcKind};
    use crate::geometry::{build_box, build_dobrushin_box, build_rect, Site};

    #[test]
    fn normalisation_and_bernoulli() {
        let b = build_box(1).unwrap();
        let bc = BoundaryPartition::free(9);
        let spec = MeasureSpec::new(0.3, 1.0, BcKind::Free).unwrap();
        let one = enumerate_expectation(&b, &bc, &spec, DEFAULT_LIMIT, |_| 1.0).unwrap();
        assert!((one - 1.0).abs() < 1e-12);
        let e0 = enumerate_expectation(&b, &bc, &spec, DEFAULT_LIMIT, |c| c.is_open(0) as u8 as f64).unwrap();
        assert!((e0 - 0.3).abs() < 1e-12);
        let dist = ExactDistribution::new(&b, &bc, &MeasureSpec::new(0.6, 2.5, BcKind::Free).unwrap(), 16).unwrap();
        assert!((dist.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_matches_union_find() {
        let d = build_dobrushin_box(2, 2).unwrap();
        let bc = BoundaryPartition::for_domain(&d, BcKind::Dobrushin).unwrap();
        let mut k = Kernel::new(&d, &bc);
        for idx in 0..1u64 << d.num_edges() {
            let c = EdgeConfiguration::from_index(idx, d.num_edges());
            assert_eq!(k.load(idx) as usize, cluster_count(&d, &c, &bc));
        }
    }

    #[test]
    fn four_cycle_connectivity_by_hand() {
        // 2x2 sites: the 4-cycle. phi(0 <-> opposite corner) by direct sum over 16 states.
        let r = build_rect(1, 1).unwrap();
        let bc = BoundaryPartition::free(4);
        let q = 2.0f64;
        let p = crate::fk::critical_point(q).unwrap();
        let spec = MeasureSpec::new(p, q, BcKind::Free).unwrap();
        let (s0, s3) = (r.site_id(Site::new(0, 0)).unwrap(), r.site_id(Site::new(1, 1)).unwrap());
        let got = enumerate_expectation(&r, &bc, &spec, 4, |c| {
            let mut uf = crate::fk::clusters(&r, c, &bc);
            uf.connected(s0, s3) as u8 as f64
        })
        .unwrap();
        // hand count on a cycle: k = 4 - o for o < 4, k = 1 for o = 4; connected iff
        // one of the two arcs is fully open.
        let (mut num, mut z) = (0.0, 0.0);
        for o in 0..=4u32 {
            let binom = [1.0, 4.0, 6.0, 4.0, 1.0][o as usize];
            let k = if o == 4 { 1 } else { 4 - o as i32 };
            let w = p.powi(o as i32) * (1.0 - p).powi(4 - o as i32) * q.powi(k);
            z += binom * w;
            let connected = match o {
                2 => 2.0,
                3 => 4.0,
                4 => 1.0,
                _ => 0.0,
            };
            num += connected * w;
        }
        assert!((got - num / z).abs() < 1e-14);
        let _ = weight;
    }

    #[test]
    fn too_large_is_reported() {
        let b = build_box(2).unwrap();
        let bc = BoundaryPartition::free(25);
        let spec = MeasureSpec::new(0.5, 1.0, BcKind::Free).unwrap();
        assert!(matches!(
            enumerate_expectation(&b, &bc, &spec, DEFAULT_LIMIT, |_| 1.0),
            Err(Error::TooLarge { edges: 40, .. })
        ));
    }

    #[test]
    fn planar_duality_on_small_rectangles() {
        let d = build_rect(2, 2).unwrap();
        for (p, q) in [(0.3, 2.0), (0.5, 1.0), (0.7, 3.0)] {
            assert!(duality_deviation(&d, p, q, DEFAULT_LIMIT).unwrap() < 1e-12);
        }
    }
}
