//! FK configurations, boundary partitions, weights, duality.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Slot};

/// Open/closed state of the random edges of a domain, one bit per edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EdgeConfiguration {
    bits: Vec<u64>,
    len: usize,
}

impl EdgeConfiguration {
    pub fn closed(len: usize) -> Self {
        EdgeConfiguration { bits: vec![0; len.div_ceil(64)], len }
    }

    pub fn open(len: usize) -> Self {
        let mut c = Self::closed(len);
        for i in 0..len {
            c.set(i, true);
        }
        c
    }

    /// Configuration whose bit `i` is bit `i` of `index` (requires `len <= 64`).
    pub fn from_index(index: u64, len: usize) -> Self {
        assert!(len <= 64);
        let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        EdgeConfiguration { bits: vec![index & mask; len.div_ceil(64)], len }
    }

    /// Inverse of [`from_index`](Self::from_index).
    pub fn index(&self) -> u64 {
        assert!(self.len <= 64);
        self.bits.first().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn is_open(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, open: bool) {
        let m = 1u64 << (i % 64);
        if open {
            self.bits[i / 64] |= m;
        } else {
            self.bits[i / 64] &= !m;
        }
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i / 64] ^= 1u64 << (i % 64);
    }

    /// o(omega).
    pub fn open_count(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// c(omega).
    pub fn closed_count(&self) -> usize {
        self.len - self.open_count()
    }

    pub fn complement(&self) -> Self {
        let mut c = self.clone();
        for i in 0..self.len {
            c.flip(i);
        }
        c
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }
}

/// Partition of the sites into wired classes; sites without a class are singletons.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryPartition {
    pub class: Vec<Option<u32>>,
}

impl BoundaryPartition {
    pub fn free(num_sites: usize) -> Self {
        BoundaryPartition { class: vec![None; num_sites] }
    }

    /// Partition with the given classes (each a list of sites).
    pub fn from_classes(num_sites: usize, classes: &[Vec<u32>]) -> Self {
        let mut p = Self::free(num_sites);
        for (i, c) in classes.iter().enumerate() {
            for &x in c {
                p.class[x as usize] = Some(i as u32);
            }
        }
        p
    }

    pub fn for_domain(domain: &Domain, bc: BcKind) -> Result<Self> {
        let n = domain.num_sites();
        Ok(match bc {
            BcKind::Free => Self::free(n),
            BcKind::Wired => Self::from_classes(n, &[domain.boundary_sites()]),
            BcKind::Dobrushin => {
                if domain.wired_arc.is_empty() {
                    return Err(Error::UnsupportedDomain("domain has no wired arc".into()));
                }
                Self::from_classes(n, std::slice::from_ref(&domain.wired_arc))
            }
            BcKind::Custom => {
                return Err(Error::InvalidParameter("custom boundary conditions need an explicit partition".into()))
            }
        })
    }

    /// Class representatives: for each site, the first site of its class (or itself).
    pub fn representatives(&self) -> Vec<u32> {
        let mut first: Vec<Option<u32>> = Vec::new();
        self.class
            .iter()
            .enumerate()
            .map(|(x, c)| match c {
                None => x as u32,
                Some(c) => {
                    let c = *c as usize;
                    if first.len() <= c {
                        first.resize(c + 1, None);
                    }
                    *first[c].get_or_insert(x as u32)
                }
            })
            .collect()
    }

    /// `self` dominates `other` if every wiring of `other` is present in `self`.
    pub fn dominates(&self, other: &BoundaryPartition) -> bool {
        let n = self.class.len();
        (0..n).all(|x| {
            (0..n).all(|y| {
                let w_other = other.class[x].is_some() && other.class[x] == other.class[y];
                let w_self = self.class[x].is_some() && self.class[x] == self.class[y];
                !w_other || w_self || x == y
            })
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Free,
    Wired,
    Dobrushin,
    /// Partition supplied by the caller (several wired classes).
    Custom,
}

/// `(p, q, bc)` identifying a finite-volume FK measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub p: f64,
    pub q: f64,
    pub bc: BcKind,
}

impl MeasureSpec {
    pub fn new(p: f64, q: f64, bc: BcKind) -> Result<Self> {
        let s = MeasureSpec { p, q, bc };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) || self.p.is_nan() {
            return Err(Error::InvalidParameter(format!("p = {} not in [0, 1]", self.p)));
        }
        if self.q.is_nan() || self.q <= 0.0 {
            return Err(Error::InvalidParameter(format!("q = {} must be positive", self.q)));
        }
        Ok(())
    }
}

/// Union-find with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i as u32;
        }
        self.size.iter_mut().for_each(|s| *s = 1);
    }

    #[inline]
    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let g = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = g;
            x = g;
        }
        x
    }

    /// Returns true if a merge happened.
    #[inline]
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
        true
    }

    pub fn connected(&mut self, a: u32, b: u32) -> bool {
        self.find(a) == self.find(b)
    }
}

/// Union-find of `omega ∪ xi` (wired edges count as open).
pub fn clusters(domain: &Domain, config: &EdgeConfiguration, bc: &BoundaryPartition) -> UnionFind {
    let mut uf = UnionFind::new(domain.num_sites());
    for (x, r) in bc.representatives().into_iter().enumerate() {
        uf.union(x as u32, r);
    }
    for e in &domain.wired_edges {
        uf.union(e.u, e.v);
    }
    for (i, e) in domain.edges.iter().enumerate() {
        if config.is_open(i) {
            uf.union(e.u, e.v);
        }
    }
    uf
}

/// k(omega, xi): number of connected components of `omega ∪ xi`.
pub fn cluster_count(domain: &Domain, config: &EdgeConfiguration, bc: &BoundaryPartition) -> usize {
    let mut uf = clusters(domain, config, bc);
    (0..domain.num_sites() as u32).filter(|&x| uf.find(x) == x).count()
}

/// Breadth-first recount of k(omega, xi), independent of union-find.
pub fn cluster_count_bfs(domain: &Domain, config: &EdgeConfiguration, bc: &BoundaryPartition) -> usize {
    let n = domain.num_sites();
    let mut seen = vec![false; n];
    let mut count = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(x) = queue.pop_front() {
            let mut push = |y: usize, queue: &mut VecDeque<usize>| {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            };
            for slot in domain.slots[x] {
                match slot {
                    Slot::Random { edge, to } if config.is_open(edge as usize) => push(to as usize, &mut queue),
                    Slot::Wired { to, .. } => push(to as usize, &mut queue),
                    _ => {}
                }
            }
            if let Some(c) = bc.class[x] {
                for y in 0..n {
                    if bc.class[y] == Some(c) {
                        push(y, &mut queue);
                    }
                }
            }
        }
    }
    count
}

/// p^o (1-p)^c q^k.
pub fn weight(domain: &Domain, config: &EdgeConfiguration, bc: &BoundaryPartition, spec: &MeasureSpec) -> f64 {
    let o = config.open_count() as i32;
    let c = config.closed_count() as i32;
    let k = cluster_count(domain, config, bc) as f64;
    spec.p.powi(o) * (1.0 - spec.p).powi(c) * spec.q.powf(k)
}

/// Natural logarithm of [`weight`]; `-inf` for zero weight.
pub fn log_weight(domain: &Domain, config: &EdgeConfiguration, bc: &BoundaryPartition, spec: &MeasureSpec) -> f64 {
    let o = config.open_count() as f64;
    let c = config.closed_count() as f64;
    let k = cluster_count(domain, config, bc) as f64;
    let term = |n: f64, x: f64| if n == 0.0 { 0.0 } else { n * x.ln() };
    term(o, spec.p) + term(c, 1.0 - spec.p) + k * spec.q.ln()
}

/// p_c(q) = sqrt(q) / (1 + sqrt(q)).
pub fn critical_point(q: f64) -> Result<f64> {
    if q.is_nan() || q <= 0.0 {
        return Err(Error::InvalidParameter(format!("q = {q} must be positive")));
    }
    Ok(q.sqrt() / (1.0 + q.sqrt()))
}

/// Dual parameters `(p*, q)` with `p* p / ((1 - p*)(1 - p)) = q`.
pub fn dual_parameters(p: f64, q: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidParameter(format!("p = {p} not in [0, 1]")));
    }
    if q.is_nan() || q <= 0.0 {
        return Err(Error::InvalidParameter(format!("q = {q} must be positive")));
    }
    let a = q * (1.0 - p);
    Ok((a / (p + a), q))
}

/// Dual configuration: a dual edge is open iff its primal edge is closed.
pub fn dual_configuration(config: &EdgeConfiguration, domain: &Domain) -> Result<EdgeConfiguration> {
    if !domain.is_planar() {
        return Err(Error::UnsupportedDomain("duality needs a planar domain".into()));
    }
    Ok(config.complement())
}

/// Guard for helpers relying on positive association, which needs `q >= 1`.
pub fn require_positive_association(q: f64) -> Result<()> {
    if q < 1.0 {
        return Err(Error::Unsupported(format!("FKG needs q >= 1, got {q}")));
    }
    Ok(())
}
