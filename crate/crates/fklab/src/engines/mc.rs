//! Markov chain samplers for FK measures and multi-chain estimation.
//!
//! Streams: chain `k` of a run with master seed `s` uses `ChaCha8Rng::seed_from_u64(s)`
//! with stream `k`, so runs are reproducible for a fixed `(seed, chains, schedule)`.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fk::{BoundaryPartition, EdgeConfiguration, MeasureSpec, UnionFind};
use crate::geometry::Domain;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    HeatBath,
    ChayesMachta,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schedule {
    pub burn_in: usize,
    pub samples: usize,
    /// Sweeps between recorded samples.
    pub thin: usize,
    pub chains: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { burn_in: 1000, samples: 10_000, thin: 1, chains: 4 }
    }
}

#[derive(Clone, Debug)]
pub struct ChainState {
    pub config: EdgeConfiguration,
    pub stream: u64,
    pub steps: u64,
    rng: ChaCha8Rng,
}

impl ChainState {
    pub fn new(num_edges: usize, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        ChainState { config: EdgeConfiguration::closed(num_edges), stream, steps: 0, rng }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Sampler for one measure on one domain.
pub struct Sampler<'d> {
    pub domain: &'d Domain,
    pub spec: MeasureSpec,
    pub kind: SamplerKind,
    bc: BoundaryPartition,
    /// adjacency: (neighbour, edge)
    adj: Vec<Vec<(u32, u32)>>,
    class_members: Vec<Vec<u32>>,
    // scratch
    mark: Vec<u32>,
    class_mark: Vec<u32>,
    epoch: u32,
    queue: VecDeque<u32>,
    uf: UnionFind,
    active: Vec<bool>,
}

impl<'d> Sampler<'d> {
    pub fn new(domain: &'d Domain, bc: BoundaryPartition, spec: MeasureSpec, kind: SamplerKind) -> Result<Self> {
        spec.validate()?;
        if kind == SamplerKind::ChayesMachta && spec.q < 1.0 {
            return Err(Error::Unsupported(format!("cluster moves need q >= 1, got {}", spec.q)));
        }
        let n = domain.num_sites();
        let mut adj = vec![Vec::new(); n];
        for (i, e) in domain.edges.iter().enumerate() {
            adj[e.u as usize].push((e.v, i as u32));
            adj[e.v as usize].push((e.u, i as u32));
        }
        let nclass = bc.class.iter().flatten().map(|&c| c as usize + 1).max().unwrap_or(0);
        let mut class_members = vec![Vec::new(); nclass];
        for (x, c) in bc.class.iter().enumerate() {
            if let Some(c) = c {
                class_members[*c as usize].push(x as u32);
            }
        }
        Ok(Sampler {
            domain,
            spec,
            kind,
            bc,
            adj,
            class_members,
            mark: vec![0; n],
            class_mark: vec![0; nclass],
            epoch: 0,
            queue: VecDeque::new(),
            uf: UnionFind::new(n),
            active: vec![false; n],
        })
    }

    pub fn boundary(&self) -> &BoundaryPartition {
        &self.bc
    }

    /// Whether `u` and `v` are joined by open edges other than `skip`, boundary classes contracted.
    pub fn connected_off(&mut self, config: &EdgeConfiguration, u: u32, v: u32, skip: u32) -> bool {
        if u == v {
            return true;
        }
        if let (Some(a), Some(b)) = (self.bc.class[u as usize], self.bc.class[v as usize]) {
            if a == b {
                return true;
            }
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.mark.fill(0);
            self.class_mark.fill(0);
            self.epoch = 1;
        }
        let ep = self.epoch;
        self.queue.clear();
        self.visit(u, ep);
        while let Some(x) = self.queue.pop_front() {
            for k in 0..self.adj[x as usize].len() {
                let (y, e) = self.adj[x as usize][k];
                if e == skip || !config.is_open(e as usize) || self.mark[y as usize] == ep {
                    continue;
                }
                if y == v {
                    return true;
                }
                self.visit(y, ep);
            }
            if self.mark[v as usize] == ep {
                return true;
            }
        }
        false
    }

    fn visit(&mut self, x: u32, ep: u32) {
        if self.mark[x as usize] == ep {
            return;
        }
        self.mark[x as usize] = ep;
        self.queue.push_back(x);
        if let Some(c) = self.bc.class[x as usize] {
            if self.class_mark[c as usize] != ep {
                self.class_mark[c as usize] = ep;
                for i in 0..self.class_members[c as usize].len() {
                    let y = self.class_members[c as usize][i];
                    if self.mark[y as usize] != ep {
                        self.mark[y as usize] = ep;
                        self.queue.push_back(y);
                    }
                }
            }
        }
    }

    /// Probability that `edge` is open given the rest of the configuration.
    pub fn conditional_open_probability(&mut self, config: &EdgeConfiguration, edge: u32) -> f64 {
        let (p, q) = (self.spec.p, self.spec.q);
        if q == 1.0 {
            return p;
        }
        let e = self.domain.edges[edge as usize];
        if self.connected_off(config, e.u, e.v, edge) {
            p
        } else {
            p / (p + (1.0 - p) * q)
        }
    }

    /// Resamples one edge from its conditional law.
    pub fn heat_bath_step(&mut self, state: &mut ChainState, edge: u32) {
        let pr = self.conditional_open_probability(&state.config, edge);
        let open = state.rng.random::<f64>() < pr;
        state.config.set(edge as usize, open);
    }

    /// One heat-bath pass over all edges in index order.
    pub fn heat_bath_sweep(&mut self, state: &mut ChainState) {
        for e in 0..self.domain.num_edges() as u32 {
            self.heat_bath_step(state, e);
        }
        state.steps += 1;
    }

    /// Cluster move: each cluster (boundary classes pre-wired) is activated with
    /// probability 1/q, then edges inside the active set are resampled as Bernoulli(p).
    pub fn chayes_machta_sweep(&mut self, state: &mut ChainState) -> Result<()> {
        if self.spec.q < 1.0 {
            return Err(Error::Unsupported(format!("cluster moves need q >= 1, got {}", self.spec.q)));
        }
        let n = self.domain.num_sites();
        self.uf.reset();
        for members in &self.class_members {
            for w in members.windows(2) {
                self.uf.union(w[0], w[1]);
            }
        }
        for (i, e) in self.domain.edges.iter().enumerate() {
            if state.config.is_open(i) {
                self.uf.union(e.u, e.v);
            }
        }
        // one coin per root, drawn in site order
        let inv_q = 1.0 / self.spec.q;
        for x in 0..n as u32 {
            if self.uf.find(x) == x {
                self.active[x as usize] = state.rng.random::<f64>() < inv_q;
            }
        }
        for (i, e) in self.domain.edges.iter().enumerate() {
            let (ru, rv) = (self.uf.find(e.u), self.uf.find(e.v));
            if self.active[ru as usize] && self.active[rv as usize] {
                let open = state.rng.random::<f64>() < self.spec.p;
                state.config.set(i, open);
            }
        }
        state.steps += 1;
        Ok(())
    }

    pub fn sweep(&mut self, state: &mut ChainState) {
        match self.kind {
            SamplerKind::HeatBath => self.heat_bath_sweep(state),
            SamplerKind::ChayesMachta => self.chayes_machta_sweep(state).expect("checked at construction"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    /// Effective sample size from the batch-means variance, at most `n_samples`.
    pub ess: f64,
}

impl Estimate {
    pub fn z_score(&self, target: f64) -> f64 {
        if self.stderr == 0.0 {
            if self.mean == target { 0.0 } else { f64::INFINITY }
        } else {
            (self.mean - target) / self.stderr
        }
    }
}

pub const BATCHES_PER_CHAIN: usize = 16;

/// Batch means over the per-chain sample sequences (all of equal length).
pub fn batch_means(series: &[Vec<f64>]) -> Estimate {
    let n: usize = series.iter().map(Vec::len).sum();
    if n == 0 {
        return Estimate { mean: f64::NAN, stderr: f64::NAN, n_samples: 0, ess: 0.0 };
    }
    let mean = series.iter().flatten().sum::<f64>() / n as f64;
    let var = series.iter().flatten().map(|x| (x - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
    let mut bm = Vec::new();
    for s in series {
        let nb = BATCHES_PER_CHAIN.min(s.len());
        if nb == 0 {
            continue;
        }
        let size = s.len() / nb;
        for b in 0..nb {
            let chunk = &s[b * size..if b + 1 == nb { s.len() } else { (b + 1) * size }];
            bm.push((chunk.iter().sum::<f64>() / chunk.len() as f64, chunk.len()));
        }
    }
    let nb = bm.len();
    let var_mean = if nb > 1 {
        let m = bm.iter().map(|(x, _)| x).sum::<f64>() / nb as f64;
        bm.iter().map(|(x, _)| (x - m).powi(2)).sum::<f64>() / ((nb - 1) * nb) as f64
    } else {
        var / n as f64
    };
    let stderr = var_mean.max(0.0).sqrt();
    let ess = if var_mean > 0.0 { (var / var_mean).min(n as f64) } else { n as f64 };
    Estimate { mean, stderr, n_samples: n, ess }
}

/// Runs `schedule.chains` independent chains (in parallel) and records `f` after every
/// `thin` sweeps; returns one estimate per component of `f`.
pub fn estimate_many<F>(
    domain: &Domain,
    bc: &BoundaryPartition,
    spec: &MeasureSpec,
    kind: SamplerKind,
    schedule: &Schedule,
    seed: u64,
    f: F,
) -> Result<Vec<Estimate>>
where
    F: Fn(&EdgeConfiguration) -> Vec<f64> + Sync,
{
    Sampler::new(domain, bc.clone(), *spec, kind)?;
    let chains: Vec<Vec<Vec<f64>>> = (0..schedule.chains as u64)
        .into_par_iter()
        .map(|k| {
            let mut s = Sampler::new(domain, bc.clone(), *spec, kind).expect("validated");
            let mut st = ChainState::new(domain.num_edges(), seed, k);
            for _ in 0..schedule.burn_in {
                s.sweep(&mut st);
            }
            let mut rows: Vec<Vec<f64>> = Vec::new();
            for _ in 0..schedule.samples {
                for _ in 0..schedule.thin.max(1) {
                    s.sweep(&mut st);
                }
                let v = f(&st.config);
                if rows.is_empty() {
                    rows = vec![Vec::with_capacity(schedule.samples); v.len()];
                }
                for (r, x) in rows.iter_mut().zip(v) {
                    r.push(x);
                }
            }
            rows
        })
        .collect();
    let m = chains.iter().map(Vec::len).max().unwrap_or(0);
    Ok((0..m)
        .map(|j| {
            let series: Vec<Vec<f64>> = chains.iter().map(|c| c[j].clone()).collect();
            batch_means(&series)
        })
        .collect())
}

pub fn estimate<F>(
    domain: &Domain,
    bc: &BoundaryPartition,
    spec: &MeasureSpec,
    kind: SamplerKind,
    schedule: &Schedule,
    seed: u64,
    f: F,
) -> Result<Estimate>
where
    F: Fn(&EdgeConfiguration) -> f64 + Sync,
{
    Ok(estimate_many(domain, bc, spec, kind, schedule, seed, |c| vec![f(c)])?[0])
}

/// Visit counts of every configuration index (domains with at most 24 edges).
pub fn configuration_histogram(
    domain: &Domain,
    bc: &BoundaryPartition,
    spec: &MeasureSpec,
    kind: SamplerKind,
    schedule: &Schedule,
    seed: u64,
) -> Result<Vec<u64>> {
    crate::engines::exact::check_limit(domain, 24)?;
    let ne = domain.num_edges();
    let hists: Vec<Vec<u64>> = (0..schedule.chains as u64)
        .into_par_iter()
        .map(|k| {
            let mut s = Sampler::new(domain, bc.clone(), *spec, kind).expect("validated");
            let mut st = ChainState::new(ne, seed, k);
            let mut h = vec![0u64; 1 << ne];
            for _ in 0..schedule.burn_in {
                s.sweep(&mut st);
            }
            for _ in 0..schedule.samples {
                for _ in 0..schedule.thin.max(1) {
                    s.sweep(&mut st);
                }
                h[st.config.index() as usize] += 1;
            }
            h
        })
        .collect();
    Sampler::new(domain, bc.clone(), *spec, kind)?;
    let mut total = vec![0u64; 1 << ne];
    for h in hists {
        total.iter_mut().zip(h).for_each(|(a, b)| *a += b);
    }
    Ok(total)
}
