//! Primal, dual and medial structure of the finite domains.
//!
//! Every site carries four slots, one per lattice direction `E, N, W, S`
//! (counted counterclockwise). A slot holds a random edge, a fixed-open
//! ("wired") edge, or nothing. The medial edge `c(x, d)` (a *corner*) runs
//! counterclockwise around `x` from the midpoint of slot `d` to the midpoint
//! of slot `d + 1`; its id is `4 x + d`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EAST: usize = 0;
pub const NORTH: usize = 1;
pub const WEST: usize = 2;
pub const SOUTH: usize = 3;
pub const DIRS: [(i32, i32); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

/// Sentinel for "no corner" / "no edge".
pub const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub x: i32,
    pub y: i32,
    /// Level coordinate of the universal cover, 0 for planar domains.
    pub z: i32,
}

impl Site {
    pub const fn new(x: i32, y: i32) -> Self {
        Site { x, y, z: 0 }
    }
    pub const fn lifted(x: i32, y: i32, z: i32) -> Self {
        Site { x, y, z }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Missing,
    Random { edge: u32, to: u32 },
    Wired { edge: u32, to: u32 },
}

impl Slot {
    pub fn neighbour(self) -> Option<u32> {
        match self {
            Slot::Missing => None,
            Slot::Random { to, .. } | Slot::Wired { to, .. } => Some(to),
        }
    }
}

/// A primal edge from `u` to its neighbour `v` in direction `dir` (east or north).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
    pub dir: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Markings {
    pub a: [i32; 2],
    pub b: [i32; 2],
}

/// JSON-serialisable description of a domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainDescriptor {
    /// `[-n, n]^2`.
    Box { n: u32 },
    /// `[0, width] x [0, height]`.
    Rect { width: u32, height: u32 },
    /// `[0, width] x [0, height]` with the wired arc running counterclockwise from `b` to `a`
    /// (default: the bottom side, `b = (0,0)`, `a = (width, 0)`).
    Dobrushin {
        width: u32,
        height: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        markings: Option<Markings>,
    },
    /// `[-n, n]^2` minus `{(k, 0): k > 0}`.
    Slit { n: u32 },
    /// Universal cover truncated to `|x1|, |x2| <= n`, `|x3| <= T`.
    Cover {
        n: u32,
        #[serde(rename = "T")]
        t: u32,
    },
}

impl DomainDescriptor {
    pub fn build(&self) -> Result<Domain> {
        match *self {
            DomainDescriptor::Box { n } => build_box(n),
            DomainDescriptor::Rect { width, height } => build_rect(width, height),
            DomainDescriptor::Dobrushin { width, height, markings } => match markings {
                None => build_dobrushin_box(width, height),
                Some(m) => build_dobrushin_rect(
                    width,
                    height,
                    Site::new(m.a[0], m.a[1]),
                    Site::new(m.b[0], m.b[1]),
                ),
            },
            DomainDescriptor::Slit { n } => build_slit_domain(n),
            DomainDescriptor::Cover { n, t } => build_universal_cover(n, t),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexKind {
    Random(u32),
    Wired(u32),
    Missing { site: u32, dir: u8 },
    /// The point where the corner next to the origin of the universal cover is cut in two.
    Cut,
}

#[derive(Clone, Copy, Debug)]
pub struct MedialVertex {
    pub kind: VertexKind,
    pub pos: [f64; 2],
    pub level: i32,
}

/// Incident medial edges of an interior medial vertex. `nw` and `se` point towards the
/// vertex, `ne` and `sw` away from it. For horizontal primal edges the labels refer to the
/// frame rotated by a quarter turn, so that the local relation has the same form everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MedialVertexPorts {
    pub vertex: u32,
    pub nw: u32,
    pub ne: u32,
    pub sw: u32,
    pub se: u32,
}

#[derive(Clone, Debug)]
pub struct Domain {
    pub descriptor: DomainDescriptor,
    pub sites: Vec<Site>,
    pub index: HashMap<Site, u32>,
    /// Random edges; edge `i` is bit `i` of a configuration.
    pub edges: Vec<Edge>,
    /// Fixed-open edges along a wired arc.
    pub wired_edges: Vec<Edge>,
    pub slots: Vec<[Slot; 4]>,
    /// Sites of the wired arc, in counterclockwise order from `b` to `a`.
    pub wired_arc: Vec<u32>,
    /// Sites of the free arc, in counterclockwise order from `a` to `b`.
    pub free_arc: Vec<u32>,
    pub a: Option<u32>,
    pub b: Option<u32>,
    /// Slit sides `(k, +-1)`, `0 < k < n`, of the slit domain.
    pub slit_sites: Vec<u32>,
    pub medial: Medial,
}

#[derive(Clone, Debug)]
pub struct Medial {
    pub included: Vec<bool>,
    pub e_a: Option<u32>,
    pub e_b: Option<u32>,
    /// When set, `e_b` is a real corner and `e_a` is the extra id `4 |sites|` standing for
    /// its second half.
    pub split: bool,
    pub vertices: Vec<MedialVertex>,
    pub slot_vertex: Vec<[u32; 4]>,
    pub cut_vertex: u32,
    /// Successor of a corner if the slot it arrives at is closed / open.
    pub succ_closed: Vec<u32>,
    pub succ_open: Vec<u32>,
    /// Random edge in the slot a corner arrives at (`NONE` for wired or missing slots).
    pub gate: Vec<u32>,
    pub ports: Vec<MedialVertexPorts>,
    /// Winding (quarter turns) from each boundary corner to `e_b`, computed once.
    pub boundary_winding: Vec<Option<i32>>,
}

impl Domain {
    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn num_corners(&self) -> usize {
        self.medial.included.len()
    }
    pub fn site_id(&self, s: Site) -> Option<u32> {
        self.index.get(&s).copied()
    }
    pub fn is_planar(&self) -> bool {
        !matches!(self.descriptor, DomainDescriptor::Cover { .. })
    }
    pub fn is_dobrushin(&self) -> bool {
        self.medial.e_a.is_some()
    }
    /// Origin for the degenerate Dobrushin domains (wired arc reduced to one site).
    pub fn origin(&self) -> Option<u32> {
        match self.descriptor {
            DomainDescriptor::Slit { .. } | DomainDescriptor::Cover { .. } => self.b,
            _ => None,
        }
    }

    pub fn corner(&self, x: u32, d: usize) -> u32 {
        4 * x + d as u32
    }

    /// Geometric site and direction of a corner (the extra half-corner maps to `e_b`).
    pub fn corner_site_dir(&self, c: u32) -> (u32, usize) {
        let c = if self.medial.split && c as usize == 4 * self.sites.len() {
            self.medial.e_b.expect("split domains have e_b")
        } else {
            c
        };
        (c / 4, (c % 4) as usize)
    }

    pub fn is_included(&self, c: u32) -> bool {
        self.medial.included.get(c as usize).copied().unwrap_or(false)
    }

    /// Direction of a corner in units of pi/4.
    pub fn octant(&self, c: u32) -> i32 {
        let (_, d) = self.corner_site_dir(c);
        ((2 * d + 3) % 8) as i32
    }

    pub fn tail(&self, c: u32) -> u32 {
        if self.medial.split && Some(c) == self.medial.e_a {
            return self.medial.cut_vertex;
        }
        let (x, d) = self.corner_site_dir(c);
        self.medial.slot_vertex[x as usize][d]
    }

    pub fn head(&self, c: u32) -> u32 {
        if self.medial.split && Some(c) == self.medial.e_b {
            return self.medial.cut_vertex;
        }
        let (x, d) = self.corner_site_dir(c);
        self.medial.slot_vertex[x as usize][(d + 1) % 4]
    }

    /// Planar position of the midpoint of a corner.
    pub fn corner_midpoint(&self, c: u32) -> [f64; 2] {
        let (x, d) = self.corner_site_dir(c);
        let s = self.sites[x as usize];
        let (a, b) = (DIRS[d], DIRS[(d + 1) % 4]);
        [
            s.x as f64 + (a.0 + b.0) as f64 / 4.0,
            s.y as f64 + (a.1 + b.1) as f64 / 4.0,
        ]
    }

    /// Next corner along the loop through `c`, given the state of random edges.
    #[inline]
    pub fn next(&self, c: u32, open: impl Fn(u32) -> bool) -> u32 {
        let g = self.medial.gate[c as usize];
        if g != NONE && open(g) {
            self.medial.succ_open[c as usize]
        } else {
            self.medial.succ_closed[c as usize]
        }
    }

    /// Quarter turn made when going from `c` to its successor `n`.
    #[inline]
    pub fn turn(&self, c: u32, n: u32) -> i32 {
        let delta = (self.octant(n) - self.octant(c)).rem_euclid(8);
        match delta {
            2 => 1,
            6 => -1,
            _ => unreachable!("medial steps always turn by a quarter"),
        }
    }

    /// Sites having at least one missing slot.
    pub fn boundary_sites(&self) -> Vec<u32> {
        (0..self.sites.len() as u32)
            .filter(|&x| self.slots[x as usize].contains(&Slot::Missing))
            .collect()
    }

    /// Interior medial vertices: random edges whose four corners are all present.
    pub fn interior_vertices(&self) -> Vec<u32> {
        self.medial.ports.iter().map(|p| p.vertex).collect()
    }

    pub fn ports(&self, v: u32) -> Option<&MedialVertexPorts> {
        self.medial.ports.iter().find(|p| p.vertex == v)
    }

    pub fn is_interior_vertex(&self, v: u32) -> bool {
        self.ports(v).is_some()
    }

    /// Included corners with an endpoint outside the interior vertex set.
    pub fn boundary_corners(&self) -> Vec<u32> {
        let interior: Vec<bool> = {
            let mut b = vec![false; self.medial.vertices.len()];
            for p in &self.medial.ports {
                b[p.vertex as usize] = true;
            }
            b
        };
        (0..self.num_corners() as u32)
            .filter(|&c| self.is_included(c))
            .filter(|&c| !interior[self.tail(c) as usize] || !interior[self.head(c) as usize])
            .collect()
    }

    /// Corners of site `x` that leave / enter the interior vertex set, as `(exiting, entering)`.
    pub fn boundary_corners_of(&self, x: u32) -> (Vec<u32>, Vec<u32>) {
        let mut out = Vec::new();
        let mut inn = Vec::new();
        for c in self.boundary_corners() {
            if self.corner_site_dir(c).0 != x {
                continue;
            }
            let t = self.is_interior_vertex(self.tail(c));
            let h = self.is_interior_vertex(self.head(c));
            if t && !h {
                out.push(c);
            } else if h && !t {
                inn.push(c);
            }
        }
        (out, inn)
    }

    pub fn vertex_position(&self, v: u32) -> [f64; 2] {
        self.medial.vertices[v as usize].pos
    }
}

struct Builder {
    sites: Vec<Site>,
    index: HashMap<Site, u32>,
    slots: Vec<[Slot; 4]>,
    edges: Vec<Edge>,
    wired: Vec<Edge>,
}

impl Builder {
    fn new(mut sites: Vec<Site>) -> Self {
        sites.sort_by_key(|s| (s.z, s.x, s.y));
        let index = sites.iter().enumerate().map(|(i, s)| (*s, i as u32)).collect();
        let slots = vec![[Slot::Missing; 4]; sites.len()];
        Builder { sites, index, slots, edges: Vec::new(), wired: Vec::new() }
    }

    fn link(&mut self, u: u32, v: u32, dir: usize, wired: bool) {
        let e = Edge { u, v, dir: dir as u8 };
        let slot = if wired {
            self.wired.push(e);
            Slot::Wired { edge: self.wired.len() as u32 - 1, to: v }
        } else {
            self.edges.push(e);
            Slot::Random { edge: self.edges.len() as u32 - 1, to: v }
        };
        self.slots[u as usize][dir] = slot;
        self.slots[v as usize][(dir + 2) % 4] = match slot {
            Slot::Wired { edge, .. } => Slot::Wired { edge, to: u },
            Slot::Random { edge, .. } => Slot::Random { edge, to: u },
            Slot::Missing => unreachable!(),
        };
    }

    /// Links every pair of planar nearest neighbours present in the site set.
    fn link_planar(&mut self, wired: impl Fn(Site, Site) -> bool) {
        for u in 0..self.sites.len() as u32 {
            let s = self.sites[u as usize];
            for dir in [EAST, NORTH] {
                let t = Site::lifted(s.x + DIRS[dir].0, s.y + DIRS[dir].1, s.z);
                if let Some(&v) = self.index.get(&t) {
                    self.link(u, v, dir, wired(s, t));
                }
            }
        }
    }
}

struct Marks {
    wired_arc: Vec<u32>,
    free_arc: Vec<u32>,
    a: Option<u32>,
    b: Option<u32>,
    slit_sites: Vec<u32>,
    e_a: Option<u32>,
    e_b: Option<u32>,
    split: bool,
}

fn finish(
    b: Builder,
    descriptor: DomainDescriptor,
    excluded: impl Fn(u32, usize) -> bool,
    marks: Marks,
) -> Domain {
    let n = b.sites.len();
    let extra = usize::from(marks.split);
    let mut included: Vec<bool> = (0..4 * n).map(|c| !excluded(c as u32 / 4, c % 4)).collect();
    included.extend(std::iter::repeat_n(true, extra));

    // medial vertices
    let mut vertices = Vec::new();
    for (i, e) in b.edges.iter().enumerate() {
        vertices.push(edge_vertex(&b.sites, e, VertexKind::Random(i as u32)));
    }
    for (i, e) in b.wired.iter().enumerate() {
        vertices.push(edge_vertex(&b.sites, e, VertexKind::Wired(i as u32)));
    }
    let mut slot_vertex = vec![[NONE; 4]; n];
    for (x, sv) in slot_vertex.iter_mut().enumerate() {
        for d in 0..4 {
            sv[d] = match b.slots[x][d] {
                Slot::Random { edge, .. } => edge,
                Slot::Wired { edge, .. } => b.edges.len() as u32 + edge,
                Slot::Missing => {
                    let s = b.sites[x];
                    vertices.push(MedialVertex {
                        kind: VertexKind::Missing { site: x as u32, dir: d as u8 },
                        pos: [
                            s.x as f64 + DIRS[d].0 as f64 / 2.0,
                            s.y as f64 + DIRS[d].1 as f64 / 2.0,
                        ],
                        level: s.z,
                    });
                    vertices.len() as u32 - 1
                }
            };
        }
    }
    let cut_vertex = if marks.split {
        let (x, d) = ((marks.e_b.unwrap() / 4) as usize, (marks.e_b.unwrap() % 4) as usize);
        let s = b.sites[x];
        let (p, q) = (DIRS[d], DIRS[(d + 1) % 4]);
        vertices.push(MedialVertex {
            kind: VertexKind::Cut,
            pos: [
                s.x as f64 + (p.0 + q.0) as f64 / 4.0,
                s.y as f64 + (p.1 + q.1) as f64 / 4.0,
            ],
            level: s.z,
        });
        vertices.len() as u32 - 1
    } else {
        NONE
    };

    // successor tables
    let nc = included.len();
    let mut succ_closed = vec![NONE; nc];
    let mut succ_open = vec![NONE; nc];
    let mut gate = vec![NONE; nc];
    for c in 0..nc {
        if !included[c] || Some(c as u32) == marks.e_b {
            continue;
        }
        let geo = if marks.split && c == 4 * n { marks.e_b.unwrap() as usize } else { c };
        let (x, d) = (geo / 4, geo % 4);
        let s = (d + 1) % 4;
        let cont = (4 * x + s) as u32;
        let cross = |to: u32| 4 * to + ((s + 2) % 4) as u32;
        let keep = |t: u32| {
            // arriving at the split corner from its predecessor means arriving at e_b
            if t != NONE && included[t as usize] {
                t
            } else {
                NONE
            }
        };
        match b.slots[x][s] {
            Slot::Missing => {
                succ_closed[c] = keep(cont);
                succ_open[c] = succ_closed[c];
            }
            Slot::Wired { to, .. } => {
                succ_closed[c] = keep(cross(to));
                succ_open[c] = succ_closed[c];
            }
            Slot::Random { edge, to } => {
                succ_closed[c] = keep(cont);
                succ_open[c] = keep(cross(to));
                gate[c] = edge;
            }
        }
    }
    // the geometric corner of e_a is entered only through e_b: redirect
    // nothing here, since split corners keep e_b as the real id.

    let mut domain = Domain {
        descriptor,
        sites: b.sites,
        index: b.index,
        edges: b.edges,
        wired_edges: b.wired,
        slots: b.slots,
        wired_arc: marks.wired_arc,
        free_arc: marks.free_arc,
        a: marks.a,
        b: marks.b,
        slit_sites: marks.slit_sites,
        medial: Medial {
            included,
            e_a: marks.e_a,
            e_b: marks.e_b,
            split: marks.split,
            vertices,
            slot_vertex,
            cut_vertex,
            succ_closed,
            succ_open,
            gate,
            ports: Vec::new(),
            boundary_winding: Vec::new(),
        },
    };
    domain.medial.ports = compute_ports(&domain);
    domain.medial.boundary_winding = compute_boundary_windings(&domain);
    domain
}

fn edge_vertex(sites: &[Site], e: &Edge, kind: VertexKind) -> MedialVertex {
    let s = sites[e.u as usize];
    let (dx, dy) = DIRS[e.dir as usize];
    MedialVertex {
        kind,
        pos: [s.x as f64 + dx as f64 / 2.0, s.y as f64 + dy as f64 / 2.0],
        level: s.z,
    }
}

fn compute_ports(d: &Domain) -> Vec<MedialVertexPorts> {
    let split_geo = if d.medial.split { d.medial.e_b } else { None };
    let incoming = |c: u32| if Some(c) == split_geo { d.medial.e_a.unwrap() } else { c };
    let mut ports = Vec::new();
    for (i, e) in d.edges.iter().enumerate() {
        let dir = e.dir as usize;
        let se = incoming(d.corner(e.u, (dir + 3) % 4));
        let sw = d.corner(e.u, dir);
        let nw = incoming(d.corner(e.v, (dir + 1) % 4));
        let ne = d.corner(e.v, (dir + 2) % 4);
        if [se, sw, nw, ne].iter().all(|&c| d.is_included(c)) {
            ports.push(MedialVertexPorts { vertex: i as u32, nw, ne, sw, se });
        }
    }
    ports
}

/// Windings from boundary corners to `e_b`, read off the exploration paths of the all-open
/// and all-closed configurations (together they visit every boundary corner).
fn compute_boundary_windings(d: &Domain) -> Vec<Option<i32>> {
    let mut out = vec![None; d.num_corners()];
    let (Some(ea), Some(eb)) = (d.medial.e_a, d.medial.e_b) else {
        return out;
    };
    let boundary = d.boundary_corners();
    for open in [true, false] {
        let mut path = vec![ea];
        let mut c = ea;
        while c != eb {
            let n = d.next(c, |_| open);
            assert!(n != NONE, "exploration path stopped before e_b");
            path.push(n);
            c = n;
        }
        let mut w = 0;
        for i in (0..path.len()).rev() {
            if i + 1 < path.len() {
                w += d.turn(path[i], path[i + 1]);
            }
            if boundary.contains(&path[i]) {
                if let Some(prev) = out[path[i] as usize] {
                    assert_eq!(prev, w, "boundary winding differs between configurations");
                }
                out[path[i] as usize] = Some(w);
            }
        }
    }
    out
}

fn check_size(n: u32, what: &str) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidParameter(format!("{what} must be at least 1")));
    }
    Ok(())
}

fn no_marks() -> Marks {
    Marks {
        wired_arc: Vec::new(),
        free_arc: Vec::new(),
        a: None,
        b: None,
        slit_sites: Vec::new(),
        e_a: None,
        e_b: None,
        split: false,
    }
}

/// The box `[-n, n]^2` with all edges random.
pub fn build_box(n: u32) -> Result<Domain> {
    check_size(n, "n")?;
    let n = n as i32;
    let sites = (-n..=n).flat_map(|x| (-n..=n).map(move |y| Site::new(x, y))).collect();
    let mut b = Builder::new(sites);
    b.link_planar(|_, _| false);
    Ok(finish(b, DomainDescriptor::Box { n: n as u32 }, |_, _| false, no_marks()))
}

/// The rectangle `[0, width] x [0, height]` with all edges random.
pub fn build_rect(width: u32, height: u32) -> Result<Domain> {
    check_size(width, "width")?;
    check_size(height, "height")?;
    let (w, h) = (width as i32, height as i32);
    let sites = (0..=w).flat_map(|x| (0..=h).map(move |y| Site::new(x, y))).collect();
    let mut b = Builder::new(sites);
    b.link_planar(|_, _| false);
    Ok(finish(b, DomainDescriptor::Rect { width, height }, |_, _| false, no_marks()))
}

/// Counterclockwise boundary walk of `[0,w] x [0,h]` starting at the origin.
fn rect_walk(w: i32, h: i32) -> Vec<Site> {
    let mut walk = Vec::new();
    walk.extend((0..w).map(|x| Site::new(x, 0)));
    walk.extend((0..h).map(|y| Site::new(w, y)));
    walk.extend((1..=w).rev().map(|x| Site::new(x, h)));
    walk.extend((1..=h).rev().map(|y| Site::new(0, y)));
    walk
}

/// Dobrushin box `[0, width] x [0, height]`: bottom side wired, `b = (0,0)`, `a = (width,0)`.
pub fn build_dobrushin_box(width: u32, height: u32) -> Result<Domain> {
    build_dobrushin_rect(width, height, Site::new(width as i32, 0), Site::new(0, 0))
}

/// Dobrushin rectangle whose wired arc runs counterclockwise along the boundary from `b`
/// to `a`. Edges between consecutive wired-arc sites are fixed open.
pub fn build_dobrushin_rect(width: u32, height: u32, a: Site, b: Site) -> Result<Domain> {
    check_size(width, "width")?;
    check_size(height, "height")?;
    let (w, h) = (width as i32, height as i32);
    let walk = rect_walk(w, h);
    let pos = |s: Site| walk.iter().position(|&t| t == s);
    let (Some(ia), Some(ib)) = (pos(a), pos(b)) else {
        return Err(Error::InvalidParameter("a and b must lie on the boundary".into()));
    };
    if ia == ib {
        return Err(Error::InvalidParameter("a and b must differ".into()));
    }
    let len = walk.len();
    let arc_len = (ia + len - ib) % len;
    let wired_walk: Vec<Site> = (0..=arc_len).map(|k| walk[(ib + k) % len]).collect();
    let free_walk: Vec<Site> = (0..=len - arc_len).map(|k| walk[(ia + k) % len]).collect();
    let wired_pairs: Vec<(Site, Site)> = wired_walk.windows(2).map(|p| (p[0], p[1])).collect();

    let sites = (0..=w).flat_map(|x| (0..=h).map(move |y| Site::new(x, y))).collect();
    let mut bld = Builder::new(sites);
    bld.link_planar(|s, t| wired_pairs.contains(&(s, t)) || wired_pairs.contains(&(t, s)));
    let id = |s: Site| bld.index[&s];
    let wired_ids: Vec<u32> = wired_walk.iter().map(|&s| id(s)).collect();
    let free_ids: Vec<u32> = free_walk.iter().map(|&s| id(s)).collect();
    let (ida, idb) = (id(a), id(b));

    let sites_snapshot = bld.sites.clone();
    let slots_snapshot = bld.slots.clone();
    let on_wired = wired_ids.clone();
    let excluded = move |x: u32, d: usize| {
        if !on_wired.contains(&x) {
            return false;
        }
        let s = sites_snapshot[x as usize];
        let (p, q) = (DIRS[d], DIRS[(d + 1) % 4]);
        // face centre times 2
        let fx = 2 * s.x + p.0 + q.0;
        let fy = 2 * s.y + p.1 + q.1;
        let exterior = fx < 0 || fy < 0 || fx > 2 * w || fy > 2 * h;
        if !exterior {
            return false;
        }
        let (s1, s2) = (slots_snapshot[x as usize][d], slots_snapshot[x as usize][(d + 1) % 4]);
        matches!(s1, Slot::Wired { .. })
            || matches!(s2, Slot::Wired { .. })
            || (s1 == Slot::Missing && s2 == Slot::Missing)
    };
    // locate e_a and e_b: the corners of a / b adjacent to an excluded corner
    let e_b = (0..4)
        .map(|d| 4 * idb + d as u32)
        .find(|&c| {
            let (d, s) = ((c % 4) as usize, ((c % 4) as usize + 1) % 4);
            !excluded(idb, d) && bld.slots[idb as usize][s] == Slot::Missing && excluded(idb, s)
        })
        .ok_or_else(|| Error::InvalidParameter("no terminal medial edge at b".into()))?;
    let e_a = (0..4)
        .map(|d| 4 * ida + d as u32)
        .find(|&c| {
            let d = (c % 4) as usize;
            !excluded(ida, d)
                && bld.slots[ida as usize][d] == Slot::Missing
                && excluded(ida, (d + 3) % 4)
        })
        .ok_or_else(|| Error::InvalidParameter("no starting medial edge at a".into()))?;
    let marks = Marks {
        wired_arc: wired_ids,
        free_arc: free_ids,
        a: Some(ida),
        b: Some(idb),
        slit_sites: Vec::new(),
        e_a: Some(e_a),
        e_b: Some(e_b),
        split: false,
    };
    let markings = if a == Site::new(w, 0) && b == Site::new(0, 0) {
        None
    } else {
        Some(Markings { a: [a.x, a.y], b: [b.x, b.y] })
    };
    Ok(finish(bld, DomainDescriptor::Dobrushin { width, height, markings }, excluded, marks))
}

/// The domain left after the first step of the exploration path: the edge met by
/// `e_a` is fixed (open: it joins the wired arc; closed: it is removed) and `e_a`
/// moves to its successor. Corner ids are unchanged.
pub fn condition_first_step(domain: &Domain, open: bool) -> Result<Domain> {
    let m = &domain.medial;
    let Some(ea) = m.e_a else {
        return Err(Error::UnsupportedDomain("no exploration path".into()));
    };
    if m.split {
        return Err(Error::UnsupportedDomain("conditioning is planar only".into()));
    }
    let g = m.gate[ea as usize];
    let open = open && g != NONE;
    let next = if open { m.succ_open[ea as usize] } else { m.succ_closed[ea as usize] };
    if next == NONE || Some(ea) == m.e_b {
        return Err(Error::UnsupportedDomain("exploration path has no first step".into()));
    }
    let mut bld = Builder::new(domain.sites.clone());
    for (i, e) in domain.edges.iter().enumerate() {
        if i as u32 == g {
            if open {
                bld.link(e.u, e.v, e.dir as usize, true);
            }
        } else {
            bld.link(e.u, e.v, e.dir as usize, false);
        }
    }
    for e in &domain.wired_edges {
        bld.link(e.u, e.v, e.dir as usize, true);
    }
    let new_site = next / 4;
    let mut wired_arc = domain.wired_arc.clone();
    let mut free_arc = domain.free_arc.clone();
    if g != NONE {
        let e = domain.edges[g as usize];
        let far = if e.u == ea / 4 { e.v } else { e.u };
        let arc = if open { &mut wired_arc } else { &mut free_arc };
        if !arc.contains(&far) {
            arc.push(far);
        }
    }
    let included = m.included.clone();
    let marks = Marks {
        wired_arc,
        free_arc,
        a: Some(new_site),
        b: domain.b,
        slit_sites: domain.slit_sites.clone(),
        e_a: Some(next),
        e_b: m.e_b,
        split: false,
    };
    Ok(finish(
        bld,
        domain.descriptor.clone(),
        move |x, d| !included[4 * x as usize + d] || 4 * x + d as u32 == ea,
        marks,
    ))
}

/// Slit domain `[-n, n]^2 \ {(k, 0): k > 0}` seen as a Dobrushin domain with wired arc `{0}`.
pub fn build_slit_domain(n: u32) -> Result<Domain> {
    check_size(n, "n")?;
    let m = n as i32;
    let sites = (-m..=m)
        .flat_map(|x| (-m..=m).map(move |y| Site::new(x, y)))
        .filter(|s| !(s.y == 0 && s.x > 0))
        .collect();
    let mut b = Builder::new(sites);
    b.link_planar(|_, _| false);
    let o = b.index[&Site::new(0, 0)];
    let slit_sites = (1..m)
        .flat_map(|k| [Site::new(k, 1), Site::new(k, -1)])
        .map(|s| b.index[&s])
        .collect();
    let marks = Marks {
        wired_arc: vec![o],
        free_arc: Vec::new(),
        a: Some(o),
        b: Some(o),
        slit_sites,
        e_a: Some(4 * o + EAST as u32),
        e_b: Some(4 * o + SOUTH as u32),
        split: false,
    };
    Ok(finish(b, DomainDescriptor::Slit { n }, |_, _| false, marks))
}

/// Universal cover of the plane punctured at `(1/2, -1/2)`, truncated to
/// `|x1|, |x2| <= n` and `|x3| <= t`.
pub fn build_universal_cover(n: u32, t: u32) -> Result<Domain> {
    check_size(n, "n")?;
    check_size(t, "T")?;
    let (m, tt) = (n as i32, t as i32);
    let mut sites = Vec::new();
    for z in -tt..=tt {
        for x in -m..=m {
            for y in -m..=m {
                sites.push(Site::lifted(x, y, z));
            }
        }
    }
    let mut b = Builder::new(sites);
    for u in 0..b.sites.len() as u32 {
        let s = b.sites[u as usize];
        if let Some(&v) = b.index.get(&Site::lifted(s.x, s.y + 1, s.z)) {
            b.link(u, v, NORTH, false);
        }
        let target = if s.x == 0 && s.y < 0 {
            Site::lifted(1, s.y, s.z + 1)
        } else {
            Site::lifted(s.x + 1, s.y, s.z)
        };
        if let Some(&v) = b.index.get(&target) {
            b.link(u, v, EAST, false);
        }
    }
    let o = b.index[&Site::lifted(0, 0, 0)];
    let e_b = 4 * o + SOUTH as u32;
    let e_a = 4 * b.sites.len() as u32;
    let marks = Marks {
        wired_arc: vec![o],
        free_arc: Vec::new(),
        a: Some(o),
        b: Some(o),
        slit_sites: Vec::new(),
        e_a: Some(e_a),
        e_b: Some(e_b),
        split: true,
    };
    Ok(finish(b, DomainDescriptor::Cover { n, t }, |_, _| false, marks))
}

/// Planar dual: one dual vertex per face (the outer face included), one dual edge per
/// random primal edge with the same id.
#[derive(Clone, Debug)]
pub struct DualGraph {
    pub faces: Vec<[f64; 2]>,
    pub outer: u32,
    pub edges: Vec<(u32, u32)>,
}

pub fn dual_graph(d: &Domain) -> Result<DualGraph> {
    if !d.is_planar() {
        return Err(Error::UnsupportedDomain("the universal cover has no planar dual".into()));
    }
    if !d.wired_edges.is_empty() {
        return Err(Error::UnsupportedDomain("dual of domains with wired edges".into()));
    }
    // In the all-open configuration every loop is the boundary of one face.
    let nc = 4 * d.num_sites();
    let mut face_of = vec![NONE; nc];
    let mut faces: Vec<Vec<u32>> = Vec::new();
    for start in 0..nc as u32 {
        if face_of[start as usize] != NONE {
            continue;
        }
        let id = faces.len() as u32;
        let mut members = Vec::new();
        let mut c = start;
        loop {
            face_of[c as usize] = id;
            members.push(c);
            let (x, dd) = (c / 4, (c % 4) as usize);
            let s = (dd + 1) % 4;
            c = match d.slots[x as usize][s] {
                Slot::Missing => 4 * x + s as u32,
                Slot::Random { to, .. } | Slot::Wired { to, .. } => 4 * to + ((s + 2) % 4) as u32,
            };
            if c == start {
                break;
            }
        }
        faces.push(members);
    }
    // the outer face is the longest one touching a missing slot
    let outer = faces
        .iter()
        .enumerate()
        .filter(|(_, m)| m.iter().any(|&c| d.slots[(c / 4) as usize].contains(&Slot::Missing)))
        .max_by_key(|(_, m)| m.len())
        .map(|(i, _)| i as u32)
        .unwrap_or(0);
    let centres = faces
        .iter()
        .map(|m| {
            let k = m.len() as f64;
            let s = m.iter().fold([0.0, 0.0], |acc, &c| {
                let p = d.corner_midpoint(c);
                [acc[0] + p[0], acc[1] + p[1]]
            });
            [s[0] / k, s[1] / k]
        })
        .collect();
    let edges = d
        .edges
        .iter()
        .map(|e| {
            let dir = e.dir as usize;
            (face_of[(4 * e.u + dir as u32) as usize], face_of[(4 * e.u + ((dir + 3) % 4) as u32) as usize])
        })
        .collect();
    Ok(DualGraph { faces: centres, outer, edges })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_counts() {
        let b1 = build_box(1).unwrap();
        assert_eq!((b1.num_sites(), b1.num_edges()), (9, 12));
        let b2 = build_box(2).unwrap();
        assert_eq!((b2.num_sites(), b2.num_edges()), (25, 40));
        assert!(build_box(0).is_err());
    }

    #[test]
    fn box_interior_medial_vertices_are_all_edges() {
        let b = build_box(1).unwrap();
        assert_eq!(b.interior_vertices().len(), 12);
    }

    #[test]
    fn dual_of_small_box() {
        let b = build_box(1).unwrap();
        let dual = dual_graph(&b).unwrap();
        assert_eq!(dual.faces.len(), 5);
        let inner = (0..5).filter(|&f| f != dual.outer).count();
        assert_eq!(inner, 4);
        for (i, e) in dual.edges.iter().enumerate() {
            assert_ne!(e.0, e.1, "dual edge {i} is a loop");
        }
    }

    #[test]
    fn slit_structure() {
        let s = build_slit_domain(1).unwrap();
        assert_eq!(s.num_sites(), 8);
        assert_eq!(s.num_edges(), 9);
        let s2 = build_slit_domain(2).unwrap();
        assert_eq!((s2.num_sites(), s2.num_edges()), (23, 34));
        assert_eq!(s2.slit_sites.len(), 2);
        // box boundary (16 sites) plus the two slit sides of (1, +-1), origin counted once
        let bs = s2.boundary_sites();
        assert_eq!(bs.len(), 16 - 1 + 2 + 1);
    }

    #[test]
    fn cover_counts_and_cut() {
        let u = build_universal_cover(2, 2).unwrap();
        assert_eq!(u.num_sites(), 125);
        let u1 = build_universal_cover(1, 1).unwrap();
        let id = |x, y, z| u1.site_id(Site::lifted(x, y, z)).unwrap();
        for z in -1..=1 {
            let s = u1.slots[id(0, -1, z) as usize][EAST];
            if z < 1 {
                assert_eq!(s.neighbour(), Some(id(1, -1, z + 1)));
            } else {
                assert_eq!(s, Slot::Missing);
            }
            assert_eq!(u1.slots[id(0, 0, z) as usize][EAST].neighbour(), Some(id(1, 0, z)));
        }
    }

    #[test]
    fn medial_in_out_balance() {
        for d in [build_box(2).unwrap(), build_slit_domain(2).unwrap(), build_universal_cover(1, 2).unwrap(), build_dobrushin_box(3, 2).unwrap()] {
            let mut indeg = vec![0; d.medial.vertices.len()];
            let mut outdeg = vec![0; d.medial.vertices.len()];
            for c in 0..d.num_corners() as u32 {
                if d.is_included(c) {
                    outdeg[d.tail(c) as usize] += 1;
                    indeg[d.head(c) as usize] += 1;
                }
            }
            for p in &d.medial.ports {
                assert_eq!((indeg[p.vertex as usize], outdeg[p.vertex as usize]), (2, 2));
                let ids = [p.nw, p.ne, p.sw, p.se];
                for i in 0..4 {
                    for j in 0..i {
                        assert_ne!(ids[i], ids[j]);
                    }
                }
                assert_eq!(d.head(p.nw), p.vertex);
                assert_eq!(d.head(p.se), p.vertex);
                assert_eq!(d.tail(p.ne), p.vertex);
                assert_eq!(d.tail(p.sw), p.vertex);
            }
        }
    }

    #[test]
    fn turns_around_a_site_sum_to_full_turn() {
        let b = build_box(1).unwrap();
        let o = b.site_id(Site::new(0, 0)).unwrap();
        // with all edges closed the loop around a site is its four corners
        let mut c = b.corner(o, EAST);
        let mut total = 0;
        for _ in 0..4 {
            let n = b.next(c, |_| false);
            total += b.turn(c, n);
            c = n;
        }
        assert_eq!(total, 4);
        assert_eq!(c, b.corner(o, EAST));
    }

    #[test]
    fn descriptor_round_trip() {
        let d = DomainDescriptor::Cover { n: 1, t: 3 };
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"kind":"cover","n":1,"T":3}"#);
        let back: DomainDescriptor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }
}
