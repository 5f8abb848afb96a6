//! Parafermionic observables, local relations, contour sums and boundary coefficients.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::engines::exact::{enumerate_expectation, PathTally};
use crate::engines::mc::{estimate_many, SamplerKind, Schedule};
use crate::engines::explore::{explore_observables, ObservableParams};
use crate::error::{Error, Result};
use crate::fk::{critical_point, weight, BcKind, BoundaryPartition, EdgeConfiguration, MeasureSpec};
use crate::geometry::{condition_first_step, Domain, VertexKind};
use crate::loops::{exploration_path, windings_to_end, Winding};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Spin {
    pub sigma: f64,
}

/// sigma with sin(sigma pi / 2) = sqrt(q) / 2.
pub fn spin(q: f64) -> Result<Spin> {
    if !(0.0..=4.0).contains(&q) || q.is_nan() {
        return Err(Error::ComplexSpinUnsupported(q));
    }
    Ok(Spin { sigma: (q.sqrt() / 2.0).min(1.0).asin() * 2.0 / PI })
}

/// The second expression of the spin, 1 - (2/pi) arccos(sqrt(q)/2).
pub fn spin_from_arccos(q: f64) -> f64 {
    1.0 - 2.0 / PI * (q.sqrt() / 2.0).min(1.0).acos()
}

/// kappa = 4 pi / arccos(-sqrt(q)/2).
pub fn predicted_kappa(q: f64) -> Result<f64> {
    if !(0.0..=4.0).contains(&q) || q.is_nan() {
        return Err(Error::InvalidParameter(format!("q = {q} outside [0, 4]")));
    }
    Ok(4.0 * PI / (-(q.sqrt() / 2.0)).max(-1.0).acos())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMode {
    Exact,
    MonteCarlo,
}

/// Complex value per medial edge (corner id).
#[derive(Clone, Debug)]
pub struct ObservableField {
    pub values: Vec<Complex64>,
    pub stderr: Option<Vec<f64>>,
    pub mode: FieldMode,
}

impl ObservableField {
    pub fn exact(values: Vec<Complex64>) -> Self {
        ObservableField { values, stderr: None, mode: FieldMode::Exact }
    }

    pub fn get(&self, e: u32) -> Complex64 {
        self.values[e as usize]
    }

    /// CSV rows: edge id, midpoint x, midpoint y, Re, Im, stderr.
    pub fn write_csv<W: std::io::Write>(&self, domain: &Domain, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["edge", "x", "y", "re", "im", "stderr"])?;
        for c in 0..domain.num_corners() as u32 {
            if !domain.is_included(c) {
                continue;
            }
            let m = domain.corner_midpoint(c);
            let v = self.values[c as usize];
            let se = self.stderr.as_ref().map_or(0.0, |s| s[c as usize]);
            w.serialize((c, m[0], m[1], v.re, v.im, se))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// F(v) = (1/2) sum of the four incident values.
pub fn vertex_observable(domain: &Domain, field: &ObservableField, v: u32) -> Result<Complex64> {
    let p = domain.ports(v).ok_or(Error::UndefinedVertex(v))?;
    Ok(0.5 * (field.get(p.nw) + field.get(p.ne) + field.get(p.sw) + field.get(p.se)))
}

/// F(NW) - F(SE) - i [F(NE) - F(SW)].
pub fn local_relation_residual(domain: &Domain, field: &ObservableField, v: u32) -> Result<Complex64> {
    let p = domain.ports(v).ok_or(Error::UndefinedVertex(v))?;
    Ok(field.get(p.nw) - field.get(p.se) - I * (field.get(p.ne) - field.get(p.sw)))
}

/// Largest residual modulus over all interior vertices.
pub fn max_local_residual(domain: &Domain, field: &ObservableField) -> f64 {
    domain
        .medial
        .ports
        .iter()
        .map(|p| (field.get(p.nw) - field.get(p.se) - I * (field.get(p.ne) - field.get(p.sw))).norm())
        .fold(0.0, f64::max)
}

fn direction(domain: &Domain, e: u32) -> f64 {
    domain.octant(e) as f64 * PI / 4.0
}

/// sum over edges exiting V of e^{-iW(e,e_b)} F(e) minus the same over entering edges.
/// The phase e^{-iW(e,e_b)} only depends on the directions of `e` and `e_b`.
pub fn contour_sum(domain: &Domain, field: &ObservableField, vset: &[u32]) -> Result<Complex64> {
    let eb = domain.medial.e_b.ok_or_else(|| Error::UnsupportedDomain("no e_b".into()))?;
    let mut inside = vec![false; domain.medial.vertices.len()];
    for &v in vset {
        if !domain.is_interior_vertex(v) {
            return Err(Error::UndefinedVertex(v));
        }
        inside[v as usize] = true;
    }
    let theta_b = direction(domain, eb);
    let mut sum = Complex64::new(0.0, 0.0);
    for c in 0..domain.num_corners() as u32 {
        if !domain.is_included(c) {
            continue;
        }
        let (t, h) = (inside[domain.tail(c) as usize], inside[domain.head(c) as usize]);
        let phase = Complex64::from_polar(1.0, direction(domain, c) - theta_b);
        if t && !h {
            sum += phase * field.get(c);
        } else if h && !t {
            sum -= phase * field.get(c);
        }
    }
    Ok(sum)
}

/// Boundary corners touching the free part of the boundary (a missing slot or the cut).
pub fn free_boundary_corners(domain: &Domain) -> Vec<u32> {
    let free = |v: u32| matches!(domain.medial.vertices[v as usize].kind, VertexKind::Missing { .. } | VertexKind::Cut);
    (0..domain.num_corners() as u32)
        .filter(|&c| domain.is_included(c) && (free(domain.tail(c)) || free(domain.head(c))))
        .collect()
}

/// Largest deviation from F(e) = e^{i sigma W(e,e_b)} P(x <-> wired arc) over free boundary corners,
/// `connectivity[x]` being the connection probability of site `x`.
pub fn boundary_law_deviation(domain: &Domain, field: &ObservableField, sigma: f64, connectivity: &[f64]) -> f64 {
    free_boundary_corners(domain)
        .into_iter()
        .map(|c| {
            let w = domain.medial.boundary_winding[c as usize].expect("boundary winding cached");
            let x = domain.corner_site_dir(c).0;
            let expected = Complex64::from_polar(connectivity[x as usize], sigma * w as f64 * FRAC_PI_2);
            (field.get(c) - expected).norm()
        })
        .fold(0.0, f64::max)
}

/// Closed form of the boundary coefficient with the start winding 3 pi / 2 of the slit domain.
pub fn delta_coefficient(sigma: f64, w_in: Winding, w_out: Winding) -> f64 {
    let (wi, wo) = (w_in.radians(), w_out.radians());
    let s = sigma - 1.0;
    (s * ((wo + wi) / 2.0 - 3.0 * PI / 4.0)).cos() * (s * (wo - wi) / 2.0).sin() / (s * 3.0 * PI / 4.0).sin()
}

/// 1 / sin((1 - sigma) 3 pi / 4).
pub fn delta_bound(sigma: f64) -> f64 {
    1.0 / ((1.0 - sigma) * 3.0 * PI / 4.0).sin()
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaCoefficient {
    pub x: u32,
    pub delta: f64,
    pub windings_in: Vec<Winding>,
    pub windings_out: Vec<Winding>,
}

/// Boundary coefficients of all boundary sites except the origin, for a degenerate
/// Dobrushin domain (wired arc = origin). For sigma = 1 the coefficients of the
/// W e^{iW} observable are returned.
pub fn delta_coefficients(domain: &Domain, sigma: f64) -> Result<Vec<DeltaCoefficient>> {
    let origin = domain.origin().ok_or_else(|| Error::UnsupportedDomain("no origin".into()))?;
    let bw = |c: u32| domain.medial.boundary_winding[c as usize].expect("boundary winding cached");
    let w_a = bw(domain.medial.e_a.unwrap()) as f64 * FRAC_PI_2;
    let s = sigma - 1.0;
    let c0 = 1.0 - Complex64::from_polar(1.0, s * w_a);
    let mut out = Vec::new();
    for x in 0..domain.num_sites() as u32 {
        let (exiting, entering) = domain.boundary_corners_of(x);
        if exiting.is_empty() && entering.is_empty() {
            continue;
        }
        if x == origin {
            continue;
        }
        let wo: Vec<Winding> = exiting.iter().map(|&c| Winding { quarter_turns: bw(c) }).collect();
        let wi: Vec<Winding> = entering.iter().map(|&c| Winding { quarter_turns: bw(c) }).collect();
        let delta = if (1.0 - sigma).abs() < 1e-12 {
            let s_out: f64 = wo.iter().map(|w| w.radians()).sum();
            let s_in: f64 = wi.iter().map(|w| w.radians()).sum();
            (s_out - s_in) / w_a
        } else {
            let a: Complex64 = wo.iter().map(|w| Complex64::from_polar(1.0, s * w.radians())).sum::<Complex64>()
                - wi.iter().map(|w| Complex64::from_polar(1.0, s * w.radians())).sum::<Complex64>();
            (a / (-c0)).re
        };
        out.push(DeltaCoefficient { x, delta, windings_in: wi, windings_out: wo });
    }
    Ok(out)
}

/// One coefficient; the origin is excluded.
pub fn delta_for_site(domain: &Domain, x: u32, sigma: f64) -> Result<DeltaCoefficient> {
    if Some(x) == domain.origin() {
        return Err(Error::ExcludedSite(x));
    }
    delta_coefficients(domain, sigma)?
        .into_iter()
        .find(|d| d.x == x)
        .ok_or_else(|| Error::InvalidParameter(format!("site {x} is not on the boundary")))
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryIdentity {
    /// sum over x != 0 of delta_x P(0 <-> x); equals 1.
    pub lhs: f64,
    pub residual: f64,
    /// Complex precursor; equals i.
    pub complex_lhs: [f64; 2],
}

/// Evaluates the contour identity from connection probabilities to the origin.
pub fn boundary_identity(domain: &Domain, sigma: f64, connectivity: &[f64]) -> Result<BoundaryIdentity> {
    let deltas = delta_coefficients(domain, sigma)?;
    let lhs: f64 = deltas.iter().map(|d| d.delta * connectivity[d.x as usize]).sum();
    let bw = |c: u32| domain.medial.boundary_winding[c as usize].unwrap() as f64 * FRAC_PI_2;
    let s = sigma - 1.0;
    let half = s * bw(domain.medial.e_a.unwrap()) / 2.0;
    let norm = 2.0 * half.sin() * Complex64::from_polar(1.0, half);
    let mut z = Complex64::new(0.0, 0.0);
    if (1.0 - sigma).abs() > 1e-12 {
        for d in &deltas {
            let a: Complex64 = d.windings_out.iter().map(|w| Complex64::from_polar(1.0, s * w.radians())).sum::<Complex64>()
                - d.windings_in.iter().map(|w| Complex64::from_polar(1.0, s * w.radians())).sum::<Complex64>();
            z += a / norm * connectivity[d.x as usize];
        }
    } else {
        z = Complex64::new(0.0, lhs);
    }
    Ok(BoundaryIdentity { lhs, residual: (lhs - 1.0).abs(), complex_lhs: [z.re, z.im] })
}

/// Exact F on a Dobrushin-type domain: configuration enumeration up to `limit`
/// edges, exploration-path enumeration beyond.
pub fn exact_field(domain: &Domain, p: f64, q: f64, limit: usize) -> Result<ObservableField> {
    let sigma = spin(q)?.sigma;
    let bc = BoundaryPartition::for_domain(domain, BcKind::Dobrushin)?;
    if domain.num_edges() <= limit {
        let t = PathTally::new(domain, &bc, limit)?;
        return Ok(ObservableField::exact(t.observable_f(p, q, sigma)));
    }
    let ex = explore_observables(domain, &[ObservableParams { p, q, sigma }])?;
    Ok(ObservableField::exact(ex.fields.into_iter().next().unwrap()))
}

/// G(e) = E[W e^{iW} 1{e in gamma}], defined for q = 4 only.
pub fn g_field(tally: &PathTally, p: f64, q: f64) -> Result<ObservableField> {
    if q != 4.0 {
        return Err(Error::WrongObservable(q));
    }
    Ok(ObservableField::exact(tally.observable_g(p)))
}

/// G(NW) - G(SE) - i [G(NE) - G(SW)]; the same combination as for F.
pub fn q4_relation_residual(domain: &Domain, field: &ObservableField, v: u32) -> Result<Complex64> {
    local_relation_residual(domain, field, v)
}

/// e^{i sigma pi/2} - e^{-i sigma pi/2} - i sqrt(q).
pub fn phase_identity_deviation(q: f64) -> Result<f64> {
    let s = spin(q)?.sigma;
    let lhs = Complex64::from_polar(1.0, s * FRAC_PI_2) - Complex64::from_polar(1.0, -s * FRAC_PI_2);
    Ok((lhs - I * q.sqrt()).norm())
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ContributionTableReport {
    pub pairs: usize,
    /// Pairs where the path avoids the vertex in both configurations.
    pub avoiding: usize,
    /// Pairs where one configuration visits two ports and the other all four.
    pub visiting: usize,
    /// Largest violation of the paired local relation.
    pub max_relation_deviation: f64,
    /// Largest deviation of weight(four-port) / weight(two-port) from 1/sqrt(q).
    pub max_weight_ratio_deviation: f64,
    /// Largest deviation of a port contribution from its table entry.
    pub max_table_deviation: f64,
    pub phase_identity_deviation: f64,
    /// Pairs fitting none of the cases (must be 0).
    pub unclassified: usize,
}

impl ContributionTableReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.unclassified == 0
            && self.max_relation_deviation < tol
            && self.max_weight_ratio_deviation < tol
            && self.max_table_deviation < tol
            && self.phase_identity_deviation < tol
    }
}

/// Pairs every configuration with the one differing at the edge of `v` and checks the
/// paired relation and the case table of the local-relation argument.
pub fn contribution_table_check(domain: &Domain, spec: &MeasureSpec, v: u32, limit: usize) -> Result<ContributionTableReport> {
    crate::engines::exact::check_limit(domain, limit)?;
    let ports = *domain.ports(v).ok_or(Error::UndefinedVertex(v))?;
    let VertexKind::Random(edge) = domain.medial.vertices[v as usize].kind else {
        return Err(Error::UndefinedVertex(v));
    };
    let sigma = spin(spec.q)?.sigma;
    let bc = BoundaryPartition::for_domain(domain, BcKind::Dobrushin)?;
    let ne = domain.num_edges();
    let z: f64 = (0..1u64 << ne)
        .map(|i| weight(domain, &EdgeConfiguration::from_index(i, ne), &bc, spec))
        .sum();
    let order = [ports.nw, ports.se, ports.ne, ports.sw];
    // contributions at (NW, SE, NE, SW) and the weight
    let contrib = |cfg: &EdgeConfiguration| -> ([Option<Complex64>; 4], f64) {
        let w = weight(domain, cfg, &bc, spec) / z;
        let path = exploration_path(domain, cfg);
        let wind = windings_to_end(domain, &path);
        let mut out = [None; 4];
        for (c, wi) in path.iter().zip(wind) {
            if let Some(k) = order.iter().position(|o| o == c) {
                out[k] = Some(w * Complex64::from_polar(1.0, sigma * wi as f64 * FRAC_PI_2));
            }
        }
        (out, w)
    };
    let turn = |a: u32, b: u32| Complex64::from_polar(1.0, -sigma * domain.turn(a, b) as f64 * FRAC_PI_2);
    let rel = |a: &[Option<Complex64>; 4], b: &[Option<Complex64>; 4]| {
        let s = |k: usize| a[k].unwrap_or_default() + b[k].unwrap_or_default();
        (s(0) - s(1) - I * (s(2) - s(3))).norm()
    };
    let mut r = ContributionTableReport { phase_identity_deviation: phase_identity_deviation(spec.q)?, ..Default::default() };
    for idx in 0..1u64 << ne {
        if idx >> edge & 1 == 1 {
            continue;
        }
        let c0 = EdgeConfiguration::from_index(idx, ne);
        let c1 = EdgeConfiguration::from_index(idx | 1 << edge, ne);
        let (a, wa) = contrib(&c0);
        let (b, wb) = contrib(&c1);
        r.pairs += 1;
        r.max_relation_deviation = r.max_relation_deviation.max(rel(&a, &b));
        let na = a.iter().flatten().count();
        let nb = b.iter().flatten().count();
        match (na, nb) {
            (0, 0) => r.avoiding += 1,
            (2, 4) | (4, 2) => {
                r.visiting += 1;
                let ((two, w2), (four, w4)) = if na == 2 { ((a, wa), (b, wb)) } else { ((b, wb), (a, wa)) };
                r.max_weight_ratio_deviation = r.max_weight_ratio_deviation.max((w4 / w2 - 1.0 / spec.q.sqrt()).abs());
                // entry port (NW or SE) and exit port (NE or SW) in the two-port configuration
                let (k_in, k_out) = (if two[0].is_some() { 0 } else { 1 }, if two[2].is_some() { 2 } else { 3 });
                let (k_in2, k_out2) = (1 - k_in, 5 - k_out);
                let base = two[k_in].unwrap();
                let mut expect2 = [None; 4];
                expect2[k_in] = Some(base);
                expect2[k_out] = Some(base * turn(order[k_in], order[k_out]));
                let sq = spec.q.sqrt();
                let mut expect4 = [None; 4];
                expect4[k_in] = Some(base / sq);
                expect4[k_out2] = Some(base * turn(order[k_in], order[k_out2]) / sq);
                let out_phase = base * turn(order[k_in], order[k_out]) / sq;
                expect4[k_out] = Some(out_phase);
                expect4[k_in2] = Some(out_phase / turn(order[k_in2], order[k_out]));
                for k in 0..4 {
                    for (got, want) in [(two[k], expect2[k]), (four[k], expect4[k])] {
                        let dev = match (got, want) {
                            (Some(g), Some(w)) => (g - w).norm(),
                            (None, None) => 0.0,
                            _ => f64::INFINITY,
                        };
                        r.max_table_deviation = r.max_table_deviation.max(dev);
                    }
                }
            }
            _ => r.unclassified += 1,
        }
    }
    Ok(r)
}

#[derive(Clone, Debug, Serialize)]
pub struct MartingaleReport {
    /// Probability that the first edge met by the path is open.
    pub p_open: f64,
    pub max_deviation: f64,
    pub corners_compared: usize,
}

/// Compares F with the average over the first step of the observable of the
/// conditioned domain, on every medial edge other than the old `e_a`.
pub fn martingale_check(domain: &Domain, p: f64, q: f64, limit: usize) -> Result<MartingaleReport> {
    let sigma = spin(q)?.sigma;
    let ea = domain.medial.e_a.ok_or_else(|| Error::UnsupportedDomain("no exploration path".into()))?;
    let bc = BoundaryPartition::for_domain(domain, BcKind::Dobrushin)?;
    let f = PathTally::new(domain, &bc, limit)?.observable_f(p, q, sigma);
    let g = domain.medial.gate[ea as usize];
    let spec = MeasureSpec::new(p, q, BcKind::Dobrushin)?;
    let p_open = if g == crate::geometry::NONE {
        0.0
    } else {
        enumerate_expectation(domain, &bc, &spec, limit, |c| f64::from(u8::from(c.is_open(g as usize))))?
    };
    let mut avg = vec![Complex64::new(0.0, 0.0); f.len()];
    for (open, prob) in [(true, p_open), (false, 1.0 - p_open)] {
        if prob == 0.0 {
            continue;
        }
        let sub = condition_first_step(domain, open)?;
        let sbc = BoundaryPartition::for_domain(&sub, BcKind::Dobrushin)?;
        let fs = PathTally::new(&sub, &sbc, limit)?.observable_f(p, q, sigma);
        for (a, x) in avg.iter_mut().zip(fs) {
            *a += prob * x;
        }
    }
    let mut max_deviation: f64 = 0.0;
    let mut corners_compared = 0;
    for c in 0..f.len() as u32 {
        if c == ea || !domain.is_included(c) {
            continue;
        }
        corners_compared += 1;
        max_deviation = max_deviation.max((f[c as usize] - avg[c as usize]).norm());
    }
    Ok(MartingaleReport { p_open, max_deviation, corners_compared })
}

/// F estimated by sampling the Dobrushin measure. The standard error of each edge is the
/// modulus of the real and imaginary standard errors.
pub fn monte_carlo_field(
    domain: &Domain,
    p: f64,
    q: f64,
    kind: SamplerKind,
    schedule: &Schedule,
    seed: u64,
) -> Result<ObservableField> {
    let sigma = spin(q)?.sigma;
    let bc = BoundaryPartition::for_domain(domain, BcKind::Dobrushin)?;
    let spec = MeasureSpec::new(p, q, BcKind::Dobrushin)?;
    let nc = domain.num_corners();
    let est = estimate_many(domain, &bc, &spec, kind, schedule, seed, |c| {
        let path = exploration_path(domain, c);
        let w = windings_to_end(domain, &path);
        let mut out = vec![0.0; 2 * nc];
        for (&e, &t) in path.iter().zip(&w) {
            let z = Complex64::from_polar(1.0, sigma * t as f64 * FRAC_PI_2);
            out[2 * e as usize] += z.re;
            out[2 * e as usize + 1] += z.im;
        }
        out
    })?;
    let values = (0..nc).map(|c| Complex64::new(est[2 * c].mean, est[2 * c + 1].mean)).collect();
    let stderr = (0..nc).map(|c| est[2 * c].stderr.hypot(est[2 * c + 1].stderr)).collect();
    Ok(ObservableField { values, stderr: Some(stderr), mode: FieldMode::MonteCarlo })
}

/// Convenience: F at p_c(q).
pub fn critical_field(domain: &Domain, q: f64, limit: usize) -> Result<ObservableField> {
    exact_field(domain, critical_point(q)?, q, limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::exact::DEFAULT_LIMIT;
    use crate::geometry::{build_dobrushin_box, build_slit_domain, Site};

    #[test]
    fn spin_values() {
        assert!((spin(2.0).unwrap().sigma - 0.5).abs() < 1e-15);
        assert!((spin(4.0).unwrap().sigma - 1.0).abs() < 1e-15);
        assert!((spin(3.0).unwrap().sigma - 2.0 / 3.0).abs() < 1e-15);
        assert!(spin(4.5).is_err());
        for i in 0..=400 {
            let q = i as f64 / 100.0;
            assert!((spin(q).unwrap().sigma - spin_from_arccos(q)).abs() < 1e-12);
        }
    }

    #[test]
    fn kappa_values() {
        assert!((predicted_kappa(0.0).unwrap() - 8.0).abs() < 1e-12);
        assert!((predicted_kappa(1.0).unwrap() - 6.0).abs() < 1e-12);
        assert!((predicted_kappa(4.0).unwrap() - 4.0).abs() < 1e-12);
        assert!(predicted_kappa(5.0).is_err());
    }

    #[test]
    fn vertex_observable_arithmetic() {
        let d = build_slit_domain(1).unwrap();
        let v = d.medial.ports[0].vertex;
        let p = d.medial.ports[0];
        let mut vals = vec![Complex64::new(0.0, 0.0); d.num_corners()];
        let f = ObservableField::exact(vals.clone());
        assert_eq!(vertex_observable(&d, &f, v).unwrap(), Complex64::new(0.0, 0.0));
        vals[p.nw as usize] = Complex64::new(1.0, 0.0);
        vals[p.ne as usize] = I;
        vals[p.sw as usize] = Complex64::new(-1.0, 0.0);
        vals[p.se as usize] = -I;
        let f = ObservableField::exact(vals);
        assert!(vertex_observable(&d, &f, v).unwrap().norm() < 1e-15);
        let boundary = d.medial.vertices.len() as u32 - 1;
        assert!(matches!(vertex_observable(&d, &f, boundary), Err(Error::UndefinedVertex(_))));
    }

    #[test]
    fn slit_delta_closed_form_matches_general() {
        let s = build_slit_domain(3).unwrap();
        for q in [0.5, 1.0, 2.0, 2.9, 3.5] {
            let sigma = spin(q).unwrap().sigma;
            for d in delta_coefficients(&s, sigma).unwrap() {
                assert_eq!(d.windings_in.len(), 1);
                let closed = delta_coefficient(sigma, d.windings_in[0], d.windings_out[0]);
                assert!((closed - d.delta).abs() < 1e-12, "q={q} x={:?}", s.sites[d.x as usize]);
            }
        }
        let sigma = 0.5;
        let x = s.site_id(Site::new(1, 1)).unwrap();
        assert!((delta_for_site(&s, x, sigma).unwrap().delta + 0.29289).abs() < 1e-5);
        let o = s.site_id(Site::new(0, 0)).unwrap();
        assert!(matches!(delta_for_site(&s, o, sigma), Err(Error::ExcludedSite(_))));
    }

    #[test]
    fn origin_constant() {
        for k in 1..100 {
            let sigma = k as f64 / 100.0;
            let s = sigma - 1.0;
            let lhs = 1.0 - Complex64::from_polar(1.0, s * 3.0 * PI / 2.0);
            let rhs = -2.0 * I * (s * 3.0 * PI / 4.0).sin() * Complex64::from_polar(1.0, s * 3.0 * PI / 4.0);
            assert!((lhs - rhs).norm() < 1e-14);
        }
    }

    #[test]
    fn proof_table_on_small_box() {
        let d = build_dobrushin_box(2, 2).unwrap();
        for q in [1.5, 2.0, 3.0] {
            let spec = MeasureSpec::new(critical_point(q).unwrap(), q, BcKind::Dobrushin).unwrap();
            for v in d.interior_vertices() {
                let r = contribution_table_check(&d, &spec, v, DEFAULT_LIMIT).unwrap();
                assert!(r.passed(1e-14), "q={q} v={v} {r:?}");
                assert!(r.visiting > 0 && r.avoiding + r.visiting == r.pairs);
            }
        }
    }

    #[test]
    fn canonical_table_row() {
        // entry NW, exit SW: the exit lies a right turn away from the entry
        for q in [1.0, 2.0, 3.0] {
            let s = spin(q).unwrap().sigma;
            let e = |k: f64| Complex64::from_polar(1.0, s * k * FRAC_PI_2);
            let (nw, sq) = (Complex64::new(0.3, 0.1), q.sqrt());
            let row_w = [nw, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), e(1.0) * nw];
            let row_s = [nw / sq, e(2.0) * nw / sq, e(-1.0) * nw / sq, e(1.0) * nw / sq];
            let lhs = row_w[0] + row_s[0] - row_w[1] - row_s[1];
            let rhs = I * (row_w[2] + row_s[2] - row_w[3] - row_s[3]);
            assert!((lhs - rhs).norm() < 1e-15);
            assert!(phase_identity_deviation(q).unwrap() < 1e-15);
        }
    }

    #[test]
    fn martingale_one_step() {
        let d = build_dobrushin_box(2, 2).unwrap();
        for (p, q) in [(critical_point(2.0).unwrap(), 2.0), (0.3, 2.0), (0.5, 1.0)] {
            let r = martingale_check(&d, p, q, DEFAULT_LIMIT).unwrap();
            assert!(r.max_deviation < 1e-12, "{r:?}");
            assert!(r.p_open > 0.0 && r.p_open < 1.0);
        }
    }

    #[test]
    fn q4_observables() {
        let d = build_dobrushin_box(2, 2).unwrap();
        let bc = BoundaryPartition::for_domain(&d, BcKind::Dobrushin).unwrap();
        let t = PathTally::new(&d, &bc, DEFAULT_LIMIT).unwrap();
        let g = g_field(&t, 2.0 / 3.0, 4.0).unwrap();
        assert!(max_local_residual(&d, &g) < 1e-12);
        assert!(g.get(d.medial.e_b.unwrap()).norm() < 1e-15);
        assert!(max_local_residual(&d, &g_field(&t, 0.5, 4.0).unwrap()) > 1e-6);
        assert!(matches!(g_field(&t, 0.5, 3.0), Err(Error::WrongObservable(_))));
        for p in [0.2, 0.5, 2.0 / 3.0, 0.9] {
            let f = ObservableField::exact(t.observable_f(p, 4.0, 1.0));
            assert!(max_local_residual(&d, &f) < 1e-12, "p={p}");
        }
    }

    #[test]
    fn contour_sum_is_rotated_residual_sum() {
        use rand::{Rng, SeedableRng};
        let d = build_slit_domain(2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let vals: Vec<Complex64> = (0..d.num_corners()).map(|_| Complex64::new(rng.random(), rng.random())).collect();
        let f = ObservableField::exact(vals);
        let eb = d.medial.e_b.unwrap();
        let all = d.interior_vertices();
        for set in [vec![all[0]], all[..5].to_vec(), all.clone()] {
            let lhs = contour_sum(&d, &f, &set).unwrap();
            let rhs: Complex64 = set
                .iter()
                .map(|&v| {
                    let p = d.ports(v).unwrap();
                    let rot = Complex64::from_polar(1.0, (d.octant(p.nw) - d.octant(eb)) as f64 * PI / 4.0);
                    -rot * local_relation_residual(&d, &f, v).unwrap()
                })
                .sum();
            assert!((lhs - rhs).norm() < 1e-12, "{lhs} vs {rhs}");
        }
    }
}
