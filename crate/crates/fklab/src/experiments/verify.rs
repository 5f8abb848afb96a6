//! Exact identity suite: local relation, boundary law, contour identity, the q = 4
//! observable, the case table, the one-step martingale and duality.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ExperimentReport, Row};
use crate::engines::exact::{duality_deviation, PathTally};
use crate::engines::explore::{explore_observables, ObservableParams};
use crate::engines::transfer::{connectivity_from, FrontierGraph};
use crate::error::Result;
use crate::fk::{critical_point, dual_parameters, BcKind, BoundaryPartition, MeasureSpec};
use crate::geometry::{build_dobrushin_box, build_rect, build_slit_domain, Domain};
use crate::parafermion::{
    boundary_identity, boundary_law_deviation, contribution_table_check, delta_bound, delta_coefficients,
    g_field, martingale_check, max_local_residual, spin, ObservableField,
};

pub const LOCAL_TOL: f64 = 1e-12;
pub const OFF_CRITICAL_MIN: f64 = 1e-6;
pub const TABLE_TOL: f64 = 1e-14;
pub const BOUNDARY_TOL: f64 = 1e-12;
pub const CONTOUR_TOL: f64 = 1e-10;
/// Round-off allowance for the sign and size conditions on the boundary coefficients.
pub const DELTA_SLACK: f64 = 1e-12;
pub const MARTINGALE_TOL: f64 = 1e-10;
pub const DUALITY_TOL: f64 = 1e-12;
pub const DUAL_POINT_TOL: f64 = 1e-14;

const NAME: &str = "verify";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Dobrushin boxes `[width, height]` for the local relation and the q = 4 checks.
    pub boxes: Vec<[u32; 2]>,
    pub qs: Vec<f64>,
    pub off_critical_q: f64,
    pub off_critical_ps: Vec<f64>,
    /// Box for the case table, the martingale and the boundary law.
    pub small_box: [u32; 2],
    pub table_qs: Vec<f64>,
    pub martingale_qs: Vec<f64>,
    pub boundary_qs: Vec<f64>,
    /// Slit domain size; 0 skips the slit checks.
    pub slit_n: u32,
    /// Whether to compute F on the slit domain (the slow part) for the boundary law.
    pub slit_field: bool,
    pub contour_qs: Vec<f64>,
    pub q4_ps: Vec<f64>,
    pub duality_rect: [u32; 2],
    pub duality_qs: Vec<f64>,
    pub duality_ps: Vec<f64>,
    pub dual_point_qs: Vec<f64>,
    pub limit: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            boxes: vec![[2, 2], [3, 3]],
            qs: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5],
            off_critical_q: 2.0,
            off_critical_ps: vec![0.45, 0.65],
            small_box: [2, 2],
            table_qs: vec![1.5, 2.0, 3.0],
            martingale_qs: vec![1.0, 2.0],
            boundary_qs: vec![1.0, 2.0, 3.0],
            slit_n: 2,
            slit_field: true,
            contour_qs: vec![1.0, 2.0, 2.9],
            q4_ps: vec![0.3, 0.5, 2.0 / 3.0, 0.8],
            duality_rect: [2, 2],
            duality_qs: vec![1.0, 2.0, 3.0],
            duality_ps: vec![0.3, 0.5, 0.7],
            dual_point_qs: (1..=16).map(|k| k as f64 / 4.0).collect(),
            limit: crate::engines::exact::DEFAULT_LIMIT,
        }
    }
}

fn label(d: &Domain) -> String {
    serde_json::to_string(&d.descriptor)
        .unwrap_or_default()
        .chars()
        .filter(|c| c.is_alphanumeric() || *c == ':' || *c == '_')
        .collect()
}

fn dobrushin(tally: &PathTally, p: f64, q: f64) -> Result<ObservableField> {
    Ok(ObservableField::exact(tally.observable_f(p, q, spin(q)?.sigma)))
}

pub fn run(cfg: &VerifyConfig, config: Value, seed: u64) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(NAME, config, seed);
    let row = |q: f64, p: f64, n: u32, quantity: String, value: f64| Row::info(NAME, q, p, Some(n), quantity, value);

    // local relation, off-critical failure and the q = 4 observable on Dobrushin boxes
    for &[w, h] in &cfg.boxes {
        let d = build_dobrushin_box(w, h)?;
        let bc = BoundaryPartition::for_domain(&d, BcKind::Dobrushin)?;
        let tally = PathTally::new(&d, &bc, cfg.limit)?;
        let tag = label(&d);
        for &q in &cfg.qs {
            let pc = critical_point(q)?;
            let r = max_local_residual(&d, &dobrushin(&tally, pc, q)?);
            rep.push(row(q, pc, w, format!("local_residual@{tag}"), r).below(LOCAL_TOL));
        }
        let q = cfg.off_critical_q;
        for &p in &cfg.off_critical_ps {
            let r = max_local_residual(&d, &dobrushin(&tally, p, q)?);
            rep.push(row(q, p, w, format!("off_critical_local_residual@{tag}"), r).above(OFF_CRITICAL_MIN));
        }
        for &p in &cfg.q4_ps {
            let f = ObservableField::exact(tally.observable_f(p, 4.0, 1.0));
            rep.push(row(4.0, p, w, format!("q4_f_residual@{tag}"), max_local_residual(&d, &f)).below(LOCAL_TOL));
            let g = max_local_residual(&d, &g_field(&tally, p, 4.0)?);
            let r = row(4.0, p, w, format!("q4_g_residual@{tag}"), g);
            rep.push(if (p - 2.0 / 3.0).abs() < 1e-12 { r.below(LOCAL_TOL) } else { r.above(OFF_CRITICAL_MIN) });
        }
    }

    // case table, martingale and boundary law on the small box
    let [w, h] = cfg.small_box;
    let d = build_dobrushin_box(w, h)?;
    let tag = label(&d);
    for &q in &cfg.table_qs {
        let pc = critical_point(q)?;
        let spec = MeasureSpec::new(pc, q, BcKind::Dobrushin)?;
        let mut agg = crate::parafermion::ContributionTableReport::default();
        for v in d.interior_vertices() {
            let r = contribution_table_check(&d, &spec, v, cfg.limit)?;
            agg.pairs += r.pairs;
            agg.unclassified += r.unclassified;
            agg.max_relation_deviation = agg.max_relation_deviation.max(r.max_relation_deviation);
            agg.max_weight_ratio_deviation = agg.max_weight_ratio_deviation.max(r.max_weight_ratio_deviation);
            agg.max_table_deviation = agg.max_table_deviation.max(r.max_table_deviation);
            agg.phase_identity_deviation = agg.phase_identity_deviation.max(r.phase_identity_deviation);
        }
        rep.push(row(q, pc, w, format!("table_deviation@{tag}"), agg.max_table_deviation).below(TABLE_TOL));
        rep.push(row(q, pc, w, format!("table_weight_ratio_deviation@{tag}"), agg.max_weight_ratio_deviation).below(TABLE_TOL));
        rep.push(row(q, pc, w, format!("table_relation_deviation@{tag}"), agg.max_relation_deviation).below(TABLE_TOL));
        rep.push(row(q, pc, w, "phase_identity_deviation".into(), agg.phase_identity_deviation).below(TABLE_TOL));
        let unclassified = agg.unclassified as f64;
        rep.push(row(q, pc, w, format!("table_unclassified_pairs@{tag}"), unclassified).checked(0.0, agg.unclassified == 0));
        rep.push(row(q, pc, w, format!("table_pairs@{tag}"), agg.pairs as f64));
    }
    for &q in &cfg.martingale_qs {
        let pc = critical_point(q)?;
        let m = martingale_check(&d, pc, q, cfg.limit)?;
        rep.push(row(q, pc, w, format!("martingale_deviation@{tag}"), m.max_deviation).below(MARTINGALE_TOL));
    }
    let bc = BoundaryPartition::for_domain(&d, BcKind::Dobrushin)?;
    let tally = PathTally::new(&d, &bc, cfg.limit)?;
    for &q in &cfg.boundary_qs {
        let pc = critical_point(q)?;
        let dev = boundary_law_deviation(&d, &dobrushin(&tally, pc, q)?, spin(q)?.sigma, &tally.connectivity(pc, q));
        rep.push(row(q, pc, w, format!("boundary_law_deviation@{tag}"), dev).below(BOUNDARY_TOL));
    }

    // slit domain
    if cfg.slit_n > 0 {
        let n = cfg.slit_n;
        let s = build_slit_domain(n)?;
        let tag = label(&s);
        let origin = s.origin().expect("slit domains have an origin");
        let bc = BoundaryPartition::for_domain(&s, BcKind::Dobrushin)?;
        let graph = FrontierGraph::from_domain(&s, &bc);
        let phi = |p: f64, q: f64| -> Result<Vec<f64>> {
            connectivity_from(&graph, &MeasureSpec::new(p, q, BcKind::Dobrushin)?, origin)
        };
        if cfg.slit_field {
            let params: Vec<ObservableParams> = cfg
                .boundary_qs
                .iter()
                .map(|&q| Ok(ObservableParams { p: critical_point(q)?, q, sigma: spin(q)?.sigma }))
                .collect::<Result<_>>()?;
            for chunk in params.chunks(crate::engines::explore::MAX_PARAMS) {
                let ex = explore_observables(&s, chunk)?;
                for (k, c) in chunk.iter().enumerate() {
                    let field = ObservableField::exact(ex.fields[k].clone());
                    let dev = boundary_law_deviation(&s, &field, c.sigma, &phi(c.p, c.q)?);
                    rep.push(row(c.q, c.p, n, format!("boundary_law_deviation@{tag}"), dev).below(BOUNDARY_TOL));
                    rep.push(row(c.q, c.p, n, format!("local_residual@{tag}"), max_local_residual(&s, &field)).below(LOCAL_TOL));
                }
            }
        }
        // sites along the slit that are not on the boundary of the box
        let along_slit = |x: u32| {
            let st = s.sites[x as usize];
            st.x.abs().max(st.y.abs()) < n as i32
        };
        let mut contour_qs = cfg.contour_qs.clone();
        contour_qs.push(4.0);
        for q in contour_qs {
            let pc = critical_point(q)?;
            let sigma = spin(q)?.sigma;
            let id = boundary_identity(&s, sigma, &phi(pc, q)?)?;
            rep.push(row(q, pc, n, format!("contour_identity_residual@{tag}"), id.residual).below(CONTOUR_TOL));
            rep.push(row(q, pc, n, format!("contour_identity_complex_re@{tag}"), id.complex_lhs[0]));
            let deltas = delta_coefficients(&s, sigma)?;
            if (1.0..=3.0).contains(&q) {
                let slit: Vec<f64> = deltas.iter().filter(|d| along_slit(d.x)).map(|d| d.delta).collect();
                if let Some(max) = slit.iter().copied().reduce(f64::max) {
                    rep.push(row(q, pc, n, format!("max_delta_slit_boundary@{tag}"), max).checked(DELTA_SLACK, max <= DELTA_SLACK));
                }
            }
            if q < 4.0 {
                let excess = deltas.iter().map(|d| d.delta.abs() - delta_bound(sigma)).fold(f64::NEG_INFINITY, f64::max);
                let ok = excess <= DELTA_SLACK;
                rep.push(row(q, pc, n, format!("max_delta_minus_bound@{tag}"), excess).checked(DELTA_SLACK, ok));
            }
        }
    }

    // duality
    let [dw, dh] = cfg.duality_rect;
    let r = build_rect(dw, dh)?;
    let tag = label(&r);
    for &q in &cfg.duality_qs {
        for &p in &cfg.duality_ps {
            let dev = duality_deviation(&r, p, q, cfg.limit)?;
            rep.push(row(q, p, dw, format!("duality_deviation@{tag}"), dev).below(DUALITY_TOL));
        }
    }
    let worst = cfg
        .dual_point_qs
        .iter()
        .map(|&q| {
            let pc = critical_point(q)?;
            Ok((dual_parameters(pc, q)?.0 - pc).abs())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    rep.push(Row::info(NAME, f64::NAN, f64::NAN, None, "self_dual_point_deviation", worst).below(DUAL_POINT_TOL));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        let cfg = VerifyConfig {
            boxes: vec![[2, 2]],
            qs: vec![0.5, 2.0],
            table_qs: vec![2.0],
            martingale_qs: vec![1.0],
            boundary_qs: vec![2.0],
            slit_n: 1,
            contour_qs: vec![2.0],
            q4_ps: vec![0.5, 2.0 / 3.0],
            duality_qs: vec![2.0],
            duality_ps: vec![0.4],
            ..VerifyConfig::default()
        };
        let rep = run(&cfg, Value::Null, 0).unwrap();
        assert!(rep.passed(), "{:#?}", rep.failures());
        assert!(rep.rows.iter().any(|r| r.quantity.starts_with("off_critical")));
    }
}
