//! Exploratory comparison of |F| with |phi'|^sigma, where phi maps the Dobrushin box onto
//! the strip R x (0, 1). With v = Im phi the harmonic measure of the free arc, Cauchy-Riemann
//! gives phi' = v_y + i v_x, so |phi'| = |grad v|.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::fit::weighted_linear;
use super::{ExperimentReport, Row};
use crate::engines::mc::{SamplerKind, Schedule};
use crate::error::{Error, Result};
use crate::fk::critical_point;
use crate::geometry::{build_dobrushin_box, Domain, Site};
use crate::parafermion::{monte_carlo_field, spin};

const NAME: &str = "scaling";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub qs: Vec<f64>,
    pub n: u32,
    pub schedule: Schedule,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig { qs: vec![1.0, 2.0], n: 8, schedule: Schedule { burn_in: 500, samples: 10_000, thin: 1, chains: 4 } }
    }
}

/// Discrete harmonic measure of the free arc on `[0, n]^2`: 0 on the bottom side, 1 on
/// the three others, solved by successive over-relaxation.
pub fn harmonic_measure(n: u32) -> Vec<Vec<f64>> {
    let n = n as usize;
    let mut v = vec![vec![1.0; n + 1]; n + 1];
    for row in v.iter_mut() {
        row[0] = 0.0;
    }
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / n as f64).sin());
    for _ in 0..100_000 {
        let mut change: f64 = 0.0;
        for x in 1..n {
            for y in 1..n {
                let avg = 0.25 * (v[x - 1][y] + v[x + 1][y] + v[x][y - 1] + v[x][y + 1]);
                let d = omega * (avg - v[x][y]);
                v[x][y] += d;
                change = change.max(d.abs());
            }
        }
        if change < 1e-13 {
            break;
        }
    }
    v
}

/// `|grad v|` at the interior sites by central differences, keyed by site.
fn gradient_norms(v: &[Vec<f64>]) -> Vec<(Site, f64)> {
    let n = v.len() - 1;
    let mut out = Vec::new();
    for x in 1..n {
        for y in 1..n {
            let gx = 0.5 * (v[x + 1][y] - v[x - 1][y]);
            let gy = 0.5 * (v[x][y + 1] - v[x][y - 1]);
            out.push((Site::new(x as i32, y as i32), gx.hypot(gy)));
        }
    }
    out
}

pub fn run(cfg: &ScalingConfig, config: Value, seed: u64) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(NAME, config, seed);
    rep.exploratory = true;
    rep.note("Dobrushin box [0,n]^2 with wired bottom side; |F| at a site is the mean modulus over its four corners");
    rep.note("slope_log_f_vs_log_grad is compared with sigma; no assertion is made");
    if cfg.n < 4 {
        return Err(Error::InvalidParameter(format!("n = {} too small for an interior comparison", cfg.n)));
    }
    let d: Domain = build_dobrushin_box(cfg.n, cfg.n)?;
    let grads = gradient_norms(&harmonic_measure(cfg.n));
    for (k, &q) in cfg.qs.iter().enumerate() {
        let p = critical_point(q)?;
        let sigma = spin(q)?.sigma;
        let kind = if q >= 1.0 { SamplerKind::ChayesMachta } else { SamplerKind::HeatBath };
        let field = monte_carlo_field(&d, p, q, kind, &cfg.schedule, seed.wrapping_add(k as u64))?;
        let se = field.stderr.as_deref().unwrap_or(&[]);
        let (mut xs, mut ys, mut ws) = (Vec::new(), Vec::new(), Vec::new());
        for &(s, g) in &grads {
            let x = d.index[&s];
            let corners: Vec<u32> = (0..4).map(|dir| d.corner(x, dir)).filter(|&c| d.is_included(c)).collect();
            let m = corners.iter().map(|&c| field.get(c).norm()).sum::<f64>() / corners.len() as f64;
            let e = corners.iter().map(|&c| se.get(c as usize).copied().unwrap_or(0.0)).sum::<f64>() / corners.len() as f64;
            if m > 0.0 && g > 0.0 && e < 0.5 * m {
                xs.push(g.ln());
                ys.push(m.ln());
                ws.push((m / e.max(1e-12)).powi(2));
            }
        }
        rep.push(Row::info(NAME, q, p, Some(cfg.n), "sigma", sigma));
        rep.push(Row::info(NAME, q, p, Some(cfg.n), "sites_used", xs.len() as f64));
        if let Some(f) = weighted_linear(&xs, &ys, &ws) {
            rep.push(Row::info(NAME, q, p, Some(cfg.n), "slope_log_f_vs_log_grad", f.slope).with_stderr(f.slope_stderr));
            rep.push(Row::info(NAME, q, p, Some(cfg.n), "slope_minus_sigma", f.slope - sigma).with_stderr(f.slope_stderr));
        }
        rep.push(Row::info(NAME, q, p, Some(cfg.n), "log_correlation", pearson(&xs, &ys)));
    }
    Ok(rep)
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_measure_is_discrete_harmonic() {
        let v = harmonic_measure(6);
        for x in 1..6 {
            for y in 1..6 {
                let lap = v[x - 1][y] + v[x + 1][y] + v[x][y - 1] + v[x][y + 1] - 4.0 * v[x][y];
                assert!(lap.abs() < 1e-11);
            }
        }
        // symmetric under x -> n - x
        assert!((v[1][3] - v[5][3]).abs() < 1e-12);
        assert!(v[3][1] < v[3][5]);
    }

    #[test]
    fn pearson_of_a_line() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5]) - 1.0).abs() < 1e-2);
    }
}
