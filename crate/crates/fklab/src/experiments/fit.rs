//! Weighted least squares for the trend fits.

use serde::Serialize;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    /// Weighted residual sum of squares (chi squared when the weights are 1/sigma^2).
    pub rss: f64,
    pub points: usize,
}

/// Fits `y = a + b x` with weights `w` (inverse variances). Needs at least two points.
pub fn weighted_linear(x: &[f64], y: &[f64], w: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n || w.len() != n {
        return None;
    }
    let sw: f64 = w.iter().sum();
    let sx: f64 = x.iter().zip(w).map(|(x, w)| w * x).sum();
    let sy: f64 = y.iter().zip(w).map(|(y, w)| w * y).sum();
    let sxx: f64 = x.iter().zip(w).map(|(x, w)| w * x * x).sum();
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((x, y), w)| w * x * y).sum();
    let det = sw * sxx - sx * sx;
    if det <= 0.0 {
        return None;
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let rss: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((x, y), w)| w * (y - intercept - slope * x).powi(2))
        .sum();
    Some(LinearFit {
        intercept,
        slope,
        slope_stderr: (sw / det).sqrt(),
        intercept_stderr: (sxx / det).sqrt(),
        rss,
        points: n,
    })
}

/// Fits `log y = a + b x` from estimates `y` with standard errors `se`, dropping points
/// that are not positive or whose relative error exceeds `max_rel`.
pub fn log_linear(x: &[f64], y: &[f64], se: &[f64], max_rel: f64) -> Option<LinearFit> {
    let mut xs = Vec::new();
    let mut ly = Vec::new();
    let mut w = Vec::new();
    for i in 0..x.len() {
        if y[i] > 0.0 && se[i] / y[i] <= max_rel {
            let rel = (se[i] / y[i]).max(1e-6);
            xs.push(x[i]);
            ly.push(y[i].ln());
            w.push(1.0 / (rel * rel));
        }
    }
    weighted_linear(&xs, &ly, &w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|x| 1.0 - 2.0 * x).collect();
        let f = weighted_linear(&x, &y, &[1.0; 4]).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!(f.rss < 1e-20);
        // ordinary least squares on unit weights: var(b) = 1 / sum (x - xbar)^2
        assert!((f.slope_stderr - (1.0f64 / 5.0).sqrt()).abs() < 1e-12);
        assert!(weighted_linear(&[1.0], &[1.0], &[1.0]).is_none());
    }

    #[test]
    fn exponential_decay() {
        let x: Vec<f64> = (1..6).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|x| 0.5 * (-x / 3.0).exp()).collect();
        let se: Vec<f64> = y.iter().map(|y| 0.01 * y).collect();
        let f = log_linear(&x, &y, &se, 0.5).unwrap();
        assert!((-1.0 / f.slope - 3.0).abs() < 1e-9);
    }
}
