//! Log-log least squares for scaling exponents.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::stats::t_quantile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// 95% confidence interval on the slope.
    pub ci: (f64, f64),
    pub points: usize,
}

impl ExponentFit {
    pub fn ci_contains(&self, v: f64) -> bool {
        self.ci.0 <= v && v <= self.ci.1
    }

    /// Whether the confidence interval meets `[lo, hi]`.
    pub fn ci_meets(&self, lo: f64, hi: f64) -> bool {
        self.ci.0 <= hi && self.ci.1 >= lo
    }
}

/// Fit `log v = a log n + b` by ordinary least squares over `(n, v)` pairs.
pub fn fit_exponent(rows: &[(f64, f64)]) -> Result<ExponentFit> {
    let with_se: Vec<(f64, f64, f64)> = rows.iter().map(|&(n, v)| (n, v, 0.0)).collect();
    fit_exponent_with_se(&with_se)
}

/// As [`fit_exponent`] over `(n, v, se(v))`. The slope variance adds the residual term
/// `s²/Sxx` and the propagated measurement term `Σ wᵢ² (seᵢ/vᵢ)²`; the interval uses Student t
/// with `m − 2` degrees of freedom.
pub fn fit_exponent_with_se(rows: &[(f64, f64, f64)]) -> Result<ExponentFit> {
    ensure!(rows.len() >= 3, "exponent fit needs at least 3 rows, got {}", rows.len());
    for &(n, v, se) in rows {
        ensure!(n > 0.0 && v > 0.0 && n.is_finite() && v.is_finite(), "exponent fit needs positive finite (n, value), got ({n}, {v})");
        ensure!(se >= 0.0 && se.is_finite(), "standard errors must be finite and nonnegative");
    }
    let m = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    ensure!(sxx > 0.0, "exponent fit needs at least two distinct dimensions");
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let resid_var = rss / (m - 2.0) / sxx;
    let meas_var: f64 = rows
        .iter()
        .zip(&xs)
        .map(|(r, x)| ((x - xbar) / sxx).powi(2) * (r.2 / r.1).powi(2))
        .sum();
    let slope_se = (resid_var + meas_var).sqrt();
    let half = t_quantile(0.95, m - 2.0) * slope_se;
    Ok(ExponentFit { slope, intercept, slope_se, ci: (slope - half, slope + half), points: rows.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng_for;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn exact_power_law() {
        let rows: Vec<(f64, f64)> = [8.0, 16.0, 32.0, 64.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(0.37))).collect();
        let f = fit_exponent(&rows).unwrap();
        assert!((f.slope - 0.37).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        let c = fit_exponent(&[(8.0, 2.0), (16.0, 2.0), (32.0, 2.0)]).unwrap();
        assert!(c.slope.abs() < 1e-15 && c.ci_contains(0.0));
    }

    #[test]
    fn too_few_rows() {
        assert!(fit_exponent(&[(8.0, 1.0), (16.0, 2.0)]).is_err());
        assert!(fit_exponent(&[(8.0, 1.0), (8.0, 2.0), (8.0, 3.0)]).is_err());
        assert!(fit_exponent(&[(8.0, 1.0), (16.0, -2.0), (32.0, 3.0)]).is_err());
    }

    #[test]
    fn coverage_on_noisy_power_law() {
        let mut rng = rng_for(11, 0);
        let mut covered = 0;
        for _ in 0..100 {
            let rows: Vec<(f64, f64)> = [8.0, 16.0, 32.0, 64.0]
                .iter()
                .map(|&n: &f64| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    (n, n.sqrt() * (1.0 + 0.01 * e))
                })
                .collect();
            if fit_exponent(&rows).unwrap().ci_contains(0.5) {
                covered += 1;
            }
        }
        assert!(covered >= 90, "{covered}");
    }

    #[test]
    fn measurement_error_widens_interval() {
        let a = fit_exponent_with_se(&[(8.0, 1.0, 0.0), (16.0, 1.0, 0.0), (32.0, 1.0, 0.0)]).unwrap();
        let b = fit_exponent_with_se(&[(8.0, 1.0, 0.05), (16.0, 1.0, 0.05), (32.0, 1.0, 0.05)]).unwrap();
        assert_eq!(a.slope_se, 0.0);
        // w = ±1/(2 ln 2), 0
        let want = (2.0 * (0.5 / 2f64.ln()).powi(2) * 0.05f64.powi(2)).sqrt();
        assert!((b.slope_se - want).abs() < 1e-12);
    }
}
