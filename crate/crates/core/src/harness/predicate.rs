//! Registered verdict predicates. A check reads only the report's rows and fits.

use serde::{Deserialize, Serialize};

use super::ClaimReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predicate {
    /// `max/min ≤ max_ratio` across dimensions and the slope interval meets
    /// `[slope_lo, slope_hi]` (a missing end is unbounded; `lo = hi = 0` asks the interval to
    /// contain 0).
    Flat { max_ratio: f64, slope_lo: Option<f64>, slope_hi: Option<f64> },
    /// `max/min ≤ max_ratio` across dimensions.
    Spread { max_ratio: f64 },
    /// Every `value − sigmas·se ≤ bound`.
    AtMost { bound: f64, sigmas: f64 },
    /// Every `value + sigmas·se ≥ bound`.
    AtLeast { bound: f64, sigmas: f64 },
    /// The value at the largest dimension is at most `bound`.
    LastAtMost { bound: f64 },
    /// Point estimate of the fitted slope in `[lo, hi]`.
    SlopeIn { lo: f64, hi: f64 },
    /// Upper end of the slope interval below `bound`.
    SlopeCiBelow { bound: f64 },
    /// With `sigmas = 0`, strictly decreasing in the dimension. Otherwise no step rises by
    /// more than `sigmas` joint standard errors and the last value is below the first by more
    /// than that.
    Decreasing { sigmas: f64 },
    /// Same-dimension values agree with the `#reference` route of the series within `rel_tol`.
    Agree { reference: String, rel_tol: f64 },
}

/// A predicate restricted to the series of one measurement route (all series when `None`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scoped {
    pub route: Option<String>,
    pub predicate: Predicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub predicate: Predicate,
    pub series: String,
    pub passed: bool,
    pub detail: String,
}

fn route_of(series: &str) -> &str {
    series.rsplit_once('#').map_or("", |(_, r)| r)
}

impl Scoped {
    pub fn all(predicate: Predicate) -> Self {
        Self { route: None, predicate }
    }

    pub fn on(route: &str, predicate: Predicate) -> Self {
        Self { route: Some(route.to_string()), predicate }
    }

    pub fn evaluate(&self, report: &ClaimReport) -> Vec<Check> {
        report
            .series()
            .into_iter()
            .filter(|s| self.route.as_deref().is_none_or(|r| route_of(s) == r))
            .map(|s| {
                let (passed, detail) = self.predicate.judge(report, &s);
                Check { predicate: self.predicate.clone(), series: s, passed, detail }
            })
            .collect()
    }
}

fn spread(vals: &[(usize, f64, f64)]) -> Option<f64> {
    let lo = vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let hi = vals.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    (lo > 0.0).then_some(hi / lo)
}

impl Predicate {
    fn judge(&self, report: &ClaimReport, series: &str) -> (bool, String) {
        let vals = report.aggregated(series);
        if vals.is_empty() {
            return (false, "no successful rows".into());
        }
        let fit = report.fit_for(series);
        let need_fit = || format!("no slope fit ({} dims)", vals.len());
        match self {
            Predicate::Flat { max_ratio, slope_lo, slope_hi } => {
                let Some(r) = spread(&vals) else {
                    return (false, "nonpositive value".into());
                };
                let Some(f) = fit else {
                    return (false, need_fit());
                };
                let lo = slope_lo.unwrap_or(f64::NEG_INFINITY);
                let hi = slope_hi.unwrap_or(f64::INFINITY);
                let ok = r <= *max_ratio && f.ci_meets(lo, hi);
                (ok, format!("max/min {r:.4}; slope {:.4} CI [{:.4}, {:.4}] vs band [{lo}, {hi}]", f.slope, f.ci.0, f.ci.1))
            }
            Predicate::Spread { max_ratio } => match spread(&vals) {
                Some(r) => (r <= *max_ratio, format!("max/min {r:.4}")),
                None => (false, "nonpositive value".into()),
            },
            Predicate::AtMost { bound, sigmas } => {
                let worst = vals.iter().map(|v| v.1 - sigmas * v.2).fold(f64::NEG_INFINITY, f64::max);
                (worst <= *bound, format!("max(value − {sigmas}·se) = {worst:.6} vs {bound}"))
            }
            Predicate::AtLeast { bound, sigmas } => {
                let worst = vals.iter().map(|v| v.1 + sigmas * v.2).fold(f64::INFINITY, f64::min);
                (worst >= *bound, format!("min(value + {sigmas}·se) = {worst:.6} vs {bound}"))
            }
            Predicate::LastAtMost { bound } => {
                let last = vals.last().expect("nonempty");
                (last.1 <= *bound, format!("value {:.6} at n={} vs {bound}", last.1, last.0))
            }
            Predicate::SlopeIn { lo, hi } => match fit {
                Some(f) => (*lo <= f.slope && f.slope <= *hi, format!("slope {:.4} vs [{lo}, {hi}]", f.slope)),
                None => (false, need_fit()),
            },
            Predicate::SlopeCiBelow { bound } => match fit {
                Some(f) => (f.ci.1 < *bound, format!("slope {:.4} CI [{:.4}, {:.4}] vs < {bound}", f.slope, f.ci.0, f.ci.1)),
                None => (false, need_fit()),
            },
            Predicate::Decreasing { sigmas } => {
                if vals.len() < 2 {
                    return (false, "needs at least two dimensions".into());
                }
                let joint = |a: &(usize, f64, f64), b: &(usize, f64, f64)| sigmas * (a.2 * a.2 + b.2 * b.2).sqrt();
                let steps_ok = vals.windows(2).all(|w| {
                    if *sigmas == 0.0 {
                        w[1].1 < w[0].1
                    } else {
                        w[1].1 <= w[0].1 + joint(&w[0], &w[1])
                    }
                });
                let (first, last) = (vals[0], vals[vals.len() - 1]);
                let drop_ok = last.1 < first.1 - joint(&first, &last);
                let trace: Vec<String> = vals.iter().map(|v| format!("{}:{:.5}", v.0, v.1)).collect();
                (steps_ok && drop_ok, trace.join(" "))
            }
            Predicate::Agree { reference, rel_tol } => {
                let base = series.rsplit_once('#').map_or(series, |(b, _)| b);
                let other = report.aggregated(&format!("{base}#{reference}"));
                if other.is_empty() {
                    return (false, format!("no rows for route {reference}"));
                }
                let mut worst = 0.0f64;
                let mut matched = 0;
                for v in &vals {
                    if let Some(o) = other.iter().find(|o| o.0 == v.0) {
                        worst = worst.max((v.1 - o.1).abs() / o.1.abs());
                        matched += 1;
                    }
                }
                (matched == vals.len() && worst <= *rel_tol, format!("max relative gap {worst:.4} over {matched} dims vs {rel_tol}"))
            }
        }
    }
}
