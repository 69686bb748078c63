//! Claim registry, experiment specs, scaling fits and reports.
//!
//! A claim runs the pipeline construct → position → sample → measure for every
//! (body template, p, dimension, repetition) and judges the rows with the claim's registered
//! predicates only.

mod claims;
mod fit;
mod predicate;
mod registry;
mod report;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::body::parse_body;
use crate::body::BodyExpr;
use crate::error::{contract, ensure, Result};
use crate::sampling::derive_seed;

pub use claims::revolution_isotropic_diameter;
pub use fit::{fit_exponent, fit_exponent_with_se, ExponentFit};
pub use predicate::{Check, Predicate, Scoped};
pub use registry::{entry as registry_entry, registry, RegistryEntry};
pub use report::{emit, read_report, write_report, ReportFormat, SCHEMA_VERSION};

/// Fraction of failed rows above which a claim is reported as ERROR.
pub const MAX_FAILED_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClaimId {
    Hyperplane,
    FiniteVr,
    LkBound,
    Psi2Bounds,
    RandomSection,
    Ovr2Smooth,
    FireyAlpha,
    LqLk,
    SchattenLk,
    JohnMstarb,
    InvFiniteVr,
    EssIso,
    CuspDiam,
    SmallDiam,
    Shell,
    GaussMarginals,
    Tails,
    Lipschitz,
    Invariance,
    Urysohn,
    Santalo,
}

impl ClaimId {
    pub const ALL: [ClaimId; 21] = [
        ClaimId::Hyperplane,
        ClaimId::FiniteVr,
        ClaimId::LkBound,
        ClaimId::Psi2Bounds,
        ClaimId::RandomSection,
        ClaimId::Ovr2Smooth,
        ClaimId::FireyAlpha,
        ClaimId::LqLk,
        ClaimId::SchattenLk,
        ClaimId::JohnMstarb,
        ClaimId::InvFiniteVr,
        ClaimId::EssIso,
        ClaimId::CuspDiam,
        ClaimId::SmallDiam,
        ClaimId::Shell,
        ClaimId::GaussMarginals,
        ClaimId::Tails,
        ClaimId::Lipschitz,
        ClaimId::Invariance,
        ClaimId::Urysohn,
        ClaimId::Santalo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClaimId::Hyperplane => "HYPERPLANE",
            ClaimId::FiniteVr => "FINITE_VR",
            ClaimId::LkBound => "LK_BOUND",
            ClaimId::Psi2Bounds => "PSI2_BOUNDS",
            ClaimId::RandomSection => "RANDOM_SECTION",
            ClaimId::Ovr2Smooth => "OVR_2SMOOTH",
            ClaimId::FireyAlpha => "FIREY_ALPHA",
            ClaimId::LqLk => "LQ_LK",
            ClaimId::SchattenLk => "SCHATTEN_LK",
            ClaimId::JohnMstarb => "JOHN_MSTARB",
            ClaimId::InvFiniteVr => "INV_FINITE_VR",
            ClaimId::EssIso => "ESS_ISO",
            ClaimId::CuspDiam => "CUSP_DIAM",
            ClaimId::SmallDiam => "SMALL_DIAM",
            ClaimId::Shell => "SHELL",
            ClaimId::GaussMarginals => "GAUSS_MARGINALS",
            ClaimId::Tails => "TAILS",
            ClaimId::Lipschitz => "LIPSCHITZ",
            ClaimId::Invariance => "INVARIANCE",
            ClaimId::Urysohn => "URYSOHN",
            ClaimId::Santalo => "SANTALO",
        }
    }
}

impl fmt::Display for ClaimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClaimId {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let want = s.trim().to_ascii_uppercase().replace('-', "_");
        ClaimId::ALL
            .into_iter()
            .find(|c| c.as_str() == want)
            .ok_or_else(|| contract(format!("unknown claim id {s:?}")))
    }
}

impl Serialize for ClaimId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ClaimId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One experiment: which claim, over which bodies and dimensions, with which parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub claim_id: ClaimId,
    /// Body templates in the body grammar with `{n}`, `{p}` and `{m}` placeholders; each one
    /// (and each value of `p` when it appears) is a series.
    pub bodies: Vec<String>,
    pub dims: Vec<usize>,
    /// Overrides of the registry parameters (sample sizes, directions, `p`, grids, ...).
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    /// The registry defaults for `id`.
    pub fn default_for(id: ClaimId) -> Self {
        let e = registry::entry(id);
        Self {
            claim_id: id,
            bodies: e.bodies.iter().map(|s| s.to_string()).collect(),
            dims: e.dims.to_vec(),
            params: BTreeMap::new(),
            seed: registry::DEFAULT_SEED,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.dims.is_empty(), "experiment dims must be nonempty");
        ensure!(self.dims.iter().all(|&d| d >= 2), "every experiment dimension must be at least 2, got {:?}", self.dims);
        ensure!(!self.bodies.is_empty(), "experiment needs at least one body template");
        let known = &registry::entry(self.claim_id).params;
        for k in self.params.keys() {
            ensure!(known.iter().any(|(name, _)| name == k), "unknown parameter {k:?} for {}", self.claim_id);
        }
        Ok(())
    }

    /// Registry defaults overlaid with this spec's parameters.
    pub fn resolved_params(&self) -> BTreeMap<String, Value> {
        let mut out: BTreeMap<String, Value> = registry::entry(self.claim_id)
            .params
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect();
        out.extend(self.params.iter().map(|(k, v)| (k.clone(), v.clone())));
        out
    }
}

/// Typed access to resolved parameters.
#[derive(Debug, Clone)]
pub(crate) struct Params(BTreeMap<String, Value>);

impl Params {
    fn get(&self, key: &str) -> Result<&Value> {
        self.0.get(key).ok_or_else(|| contract(format!("missing parameter {key:?}")))
    }

    pub(crate) fn f64(&self, key: &str) -> Result<f64> {
        self.get(key)?.as_f64().ok_or_else(|| contract(format!("parameter {key:?} must be a number")))
    }

    pub(crate) fn usize(&self, key: &str) -> Result<usize> {
        let v = self.f64(key)?;
        ensure!(v >= 0.0 && v.fract() == 0.0, "parameter {key:?} must be a nonnegative integer, got {v}");
        Ok(v as usize)
    }

    /// A number or a list of numbers.
    pub(crate) fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        match self.get(key)? {
            Value::Array(a) => a
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| contract(format!("parameter {key:?} must hold numbers"))))
                .collect(),
            v => Ok(vec![v.as_f64().ok_or_else(|| contract(format!("parameter {key:?} must be a number or list")))?]),
        }
    }
}

/// Everything a measurement needs for one row.
pub(crate) struct RowCtx<'a> {
    pub template: &'a str,
    pub p: Option<f64>,
    pub dim: usize,
    pub seed: u64,
    pub params: &'a Params,
}

impl RowCtx<'_> {
    pub(crate) fn body(&self) -> Result<BodyExpr> {
        parse_body(&instantiate(self.template, self.dim, self.p))
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

fn instantiate(template: &str, dim: usize, p: Option<f64>) -> String {
    let mut s = template.replace("{n}", &dim.to_string()).replace("{m}", &dim.to_string());
    if let Some(p) = p {
        s = s.replace("{p}", &fmt_num(p));
    }
    s
}

/// One measured quantity from one row, tagged with the route that produced it.
#[derive(Debug, Clone)]
pub(crate) struct Measurement {
    pub route: &'static str,
    pub value: f64,
    pub se: f64,
    pub extra: BTreeMap<String, f64>,
}

impl Measurement {
    pub(crate) fn new(value: f64, se: f64) -> Self {
        Self { route: "", value, se, extra: BTreeMap::new() }
    }

    pub(crate) fn route(mut self, route: &'static str) -> Self {
        self.route = route;
        self
    }

    pub(crate) fn with(mut self, key: &str, v: f64) -> Self {
        self.extra.insert(key.to_string(), v);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    /// Body template with `p` filled in, plus `#route` when a claim measures by several routes.
    pub series: String,
    /// Ambient dimension of the body (the `{n}` or `{m}` value when the body failed to build).
    pub dim: usize,
    pub rep: usize,
    pub seed: u64,
    pub value: f64,
    pub se: f64,
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFit {
    pub series: String,
    pub fit: Option<ExponentFit>,
    #[serde(default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Error => "ERROR",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub crate_version: String,
    pub base_seed: u64,
    /// The spec with registry defaults filled in.
    pub spec: ExperimentSpec,
    /// Seconds since the Unix epoch; the only field that differs between identical runs.
    pub created_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub schema_version: u32,
    pub claim_id: ClaimId,
    pub statement: String,
    pub rows: Vec<Row>,
    pub fits: Vec<SeriesFit>,
    pub checks: Vec<Check>,
    pub failed_rows: usize,
    pub verdict: Verdict,
    pub provenance: Provenance,
}

impl ClaimReport {
    /// Distinct series names in row order.
    pub fn series(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.series) {
                out.push(r.series.clone());
            }
        }
        out
    }

    pub fn fit_for(&self, series: &str) -> Option<&ExponentFit> {
        self.fits.iter().find(|f| f.series == series).and_then(|f| f.fit.as_ref())
    }

    /// Per-dimension `(dim, value, se)` of a series, averaged over repetitions.
    pub fn aggregated(&self, series: &str) -> Vec<(usize, f64, f64)> {
        aggregate(self.rows.iter().filter(|r| r.series == series && r.error.is_none()))
    }
}

/// Mean over repetitions; the standard error is the larger of the propagated row errors and
/// the between-repetition spread.
fn aggregate<'a>(rows: impl Iterator<Item = &'a Row>) -> Vec<(usize, f64, f64)> {
    let mut by_dim: BTreeMap<usize, Vec<&Row>> = BTreeMap::new();
    for r in rows {
        by_dim.entry(r.dim).or_default().push(r);
    }
    by_dim
        .into_iter()
        .map(|(d, rs)| {
            let k = rs.len() as f64;
            let mean = rs.iter().map(|r| r.value).sum::<f64>() / k;
            let prop = rs.iter().map(|r| r.se * r.se).sum::<f64>().sqrt() / k;
            let spread = if rs.len() > 1 {
                (rs.iter().map(|r| (r.value - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
            } else {
                0.0
            };
            (d, mean, prop.max(spread))
        })
        .collect()
}

struct Job<'a> {
    series_index: usize,
    template: &'a str,
    p: Option<f64>,
    label: String,
    dim: usize,
    rep: usize,
}

/// Run one claim experiment. Rows run in parallel and are reduced in canonical order
/// (series, dimension, repetition); the report is a pure function of the spec.
pub fn run_claim(spec: &ExperimentSpec) -> Result<ClaimReport> {
    spec.validate()?;
    let entry = registry::entry(spec.claim_id);
    let resolved = spec.resolved_params();
    let params = Params(resolved.clone());
    let reps = params.usize("reps").unwrap_or(1).max(1);
    let p_values = params.f64_list("p").ok();

    let mut jobs = Vec::new();
    let mut series_index = 0;
    for template in &spec.bodies {
        let ps: Vec<Option<f64>> = match (&p_values, template.contains("{p}")) {
            (Some(ps), true) => ps.iter().map(|&p| Some(p)).collect(),
            (None, true) => return Err(contract(format!("template {template:?} needs parameter p"))),
            _ => vec![None],
        };
        for p in ps {
            let label = match p {
                Some(p) => template.replace("{p}", &fmt_num(p)),
                None => template.clone(),
            };
            for &dim in &spec.dims {
                for rep in 0..reps {
                    jobs.push(Job { series_index, template, p, label: label.clone(), dim, rep });
                }
            }
            series_index += 1;
        }
    }

    let rows: Vec<Vec<Row>> = jobs
        .par_iter()
        .map(|job| {
            let seed = derive_seed(derive_seed(spec.seed, job.series_index as u64), (job.dim as u64) << 16 | job.rep as u64);
            let ctx = RowCtx { template: job.template, p: job.p, dim: job.dim, seed, params: &params };
            let ambient = ctx.body().map(|b| b.dim()).unwrap_or(job.dim);
            let row = |series: String, m: Option<Measurement>, error: Option<String>| {
                let m = m.unwrap_or_else(|| Measurement::new(0.0, 0.0));
                Row { series, dim: ambient, rep: job.rep, seed, value: m.value, se: m.se, extra: m.extra, error }
            };
            match claims::measure(spec.claim_id, &ctx) {
                Ok(ms) => ms
                    .into_iter()
                    .map(|m| {
                        let series = if m.route.is_empty() { job.label.clone() } else { format!("{}#{}", job.label, m.route) };
                        let bad = !(m.value.is_finite() && m.se.is_finite());
                        let err = bad.then(|| "non-finite measurement".to_string());
                        row(series, Some(m), err)
                    })
                    .collect(),
                Err(e) => vec![row(job.label.clone(), None, Some(e.to_string()))],
            }
        })
        .collect();
    let rows: Vec<Row> = rows.into_iter().flatten().collect();

    let failed_rows = rows.iter().filter(|r| r.error.is_some()).count();
    let mut report = ClaimReport {
        schema_version: SCHEMA_VERSION,
        claim_id: spec.claim_id,
        statement: entry.statement.to_string(),
        rows,
        fits: Vec::new(),
        checks: Vec::new(),
        failed_rows,
        verdict: Verdict::Pass,
        provenance: Provenance {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            base_seed: spec.seed,
            spec: ExperimentSpec { params: resolved, ..spec.clone() },
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        },
    };
    if entry.fit {
        report.fits = report
            .series()
            .into_iter()
            .map(|s| {
                let pts: Vec<(f64, f64, f64)> = report.aggregated(&s).iter().map(|&(d, v, se)| (d as f64, v, se)).collect();
                match fit_exponent_with_se(&pts) {
                    Ok(f) => SeriesFit { series: s, fit: Some(f), note: None },
                    Err(e) => SeriesFit { series: s, fit: None, note: Some(e.to_string()) },
                }
            })
            .collect();
    }
    report.checks = entry.predicates.iter().flat_map(|p| p.evaluate(&report)).collect();
    report.verdict = if failed_rows as f64 > MAX_FAILED_FRACTION * report.rows.len() as f64 {
        Verdict::Error
    } else if report.checks.iter().all(|c| c.passed) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report)
}

/// Exit status for a set of verdicts: 0 all PASS, 1 any FAIL, 2 any ERROR.
pub fn exit_code<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> i32 {
    let mut code = 0;
    for v in verdicts {
        code = code.max(match v {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Error => 2,
        });
    }
    code
}

#[cfg(test)]
mod tests;
