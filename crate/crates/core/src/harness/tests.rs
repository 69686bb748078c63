use serde_json::json;

use super::claims::revolution_isotropic_diameter;
use super::*;

fn small(id: ClaimId, dims: &[usize], params: &[(&str, Value)]) -> ExperimentSpec {
    let mut s = ExperimentSpec::default_for(id);
    s.dims = dims.to_vec();
    for (k, v) in params {
        s.params.insert(k.to_string(), v.clone());
    }
    s
}

#[test]
fn empty_dims_is_a_contract_violation() {
    let mut s = ExperimentSpec::default_for(ClaimId::FiniteVr);
    s.dims.clear();
    assert!(matches!(run_claim(&s), Err(crate::Error::Contract(_))));
    s.dims = vec![1, 8];
    assert!(run_claim(&s).is_err());
    let mut s = ExperimentSpec::default_for(ClaimId::FiniteVr);
    s.params.insert("bogus".into(), json!(1));
    assert!(run_claim(&s).is_err());
}

#[test]
fn claim_ids_round_trip() {
    for id in ClaimId::ALL {
        assert_eq!(id.as_str().parse::<ClaimId>().unwrap(), id);
        assert_eq!(serde_json::to_string(&id).unwrap(), format!("\"{id}\""));
    }
    assert_eq!("finite-vr".parse::<ClaimId>().unwrap(), ClaimId::FiniteVr);
    assert!("NOPE".parse::<ClaimId>().is_err());
}

#[test]
fn ball_inradius_ratio_is_flat() {
    // every position of the ball is the volume-one ball, so the ratio is 1/sqrt(1/8)
    let mut s = small(ClaimId::FiniteVr, &[4, 8, 16], &[("p", json!(2.0)), ("samples", json!(20_000))]);
    s.bodies = vec!["lp(n={n}, p={p})".into()];
    let r = run_claim(&s).unwrap();
    for (_, v, _) in r.aggregated("lp(n={n}, p=2)") {
        assert!((v / 8f64.sqrt() - 1.0).abs() < 0.03, "{v}");
    }
    let f = r.fit_for("lp(n={n}, p=2)").unwrap();
    assert!(f.ci_contains(0.0), "{f:?}");
    assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.checks);
}

#[test]
fn revolution_diameter_matches_quadrature_oracle() {
    // independent scipy quadrature of the slice moments
    for (n, want) in [(8, 2.114873653880488), (16, 3.308681393179146), (32, 5.6373575601300185), (64, 10.23086317728813)] {
        let got = revolution_isotropic_diameter(n);
        assert!((got / want - 1.0).abs() < 1e-6, "{n}: {got} vs {want}");
    }
}

#[test]
fn too_many_failed_rows_is_an_error_verdict() {
    // the revolution body has no analytic 2-convexity constant, so every row fails
    let mut s = small(ClaimId::LkBound, &[4, 8, 16], &[("samples", json!(2_000))]);
    s.bodies = vec!["revolution(n={n})".into()];
    let r = run_claim(&s).unwrap();
    assert_eq!(r.failed_rows, 3);
    assert_eq!(r.verdict, Verdict::Error);
    assert_eq!(exit_code([&r.verdict]), 2);
}

#[test]
fn exit_codes() {
    assert_eq!(exit_code([&Verdict::Pass, &Verdict::Pass]), 0);
    assert_eq!(exit_code([&Verdict::Pass, &Verdict::Fail]), 1);
    assert_eq!(exit_code([&Verdict::Fail, &Verdict::Error]), 2);
}

#[test]
fn reports_are_deterministic_and_round_trip() {
    let s = small(ClaimId::Shell, &[4, 8, 16], &[("samples", json!(5_000)), ("reps", json!(2))]);
    let a = run_claim(&s).unwrap();
    let mut b = run_claim(&s).unwrap();
    b.provenance.created_unix = a.provenance.created_unix;
    assert_eq!(a, b);
    assert_eq!(a.rows.len(), 3 * 2);
    assert!(a.rows.iter().all(|r| r.seed != 0));

    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("r.json");
    emit(&a, ReportFormat::Json, &json_path).unwrap();
    assert_eq!(read_report(&json_path).unwrap(), a);
    let text = std::fs::read_to_string(&json_path).unwrap();
    assert!(text.contains("\"schema_version\": 1"));

    let csv_path = dir.path().join("r.csv");
    emit(&a, ReportFormat::Csv, &csv_path).unwrap();
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("# schema_version=1"));
    // comment, header, one line per (dim, rep)
    assert_eq!(text.lines().count(), 2 + 6);

    let long_path = dir.path().join("r.long.csv");
    emit(&a, ReportFormat::Long, &long_path).unwrap();
    let text = std::fs::read_to_string(&long_path).unwrap();
    assert_eq!(text.lines().count(), 2 + 6 * 3);
}

#[test]
fn unwritable_path_is_an_error() {
    let s = small(ClaimId::Ovr2Smooth, &[4, 8, 16], &[]);
    let r = run_claim(&s).unwrap();
    assert!(emit(&r, ReportFormat::Json, std::path::Path::new("/nonexistent/dir/r.json")).is_err());
}

#[test]
fn predicates_judge_synthetic_reports() {
    let s = small(ClaimId::Ovr2Smooth, &[4, 8, 16], &[("p", json!(1.5))]);
    let mut r = run_claim(&s).unwrap();
    let series = r.series()[0].clone();
    let flat = Scoped::all(Predicate::Flat { max_ratio: 3.0, slope_lo: Some(0.0), slope_hi: Some(0.0) });
    for (i, row) in r.rows.iter_mut().enumerate() {
        row.value = [1.0, 2.0, 4.0][i];
        row.se = 0.0;
    }
    r.fits[0].fit = Some(fit_exponent(&[(4.0, 1.0), (8.0, 2.0), (16.0, 4.0)]).unwrap());
    let c = flat.evaluate(&r);
    assert_eq!(c.len(), 1);
    assert!(!c[0].passed);
    assert_eq!(c[0].series, series);
    assert!(Scoped::all(Predicate::SlopeIn { lo: 0.9, hi: 1.1 }).evaluate(&r)[0].passed);
    assert!(!Scoped::all(Predicate::Decreasing { sigmas: 0.0 }).evaluate(&r)[0].passed);
    assert!(Scoped::all(Predicate::AtMost { bound: 4.0, sigmas: 0.0 }).evaluate(&r)[0].passed);
    assert!(!Scoped::all(Predicate::LastAtMost { bound: 3.9 }).evaluate(&r)[0].passed);
    assert!(Scoped::on("other", Predicate::LastAtMost { bound: 0.0 }).evaluate(&r).is_empty());
}

#[test]
fn cusp_routes_agree_at_small_dims() {
    let s = small(ClaimId::CuspDiam, &[4, 8, 16], &[("samples", json!(50_000))]);
    let r = run_claim(&s).unwrap();
    assert_eq!(r.failed_rows, 0);
    let agree = r.checks.iter().find(|c| matches!(c.predicate, Predicate::Agree { .. })).unwrap();
    assert!(agree.passed, "{}", agree.detail);
}

#[test]
fn finite_vr_matches_closed_form_ratio() {
    // n^{1/2-1/p} |B_p^n|^{-1/n} / r_n / sqrt((p-1)/8), evaluated independently with lgamma
    let s = small(ClaimId::FiniteVr, &[8, 16], &[("p", json!(1.5)), ("samples", json!(50_000)), ("groups", json!(2))]);
    let r = run_claim(&s).unwrap();
    for ((_, v, _), want) in r.aggregated("lp(n={n}, p=1.5)").into_iter().zip([3.650105101442287, 3.619193848406836]) {
        assert!((v / want - 1.0).abs() < 0.015, "{v} vs {want}");
    }
}
