//! The claim registry against the checked-in list of claim ids.

use convexlab::harness::{registry, ClaimId, ExperimentSpec};

fn expected_ids() -> Vec<String> {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/claim_ids.txt")).unwrap();
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from).collect()
}

#[test]
fn every_listed_claim_is_registered() {
    let listed = expected_ids();
    let registered: Vec<String> = registry().iter().map(|e| e.id.as_str().to_string()).collect();
    assert_eq!(listed, registered);
    let all: Vec<String> = ClaimId::ALL.iter().map(|id| id.as_str().to_string()).collect();
    assert_eq!(listed, all);
}

#[test]
fn registry_defaults_are_valid_specs() {
    for e in registry() {
        assert!(!e.statement.is_empty(), "{}", e.id);
        assert!(!e.predicates.is_empty(), "{} has no predicate", e.id);
        assert!(e.params.iter().any(|(k, _)| *k == "reps"), "{}", e.id);
        let spec = ExperimentSpec::default_for(e.id);
        spec.validate().unwrap_or_else(|err| panic!("{}: {err}", e.id));
        assert_eq!(spec.dims, e.dims);
        for b in &e.bodies {
            assert!(b.contains("{n}") || b.contains("{m}"), "{}: template {b} ignores the dimension", e.id);
        }
    }
}
