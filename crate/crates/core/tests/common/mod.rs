//! Random bodies from the expression grammar, shared by the property tests.

#![allow(dead_code)]

use convexlab::{BodyExpr, LinearMapRec, SubspaceRec};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn leaf(n: usize) -> BoxedStrategy<BodyExpr> {
    let mut s = vec![
        (1.1f64..8.0).prop_map(move |p| BodyExpr::lp(n, p).unwrap()).boxed(),
        Just(BodyExpr::cube(n).unwrap()).boxed(),
        prop::collection::vec(0.3f64..3.0, n).prop_map(|d| BodyExpr::ellipsoid_diag(&d).unwrap()).boxed(),
        Just(BodyExpr::revolution(n).unwrap()).boxed(),
    ];
    if n == 4 {
        s.push((1.1f64..6.0).prop_map(|p| BodyExpr::schatten(2, p).unwrap()).boxed());
    }
    prop::strategy::Union::new(s).boxed()
}

fn matrix(n: usize) -> impl Strategy<Value = LinearMapRec> {
    // identity plus a small perturbation keeps the condition number moderate
    prop::collection::vec(-0.4f64..0.4, n * n).prop_map(move |v| {
        let m = DMatrix::identity(n, n) + DMatrix::from_vec(n, n, v);
        LinearMapRec::new(m).unwrap()
    })
}

pub fn body() -> impl Strategy<Value = BodyExpr> {
    (2usize..=5).prop_flat_map(|n| {
        prop_oneof![
            2 => leaf(n),
            1 => leaf(n).prop_map(BodyExpr::polar),
            1 => (0.2f64..5.0, leaf(n)).prop_map(|(t, b)| BodyExpr::scale(t, b).unwrap()),
            1 => (matrix(n), leaf(n)).prop_map(|(m, b)| BodyExpr::linear_image(m, b).unwrap()),
            1 => (leaf(n), leaf(n)).prop_map(|(a, b)| BodyExpr::firey_sum(vec![a, b]).unwrap()),
            1 => (leaf(n), leaf(n)).prop_map(|(a, b)| BodyExpr::firey_intersection(vec![a, b]).unwrap()),
            1 => (1.2f64..4.0).prop_map(move |p| {
                BodyExpr::section(SubspaceRec::coordinate(n + 1, n).unwrap(), BodyExpr::lp(n + 1, p).unwrap()).unwrap()
            }),
        ]
    })
}

/// A body together with `k` random nonzero points of its dimension.
pub fn body_with_points(k: usize) -> impl Strategy<Value = (BodyExpr, Vec<Vec<f64>>)> {
    body().prop_flat_map(move |b| {
        let n = b.dim();
        let pts = prop::collection::vec(prop::collection::vec(-3.0f64..3.0, n), k)
            .prop_filter("nonzero", |v| v.iter().all(|x| x.iter().any(|c| c.abs() > 1e-3)));
        (Just(b), pts)
    })
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub type Outcome = std::result::Result<(), String>;

pub fn homogeneity(b: &BodyExpr, x: &[f64], t: f64) -> Outcome {
    let tx: Vec<f64> = x.iter().map(|c| t * c).collect();
    let (a, e) = (b.norm(&tx).unwrap(), t.abs() * b.norm(x).unwrap());
    if rel(a, e) < 1e-9 { Ok(()) } else { Err(format!("{}: {a} vs {e}", b.descriptor())) }
}

pub fn triangle(b: &BodyExpr, x: &[f64], y: &[f64]) -> Outcome {
    let s: Vec<f64> = x.iter().zip(y).map(|(a, c)| a + c).collect();
    let lhs = b.norm(&s).unwrap();
    let rhs = b.norm(x).unwrap() + b.norm(y).unwrap();
    if lhs <= rhs + 1e-8 { Ok(()) } else { Err(format!("{}: {lhs} > {rhs}", b.descriptor())) }
}

pub fn duality_pairing(b: &BodyExpr, x: &[f64], y: &[f64]) -> Outcome {
    let ip: f64 = x.iter().zip(y).map(|(a, c)| a * c).sum();
    let bound = b.norm(x).unwrap() * b.dual_norm(y).unwrap();
    if ip <= bound * (1.0 + 1e-6) { Ok(()) } else { Err(format!("{}: {ip} > {bound}", b.descriptor())) }
}

pub fn bipolarity(b: &BodyExpr, x: &[f64]) -> Outcome {
    let pp = BodyExpr::polar(BodyExpr::polar(b.clone()));
    let (a, e) = (pp.norm(x).unwrap(), b.norm(x).unwrap());
    if rel(a, e) < 1e-6 { Ok(()) } else { Err(format!("{}: {a} vs {e}", b.descriptor())) }
}

pub fn firey_self_sum(b: &BodyExpr, x: &[f64]) -> Outcome {
    let s = BodyExpr::firey_sum(vec![b.clone(), b.clone()]).unwrap();
    let (a, e) = (s.norm(x).unwrap(), b.norm(x).unwrap() * std::f64::consts::FRAC_1_SQRT_2);
    if rel(a, e) < 1e-8 { Ok(()) } else { Err(format!("{}: {a} vs {e}", b.descriptor())) }
}

pub fn scalar() -> impl Strategy<Value = f64> {
    prop_oneof![-10.0f64..-0.1, 0.1f64..10.0]
}
