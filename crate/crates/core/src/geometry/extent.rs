//! Maximisation of convex 1-homogeneous functions over the sphere: `b(K)`, inradius, circumradius.

use serde::{Deserialize, Serialize};

use crate::body::{BodyExpr, Side};
use crate::error::Result;
use crate::linalg::{dot, norm2, scaled};
use crate::sampling::sphere_sample;

/// Best value found by sphere maximisation (a lower bound on the true maximum) and its argmax.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphereMax {
    pub value: f64,
    pub argmax: Vec<f64>,
    pub starts: usize,
}

/// Monotone power iteration `u ← ∇f(u)/|∇f(u)|` for convex 1-homogeneous `f`;
/// `f(u_{k+1}) ≥ ⟨∇f(u_k), u_{k+1}⟩ = |∇f(u_k)| ≥ f(u_k)`.
pub fn power_ascent<F>(f: F, u0: &[f64], max_iter: usize) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut u = scaled(u0, 1.0 / norm2(u0));
    let (mut val, mut g) = f(&u)?;
    for _ in 0..max_iter {
        let gn = norm2(&g);
        if gn == 0.0 {
            break;
        }
        let next = scaled(&g, 1.0 / gn);
        let (v, gg) = f(&next)?;
        if v <= val * (1.0 + 1e-14) {
            if v > val {
                u = next;
                val = v;
            }
            break;
        }
        u = next;
        val = v;
        g = gg;
    }
    Ok((val, u))
}

/// Coordinate directions, the main diagonal and a few ±1 patterns: extremal for the leaf families.
pub fn structured_directions(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n + 4);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        out.push(e);
    }
    let s = 1.0 / (n as f64).sqrt();
    out.push(vec![s; n]);
    if n >= 2 {
        out.push((0..n).map(|i| if i % 2 == 0 { s } else { -s }).collect());
        out.push((0..n).map(|i| if i < n / 2 { s } else { -s }).collect());
    }
    out
}

/// Maximise `side` of `body` over the unit sphere from the structured directions plus
/// `restarts` uniform random starts.
pub fn sphere_max(body: &BodyExpr, side: Side, restarts: usize, seed: u64) -> Result<SphereMax> {
    let n = body.dim();
    let mut starts = structured_directions(n);
    starts.extend(sphere_sample(n, restarts, seed));
    let f = |u: &[f64]| body.eval(side, u, true);
    let mut best = SphereMax { value: f64::NEG_INFINITY, argmax: starts[0].clone(), starts: starts.len() };
    for s in &starts {
        let (v, u) = power_ascent(f, s, 500)?;
        if v > best.value {
            best.value = v;
            best.argmax = u;
        }
    }
    Ok(best)
}

/// `b(K) = max_{θ ∈ S^{n−1}} ‖θ‖_K` (lower bound); `inradius = 1/b`.
pub fn b_max_norm(body: &BodyExpr, restarts: usize, seed: u64) -> Result<SphereMax> {
    sphere_max(body, Side::Primal, restarts, seed)
}

pub fn inradius(body: &BodyExpr, restarts: usize, seed: u64) -> Result<f64> {
    Ok(1.0 / b_max_norm(body, restarts, seed)?.value)
}

/// Circumradius `max_θ ‖θ‖*_K = max_θ 1/‖θ‖_K` (lower bound).
pub fn circumradius(body: &BodyExpr, restarts: usize, seed: u64) -> Result<SphereMax> {
    sphere_max(body, Side::Dual, restarts, seed)
}

/// Euclidean diameter `2 · circumradius` (lower bound).
pub fn diameter(body: &BodyExpr, restarts: usize, seed: u64) -> Result<f64> {
    Ok(2.0 * circumradius(body, restarts, seed)?.value)
}

/// Direction-wise half-width `w(θ) = ‖θ‖*_K`, for reporting alongside the sphere maxima.
pub fn half_width(body: &BodyExpr, theta: &[f64]) -> Result<f64> {
    let t = scaled(theta, 1.0 / norm2(theta));
    let w = body.dual_norm(&t)?;
    debug_assert!(dot(&t, &t) > 0.0);
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_b_is_attained_on_the_diagonal() {
        let b = b_max_norm(&BodyExpr::lp(9, 1.5).unwrap(), 10, 1).unwrap();
        assert!((b.value - 9f64.powf(1.0 / 6.0)).abs() < 1e-10);
        let b = b_max_norm(&BodyExpr::l2(5).unwrap(), 10, 1).unwrap();
        assert!((b.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn revolution_diameter_is_two() {
        for n in [3, 8] {
            let d = diameter(&BodyExpr::revolution(n).unwrap(), 20, 2).unwrap();
            assert!((d - 2.0).abs() < 1e-10);
            let r = inradius(&BodyExpr::revolution(n).unwrap(), 20, 2).unwrap();
            assert!((r - (2f64.sqrt() - 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn cube_circumradius() {
        let c = circumradius(&BodyExpr::cube(4).unwrap(), 5, 1).unwrap();
        assert!((c.value - 2.0).abs() < 1e-12);
    }
}
