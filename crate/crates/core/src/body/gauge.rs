//! Oracle-only evaluation routes: Minkowski gauge by bisection, support function by ascent, and
//! finite-difference subgradients. The closed-form and compositional routes are checked against these.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{BodyExpr, Side};
use crate::error::{ensure, Result};
use crate::linalg::{dot, norm2, scaled};

/// Gauge of `x` with respect to the body `{y : member(y)}`, given `r_in·D ⊂ K ⊂ r_out·D`.
/// Returns `t` with `|t − ‖x‖| ≤ tol·‖x‖`.
pub fn gauge_bisection<M>(member: M, x: &[f64], r_in: f64, r_out: f64, tol: f64) -> Result<f64>
where
    M: Fn(&[f64]) -> bool,
{
    ensure!(r_in > 0.0 && r_out >= r_in, "crude radii must satisfy 0 < r_in <= r_out");
    ensure!(tol > 0.0, "tolerance must be positive");
    let len = norm2(x);
    if len == 0.0 {
        return Ok(0.0);
    }
    let mut lo = len / r_out;
    let mut hi = len / r_in;
    ensure!(member(&scaled(x, 1.0 / (hi * (1.0 + 1e-12)))), "inner crude bound violated: r_in·x/|x| is not in the body");
    let outside = scaled(x, 1.0 / (lo * (1.0 - 1e-9)));
    ensure!(!member(&outside) || r_out == r_in, "outer crude bound violated: body pokes out of r_out·D");
    while hi - lo > tol * lo {
        let mid = 0.5 * (lo + hi);
        if member(&scaled(x, 1.0 / mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Support function `sup_{y ∈ K} ⟨x, y⟩` from norm evaluations only, by ascent of the
/// 0-homogeneous ratio `⟨x, y⟩ / ‖y‖_K` from random starts. Returns a lower bound.
pub fn support_ascent(body: &BodyExpr, x: &[f64], iters: usize, restarts: usize, seed: u64) -> Result<f64> {
    let n = body.dim();
    ensure!(x.len() == n, "dimension mismatch");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0_f64;
    for r in 0..=restarts {
        let mut y: Vec<f64> = if r == 0 {
            x.to_vec()
        } else {
            (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
        };
        let ratio = |y: &[f64]| -> Result<(f64, Vec<f64>)> {
            let (f, g) = body.eval(Side::Primal, y, true)?;
            let xy = dot(x, y);
            let grad: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a / f - xy * b / (f * f)).collect();
            Ok((xy / f, grad))
        };
        let (mut val, mut grad) = ratio(&y)?;
        let mut step = 0.5 * norm2(&y);
        for _ in 0..iters {
            let gn = norm2(&grad);
            if gn == 0.0 || step < 1e-14 * norm2(&y) {
                break;
            }
            let cand: Vec<f64> = y.iter().zip(&grad).map(|(a, b)| a + step * b / gn).collect();
            let (v, g) = ratio(&cand)?;
            if v > val {
                let s = 1.0 / norm2(&cand);
                y = scaled(&cand, s);
                val = v;
                grad = scaled(&g, 1.0 / s);
                step = (step * 1.5).min(1.0);
            } else {
                step *= 0.5;
            }
        }
        best = best.max(val);
    }
    Ok(best)
}

/// Central finite-difference gradient with step `h = 1e-6·max(1, |x|)`.
pub fn fd_subgradient<F>(f: F, x: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let h = 1e-6 * norm2(x).max(1.0);
    let mut g = Vec::with_capacity(x.len());
    let mut y = x.to_vec();
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let fp = f(&y)?;
        y[i] = x[i] - h;
        let fm = f(&y)?;
        y[i] = x[i];
        g.push((fp - fm) / (2.0 * h));
    }
    Ok(g)
}
