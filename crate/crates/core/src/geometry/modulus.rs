//! Modulus of convexity `δ_K(ε) = inf {1 − ‖(x+y)/2‖ : ‖x‖, ‖y‖ ≤ 1, ‖x − y‖ ≥ ε}` and the
//! empirical 2-convexity constants.
//!
//! A pair is parametrised by a difference direction `w` and a midpoint direction `c`: with
//! `h = (ε/2) w/‖w‖` and `‖c‖ = 1`, the largest `s` with `‖sc ± h‖ ≤ 1` gives the feasible pair
//! `x, y = sc ± h` with `1 − ‖(x+y)/2‖ = 1 − s`. Every evaluated pair is feasible, so every value
//! is an upper bound on the infimum.

use serde::{Deserialize, Serialize};

use super::extent::structured_directions;
use crate::body::BodyExpr;
use crate::error::{ensure, Result};
use crate::linalg::{dot, norm2, scaled};
use crate::optim::one_plus_one_es;
use crate::sampling::{derive_seed, gaussian_vec, rng_for};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModulusEstimate {
    pub epsilon: f64,
    pub delta_hat: f64,
    pub witness_pair: (Vec<f64>, Vec<f64>),
    pub restarts: usize,
}

/// Step-size floor for the (1+1)-ES; the objective is locally smooth, so its error is ~σ².
const SIGMA_MIN: f64 = 1e-7;

/// Default ε grid for `alpha_empirical`: `{1, 1/2, 1/4, 1/8, 1/16, 2}`.
pub fn default_eps_grid() -> Vec<f64> {
    vec![1.0, 0.5, 0.25, 0.125, 0.0625, 2.0]
}

/// Largest `s ≥ 0` with `max(‖sc + h‖, ‖sc − h‖) ≤ 1`, for `‖c‖ = 1` and `‖h‖ ≤ 1`.
/// The map is convex in `s`, so Newton from the right stays to the right of the root.
fn max_scale(body: &BodyExpr, c: &[f64], h: &[f64]) -> Result<f64> {
    let g = |s: f64| -> Result<(f64, f64)> {
        let plus: Vec<f64> = c.iter().zip(h).map(|(a, b)| s * a + b).collect();
        let minus: Vec<f64> = c.iter().zip(h).map(|(a, b)| s * a - b).collect();
        let (fp, gp) = body.norm_and_subgradient(&plus)?;
        let (fm, gm) = body.norm_and_subgradient(&minus)?;
        Ok(if fp >= fm { (fp, dot(&gp, c)) } else { (fm, dot(&gm, c)) })
    };
    let hn = body.norm(h)?;
    let mut s = 1.0 + hn;
    let mut lo = 0.0;
    for _ in 0..60 {
        let (v, d) = g(s)?;
        if v <= 1.0 {
            lo = s;
            break;
        }
        let next = s - (v - 1.0) / d;
        if !(next < s) || s - next <= 1e-15 * s {
            lo = next.max(0.0);
            break;
        }
        s = next.max(0.0);
        lo = s;
    }
    // Newton lands on the root up to roundoff; back off until the pair is certainly feasible
    let mut s = lo;
    // when ‖h‖ = 1 up to roundoff (ε = 2) the answer is s = 0
    for _ in 0..200 {
        let v = g(s)?.0;
        if v <= 1.0 + 1e-12 {
            return Ok(s);
        }
        s *= 1.0 - (2.0 * (v - 1.0)).max(1e-12);
    }
    Ok(0.0)
}

struct Search<'a> {
    body: &'a BodyExpr,
    eps: f64,
    n: usize,
}

impl Search<'_> {
    /// `(δ̂, x, y)` for the parameter vector `z = (w, c)`.
    fn pair(&self, z: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let (w, c) = z.split_at(self.n);
        let wn = self.body.norm(w)?;
        let cn = self.body.norm(c)?;
        ensure!(wn > 0.0 && cn > 0.0, "degenerate direction");
        let h = scaled(w, 0.5 * self.eps / wn);
        let c = scaled(c, 1.0 / cn);
        let s = max_scale(self.body, &c, &h)?;
        let x: Vec<f64> = c.iter().zip(&h).map(|(a, b)| s * a + b).collect();
        let y: Vec<f64> = c.iter().zip(&h).map(|(a, b)| s * a - b).collect();
        Ok((1.0 - s, x, y))
    }

    fn value(&self, z: &[f64]) -> Result<f64> {
        Ok(self.pair(z)?.0)
    }
}

fn structured_starts(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let join = |w: &[f64], c: &[f64]| -> Vec<f64> { w.iter().chain(c).copied().collect() };
    let unit = |i: usize| -> Vec<f64> {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    };
    let m = n.min(4);
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            out.push(join(&unit(i), &unit(j)));
            if i < j {
                let mut w = unit(i);
                w[j] = -1.0;
                let mut c = unit(i);
                c[j] = 1.0;
                out.push(join(&w, &c));
            }
        }
    }
    let dirs = structured_directions(n);
    for a in &dirs[n..] {
        for b in &dirs[n..] {
            out.push(join(a, b));
        }
    }
    if n == 1 {
        out.push(vec![1.0, 1.0]);
    }
    out
}

fn estimate_with(body: &BodyExpr, eps: f64, restarts: usize, seed: u64, carried: Option<&ModulusEstimate>) -> Result<ModulusEstimate> {
    ensure!(eps > 0.0 && eps <= 2.0, "modulus needs 0 < epsilon <= 2, got {eps}");
    let n = body.dim();
    let search = Search { body, eps, n };
    let mut rng = rng_for(derive_seed(seed, eps.to_bits()), 0);

    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
    for z in structured_starts(n) {
        if let Ok(v) = search.value(&z) {
            candidates.push((v, z));
        }
    }
    for _ in 0..restarts.max(1) * 4 {
        let z = gaussian_vec(&mut rng, 2 * n);
        if let Ok(v) = search.value(&z) {
            candidates.push((v, z));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut starts: Vec<Vec<f64>> = candidates.iter().take(restarts.div_ceil(2)).map(|c| c.1.clone()).collect();
    while starts.len() < restarts {
        starts.push(gaussian_vec(&mut rng, 2 * n));
    }

    let budget = 400 * 2 * n;
    let mut best = candidates.first().cloned().unwrap_or((f64::INFINITY, vec![1.0; 2 * n]));
    for z0 in starts {
        let z0 = scaled(&z0, 1.0 / norm2(&z0));
        let (v, z) = one_plus_one_es(|z| search.value(z), z0, 0.2, SIGMA_MIN, budget, &mut rng)?;
        if v < best.0 {
            best = (v, z);
        }
    }
    let (_, x, y) = search.pair(&best.1)?;
    let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut out = ModulusEstimate { epsilon: eps, delta_hat: 1.0 - body.norm(&mid)?, witness_pair: (x, y), restarts };
    if let Some(prev) = carried {
        // a witness for a larger ε is feasible here too
        if prev.epsilon >= eps && prev.delta_hat < out.delta_hat {
            out.delta_hat = prev.delta_hat;
            out.witness_pair = prev.witness_pair.clone();
        }
    }
    Ok(out)
}

/// Upper estimate of `δ_K(ε)` from structured and random starts refined by a (1+1)-ES.
pub fn modulus_estimate(body: &BodyExpr, epsilon: f64, restarts: usize, seed: u64) -> Result<ModulusEstimate> {
    estimate_with(body, epsilon, restarts, seed, None)
}

/// Estimates over a grid, returned in input order. Grid points are processed in decreasing
/// order and witnesses are carried downward, so the result is nondecreasing in ε.
pub fn modulus_profile(body: &BodyExpr, eps: &[f64], restarts: usize, seed: u64) -> Result<Vec<ModulusEstimate>> {
    ensure!(!eps.is_empty(), "empty epsilon grid");
    let mut order: Vec<usize> = (0..eps.len()).collect();
    order.sort_by(|&a, &b| eps[b].total_cmp(&eps[a]));
    let mut out: Vec<Option<ModulusEstimate>> = vec![None; eps.len()];
    let mut prev: Option<ModulusEstimate> = None;
    for i in order {
        let e = estimate_with(body, eps[i], restarts, seed, prev.as_ref())?;
        prev = Some(e.clone());
        out[i] = Some(e);
    }
    Ok(out.into_iter().map(|e| e.expect("filled")).collect())
}

/// `min_ε δ̂(ε)/ε²` over the grid: an upper bound on the best 2-convexity constant.
pub fn alpha_empirical(body: &BodyExpr, eps_grid: &[f64], restarts: usize, seed: u64) -> Result<f64> {
    let prof = modulus_profile(body, eps_grid, restarts, seed)?;
    Ok(prof.iter().map(|m| m.delta_hat / (m.epsilon * m.epsilon)).fold(f64::INFINITY, f64::min))
}

/// `(‖x‖² + ‖y‖² − 2‖(x+y)/2‖²) / (½‖x − y‖²)`.
pub fn alpha_prime_ratio(body: &BodyExpr, x: &[f64], y: &[f64]) -> Result<f64> {
    let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let d = body.norm(&diff)?;
    ensure!(d > 0.0, "coincident pair");
    let (nx, ny, nm) = (body.norm(x)?, body.norm(y)?, body.norm(&mid)?);
    Ok((nx * nx + ny * ny - 2.0 * nm * nm) / (0.5 * d * d))
}

/// Minimum of the α′ ratio over `trials` sampled pairs: independent Gaussian pairs, near-collinear
/// pairs, and structured directions with small structured perturbations; the best few are then
/// refined locally. An upper bound on the best α′.
pub fn alpha_prime_empirical(body: &BodyExpr, trials: usize, seed: u64) -> Result<f64> {
    ensure!(trials >= 1, "alpha_prime needs at least one trial");
    let n = body.dim();
    let mut rng = rng_for(seed, 0);
    let mut cands: Vec<(f64, Vec<f64>)> = Vec::new();
    let push = |x: Vec<f64>, y: Vec<f64>, cands: &mut Vec<(f64, Vec<f64>)>| {
        if let Ok(v) = alpha_prime_ratio(body, &x, &y) {
            cands.push((v, x.into_iter().chain(y).collect()));
        }
    };
    let dirs = structured_directions(n);
    for a in &dirs {
        for b in &dirs {
            push(a.clone(), b.clone(), &mut cands);
            for t in [1e-2, 1e-3] {
                let y: Vec<f64> = a.iter().zip(b).map(|(u, v)| u + t * v).collect();
                push(a.clone(), y, &mut cands);
            }
        }
    }
    for k in 0..trials {
        let x = gaussian_vec(&mut rng, n);
        let y = match k % 3 {
            0 => gaussian_vec(&mut rng, n),
            1 => {
                let g = gaussian_vec(&mut rng, n);
                let t = 10f64.powf(-1.0 - 2.0 * (k % 7) as f64 / 6.0);
                x.iter().zip(&g).map(|(a, b)| a + t * b).collect()
            }
            _ => {
                let s = 0.5 + (k % 5) as f64 * 0.25;
                let g = gaussian_vec(&mut rng, n);
                x.iter().zip(&g).map(|(a, b)| s * a + 0.3 * b).collect()
            }
        };
        push(x, y, &mut cands);
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = cands.first().map(|c| c.0).unwrap_or(f64::INFINITY);
    let f = |z: &[f64]| -> Result<f64> {
        let (x, y) = z.split_at(n);
        let gap: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        ensure!(gap >= 1e-4 * norm2(x).max(norm2(y)), "pair too close");
        alpha_prime_ratio(body, x, y)
    };
    for (_, z0) in cands.iter().take(3) {
        let x0 = z0[..n].to_vec();
        let scale = 0.05 * norm2(&x0).max(1e-3);
        let y0: Vec<f64> = z0[n..].to_vec();
        let gap = norm2(&x0.iter().zip(&y0).map(|(a, b)| a - b).collect::<Vec<_>>());
        let sigma = (0.3 * gap).min(scale).max(1e-5);
        if let Ok((v, _)) = one_plus_one_es(f, z0.clone(), sigma, 1e-9 * scale, 300 * n, &mut rng) {
            best = best.min(v);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid(eps: f64) -> f64 {
        1.0 - (1.0 - eps * eps / 4.0).sqrt()
    }

    #[test]
    fn euclidean_modulus() {
        for n in [2, 5] {
            let m = modulus_estimate(&BodyExpr::l2(n).unwrap(), 1.0, 4, 1).unwrap();
            assert!((m.delta_hat - euclid(1.0)).abs() < 1e-6, "{}", m.delta_hat);
        }
    }

    #[test]
    fn witness_invariants() {
        let body = BodyExpr::lp(3, 1.5).unwrap();
        for eps in [0.3, 1.0, 2.0] {
            let m = modulus_estimate(&body, eps, 3, 2).unwrap();
            let (x, y) = &m.witness_pair;
            assert!(body.norm(x).unwrap() <= 1.0 + 1e-9 && body.norm(y).unwrap() <= 1.0 + 1e-9);
            let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
            assert!(body.norm(&d).unwrap() >= eps - 1e-9);
            let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
            assert!((m.delta_hat - (1.0 - body.norm(&mid).unwrap())).abs() < 1e-15);
        }
    }

    #[test]
    fn cross_polytope_is_flat() {
        let m = modulus_estimate(&BodyExpr::lp(2, 1.0).unwrap(), 1.0, 2, 1).unwrap();
        assert!(m.delta_hat.abs() < 1e-9);
        let a = alpha_empirical(&BodyExpr::lp(4, 1.0).unwrap(), &default_eps_grid(), 2, 1).unwrap();
        assert!(a.abs() < 1e-9);
    }

    #[test]
    fn l15_plane_matches_grid_oracle() {
        // dense search over pairs of boundary points at angular resolution 1e-4 with bisection
        // for the largest feasible midpoint; frozen values
        let body = BodyExpr::lp(2, 1.5).unwrap();
        for (eps, oracle) in [(1.0, 0.067_122_610_353_013_7), (0.5, 0.015_878_505_562_037_626), (0.25, 0.003_921_649_606_154_154)] {
            let m = modulus_estimate(&body, eps, 4, 3).unwrap();
            assert!((m.delta_hat - oracle).abs() < 1e-6 * oracle.max(1e-3) + 1e-8, "eps {eps}: {} vs {oracle}", m.delta_hat);
        }
    }

    #[test]
    fn alpha_of_euclidean_ball_and_ellipse() {
        let grid = [0.25, 0.5, 1.0, 2.0];
        let a = alpha_empirical(&BodyExpr::l2(8).unwrap(), &grid, 3, 1).unwrap();
        assert!((0.125..=0.15).contains(&a), "{a}");
        let e = alpha_empirical(&BodyExpr::ellipsoid_diag(&[4.0, 1.0]).unwrap(), &grid, 3, 1).unwrap();
        let b = alpha_empirical(&BodyExpr::l2(2).unwrap(), &grid, 3, 1).unwrap();
        assert!((e - b).abs() < 1e-6, "{e} {b}");
    }

    #[test]
    fn profile_is_monotone() {
        let body = BodyExpr::lp(3, 1.25).unwrap();
        let grid = default_eps_grid();
        let prof = modulus_profile(&body, &grid, 2, 5).unwrap();
        let mut pairs: Vec<(f64, f64)> = prof.iter().map(|m| (m.epsilon, m.delta_hat)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn alpha_prime_values() {
        let a = alpha_prime_empirical(&BodyExpr::l2(4).unwrap(), 200, 1).unwrap();
        assert!((a - 1.0).abs() < 1e-6);
        let a = alpha_prime_empirical(&BodyExpr::lp(2, 1.0).unwrap(), 200, 1).unwrap();
        assert!(a.abs() < 1e-9);
        // 2-D oracle: minimisation over pairs with Nelder-Mead from 300 random starts gives 0.5000006
        let a = alpha_prime_empirical(&BodyExpr::lp(2, 1.5).unwrap(), 500, 1).unwrap();
        assert!((0.5 - 1e-6..0.505).contains(&a), "{a}");
    }
}
