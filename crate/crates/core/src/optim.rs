//! Limited-memory BFGS with backtracking, used by the inner convex solvers of the body algebra, and a
//! (1+1) evolution strategy for the nonconvex searches of the geometry estimators, and a
//! deep-cut ellipsoid method for certified minimisation of nonsmooth convex functions.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::{axpy, dot};

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub max_iter: usize,
    pub memory: usize,
    /// Stop once `max |grad_i| <= grad_tol * grad_scale`.
    pub grad_tol: f64,
    pub grad_scale: f64,
    /// Stop after three consecutive iterations whose relative decrease is below this.
    pub f_tol: f64,
    /// Initial inverse-Hessian scale used before any curvature pair is available.
    pub h0: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            memory: 12,
            grad_tol: 1e-12,
            grad_scale: 1.0,
            f_tol: 1e-15,
            h0: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Minimise a (convex, C¹ or nearly so) function given as value-and-gradient.
pub fn lbfgs<F>(mut f: F, x0: Vec<f64>, opts: &LbfgsOptions) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let dim = x0.len();
    let mut x = x0;
    let (mut fx, mut g) = f(&x)?;
    if dim == 0 {
        return Ok(Minimum { x, f: fx, grad: g, iterations: 0, converged: true });
    }
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut gamma = opts.h0;
    let mut stalls = 0;
    let gtol = opts.grad_tol * opts.grad_scale;

    for iter in 0..opts.max_iter {
        if inf_norm(&g) <= gtol {
            return Ok(Minimum { x, f: fx, grad: g, iterations: iter, converged: true });
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &q);
            axpy(&mut q, -a, y);
            alphas.push(a);
        }
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            axpy(&mut q, a - b, s);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            pairs.clear();
            dir = g.iter().map(|v| -v * gamma).collect();
            slope = dot(&g, &dir);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (fn_, gn) = f(&xn)?;
            if fn_.is_finite() && fn_ <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            let converged = inf_norm(&g) <= gtol.max(1e-9 * opts.grad_scale);
            return Ok(Minimum { x, f: fx, grad: g, iterations: iter, converged });
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            gamma = sy / dot(&y, &y);
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }

        let decrease = fx - fn_;
        if decrease <= opts.f_tol * fx.abs().max(1e-300) {
            stalls += 1;
        } else {
            stalls = 0;
        }
        x = xn;
        fx = fn_;
        g = gn;
        if stalls >= 3 {
            let converged = inf_norm(&g) <= gtol.max(1e-7 * opts.grad_scale);
            return Ok(Minimum { x, f: fx, grad: g, iterations: iter + 1, converged });
        }
    }
    let converged = inf_norm(&g) <= gtol;
    Ok(Minimum { x, f: fx, grad: g, iterations: opts.max_iter, converged })
}

#[derive(Debug, Clone)]
pub struct EllipsoidMin {
    pub x: Vec<f64>,
    pub f: f64,
    /// Certified lower bound on the minimum over the initial ball.
    pub lower: f64,
    pub iterations: usize,
}

/// Deep-cut ellipsoid method for convex `f` on the ball `|x − center| ≤ radius`. The lower bound
/// `f(x_k) − sqrt(gᵀ P_k g)` is valid whenever the ball contains a minimiser. Stops when
/// `done(best, lower)` holds or after `max_iter` evaluations.
pub fn ellipsoid_method<F, D>(mut f: F, center: Vec<f64>, radius: f64, mut done: D, max_iter: usize) -> Result<EllipsoidMin>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    D: FnMut(f64, f64) -> bool,
{
    let d = center.len();
    let df = d as f64;
    let mut x = center;
    let mut p = nalgebra::DMatrix::<f64>::identity(d, d) * (radius * radius);
    let (mut fx, mut g) = f(&x)?;
    let mut best = (fx, x.clone());
    let mut lower = f64::NEG_INFINITY;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let pg: Vec<f64> = (0..d).map(|i| (0..d).map(|j| p[(i, j)] * g[j]).sum()).collect();
        let gpg = dot(&g, &pg);
        if !(gpg > 0.0) {
            // zero subgradient: x is a minimiser
            lower = lower.max(fx);
            best = if fx <= best.0 { (fx, x.clone()) } else { best };
            break;
        }
        let s = gpg.sqrt();
        lower = lower.max(fx - s);
        if done(best.0, lower) {
            break;
        }
        let alpha = ((fx - best.0) / s).clamp(0.0, 0.999);
        if d == 1 {
            let shift = (1.0 + alpha) / 2.0;
            x[0] -= shift * pg[0] / s;
            p[(0, 0)] *= ((1.0 - alpha) / 2.0).powi(2);
        } else {
            let tau = (1.0 + df * alpha) / (df + 1.0);
            let sigma = 2.0 * tau / (1.0 + alpha);
            let delta = df * df / (df * df - 1.0) * (1.0 - alpha * alpha);
            for i in 0..d {
                x[i] -= tau * pg[i] / s;
            }
            for i in 0..d {
                for j in 0..d {
                    p[(i, j)] = delta * (p[(i, j)] - sigma * pg[i] * pg[j] / gpg);
                }
            }
            p = (&p + p.transpose()) * 0.5;
        }
        let (v, gg) = f(&x)?;
        fx = v;
        g = gg;
        if fx < best.0 {
            best = (fx, x.clone());
        }
    }
    Ok(EllipsoidMin { x: best.1, f: best.0, lower, iterations: it })
}

/// (1+1) evolution strategy with the one-fifth success rule. `f` may return `Err`; failures are
/// treated as rejected steps. Stops when the step size drops below `sigma_min` or after `max_evals`.
pub fn one_plus_one_es<F, R>(f: F, x0: Vec<f64>, sigma0: f64, sigma_min: f64, max_evals: usize, rng: &mut R) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<f64>,
    R: Rng,
{
    let n = x0.len();
    let mut x = x0;
    let mut fx = f(&x)?;
    let mut sigma = sigma0;
    let (up, down) = (1.5_f64, 1.5_f64.powf(-0.25));
    let mut cand = vec![0.0; n];
    for _ in 0..max_evals {
        if sigma < sigma_min {
            break;
        }
        for (c, xi) in cand.iter_mut().zip(&x) {
            *c = xi + sigma * rng.sample::<f64, _>(StandardNormal);
        }
        match f(&cand) {
            Ok(v) if v <= fx => {
                if v < fx {
                    sigma *= up;
                } else {
                    sigma *= down;
                }
                fx = v;
                x.copy_from_slice(&cand);
            }
            _ => sigma *= down,
        }
    }
    Ok((fx, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimises_quadratic() {
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let v = (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2);
            Ok((v, vec![2.0 * (x[0] - 1.0), 20.0 * (x[1] + 2.0)]))
        };
        let m = lbfgs(f, vec![0.0, 0.0], &LbfgsOptions::default()).unwrap();
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-9 && (m.x[1] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn minimises_rosenbrock() {
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let ga = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            let gb = 200.0 * (b - a * a);
            Ok((v, vec![ga, gb]))
        };
        let opts = LbfgsOptions { max_iter: 2000, h0: 1e-3, ..Default::default() };
        let m = lbfgs(f, vec![-1.2, 1.0], &opts).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-6, "{:?}", m);
    }

    #[test]
    fn es_finds_abs_minimum() {
        let mut rng = crate::sampling::rng_for(1, 0);
        let f = |x: &[f64]| -> Result<f64> { Ok(x.iter().map(|v| (v - 1.0).abs()).sum()) };
        let (v, x) = one_plus_one_es(f, vec![0.0; 4], 0.5, 1e-10, 20_000, &mut rng).unwrap();
        assert!(v < 1e-7, "{v} {x:?}");
    }

    #[test]
    fn ellipsoid_method_certifies_polyhedral_minimum() {
        // f = |x₁ − 1| + 2|x₂ + 0.5| + |x₁ + x₂| has minimum 0.5 at (1, −0.5)
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let s = |v: f64| if v >= 0.0 { 1.0 } else { -1.0 };
            let v = (x[0] - 1.0).abs() + 2.0 * (x[1] + 0.5).abs() + (x[0] + x[1]).abs();
            Ok((v, vec![s(x[0] - 1.0) + s(x[0] + x[1]), 2.0 * s(x[1] + 0.5) + s(x[0] + x[1])]))
        };
        let m = ellipsoid_method(f, vec![0.0, 0.0], 10.0, |b, l| b - l < 1e-10, 5000).unwrap();
        assert!((m.f - 0.5).abs() < 1e-9 && m.lower <= m.f && m.f - m.lower < 1e-9, "{m:?}");
        let h = |x: &[f64]| -> Result<(f64, Vec<f64>)> { Ok(((x[0] - 0.3).abs(), vec![if x[0] >= 0.3 { 1.0 } else { -1.0 }])) };
        let m = ellipsoid_method(h, vec![0.0], 1.0, |b, l| b - l < 1e-12, 500).unwrap();
        assert!(m.f < 1e-11 && m.lower > -1e-11);
    }
}
