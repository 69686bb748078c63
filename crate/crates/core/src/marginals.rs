//! One-dimensional marginals of uniform samples: tails against the sub-Gaussian bound, ψ₂ norms,
//! the symmetric-interval Gaussian distance `H(θ)`, thin-shell mass, `C_iso` and Lipschitz
//! concentration of `|x|`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::{BodyExpr, LinearMapRec};
use crate::error::{ensure, numeric, Result};
use crate::geometry::structured_directions;
use crate::linalg::{dot, matvec, matvec_t, norm2, scaled};
use crate::positions::{batch_mean_se, place, PositionTag};
use crate::sampling::{derive_seed, sample_uniform, sphere_sample, ChainConfig, SampleBatch};
use crate::stats::{median, phi, quantile};

pub const DEFAULT_P_MAX: u32 = 12;
pub const DEFAULT_SHELL_EPS: f64 = 0.1;
const BISECTION_STEPS: usize = 80;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailRow {
    pub t: f64,
    /// Empirical mass of `{⟨x,θ⟩ > t}`.
    pub empirical: f64,
    /// Binomial standard error of `empirical`.
    pub se: f64,
    /// `2 exp(−2αn (t/w)²)`.
    pub bound: f64,
    /// `empirical − bound > 3 se`.
    pub violation: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailTable {
    pub theta: Vec<f64>,
    pub width: f64,
    pub alpha: f64,
    pub rows: Vec<TailRow>,
}

impl TailTable {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violation).count()
    }
}

fn unit(theta: &[f64]) -> Result<Vec<f64>> {
    let r = norm2(theta);
    ensure!(r > 0.0 && r.is_finite(), "direction must be a nonzero finite vector");
    Ok(scaled(theta, 1.0 / r))
}

/// Directional tails of a volume-1 body against `2 exp(−2αn (t/w)²)` with `w = ‖θ‖*_K`.
pub fn tail_check(body: &BodyExpr, theta: &[f64], batch: &SampleBatch, t_grid: &[f64], alpha: f64) -> Result<TailTable> {
    let theta = unit(theta)?;
    let w = body.dual_norm(&theta)?;
    let n = body.dim() as f64;
    let s = batch.marginal(&theta);
    let count = s.len() as f64;
    let rows = t_grid
        .iter()
        .map(|&t| {
            let p = s.iter().filter(|&&v| v > t).count() as f64 / count;
            let se = (p * (1.0 - p) / count).sqrt();
            let bound = 2.0 * (-2.0 * alpha * n * (t / w).powi(2)).exp();
            TailRow { t, empirical: p, se, bound, violation: p - bound > 3.0 * se }
        })
        .collect();
    Ok(TailTable { theta, width: w, alpha, rows })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Psi2Estimate {
    pub theta: Vec<f64>,
    /// `inf{λ : E exp(⟨x,θ⟩²/λ²) ≤ 2}` on the empirical measure.
    pub lambda_def: f64,
    /// `max_{p even ≤ p_max} ‖⟨x,θ⟩‖_p / √p`.
    pub lambda_mom: f64,
    pub p_max: u32,
}

/// `ln mean exp(s²/λ²)` without overflow.
fn ln_mean_exp(sq: &[f64], max_sq: f64, lambda: f64) -> f64 {
    let l2 = lambda * lambda;
    let acc: f64 = sq.iter().map(|v| ((v - max_sq) / l2).exp()).sum();
    max_sq / l2 + (acc / sq.len() as f64).ln()
}

/// Both ψ₂ estimators for a one-dimensional sample.
pub fn psi2_of_values(s: &[f64], p_max: u32) -> Result<(f64, f64)> {
    ensure!(p_max >= 2 && p_max % 2 == 0, "p_max must be an even integer ≥ 2, got {p_max}");
    ensure!(!s.is_empty(), "psi2 needs a nonempty sample");
    let sq: Vec<f64> = s.iter().map(|v| v * v).collect();
    let max_sq = sq.iter().cloned().fold(0.0, f64::max);
    let mean_sq = sq.iter().sum::<f64>() / sq.len() as f64;
    let ln2 = 2f64.ln();
    // Jensen: mean exp(s²/λ²) ≥ exp(mean s²/λ²) ≥ 2 at lo; every term ≤ 2 at hi
    let (mut lo, mut hi) = ((mean_sq / ln2).sqrt(), (max_sq / ln2).sqrt());
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(numeric(format!("psi2 bisection: empty bracket [{lo:.3e}, {hi:.3e}]"), mean_sq));
    }
    for _ in 0..BISECTION_STEPS {
        let mid = (lo * hi).sqrt();
        if ln_mean_exp(&sq, max_sq, mid) > ln2 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-13 {
            break;
        }
    }
    let lambda_def = (lo * hi).sqrt();
    let mut lambda_mom: f64 = 0.0;
    for p in (2..=p_max).step_by(2) {
        // moments of s/√mean_sq keep s^p in range
        let scale = mean_sq.sqrt();
        let m = s.iter().map(|v| (v / scale).powi(p as i32)).sum::<f64>() / s.len() as f64;
        lambda_mom = lambda_mom.max(scale * m.powf(1.0 / p as f64) / (p as f64).sqrt());
    }
    Ok((lambda_def, lambda_mom))
}

pub fn psi2_norm(batch: &SampleBatch, theta: &[f64], p_max: u32) -> Result<Psi2Estimate> {
    let theta = unit(theta)?;
    let (lambda_def, lambda_mom) = psi2_of_values(&batch.marginal(&theta), p_max)?;
    Ok(Psi2Estimate { theta, lambda_def, lambda_mom, p_max })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianProximityReport {
    pub theta: Vec<f64>,
    pub rho: f64,
    /// `(E ⟨x,θ⟩²)^{1/2}`.
    pub rho_theta: f64,
    pub h: f64,
    pub sample_size: usize,
}

/// `sup_t |P(|S| ≤ t) − P(|G_ρ| ≤ t)|` by an exact sweep over the sorted `|s_i|`: between jumps the
/// empirical mass is constant and the Gaussian mass increases, so the supremum is attained at a
/// jump from one side.
pub fn h_of_values(s: &[f64], rho: f64) -> f64 {
    let mut a: Vec<f64> = s.iter().map(|v| v.abs()).collect();
    a.sort_by(f64::total_cmp);
    let n = a.len() as f64;
    let mut h: f64 = 0.0;
    let mut k = 0;
    while k < a.len() {
        let t = a[k];
        let mut j = k;
        while j < a.len() && a[j] == t {
            j += 1;
        }
        let g = 2.0 * phi(t / rho) - 1.0;
        h = h.max((k as f64 / n - g).abs()).max((j as f64 / n - g).abs());
        k = j;
    }
    h
}

pub fn h_statistic(batch: &SampleBatch, theta: &[f64], rho: f64) -> Result<GaussianProximityReport> {
    ensure!(rho > 0.0, "Gaussian scale must be positive, got {rho}");
    let theta = unit(theta)?;
    let s = batch.marginal(&theta);
    let rho_theta = (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
    Ok(GaussianProximityReport { theta, rho, rho_theta, h: h_of_values(&s, rho), sample_size: s.len() })
}

/// Empirical mass of `{x : ||x|/√n − ρ| ≥ ερ}`.
pub fn shell_check(batch: &SampleBatch, rho: f64, eps: f64) -> f64 {
    let sn = (batch.dim() as f64).sqrt();
    let out = batch.points().filter(|x| (norm2(x) / sn - rho).abs() >= eps * rho).count();
    out as f64 / batch.count() as f64
}

/// Central section volume in direction θ of a volume-1 body, `P(|⟨x,θ⟩| ≤ h) / (2h)`.
pub fn section_volume(batch: &SampleBatch, theta: &[f64], h: f64) -> f64 {
    let t = scaled(theta, 1.0 / norm2(theta));
    let inside = batch.points().filter(|x| dot(x, &t).abs() <= h).count();
    inside as f64 / (2.0 * h * batch.count() as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionRow {
    pub index: usize,
    pub rho_theta: f64,
    pub h: f64,
    pub psi2_def: f64,
    pub psi2_mom: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CltSummary {
    pub tag: PositionTag,
    pub descriptor: String,
    pub dim: usize,
    pub sample_size: usize,
    pub seed: u64,
    pub rho_avg: f64,
    /// Maximum over the sampled and structured directions: a lower bound for `ρ_max`.
    pub rho_max_hat: f64,
    /// `ρ̂_max / ρ_avg`, a lower estimate of `C_iso`.
    pub c_iso_hat: f64,
    /// `∫|x| dx / √n`, the Gaussian scale used for `H`.
    pub rho: f64,
    pub shell_eps: f64,
    pub shell_mass_out: f64,
    pub h_median: f64,
    pub h_q90: f64,
    /// Per sampled direction (the structured directions only enter `rho_max_hat`).
    pub directions: Vec<DirectionRow>,
}

impl CltSummary {
    /// Per-direction table: theta index, rho_theta, H, psi2_def, psi2_mom.
    pub fn write_direction_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta_index", "rho_theta", "H", "psi2_def", "psi2_mom"])?;
        for r in &self.directions {
            w.serialize((r.index, r.rho_theta, r.h, r.psi2_def, r.psi2_mom))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Marginal statistics of a sample over `n_dirs` uniform directions.
pub fn clt_of_batch(batch: &SampleBatch, n_dirs: usize, shell_eps: f64, seed: u64) -> Result<CltSummary> {
    let n = batch.dim();
    ensure!(n_dirs >= 1, "clt summary needs at least one direction");
    let nf = n as f64;
    let abs: Vec<f64> = batch.points().map(|x| norm2(x) / nf.sqrt()).collect();
    let rho = abs.iter().sum::<f64>() / abs.len() as f64;
    let dirs = sphere_sample(n, n_dirs, seed);
    let directions: Vec<DirectionRow> = dirs
        .par_iter()
        .enumerate()
        .map(|(index, th)| {
            let s = batch.marginal(th);
            let rho_theta = (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
            let (psi2_def, psi2_mom) = psi2_of_values(&s, DEFAULT_P_MAX)?;
            Ok(DirectionRow { index, rho_theta, h: h_of_values(&s, rho), psi2_def, psi2_mom })
        })
        .collect::<Result<_>>()?;
    let rhos: Vec<f64> = directions.iter().map(|d| d.rho_theta).collect();
    let rho_avg = rhos.iter().sum::<f64>() / rhos.len() as f64;
    let structured_max = structured_directions(n)
        .iter()
        .map(|th| {
            let s = batch.marginal(th);
            (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt()
        })
        .fold(0.0, f64::max);
    let rho_max_hat = rhos.iter().cloned().fold(structured_max, f64::max);
    let hs: Vec<f64> = directions.iter().map(|d| d.h).collect();
    Ok(CltSummary {
        tag: PositionTag::Raw,
        descriptor: batch.descriptor.clone(),
        dim: n,
        sample_size: batch.count(),
        seed,
        rho_avg,
        rho_max_hat,
        c_iso_hat: rho_max_hat / rho_avg,
        rho,
        shell_eps,
        shell_mass_out: shell_check(batch, rho, shell_eps),
        h_median: median(&hs),
        h_q90: quantile(&hs, 0.9),
        directions,
    })
}

/// Place the body (volume 1), sample it and summarise its marginals.
pub fn clt_summary(body: &BodyExpr, tag: PositionTag, n_dirs: usize, sample_size: usize, seed: u64) -> Result<CltSummary> {
    let placed = place(body, tag, sample_size, seed)?;
    let batch = sample_uniform(&placed.body, &ChainConfig::new(derive_seed(seed, 2)), sample_size)?;
    let mut s = clt_of_batch(&batch, n_dirs, DEFAULT_SHELL_EPS, derive_seed(seed, 6))?;
    s.tag = tag;
    Ok(s)
}

/// Both sides of the symmetric-interval identity under a linear map `T`:
/// `∫_{−t}^{t} (g^K_θ − φ_ρ) = ∫_{−st}^{st} (g^{T(K)}_u − φ_{sρ})` with `u = T^{−ᵀ}θ/|T^{−ᵀ}θ|` and
/// `s = 1/|T^{−ᵀ}θ|`, where the left side uses the sample and the right side its image under `T`.
/// Returns the largest discrepancy over `t_grid` (with `ρ` the sample's `(E⟨x,θ⟩²)^{1/2}`).
pub fn invariance_check(map: &LinearMapRec, theta: &[f64], t_grid: &[f64], batch: &SampleBatch) -> Result<f64> {
    ensure!(map.dim() == batch.dim(), "map dimension {} does not match sample dimension {}", map.dim(), batch.dim());
    let theta = unit(theta)?;
    let v = matvec_t(map.inverse(), &theta);
    let s = 1.0 / norm2(&v);
    let u = scaled(&v, s);
    let left = batch.marginal(&theta);
    let right: Vec<f64> = batch.points().map(|x| dot(&matvec(map.matrix(), x), &u)).collect();
    let rho = (left.iter().map(|v| v * v).sum::<f64>() / left.len() as f64).sqrt();
    let mass = |vals: &[f64], t: f64| vals.iter().filter(|v| v.abs() <= t).count() as f64 / vals.len() as f64;
    let gauss = |t: f64, r: f64| 2.0 * phi(t / r) - 1.0;
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        let l = mass(&left, t) - gauss(t, rho);
        let r = mass(&right, s * t) - gauss(s * t, s * rho);
        worst = worst.max((l - r).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LipschitzRow {
    pub t: f64,
    /// Mass of `{|x| ≥ Med + t}` and the bound `2 exp(−2αn (t/d)²)`.
    pub above_median: f64,
    pub median_bound: f64,
    /// Mass of `{||x| − E| ≥ t + C d (αn)^{−1/2}}` with the fitted `C`, and `4 exp(−2αn (t/d)²)`.
    pub off_mean: f64,
    pub mean_bound: f64,
    pub se: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LipschitzTable {
    pub diameter: f64,
    pub alpha: f64,
    pub median: f64,
    pub mean: f64,
    pub mean_se: f64,
    /// `C = |E − Med| / (d (αn)^{−1/2})`.
    pub fitted_c: f64,
    pub rows: Vec<LipschitzRow>,
}

/// Concentration of the 1-Lipschitz function `|x|` on a sample of a body of diameter `d_k`,
/// on the grid `t = d_k · k/16`, `k = 0..16`.
pub fn lipschitz_concentration(batch: &SampleBatch, d_k: f64, alpha: f64) -> Result<LipschitzTable> {
    ensure!(d_k > 0.0 && alpha > 0.0, "diameter and alpha must be positive");
    let n = batch.dim() as f64;
    let f: Vec<f64> = batch.points().map(norm2).collect();
    let count = f.len() as f64;
    let med = median(&f);
    let (mean, mean_se) = batch_mean_se(&f);
    let unit_gap = d_k / (alpha * n).sqrt();
    let fitted_c = (mean - med).abs() / unit_gap;
    let rows = (0..=16)
        .map(|k| {
            let t = d_k * k as f64 / 16.0;
            let above = f.iter().filter(|&&v| v >= med + t).count() as f64 / count;
            let off = f.iter().filter(|&&v| (v - mean).abs() >= t + fitted_c * unit_gap).count() as f64 / count;
            let e = (-2.0 * alpha * n * (t / d_k).powi(2)).exp();
            let se = (above * (1.0 - above) / count).sqrt().max((off * (1.0 - off) / count).sqrt());
            let violation = above - 2.0 * e > 3.0 * se || off - 4.0 * e > 3.0 * se;
            LipschitzRow { t, above_median: above, median_bound: 2.0 * e, off_mean: off, mean_bound: 4.0 * e, se, violation }
        })
        .collect();
    Ok(LipschitzTable { diameter: d_k, alpha, median: med, mean, mean_se, fitted_c, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{exact_sample, gaussian_vec, rng_for};
    use crate::stats::{integrate, unit_volume_ball_radius};
    use rand::Rng;

    fn values(v: Vec<f64>) -> SampleBatch {
        let pts: Vec<Vec<f64>> = v.into_iter().map(|x| vec![x]).collect();
        SampleBatch::from_points("synthetic", &pts)
    }

    fn gaussians(n: usize, sd: f64, seed: u64) -> Vec<f64> {
        let mut rng = rng_for(seed, 0);
        gaussian_vec(&mut rng, n).into_iter().map(|g| g * sd).collect()
    }

    #[test]
    fn cube_tails() {
        let n = 16;
        let cube = BodyExpr::scale(0.5, BodyExpr::cube(n).unwrap()).unwrap();
        let batch = exact_sample(&cube, 100_000, 1).unwrap();
        let mut e1 = vec![0.0; n];
        e1[0] = 1.0;
        let t = tail_check(&cube, &e1, &batch, &[0.25, 0.5, 0.6], 0.125).unwrap();
        assert!((t.width - 0.5).abs() < 1e-12);
        assert!((t.rows[0].empirical - 0.25).abs() < 4.0 * t.rows[0].se);
        // 2 exp(−2 (1/8) n (t/w)²) with t/w = 1/2
        assert!((t.rows[0].bound - 2.0 * (-(n as f64) / 16.0).exp()).abs() < 1e-12);
        assert_eq!(t.rows[2].empirical, 0.0);
        assert_eq!(t.violations(), 0);
    }

    #[test]
    fn ball_tails_match_beta_marginal() {
        // density of x₁ on B^5 ∝ (1 − t²)²
        let n = 5;
        let ball = BodyExpr::l2(n).unwrap();
        let batch = exact_sample(&ball, 200_000, 2).unwrap();
        let dens = |t: f64| (1.0 - t * t).powi(2);
        let z = integrate(dens, -1.0, 1.0, 1e-14);
        let th = unit(&[1.0, 2.0, -1.0, 0.5, 0.0]).unwrap();
        let grid = [0.0, 0.1, 0.3, 0.5, 0.8, 1.0];
        let t = tail_check(&ball, &th, &batch, &grid, 0.125).unwrap();
        for r in &t.rows {
            let want = integrate(dens, r.t, 1.0, 1e-14) / z;
            assert!((r.empirical - want).abs() < 4.0 * r.se.max(1e-6), "{} {} {}", r.t, r.empirical, want);
        }
    }

    #[test]
    fn psi2_of_gaussian_and_uniform() {
        let b = values(gaussians(400_000, 1.0, 3));
        let e = psi2_norm(&b, &[1.0], 12).unwrap();
        let want = (8.0f64 / 3.0).sqrt();
        assert!((e.lambda_def / want - 1.0).abs() < 0.02, "{}", e.lambda_def);
        assert!(e.lambda_def / e.lambda_mom < 4.0 && e.lambda_mom / e.lambda_def < 4.0);

        // oracle: ∫₀¹ exp(t²/λ²) dt = 2 by quadrature and bisection
        let (mut lo, mut hi) = (0.1, 10.0);
        for _ in 0..200 {
            let mid: f64 = 0.5 * (lo + hi);
            if integrate(|t| (t * t / (mid * mid)).exp(), 0.0, 1.0, 1e-13) > 2.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut rng = rng_for(4, 0);
        let u: Vec<f64> = (0..400_000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let e = psi2_norm(&values(u.clone()), &[1.0], 12).unwrap();
        assert!((e.lambda_def / lo - 1.0).abs() < 0.01, "{} {lo}", e.lambda_def);

        let e3 = psi2_norm(&values(u.iter().map(|v| 3.0 * v).collect()), &[1.0], 12).unwrap();
        assert!((e3.lambda_def / e.lambda_def - 3.0).abs() < 1e-9);
        assert!((e3.lambda_mom / e.lambda_mom - 3.0).abs() < 1e-12);
        assert!(psi2_norm(&values(u), &[1.0], 5).is_err());
    }

    #[test]
    fn h_of_gaussian_samples() {
        let h = h_statistic(&values(gaussians(10_000, 2.0, 5)), &[1.0], 2.0).unwrap();
        assert!(h.h <= 0.033 && (h.rho_theta - 2.0).abs() < 0.05);
        let h = h_of_values(&gaussians(1_000_000, 1.0, 6), 1.0);
        assert!(h <= 0.004, "{h}");
    }

    #[test]
    fn h_of_uniform_matches_grid_oracle() {
        // sup_t |min(t/√3, 1) − (2Φ(t) − 1)| on a dense grid
        let s3 = 3f64.sqrt();
        let grid = (1..=400_000).map(|i| i as f64 * 1e-5).map(|t| ((t / s3).min(1.0) - (2.0 * phi(t) - 1.0)).abs());
        let oracle = grid.fold(0.0, f64::max);
        assert!((oracle - 0.114_413_4).abs() < 1e-6, "{oracle}");
        let mut rng = rng_for(7, 0);
        let u: Vec<f64> = (0..1_000_000).map(|_| rng.random_range(-s3..s3)).collect();
        let h = h_of_values(&u, 1.0);
        assert!((h - oracle).abs() < 0.003, "{h} {oracle}");
        assert!((0.0..=1.0).contains(&h));
    }

    #[test]
    fn h_sweep_is_exact_on_small_samples() {
        let s = [0.3, -1.2, 0.3, 2.0];
        let brute = (0..300_000)
            .map(|i| i as f64 * 1e-5)
            .map(|t| {
                let m = s.iter().filter(|v: &&f64| v.abs() <= t).count() as f64 / 4.0;
                (m - (2.0 * phi(t) - 1.0)).abs()
            })
            .fold(0.0, f64::max);
        assert!((h_of_values(&s, 1.0) - brute).abs() < 1e-4);
    }

    #[test]
    fn shells() {
        // unit-volume ball: |x| = R U^{1/n}
        let n = 10;
        let r = unit_volume_ball_radius(n);
        let body = BodyExpr::scale(r, BodyExpr::l2(n).unwrap()).unwrap();
        let batch = exact_sample(&body, 200_000, 8).unwrap();
        let nf = n as f64;
        let rho = nf / (nf + 1.0) * r / nf.sqrt();
        let eps = 0.1;
        let a = (1.0 - eps) * nf / (nf + 1.0);
        let b = (1.0 + eps) * nf / (nf + 1.0);
        let want = a.powf(nf) + 1.0 - b.min(1.0).powf(nf);
        let got = shell_check(&batch, rho, eps);
        assert!((got - want).abs() < 4.0 * (want * (1.0 - want) / 200_000.0).sqrt(), "{got} {want}");
        assert_eq!(shell_check(&batch, rho, 0.0), 1.0);

        let cube = BodyExpr::scale(0.5, BodyExpr::cube(64).unwrap()).unwrap();
        let cb = exact_sample(&cube, 20_000, 9).unwrap();
        let rho = cb.points().map(norm2).sum::<f64>() / 20_000.0 / 8.0;
        assert!(shell_check(&cb, rho, 1.0) <= 0.01);
    }

    #[test]
    fn ball_clt_summary() {
        let s = clt_summary(&BodyExpr::l2(64).unwrap(), PositionTag::Raw, 100, 100_000, 10).unwrap();
        assert!((s.c_iso_hat - 1.0).abs() < 0.02 && s.c_iso_hat >= 1.0);
        assert!(s.h_median <= 0.05, "{}", s.h_median);
        assert!((0.0..=1.0).contains(&s.shell_mass_out));
        let mut out = Vec::new();
        s.write_direction_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 101);
    }

    #[test]
    fn cube_clt_summary() {
        let s = clt_summary(&BodyExpr::cube(64).unwrap(), PositionTag::Isotropic, 50, 100_000, 11).unwrap();
        assert!(s.h_median <= 0.05, "{}", s.h_median);
        // the coordinate directions are where ρ_θ is largest for a non-isotropic body only
        assert!(s.c_iso_hat < 1.05);
    }

    #[test]
    fn invariance_identity() {
        let n = 8;
        let batch = exact_sample(&BodyExpr::cube(n).unwrap(), 100_000, 12).unwrap();
        let th = unit(&(0..n).map(|i| (i as f64 + 1.0).sin()).collect::<Vec<_>>()).unwrap();
        let grid: Vec<f64> = (1..=10).map(|k| 0.2 * k as f64).collect();
        let bound = 5.0 / (100_000f64).sqrt();
        assert_eq!(invariance_check(&LinearMapRec::identity(n), &th, &grid, &batch).unwrap(), 0.0);
        let two = LinearMapRec::scalar(n, 2.0).unwrap();
        assert!(invariance_check(&two, &th, &grid, &batch).unwrap() <= 2.0 / (100_000f64).sqrt());
        let mut rng = rng_for(13, 0);
        let g = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.3..0.3));
        let t = LinearMapRec::new(g + nalgebra::DMatrix::identity(n, n)).unwrap();
        assert!(t.condition_number() < 10.0);
        assert!(invariance_check(&t, &th, &grid, &batch).unwrap() <= bound);
    }

    #[test]
    fn lipschitz_on_ball_and_cube() {
        let n = 16;
        let batch = exact_sample(&BodyExpr::l2(n).unwrap(), 200_000, 14).unwrap();
        let tab = lipschitz_concentration(&batch, 2.0, 0.125).unwrap();
        // |x| = U^{1/n}: median 2^{−1/n}, mean n/(n+1)
        let nf = n as f64;
        assert!((tab.median - 0.5f64.powf(1.0 / nf)).abs() < 2e-3);
        assert!((tab.mean - nf / (nf + 1.0)).abs() < 4.0 * tab.mean_se);
        assert!(tab.rows[0].above_median <= 1.0 && tab.rows[0].median_bound == 2.0);
        assert!(tab.rows.iter().all(|r| !r.violation));

        let cube = BodyExpr::scale(0.5, BodyExpr::cube(64).unwrap()).unwrap();
        let cb = exact_sample(&cube, 50_000, 15).unwrap();
        let tab = lipschitz_concentration(&cb, 8.0, 0.125).unwrap();
        let quarter = &tab.rows[4];
        assert!(quarter.t == 2.0 && quarter.above_median <= quarter.median_bound);
    }
}
