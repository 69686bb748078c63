//! Per-row measurements for every registered claim.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{ClaimId, Measurement, RowCtx};
use crate::body::{revolution_moments, BodyExpr, LinearMapRec};
use crate::error::{contract, Result};
use crate::geometry::{
    alpha_empirical, b_max_norm, circumradius, default_eps_grid, diameter, inradius, loewner_ellipsoid, mean_widths,
    santalo_product, structured_directions, volume,
};
use crate::linalg::norm2;
use crate::marginals::{clt_of_batch, invariance_check, lipschitz_concentration, psi2_norm, shell_check, tail_check, DEFAULT_P_MAX};
use crate::positions::{batch_mean_se, isotropic_constant_of, isotropic_transform_with, place, Placement, PositionTag, VOLUME_REL_ERR};
use crate::sampling::{derive_seed, haar_subspace, rng_for, sample_uniform, sphere_sample, ChainConfig, SampleBatch};
use crate::stats::{ln_ball_volume, mean_se, unit_volume_ball_radius};

const ELLIPSOID_TOL: f64 = 1e-6;
/// Volume accuracy for the claims that only need `L_K` to about `rel/n`.
const COARSE_VOLUME_REL_ERR: f64 = 1e-2;

pub(crate) fn measure(id: ClaimId, c: &RowCtx) -> Result<Vec<Measurement>> {
    match id {
        ClaimId::Hyperplane => hyperplane(c),
        ClaimId::FiniteVr => finite_vr(c),
        ClaimId::LkBound => lk_bound(c),
        ClaimId::Psi2Bounds => psi2_bounds(c),
        ClaimId::RandomSection => random_section(c),
        ClaimId::Ovr2Smooth => ovr_2smooth(c),
        ClaimId::FireyAlpha => firey_alpha(c),
        ClaimId::LqLk => lq_lk(c),
        ClaimId::SchattenLk => schatten_lk(c),
        ClaimId::JohnMstarb => john_mstarb(c),
        ClaimId::InvFiniteVr => inv_finite_vr(c),
        ClaimId::EssIso => ess_iso(c),
        ClaimId::CuspDiam => cusp_diam(c),
        ClaimId::SmallDiam => small_diam(c),
        ClaimId::Shell => shell(c),
        ClaimId::GaussMarginals => gauss_marginals(c),
        ClaimId::Tails => tails(c),
        ClaimId::Lipschitz => lipschitz(c),
        ClaimId::Invariance => invariance(c),
        ClaimId::Urysohn => urysohn(c),
        ClaimId::Santalo => santalo(c),
    }
}

fn alpha_of(body: &BodyExpr) -> Result<f64> {
    body.analytic_attrs()
        .alpha
        .ok_or_else(|| contract(format!("no analytic 2-convexity constant for {body}")))
}

fn conjugate_of(c: &RowCtx) -> Result<f64> {
    let p = c.p.ok_or_else(|| contract("claim needs p"))?;
    if !(p > 1.0 && p <= 2.0) {
        return Err(contract(format!("claim needs 1 < p <= 2, got {p}")));
    }
    Ok(p / (p - 1.0))
}

fn draw(body: &BodyExpr, seed: u64, count: usize) -> Result<SampleBatch> {
    sample_uniform(body, &ChainConfig::new(seed), count)
}

/// Placement and a fresh sample of it.
fn placed_sample(c: &RowCtx, tag: PositionTag) -> Result<(Placement, SampleBatch)> {
    let body = c.body()?;
    let samples = c.params.usize("samples")?;
    let placed = place(&body, tag, samples, c.seed)?;
    let batch = draw(&placed.body, derive_seed(c.seed, 2), samples)?;
    Ok((placed, batch))
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

fn binomial_se(frac: f64, count: usize) -> f64 {
    (frac * (1.0 - frac) / count as f64).sqrt()
}

fn hyperplane(c: &RowCtx) -> Result<Vec<Measurement>> {
    let body = c.body()?;
    let n = body.dim();
    let sa = alpha_of(&body)?.sqrt();
    let slab = c.params.f64("slab")?;
    let (_, batch) = placed_sample(c, PositionTag::Isotropic)?;
    let count = batch.count();
    let mut thetas = sphere_sample(n, c.params.usize("dirs")?, derive_seed(c.seed, 3));
    thetas.extend(structured_directions(n));
    let secs: Vec<(f64, f64)> = thetas
        .par_iter()
        .map(|th| {
            let s = batch.marginal(th);
            let h = slab * rms(&s);
            let frac = s.iter().filter(|v| v.abs() <= h).count() as f64 / count as f64;
            (frac / (2.0 * h), binomial_se(frac, count) / (2.0 * h))
        })
        .collect();
    let (max, se) = secs.iter().copied().fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    let min = secs.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    Ok(vec![Measurement::new(max * sa, se * sa).with("max_section", max).with("min_section", min)])
}

fn finite_vr(c: &RowCtx) -> Result<Vec<Measurement>> {
    let body = c.body()?;
    let n = body.dim();
    let sa = alpha_of(&body)?.sqrt();
    let restarts = c.params.usize("restarts")?;
    let vol = volume(&body, VOLUME_REL_ERR, derive_seed(c.seed, 7))?;
    let batch = draw(&body, derive_seed(c.seed, 1), c.params.usize("samples")?)?;
    let inr = |b: &SampleBatch| -> Result<f64> {
        let t = isotropic_transform_with(b, vol.clone())?;
        inradius(&BodyExpr::linear_image(t.map, body.clone())?, restarts, derive_seed(c.seed, 4))
    };
    let full = inr(&batch)?;
    // the spread of disjoint sub-sample estimates, scaled to the full sample
    let parts = batch.split(c.params.usize("groups")?).iter().map(inr).collect::<Result<Vec<f64>>>()?;
    let (_, se) = mean_se(&parts);
    let scale = sa * unit_volume_ball_radius(n);
    Ok(vec![Measurement::new(full / scale, se / scale).with("inradius", full)])
}

fn lk_bound(c: &RowCtx) -> Result<Vec<Measurement>> {
    let body = c.body()?;
    let sa = alpha_of(&body)?.sqrt();
    let l = crate::positions::isotropic_constant(&body, c.params.usize("samples")?, c.seed)?;
    Ok(vec![Measurement::new(l.value * sa, l.se * sa).with("l_hat", l.value)])
}

fn psi2_bounds(c: &RowCtx) -> Result<Vec<Measurement>> {
    let (placed, batch) = placed_sample(c, PositionTag::Raw)?;
    let n = batch.dim();
    let sa = alpha_of(&placed.body)?.sqrt();
    let thetas = sphere_sample(n, c.params.usize("dirs")?, derive_seed(c.seed, 3));
    let ratios = thetas
        .par_iter()
        .map(|th| {
            let psi = psi2_norm(&batch, th, DEFAULT_P_MAX)?.lambda_def;
            Ok(psi * (n as f64).sqrt() / placed.body.dual_norm(th)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    Ok(vec![Measurement::new(lo, 0.0).route("c1"), Measurement::new(hi * sa, 0.0).route("c2")])
}

fn random_section(c: &RowCtx) -> Result<Vec<Measurement>> {
    let body = c.body()?;
    let n = body.dim();
    let sa = alpha_of(&body)?.sqrt();
    let restarts = c.params.usize("restarts")?;
    let placed = place(&body, PositionTag::Isotropic, c.params.usize("samples")?, c.seed)?;
    let scale = sa * unit_volume_ball_radius(n);
    let radii = (0..c.params.usize("subspaces")?)
        .into_par_iter()
        .map(|j| {
            let e = haar_subspace(n, n / 2, derive_seed(c.seed, 100 + j as u64))?;
            let s = BodyExpr::section(e, placed.body.clone())?;
            let r_in = inradius(&s, restarts, derive_seed(c.seed, 200 + j as u64))?;
            let r_out = circumradius(&s, restarts, derive_seed(c.seed, 300 + j as u64))?.value;
            Ok((r_in / scale, r_out * sa / unit_volume_ball_radius(n)))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let inner: Vec<f64> = radii.iter().map(|r| r.0).collect();
    let (mean, se) = mean_se(&inner);
    let min = inner.iter().copied().fold(f64::INFINITY, f64::min);
    let outer = radii.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(vec![Measurement::new(min, se).with("mean_inner", mean).with("max_outer", outer)])
}

fn ovr_2smooth(c: &RowCtx) -> Result<Vec<Measurement>> {
    let body = c.body()?;
    let n = body.dim() as f64;
    let beta = body
        .analytic_attrs()
        .beta
        .ok_or_else(|| contract(format!("no analytic 2-smoothness constant for {body}")))?;
    let l = loewner_ellipsoid(&body, ELLIPSOID_TOL)?;
    let v = volume(&body, VOLUME_REL_ERR, c.seed)?;
    let ovr = ((l.logvol() - v.ln_value) / n).exp();
    Ok(vec![Measurement::new(ovr / beta.sqrt(), ovr * v.ln_se / n / beta.sqrt()).with("ovr", ovr).with("beta", beta)])
}

fn firey_alpha(c: &RowCtx) -> Result<Vec<Measurement>> {
    let body = c.body()?;
    let predicted = alpha_of(&body)?;
    let emp = alpha_empirical(&body, &default_eps_grid(), c.params.usize("restarts")?, c.seed)?;
    Ok(vec![Measurement::new(emp / predicted, 0.0).with("alpha_empirical", emp).with("alpha_predicted", predicted)])
}

/// `L̂/√q` from a sample and a coarse volume.
fn lk_over_sqrt_q(body: &BodyExpr, q: f64, samples: usize, seed: u64) -> Result<Measurement> {
    let vol = volume(body, COARSE_VOLUME_REL_ERR, derive_seed(seed, 7))?;
    let batch = draw(body, derive_seed(seed, 1), samples)?;
    let l = isotropic_constant_of(&batch, vol.ln_value, vol.ln_se)?;
    Ok(Measurement::new(l.value / q.sqrt(), l.se / q.sqrt()).with("l_hat", l.value).with("q", q))
}

fn lq_lk(c: &RowCtx) -> Result<Vec<Measurement>> {
    let q = conjugate_of(c)?;
    let p = c.p.expect("checked");
    let n = c.dim;
    let samples = c.params.usize("samples")?;
    let base = c.body()?;
    let big = BodyExpr::lp(2 * n, p)?;
    let section = BodyExpr::section(haar_subspace(2 * n, n, derive_seed(c.seed, 11))?, big.clone())?;
    let quotient = BodyExpr::projection(haar_subspace(2 * n, n, derive_seed(c.seed, 12))?, big)?;
    let members: Vec<(&'static str, BodyExpr)> = vec![
        ("self", base.clone()),
        ("section", section.clone()),
        ("quotient", quotient.clone()),
        ("fsum", BodyExpr::firey_sum(vec![base.clone(), section.clone()])?),
        ("fint", BodyExpr::firey_intersection(vec![base, quotient])?),
    ];
    members
        .into_par_iter()
        .enumerate()
        .map(|(i, (route, b))| Ok(lk_over_sqrt_q(&b, q, samples, derive_seed(c.seed, 20 + i as u64))?.route(route)))
        .collect()
}

fn schatten_lk(c: &RowCtx) -> Result<Vec<Measurement>> {
    let q = conjugate_of(c)?;
    Ok(vec![lk_over_sqrt_q(&c.body()?, q, c.params.usize("samples")?, c.seed)?])
}

fn john_mstarb(c: &RowCtx) -> Result<Vec<Measurement>> {
    let body = c.body()?;
    let sa = alpha_of(&body)?.sqrt();
    let placed = place(&body, PositionTag::John, 0, c.seed)?;
    let w = mean_widths(&placed.body, c.params.usize("dirs")?, derive_seed(c.seed, 5))?;
    let b = b_max_norm(&placed.body, c.params.usize("restarts")?, derive_seed(c.seed, 3))?.value;
    Ok(vec![Measurement::new(w.mstar * b * sa, w.mstar_se * b * sa).with("mstar", w.mstar).with("b", b)])
}

fn inv_finite_vr(c: &RowCtx) -> Result<Vec<Measurement>> {
    let (placed, batch) = placed_sample(c, PositionTag::John)?;
    let n = batch.dim();
    let alpha = alpha_of(&placed.body)?;
    let sq: Vec<f64> = batch.points().map(|x| x.iter().map(|v| v * v).sum()).collect();
    let (m, se) = batch_mean_se(&sq);
    let scale = alpha / unit_volume_ball_radius(n);
    Ok(vec![Measurement::new(m.sqrt() * scale, 0.5 * se / m.sqrt() * scale).with("second_moment", m / n as f64)])
}

fn ess_iso(c: &RowCtx) -> Result<Vec<Measurement>> {
    let (placed, batch) = placed_sample(c, PositionTag::John)?;
    let sa = alpha_of(&placed.body)?.sqrt();
    let abs: Vec<f64> = batch.points().map(norm2).collect();
    let (m, se) = batch_mean_se(&abs);
    let w = mean_widths(&placed.body, c.params.usize("dirs")?, derive_seed(c.seed, 5))?;
    let v = m * sa / w.mstar;
    let rel = ((se / m).powi(2) + (w.mstar_se / w.mstar).powi(2)).sqrt();
    Ok(vec![Measurement::new(v, v * rel).with("mean_abs", m).with("mstar", w.mstar)])
}

/// Diameter of the volume-one isotropic image of the revolution body from its second moments.
/// The image is `s·diag(1/σ_⊥, …, 1/σ_⊥, 1/σ_n) K`; the half-diameter maximises
/// `s·(r(y)²/σ_⊥² + y²/σ_n²)^{1/2}` along the meridian `r(y)² = 1 − 2y − y²`, `0 ≤ y ≤ √2 − 1`.
pub fn revolution_isotropic_diameter(n: usize) -> f64 {
    let nf = n as f64;
    let m = revolution_moments(n);
    let (sp, sn) = (m.var_perp.sqrt(), m.var_axis.sqrt());
    let ln_s = (-m.volume.ln() + (nf - 1.0) * sp.ln() + sn.ln()) / nf;
    let h = std::f64::consts::SQRT_2 - 1.0;
    let grid = 4096;
    let best = (0..=grid)
        .map(|i| {
            let y = h * i as f64 / grid as f64;
            let r2 = (1.0 - 2.0 * y - y * y).max(0.0);
            (r2 / (sp * sp) + y * y / (sn * sn)).sqrt()
        })
        .fold(0.0, f64::max);
    2.0 * ln_s.exp() * best
}

fn cusp_diam(c: &RowCtx) -> Result<Vec<Measurement>> {
    let body = c.body()?;
    if !matches!(body.kind(), crate::body::BodyKind::Revolution { .. }) {
        return Err(contract("the cusp diameter claim needs revolution(n=...)"));
    }
    let exact = revolution_isotropic_diameter(body.dim());
    let placed = place(&body, PositionTag::Isotropic, c.params.usize("samples")?, c.seed)?;
    let sampled = diameter(&placed.body, c.params.usize("restarts")?, derive_seed(c.seed, 4))?;
    Ok(vec![Measurement::new(exact, 0.0).route("quadrature"), Measurement::new(sampled, 0.0).route("sampled")])
}

fn small_diam(c: &RowCtx) -> Result<Vec<Measurement>> {
    let body = c.body()?;
    let n = body.dim() as f64;
    let placed = place(&body, PositionTag::Loewner, 0, c.seed)?;
    let d = diameter(&placed.body, c.params.usize("restarts")?, derive_seed(c.seed, 4))?;
    // rescale from volume one to volume radius one
    let d = d * ((ln_ball_volume(body.dim()) - placed.ln_volume) / n).exp();
    Ok(vec![Measurement::new(d, 0.0)])
}

fn shell(c: &RowCtx) -> Result<Vec<Measurement>> {
    let (_, batch) = placed_sample(c, PositionTag::Isotropic)?;
    let sn = (batch.dim() as f64).sqrt();
    let rho = batch.points().map(|x| norm2(x) / sn).sum::<f64>() / batch.count() as f64;
    let mass = shell_check(&batch, rho, c.params.f64("eps")?);
    Ok(vec![Measurement::new(mass, binomial_se(mass, batch.count())).with("rho", rho)])
}

fn gauss_marginals(c: &RowCtx) -> Result<Vec<Measurement>> {
    let (_, batch) = placed_sample(c, PositionTag::Loewner)?;
    let dirs = c.params.usize("dirs")?;
    let s = clt_of_batch(&batch, dirs, crate::marginals::DEFAULT_SHELL_EPS, derive_seed(c.seed, 6))?;
    let hs: Vec<f64> = s.directions.iter().map(|d| d.h).collect();
    let (_, se_mean) = mean_se(&hs);
    // the sample median's standard error is about 1.25 times the mean's for near-normal spreads
    Ok(vec![Measurement::new(s.h_median, 1.2533 * se_mean)
        .with("h_q90", s.h_q90)
        .with("rho", s.rho)
        .with("c_iso_hat", s.c_iso_hat)])
}

fn tails(c: &RowCtx) -> Result<Vec<Measurement>> {
    let (placed, batch) = placed_sample(c, PositionTag::Raw)?;
    let n = batch.dim();
    let alpha = alpha_of(&placed.body)?;
    let k = c.params.usize("t_points")?;
    let thetas = sphere_sample(n, c.params.usize("dirs")?, derive_seed(c.seed, 3));
    let tables = thetas
        .par_iter()
        .map(|th| {
            let w = placed.body.dual_norm(th)?;
            let grid: Vec<f64> = (1..=k).map(|i| w * i as f64 / k as f64).collect();
            tail_check(&placed.body, th, &batch, &grid, alpha)
        })
        .collect::<Result<Vec<_>>>()?;
    let violations: usize = tables.iter().map(|t| t.violations()).sum();
    let worst = tables
        .iter()
        .flat_map(|t| t.rows.iter())
        .map(|r| r.empirical / r.bound)
        .fold(0.0, f64::max);
    Ok(vec![Measurement::new(violations as f64, 0.0).with("max_empirical_over_bound", worst)])
}

fn lipschitz(c: &RowCtx) -> Result<Vec<Measurement>> {
    let (placed, batch) = placed_sample(c, PositionTag::Raw)?;
    let alpha = alpha_of(&placed.body)?;
    let d = diameter(&placed.body, 20, derive_seed(c.seed, 4))?;
    let t = lipschitz_concentration(&batch, d, alpha)?;
    let violations = t.rows.iter().filter(|r| r.violation).count();
    Ok(vec![Measurement::new(violations as f64, 0.0).with("diameter", d).with("fitted_c", t.fitted_c)])
}

/// `Q·diag(e^{u_i})` with Haar `Q` and `u_i` uniform in `[−1, 1]`.
fn random_map(n: usize, seed: u64) -> Result<LinearMapRec> {
    use rand::Rng;
    let q = haar_subspace(n, n, seed)?;
    let mut rng = rng_for(seed, 1);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0f64).exp()));
    LinearMapRec::new(q.basis() * d)
}

fn invariance(c: &RowCtx) -> Result<Vec<Measurement>> {
    let (_, batch) = placed_sample(c, PositionTag::Raw)?;
    let n = batch.dim();
    let map = random_map(n, derive_seed(c.seed, 8))?;
    let k = c.params.usize("t_points")?;
    let thetas = sphere_sample(n, c.params.usize("dirs")?, derive_seed(c.seed, 3));
    let worst = thetas
        .par_iter()
        .map(|th| {
            let r = rms(&batch.marginal(th));
            let grid: Vec<f64> = (1..=k).map(|i| 3.0 * r * i as f64 / k as f64).collect();
            invariance_check(&map, th, &grid, &batch)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(vec![Measurement::new(worst * (batch.count() as f64).sqrt(), 0.0).with("max_discrepancy", worst)])
}

fn urysohn(c: &RowCtx) -> Result<Vec<Measurement>> {
    let body = c.body()?;
    let n = body.dim();
    let w = mean_widths(&body, c.params.usize("dirs")?, c.seed)?;
    let v = volume(&body, VOLUME_REL_ERR, derive_seed(c.seed, 1))?;
    let vr = v.vol_rad(n);
    let vr_se = vr * v.ln_se / n as f64;
    let inv_m = 1.0 / w.m;
    let inv_m_se = w.m_se / (w.m * w.m);
    let mut violations = 0;
    if inv_m > vr + 3.0 * (inv_m_se.powi(2) + vr_se.powi(2)).sqrt() {
        violations += 1;
    }
    if vr > w.mstar + 3.0 * (w.mstar_se.powi(2) + vr_se.powi(2)).sqrt() {
        violations += 1;
    }
    Ok(vec![Measurement::new(violations as f64, 0.0).with("inv_m", inv_m).with("volrad", vr).with("mstar", w.mstar)])
}

fn santalo(c: &RowCtx) -> Result<Vec<Measurement>> {
    let (s, ln_se) = santalo_product(&c.body()?, c.params.f64("rel_err")?, c.seed)?;
    Ok(vec![Measurement::new(s, s * ln_se)])
}
