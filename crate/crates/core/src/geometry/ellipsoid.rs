//! John (maximal inscribed) and Löwner (minimal circumscribed) ellipsoids of symmetric bodies.
//!
//! `M·D ⊂ K` iff `|M a| ≤ 1` for every `a ∈ ∂K°`, so with `X = M²` the John problem is
//! `max log det X` subject to `aᵀ X a ≤ 1`: the dual of the minimum-volume centred ellipsoid
//! enclosing the points `a`. Constraint points are generated by maximising `‖M u‖_K` over the
//! sphere; a maximiser with value above one yields the violated point `a = ∇‖·‖_K(M u)`.
//! Löwner of `K` is the polar of John of `K°`.

use nalgebra::{DMatrix, DVector};

use super::extent::{power_ascent, structured_directions};
use super::EllipsoidRec;
use crate::body::{BodyExpr, BodyKind, Side};
use crate::error::{contract, ensure, Error, Result};
use crate::linalg::{dot, matvec, norm2, scaled, sym_eigen, sym_pow, symmetrize};
use crate::sampling::{derive_seed, exact_sample, has_exact_sampler, sphere_sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    John,
    Loewner,
}

impl Which {
    fn flip(self) -> Self {
        match self {
            Which::John => Which::Loewner,
            Which::Loewner => Which::John,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct JohnOptions {
    /// Allowed constraint violation `max ‖M u‖_K − 1`.
    pub tol: f64,
    pub max_rounds: usize,
    /// Ascent restarts per separation round.
    pub restarts: usize,
    /// Sphere points for the final feasibility check.
    pub verify_points: usize,
    pub seed: u64,
    /// Skip the closed forms and always run the cutting-plane solver.
    pub generic: bool,
}

impl Default for JohnOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_rounds: 200, restarts: 50, verify_points: 10_000, seed: 0x10b4, generic: false }
    }
}

impl JohnOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

const MVEE_LOOSE_TOL: f64 = 1e-5;
// κ_max/n − 1 bounds the relative volume-radius error of the inner solve
const MVEE_FINAL_TOL: f64 = 1e-6;

fn ball(n: usize, r: f64) -> EllipsoidRec {
    EllipsoidRec::ball(n, r).expect("positive radius")
}

/// Closed forms for the leaves and the linear operations of the algebra.
pub fn analytic_ellipsoid(body: &BodyExpr, which: Which) -> Option<EllipsoidRec> {
    let n = body.dim();
    match body.kind() {
        BodyKind::Lp { n, p } => {
            let r = (*n as f64).powf(0.5 - 1.0 / p);
            Some(ball(*n, if which == Which::John { r.min(1.0) } else { r.max(1.0) }))
        }
        // unitarily invariant; the action X ↦ U X Vᵀ is irreducible, so both are balls
        BodyKind::Schatten { m, p } => {
            let r = (*m as f64).powf(0.5 - 1.0 / p);
            Some(ball(n, if which == Which::John { r.min(1.0) } else { r.max(1.0) }))
        }
        BodyKind::Ellipsoid { a, .. } => EllipsoidRec::new(sym_pow(a, -0.5, 0.0)).ok(),
        BodyKind::Revolution { n } if which == Which::Loewner => {
            let mut m = DMatrix::identity(*n, *n);
            m[(n - 1, n - 1)] = std::f64::consts::SQRT_2 - 1.0;
            EllipsoidRec::new(m).ok()
        }
        BodyKind::LinearImage { map, child } => analytic_ellipsoid(child, which)?.image(map.matrix()).ok(),
        BodyKind::Scale { lambda, child } => {
            let e = analytic_ellipsoid(child, which)?;
            EllipsoidRec::new(e.shape() * *lambda).ok()
        }
        BodyKind::Polar(child) => Some(analytic_ellipsoid(child, which.flip())?.polar()),
        _ => None,
    }
}

/// Maximal-volume ellipsoid inside `body`, closed form when available.
pub fn john_ellipsoid(body: &BodyExpr, tol: f64) -> Result<EllipsoidRec> {
    john_ellipsoid_with(body, &JohnOptions::with_tol(tol))
}

/// Minimal-volume ellipsoid containing `body`: the polar of John of the polar body.
pub fn loewner_ellipsoid(body: &BodyExpr, tol: f64) -> Result<EllipsoidRec> {
    loewner_ellipsoid_with(body, &JohnOptions::with_tol(tol))
}

pub fn john_ellipsoid_with(body: &BodyExpr, opts: &JohnOptions) -> Result<EllipsoidRec> {
    if !opts.generic {
        if let Some(e) = analytic_ellipsoid(body, Which::John) {
            return Ok(e);
        }
    }
    CuttingPlane::new(body, opts).solve()
}

pub fn loewner_ellipsoid_with(body: &BodyExpr, opts: &JohnOptions) -> Result<EllipsoidRec> {
    if !opts.generic {
        if let Some(e) = analytic_ellipsoid(body, Which::Loewner) {
            return Ok(e);
        }
    }
    match john_ellipsoid_with(&BodyExpr::polar(body.clone()), opts) {
        Ok(e) => Ok(e.polar()),
        Err(Error::EllipsoidNotConverged { rounds, violation, best }) => {
            Err(Error::EllipsoidNotConverged { rounds, violation, best: Box::new(best.polar()) })
        }
        Err(e) => Err(e),
    }
}

/// `max ‖M u‖_K` over `points` sphere samples followed by ascent from the best few:
/// the largest factor by which `M·D` leaves `K` (a lower bound).
pub fn containment_ratio(body: &BodyExpr, m: &DMatrix<f64>, points: usize, seed: u64) -> Result<f64> {
    let f = |u: &[f64]| -> Result<(f64, Vec<f64>)> {
        let (v, g) = body.eval(Side::Primal, &matvec(m, u), true)?;
        Ok((v, matvec(&m.transpose(), &g)))
    };
    sampled_max(f, body.dim(), points, seed)
}

/// `max_{x ∈ K} |M⁻¹ x|`: the factor by which `K` leaves `M·D` (a lower bound). Evaluated as
/// `max_θ ‖M θ‖*_K` since `sup_{x∈K} ⟨M θ, x⟩ = ‖Mθ‖*_K`.
pub fn coverage_ratio(body: &BodyExpr, m_inv: &DMatrix<f64>, points: usize, seed: u64) -> Result<f64> {
    let f = |u: &[f64]| -> Result<(f64, Vec<f64>)> {
        let (v, g) = body.eval(Side::Dual, &matvec(m_inv, u), true)?;
        Ok((v, matvec(&m_inv.transpose(), &g)))
    };
    sampled_max(f, body.dim(), points, seed)
}

fn sampled_max<F>(f: F, n: usize, points: usize, seed: u64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut dirs = structured_directions(n);
    dirs.extend(sphere_sample(n, points, seed));
    let mut vals: Vec<(f64, usize)> = Vec::with_capacity(dirs.len());
    for (i, u) in dirs.iter().enumerate() {
        vals.push((f(u)?.0, i));
    }
    vals.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = vals.first().map(|v| v.0).unwrap_or(0.0);
    for &(_, i) in vals.iter().take(20) {
        best = best.max(power_ascent(&f, &dirs[i], 200)?.0);
    }
    Ok(best)
}

/// Centred minimum-volume enclosing ellipsoid `{z : zᵀ X z ≤ 1}` of `±a_i` by Khachiyan's
/// algorithm with Todd–Yildirim away steps. `u` carries the weights between calls.
/// Returns `X = Λ(u)⁻¹ / max_i κ_i`, feasible for every point.
fn mvee(a: &[Vec<f64>], u: &mut [f64], tol: f64, max_iter: usize) -> Result<(DMatrix<f64>, f64)> {
    let n = a[0].len();
    let nf = n as f64;
    let lambda_inv = |u: &[f64]| -> Result<DMatrix<f64>> {
        let mut l = DMatrix::zeros(n, n);
        for (ai, &ui) in a.iter().zip(u) {
            if ui > 0.0 {
                let v = DVector::from_column_slice(ai);
                l += ui * &v * v.transpose();
            }
        }
        let chol = l.cholesky().ok_or_else(|| contract("constraint points do not span the space"))?;
        Ok(symmetrize(&chol.inverse()))
    };
    let kappas = |linv: &DMatrix<f64>| -> Vec<f64> { a.iter().map(|ai| dot(ai, &matvec(linv, ai))).collect() };
    let mut linv = lambda_inv(u)?;
    let mut kappa = kappas(&linv);
    for it in 0..max_iter {
        if it % 200 == 199 {
            linv = lambda_inv(u)?;
            kappa = kappas(&linv);
        }
        let (jp, kmax) = kappa.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, &k)| if k > b.1 { (i, k) } else { b });
        let (jm, kmin) = kappa
            .iter()
            .enumerate()
            .filter(|(i, _)| u[*i] > 0.0)
            .fold((0, f64::INFINITY), |b, (i, &k)| if k < b.1 { (i, k) } else { b });
        if kmax <= nf * (1.0 + tol) && kmin >= nf * (1.0 - tol) {
            break;
        }
        let (j, lam) = if kmax - nf >= nf - kmin {
            (jp, (kmax - nf) / (nf * (kmax - 1.0)))
        } else {
            let drop = -u[jm] / (1.0 - u[jm]);
            let lam = if kmin > 1.0 + 1e-12 { ((kmin - nf) / (nf * (kmin - 1.0))).max(drop) } else { drop };
            (jm, lam)
        };
        let r = lam / (1.0 - lam);
        let denom = 1.0 + r * kappa[j];
        if denom <= 1e-12 || !lam.is_finite() {
            linv = lambda_inv(u)?;
            kappa = kappas(&linv);
            continue;
        }
        let c = r / denom;
        let v = matvec(&linv, &a[j]);
        for ui in u.iter_mut() {
            *ui *= 1.0 - lam;
        }
        u[j] += lam;
        if u[j] < 1e-300 {
            u[j] = 0.0;
        }
        let s = 1.0 / (1.0 - lam);
        for r in 0..n {
            for col in 0..n {
                linv[(r, col)] = s * (linv[(r, col)] - c * v[r] * v[col]);
            }
        }
        for (k, ai) in kappa.iter_mut().zip(a) {
            let d = dot(ai, &v);
            *k = s * (*k - c * d * d);
        }
    }
    let linv = lambda_inv(u)?;
    let kmax = kappas(&linv).into_iter().fold(f64::NEG_INFINITY, f64::max);
    Ok((linv / kmax, kmax / nf - 1.0))
}

struct CuttingPlane<'a> {
    body: &'a BodyExpr,
    opts: &'a JohnOptions,
    n: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl<'a> CuttingPlane<'a> {
    fn new(body: &'a BodyExpr, opts: &'a JohnOptions) -> Self {
        Self { body, opts, n: body.dim(), points: Vec::new(), weights: Vec::new() }
    }

    /// Adds `∇‖·‖_K(x)` (a point of `∂K°`) unless it duplicates an existing direction.
    fn add_from(&mut self, x: &[f64]) -> Result<bool> {
        let (_, g) = self.body.norm_and_subgradient(x)?;
        let d = self.body.dual_norm(&g)?;
        if !(d > 0.0) || !d.is_finite() {
            return Ok(false);
        }
        let a = scaled(&g, 1.0 / d);
        let an = norm2(&a);
        for p in &self.points {
            if (dot(p, &a) / (an * norm2(p))).abs() > 1.0 - 1e-10 {
                return Ok(false);
            }
        }
        self.points.push(a);
        self.weights.push(0.0);
        Ok(true)
    }

    fn initial_points(&mut self) -> Result<()> {
        let n = self.n;
        for d in structured_directions(n) {
            self.add_from(&d)?;
        }
        for d in sphere_sample(n, 2 * n, derive_seed(self.opts.seed, 1)) {
            self.add_from(&d)?;
        }
        if has_exact_sampler(self.body) {
            // principal axes of a coarse sample
            let batch = exact_sample(self.body, 40 * n, derive_seed(self.opts.seed, 2))?;
            let mut cov = DMatrix::zeros(n, n);
            for p in batch.points() {
                let v = DVector::from_column_slice(p);
                cov += &v * v.transpose();
            }
            let (_, vecs) = sym_eigen(&(cov / batch.count() as f64));
            for c in vecs.column_iter() {
                let c: Vec<f64> = c.iter().copied().collect();
                self.add_from(&c)?;
            }
        }
        let w = 1.0 / self.points.len() as f64;
        self.weights.iter_mut().for_each(|u| *u = w);
        Ok(())
    }

    fn reweight_new(&mut self, old: usize) {
        let m = self.points.len();
        if m == old {
            return;
        }
        let beta = ((m - old) as f64 / m as f64).min(0.5);
        for u in &mut self.weights[..old] {
            *u *= 1.0 - beta;
        }
        let w = beta / (m - old) as f64;
        for u in &mut self.weights[old..] {
            *u = w;
        }
    }

    /// Ascent on `u ↦ ‖M u‖_K`; returns all local maxima above `1 + tol`, most violated first.
    fn separate(&self, m: &DMatrix<f64>, round: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        let f = |u: &[f64]| -> Result<(f64, Vec<f64>)> {
            let (v, g) = self.body.eval(Side::Primal, &matvec(m, u), true)?;
            Ok((v, matvec(m, &g)))
        };
        let mut starts = if round == 0 { structured_directions(self.n) } else { Vec::new() };
        starts.extend(sphere_sample(self.n, self.opts.restarts, derive_seed(self.opts.seed, 100 + round as u64)));
        let mut found = Vec::new();
        for s in &starts {
            let (v, u) = power_ascent(f, s, 300)?;
            if v > 1.0 + self.opts.tol {
                found.push((v, matvec(m, &u)));
            }
        }
        found.sort_by(|a, b| b.0.total_cmp(&a.0));
        Ok(found)
    }

    fn verify(&self, m: &DMatrix<f64>, round: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        let f = |u: &[f64]| -> Result<(f64, Vec<f64>)> {
            let (v, g) = self.body.eval(Side::Primal, &matvec(m, u), true)?;
            Ok((v, matvec(m, &g)))
        };
        let dirs = sphere_sample(self.n, self.opts.verify_points, derive_seed(self.opts.seed, 10_000 + round as u64));
        let mut vals = Vec::with_capacity(dirs.len());
        for (i, u) in dirs.iter().enumerate() {
            vals.push((f(u)?.0, i));
        }
        vals.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut found = Vec::new();
        for &(_, i) in vals.iter().take(20) {
            let (v, u) = power_ascent(f, &dirs[i], 300)?;
            if v > 1.0 + self.opts.tol {
                found.push((v, matvec(m, &u)));
            }
        }
        Ok(found)
    }

    fn solve(mut self) -> Result<EllipsoidRec> {
        ensure!(self.opts.tol > 0.0, "ellipsoid tolerance must be positive");
        self.initial_points()?;
        let mut mvee_tol = MVEE_LOOSE_TOL;
        let mut best: Option<(f64, DMatrix<f64>)> = None;
        let mut violation = f64::INFINITY;
        for round in 0..self.opts.max_rounds {
            // intermediate solves only need to be feasible; the final one is polished
            let iters = if mvee_tol > MVEE_FINAL_TOL { 20_000 } else { 50_000 };
            let (x, _) = mvee(&self.points, &mut self.weights, mvee_tol, iters)?;
            let m = sym_pow(&x, 0.5, 0.0);
            let mut cuts = self.separate(&m, round)?;
            if cuts.is_empty() {
                cuts = self.verify(&m, round)?;
            }
            violation = cuts.first().map(|c| c.0 - 1.0).unwrap_or(0.0);
            let feasible = m.clone() / (1.0 + violation);
            let logdet = sym_eigen(&feasible).0.iter().map(|v| v.ln()).sum::<f64>();
            if best.as_ref().is_none_or(|b| logdet > b.0) {
                best = Some((logdet, feasible));
            }
            if cuts.is_empty() {
                if mvee_tol > MVEE_FINAL_TOL {
                    mvee_tol = MVEE_FINAL_TOL;
                    continue;
                }
                // violations up to tol pass the sampled check; the shrink absorbs them
                return EllipsoidRec::new(m / (1.0 + self.opts.tol));
            }
            let old = self.points.len();
            for (_, x) in cuts.iter().take(self.n.max(8)) {
                self.add_from(x)?;
            }
            if self.points.len() == old {
                // every cut duplicates an existing point: only the inner solve can tighten
                mvee_tol = (mvee_tol * 0.1).max(MVEE_FINAL_TOL);
            } else {
                mvee_tol = MVEE_LOOSE_TOL;
            }
            self.reweight_new(old);
        }
        let best = best.map(|b| b.1).unwrap_or_else(|| DMatrix::identity(self.n, self.n) * self.body.r_in());
        Err(Error::EllipsoidNotConverged {
            rounds: self.opts.max_rounds,
            violation,
            best: Box::new(EllipsoidRec::new(best)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generic() -> JohnOptions {
        JohnOptions { generic: true, ..JohnOptions::default() }
    }

    fn radius_range(e: &EllipsoidRec) -> (f64, f64) {
        let ax = e.semi_axes();
        (ax[0], ax[ax.len() - 1])
    }

    #[test]
    fn mvee_of_cross_points_is_ball() {
        let a: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| f64::from(i == j)).collect()).collect();
        let mut u = vec![1.0 / 3.0; 3];
        let (x, gap) = mvee(&a, &mut u, 1e-10, 1000).unwrap();
        assert!(gap < 1e-9);
        assert!((x - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-9);
    }

    #[test]
    fn lp_john_generic_matches_closed_form() {
        let body = BodyExpr::lp(16, 1.5).unwrap();
        let e = john_ellipsoid_with(&body, &generic()).unwrap();
        let target = 16f64.powf(-1.0 / 6.0);
        let (lo, hi) = radius_range(&e);
        assert!((lo / target - 1.0).abs() < 0.01 && (hi / target - 1.0).abs() < 0.01, "{lo} {hi}");
        let c = containment_ratio(&body, e.shape(), 10_000, 7).unwrap();
        assert!(c <= 1.0 + 1e-6, "{c}");
    }

    #[test]
    fn loewner_generic_of_lp_and_cube() {
        let e = loewner_ellipsoid_with(&BodyExpr::lp(6, 1.5).unwrap(), &generic()).unwrap();
        let (lo, hi) = radius_range(&e);
        assert!((lo - 1.0).abs() < 0.01 && (hi - 1.0).abs() < 0.01, "{lo} {hi}");
        let e = loewner_ellipsoid_with(&BodyExpr::cube(5).unwrap(), &generic()).unwrap();
        let (lo, hi) = radius_range(&e);
        assert!((lo / 5f64.sqrt() - 1.0).abs() < 0.01 && (hi / 5f64.sqrt() - 1.0).abs() < 0.01, "{lo} {hi}");
    }

    #[test]
    fn ellipsoid_body_round_trip() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let body = BodyExpr::ellipsoid(a.clone()).unwrap();
        let want = sym_pow(&a, -0.5, 0.0);
        for e in [john_ellipsoid_with(&body, &generic()).unwrap(), loewner_ellipsoid_with(&body, &generic()).unwrap()] {
            assert!((e.shape() - &want).abs().max() < 1e-4, "{}", e.shape());
        }
        assert!((john_ellipsoid(&body, 1e-6).unwrap().shape() - &want).abs().max() < 1e-12);
    }

    #[test]
    fn revolution_loewner_generic_matches_derivation() {
        // the circumscribed ellipsoid touches the rim at |x| = 1, y = 0 and the caps at y = ±h
        let n = 4;
        let body = BodyExpr::revolution(n).unwrap();
        let e = loewner_ellipsoid_with(&body, &generic()).unwrap();
        let closed = analytic_ellipsoid(&body, Which::Loewner).unwrap();
        assert!((e.shape() - closed.shape()).abs().max() < 1e-3, "{}", e.shape());
        assert!((e.logvol() - closed.logvol()).abs() < 1e-3);
    }

    #[test]
    fn symmetric_john_containment() {
        let n = 5;
        let body = BodyExpr::revolution(n).unwrap();
        let e = john_ellipsoid(&body, 1e-6).unwrap();
        let minv = sym_pow(e.shape(), -1.0, 0.0);
        let r = coverage_ratio(&body, &minv, 5000, 3).unwrap();
        assert!(r <= (n as f64).sqrt() * (1.0 + 1e-6), "{r}");
        assert!(containment_ratio(&body, e.shape(), 10_000, 4).unwrap() <= 1.0 + 1e-6);
    }

    #[test]
    fn polar_shortcut_is_consistent() {
        let body = BodyExpr::polar(BodyExpr::scale(2.0, BodyExpr::lp(4, 3.0).unwrap()).unwrap());
        let j = john_ellipsoid(&body, 1e-6).unwrap();
        let l = loewner_ellipsoid(&BodyExpr::scale(2.0, BodyExpr::lp(4, 3.0).unwrap()).unwrap(), 1e-6).unwrap();
        assert!((j.shape() - l.polar().shape()).abs().max() < 1e-12);
    }
}
