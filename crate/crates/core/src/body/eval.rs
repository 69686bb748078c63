use nalgebra::DMatrix;

use super::{BodyExpr, BodyKind};
use crate::error::{ensure, numeric, Result};
use crate::linalg::{axpy, dot, matvec, matvec_t, norm2, scaled};
use crate::optim::{ellipsoid_method, lbfgs, LbfgsOptions};

/// Which function of a body is evaluated: its norm (gauge) or its dual norm (support function).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Primal,
    Dual,
}

impl Side {
    pub fn flip(self) -> Self {
        match self {
            Side::Primal => Side::Dual,
            Side::Dual => Side::Primal,
        }
    }
}

/// Relative duality gap at which an inner minimisation is accepted without the subgradient fallback.
pub const SOLVER_GAP_TOL: f64 = 1e-9;
/// Relative duality gap beyond which an inner minimisation is reported as a numeric failure.
const FALLBACK_GAP_TOL: f64 = 1e-6;
const ELLIPSOID_ITERS_PER_DIM2: usize = 80;

type Eval = (f64, Vec<f64>);

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// ℓ_p norm with max-scaling; the gradient (if requested) is the standard one with ties at the
/// maximum split evenly for p = ∞.
pub(crate) fn lp_eval(x: &[f64], p: f64, want: bool) -> Eval {
    let m = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if m == 0.0 {
        return (0.0, if want { vec![0.0; x.len()] } else { Vec::new() });
    }
    if p.is_infinite() {
        let g = if want {
            let ties = x.iter().filter(|v| v.abs() == m).count() as f64;
            x.iter().map(|v| if v.abs() == m { sign(*v) / ties } else { 0.0 }).collect()
        } else {
            Vec::new()
        };
        return (m, g);
    }
    if p == 1.0 {
        let v = x.iter().map(|v| v.abs()).sum();
        let g = if want { x.iter().map(|v| sign(*v)).collect() } else { Vec::new() };
        return (v, g);
    }
    let val = if p == 2.0 {
        m * x.iter().map(|v| (v / m) * (v / m)).sum::<f64>().sqrt()
    } else {
        m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
    };
    let g = if !want {
        Vec::new()
    } else if p == 2.0 {
        scaled(x, 1.0 / val)
    } else {
        x.iter().map(|v| sign(*v) * (v.abs() / val).powf(p - 1.0)).collect()
    };
    (val, g)
}

pub(crate) fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn schatten_eval(m: usize, p: f64, x: &[f64], want: bool) -> Eval {
    if p == 2.0 {
        return lp_eval(x, 2.0, want);
    }
    let a = DMatrix::from_row_slice(m, m, x);
    if !want {
        let s: Vec<f64> = a.singular_values().iter().copied().collect();
        return (lp_eval(&s, p, false).0, Vec::new());
    }
    let svd = a.svd(true, true);
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    let (val, w) = lp_eval(&s, p, true);
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let mut g = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            g[i * m + j] = (0..s.len()).map(|k| u[(i, k)] * w[k] * vt[(k, j)]).sum();
        }
    }
    (val, g)
}

fn quadratic_eval(a: &DMatrix<f64>, x: &[f64], want: bool) -> Eval {
    let ax = matvec(a, x);
    let v = dot(x, &ax).max(0.0).sqrt();
    if v == 0.0 {
        return (0.0, if want { vec![0.0; x.len()] } else { Vec::new() });
    }
    (v, if want { scaled(&ax, 1.0 / v) } else { Vec::new() })
}

/// Norm of the revolution body: `|y| + sqrt(2y² + r²)` with `y = x_n`, `r = |x_⊥|`.
fn revolution_norm(x: &[f64], want: bool) -> Eval {
    let n = x.len();
    let y = x[n - 1];
    let r2: f64 = x[..n - 1].iter().map(|v| v * v).sum();
    let s = (2.0 * y * y + r2).sqrt();
    if s == 0.0 {
        return (0.0, if want { vec![0.0; n] } else { Vec::new() });
    }
    let val = y.abs() + s;
    if !want {
        return (val, Vec::new());
    }
    let mut g: Vec<f64> = x[..n - 1].iter().map(|v| v / s).collect();
    g.push(sign(y) * (1.0 + 2.0 * y.abs() / s));
    (val, g)
}

/// Support function of the revolution body; the gradient is the supporting boundary point.
fn revolution_support(x: &[f64], want: bool) -> Eval {
    let n = x.len();
    let y = x[n - 1];
    let a = x[..n - 1].iter().map(|v| v * v).sum::<f64>().sqrt();
    let b = y.abs();
    if a == 0.0 && b == 0.0 {
        return (0.0, if want { vec![0.0; n] } else { Vec::new() });
    }
    if a >= b {
        let g = if want {
            let mut g: Vec<f64> = x[..n - 1].iter().map(|v| v / a).collect();
            g.push(0.0);
            g
        } else {
            Vec::new()
        };
        return (a, g);
    }
    let s = (a * a + b * b).sqrt();
    let val = std::f64::consts::SQRT_2 * s - b;
    let g = if want {
        let c = std::f64::consts::SQRT_2 / s;
        let mut g: Vec<f64> = x[..n - 1].iter().map(|v| v * c).collect();
        g.push(sign(y) * (c * b - 1.0));
        g
    } else {
        Vec::new()
    };
    (val, g)
}

fn zero_result(n: usize, want: bool) -> Eval {
    (0.0, if want { vec![0.0; n] } else { Vec::new() })
}

impl BodyExpr {
    fn check_dim(&self, x: &[f64]) -> Result<()> {
        ensure!(
            x.len() == self.dim(),
            "vector has dimension {} but body has dimension {}",
            x.len(),
            self.dim()
        );
        ensure!(x.iter().all(|v| v.is_finite()), "vector has non-finite entries");
        Ok(())
    }

    /// `‖x‖_K`.
    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.eval(Side::Primal, x, false)?.0)
    }

    /// `‖x‖*_K = sup_{y ∈ K} ⟨x, y⟩`.
    pub fn dual_norm(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.eval(Side::Dual, x, false)?.0)
    }

    /// A subgradient of the norm at `x` (zero at the origin).
    pub fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.norm_and_subgradient(x)?.1)
    }

    pub fn norm_and_subgradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_dim(x)?;
        self.eval(Side::Primal, x, true)
    }

    /// Dual norm together with a subgradient, which is a point of `K` supporting direction `x`.
    pub fn dual_norm_and_support_point(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_dim(x)?;
        self.eval(Side::Dual, x, true)
    }

    /// Evaluate the norm (`Side::Primal`) or dual norm (`Side::Dual`), optionally with a
    /// subgradient. Returns an empty gradient when `want` is false.
    pub fn eval(&self, side: Side, x: &[f64], want: bool) -> Result<(f64, Vec<f64>)> {
        if x.iter().all(|v| *v == 0.0) {
            return Ok(zero_result(x.len(), want));
        }
        match (self.kind(), side) {
            (BodyKind::Lp { p, .. }, Side::Primal) => Ok(lp_eval(x, *p, want)),
            (BodyKind::Lp { p, .. }, Side::Dual) => Ok(lp_eval(x, conjugate(*p), want)),
            (BodyKind::Schatten { m, p }, Side::Primal) => Ok(schatten_eval(*m, *p, x, want)),
            (BodyKind::Schatten { m, p }, Side::Dual) => Ok(schatten_eval(*m, conjugate(*p), x, want)),
            (BodyKind::Ellipsoid { a, .. }, Side::Primal) => Ok(quadratic_eval(a, x, want)),
            (BodyKind::Ellipsoid { a_inv, .. }, Side::Dual) => Ok(quadratic_eval(a_inv, x, want)),
            (BodyKind::Revolution { .. }, Side::Primal) => Ok(revolution_norm(x, want)),
            (BodyKind::Revolution { .. }, Side::Dual) => Ok(revolution_support(x, want)),
            (BodyKind::LinearImage { map, child }, Side::Primal) => {
                let (v, g) = child.eval(side, &matvec(map.inverse(), x), want)?;
                Ok((v, if want { matvec_t(map.inverse(), &g) } else { g }))
            }
            (BodyKind::LinearImage { map, child }, Side::Dual) => {
                let (v, g) = child.eval(side, &matvec_t(map.matrix(), x), want)?;
                Ok((v, if want { matvec(map.matrix(), &g) } else { g }))
            }
            (BodyKind::Section { space, child }, Side::Primal)
            | (BodyKind::Projection { space, child }, Side::Dual) => {
                let (v, g) = child.eval(side, &matvec(space.basis(), x), want)?;
                Ok((v, if want { matvec_t(space.basis(), &g) } else { g }))
            }
            (BodyKind::Section { space, child }, Side::Dual)
            | (BodyKind::Projection { space, child }, Side::Primal) => {
                complement_min(child, side, space.basis(), space.complement(), x)
            }
            (BodyKind::FireySum(c), Side::Primal) | (BodyKind::FireyIntersection(c), Side::Dual) => {
                split_min(c, side, x)
            }
            (BodyKind::FireySum(c), Side::Dual) | (BodyKind::FireyIntersection(c), Side::Primal) => {
                root_sum_square(c, side, x, want)
            }
            (BodyKind::Polar(child), _) => child.eval(side.flip(), x, want),
            (BodyKind::Scale { lambda, child }, Side::Primal) => {
                let (v, g) = child.eval(side, x, want)?;
                Ok((v / lambda, scaled(&g, 1.0 / lambda)))
            }
            (BodyKind::Scale { lambda, child }, Side::Dual) => {
                let (v, g) = child.eval(side, x, want)?;
                Ok((v * lambda, scaled(&g, *lambda)))
            }
        }
    }
}

fn root_sum_square(children: &[BodyExpr], side: Side, x: &[f64], want: bool) -> Result<Eval> {
    let mut total = 0.0;
    let mut g = if want { vec![0.0; x.len()] } else { Vec::new() };
    for c in children {
        let (v, gc) = c.eval(side, x, want)?;
        total += v * v;
        if want {
            axpy(&mut g, v, &gc);
        }
    }
    let total = total.sqrt();
    if want && total > 0.0 {
        g.iter_mut().for_each(|v| *v /= total);
    }
    Ok((total, g))
}

/// Upper and lower bounds on an inner minimum, with a dual certificate vector `w` normalised so
/// that its dual value is 1; `w` is a valid subgradient of the outer function at the point.
struct Certificate {
    upper: f64,
    lower: f64,
    w: Vec<f64>,
}

impl Certificate {
    fn gap(&self) -> f64 {
        (self.upper - self.lower).max(0.0) / self.upper
    }
}

/// Minimise `½ F(v)²` where `F` is convex and 1-homogeneous in the underlying point, certify by
/// duality, and fall back to the ellipsoid method when L-BFGS stalls at a kink. `radius(v, F(v))`
/// must bound the distance from `v` to some minimiser.
fn certified_min<O, C, R>(what: &str, v0: Vec<f64>, mut obj: O, mut cert: C, radius: R) -> Result<Certificate>
where
    O: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    C: FnMut(&[f64]) -> Result<Certificate>,
    R: Fn(&[f64], f64) -> f64,
{
    let opts = LbfgsOptions { grad_tol: 1e-13, f_tol: 1e-16, ..Default::default() };
    let m = lbfgs(&mut obj, v0, &opts)?;
    let c = cert(&m.x)?;
    if c.gap() <= SOLVER_GAP_TOL {
        return Ok(c);
    }
    let r = radius(&m.x, c.upper) * (1.0 + 1e-9);
    let d = m.x.len();
    let rel = |best: f64, lower: f64| {
        let up = (2.0 * best).sqrt();
        (up - (2.0 * lower.max(0.0)).sqrt()) / up
    };
    let e = ellipsoid_method(&mut obj, m.x, r, |b, l| rel(b, l) <= SOLVER_GAP_TOL, ELLIPSOID_ITERS_PER_DIM2 * (d + 1) * (d + 1))?;
    let mut out = cert(&e.x)?;
    out.lower = out.lower.max((2.0 * e.lower.max(0.0)).sqrt());
    out.upper = out.upper.min(c.upper);
    if out.gap() > FALLBACK_GAP_TOL {
        return Err(numeric(what, out.gap()));
    }
    Ok(out)
}

/// `min { sqrt(Σ f_i(x_i)²) : Σ x_i = x }` where `f_i` is `side` of child `i`.
fn split_min(children: &[BodyExpr], side: Side, x: &[f64]) -> Result<Eval> {
    let k = children.len();
    if k == 1 {
        return children[0].eval(side, x, true);
    }
    let n = x.len();
    let scale = norm2(x);
    let u = scaled(x, 1.0 / scale);
    let parts = |v: &[f64]| -> Vec<Vec<f64>> {
        let mut last = u.clone();
        let mut out: Vec<Vec<f64>> = v.chunks(n).map(|c| c.to_vec()).collect();
        for c in &out {
            axpy(&mut last, -1.0, c);
        }
        out.push(last);
        out
    };
    let obj = |v: &[f64]| -> Result<(f64, Vec<f64>)> {
        let xs = parts(v);
        let mut phi = 0.0;
        let mut fg = Vec::with_capacity(k);
        for (c, xi) in children.iter().zip(&xs) {
            let (f, g) = c.eval(side, xi, true)?;
            phi += 0.5 * f * f;
            fg.push(scaled(&g, f));
        }
        let mut grad = Vec::with_capacity((k - 1) * n);
        for i in 0..k - 1 {
            grad.extend(fg[i].iter().zip(&fg[k - 1]).map(|(a, b)| a - b));
        }
        Ok((phi, grad))
    };
    let cert = |v: &[f64]| -> Result<Certificate> {
        let xs = parts(v);
        let mut sq = 0.0;
        let mut avg = vec![0.0; n];
        // at the optimum every f_i ∇f_i is the same dual vector; away from it (or at kinks) try
        // each one and their average
        let mut cands = Vec::with_capacity(k + 1);
        for (c, xi) in children.iter().zip(&xs) {
            let (f, g) = c.eval(side, xi, true)?;
            sq += f * f;
            axpy(&mut avg, f / k as f64, &g);
            cands.push(scaled(&g, f));
        }
        cands.push(avg);
        let mut best = (0.0, vec![0.0; n]);
        for y in cands {
            let dual = children
                .iter()
                .map(|c| c.eval(side.flip(), &y, false).map(|r| r.0 * r.0))
                .sum::<Result<f64>>()?
                .sqrt();
            if dual > 0.0 && dot(&u, &y) / dual > best.0 {
                best = (dot(&u, &y) / dual, scaled(&y, 1.0 / dual));
            }
        }
        Ok(Certificate { upper: sq.sqrt(), lower: best.0, w: best.1 })
    };
    let v0: Vec<f64> = (0..k - 1).flat_map(|_| scaled(&u, 1.0 / k as f64)).collect();
    // parts of a minimiser satisfy |x_i| ≤ r_out,i · F
    let r_max = children.iter().map(|c| c.r_out().max(1.0 / c.r_in())).fold(0.0, f64::max);
    let radius = |v: &[f64], fv: f64| norm2(v) + ((k - 1) as f64).sqrt() * r_max * fv;
    let c = certified_min("Firey split", v0, obj, cert, radius)?;
    Ok((c.upper * scale, c.w))
}

/// `min { f(E x + F c) : c }` where `f` is `side` of `child`, `E` the subspace basis and `F` the
/// complement basis. Returns the gradient in the coordinates of `E`.
fn complement_min(
    child: &BodyExpr,
    side: Side,
    e: &DMatrix<f64>,
    f: &DMatrix<f64>,
    x: &[f64],
) -> Result<Eval> {
    let u0 = matvec(e, x);
    if f.ncols() == 0 {
        let (v, g) = child.eval(side, &u0, true)?;
        return Ok((v, matvec_t(e, &g)));
    }
    let scale = norm2(&u0);
    let u = scaled(&u0, 1.0 / scale);
    let point = |c: &[f64]| -> Vec<f64> {
        let mut p = matvec(f, c);
        axpy(&mut p, 1.0, &u);
        p
    };
    let obj = |c: &[f64]| -> Result<(f64, Vec<f64>)> {
        let (v, g) = child.eval(side, &point(c), true)?;
        Ok((0.5 * v * v, scaled(&matvec_t(f, &g), v)))
    };
    let cert = |c: &[f64]| -> Result<Certificate> {
        let (v, g) = child.eval(side, &point(c), true)?;
        let coords = matvec_t(e, &g);
        let w_full = matvec(e, &coords);
        let dual = child.eval(side.flip(), &w_full, false)?.0;
        let (lower, w) = if dual > 0.0 {
            (dot(&u, &w_full) / dual, scaled(&coords, 1.0 / dual))
        } else {
            (0.0, coords)
        };
        Ok(Certificate { upper: v, lower, w })
    };
    // a minimiser has |u + F c| ≤ r · F(u + F c) with r bounding the relevant side's unit ball
    let r = child.r_out().max(1.0 / child.r_in());
    let radius = |c: &[f64], fv: f64| norm2(c) + r * fv + 1.0;
    let c = certified_min("complement minimisation", vec![0.0; f.ncols()], obj, cert, radius)?;
    Ok((c.upper * scale, c.w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{LinearMapRec, SubspaceRec};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn leaf_examples() {
        let l1 = BodyExpr::lp(3, 1.0).unwrap();
        assert_eq!(l1.norm(&[1.0, -1.0, 1.0]).unwrap(), 3.0);
        let s = BodyExpr::schatten(2, 2.0).unwrap();
        assert!(close(s.norm(&[1.0, 0.0, 0.0, 1.0]).unwrap(), 2f64.sqrt(), 1e-15));
        let l = BodyExpr::lp(4, 1.5).unwrap();
        assert!(close(l.dual_norm(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 1.0, 1e-15));
        let p = BodyExpr::polar(l1);
        assert_eq!(p.dual_norm(&[1.0, -1.0, 1.0]).unwrap(), 3.0);
        let e = BodyExpr::ellipsoid_diag(&[4.0, 1.0]).unwrap();
        assert!(close(e.dual_norm(&[1.0, 0.0]).unwrap(), 0.5, 1e-15));
    }

    #[test]
    fn schatten_nuclear_and_operator() {
        // diag(3, 1) rotated: singular values 3 and 1
        let (c, s) = (0.6_f64, 0.8_f64);
        let a = [3.0 * c, -s, 3.0 * s, c];
        let s1 = BodyExpr::schatten(2, 1.0).unwrap();
        let sinf = BodyExpr::schatten(2, f64::INFINITY).unwrap();
        assert!(close(s1.norm(&a).unwrap(), 4.0, 1e-12));
        assert!(close(sinf.norm(&a).unwrap(), 3.0, 1e-12));
        assert!(close(s1.dual_norm(&a).unwrap(), 3.0, 1e-12));
    }

    #[test]
    fn subgradient_examples() {
        let g = BodyExpr::l2(3).unwrap().subgradient(&[2.0, 0.0, 0.0]).unwrap();
        assert_eq!(g, vec![1.0, 0.0, 0.0]);
        let g = BodyExpr::lp(2, 1.5).unwrap().subgradient(&[1.0, 1.0]).unwrap();
        // frozen from a finite-difference oracle: 2^{-1/3}
        for gi in g {
            assert!((gi - 0.793_700_525_984_1).abs() < 1e-12);
        }
        let g = BodyExpr::cube(2).unwrap().subgradient(&[2.0, 0.5]).unwrap();
        assert_eq!(g, vec![1.0, 0.0]);
    }

    #[test]
    fn firey_sum_of_balls() {
        let b = BodyExpr::firey_sum(vec![BodyExpr::l2(2).unwrap(), BodyExpr::l2(2).unwrap()]).unwrap();
        assert!(close(b.norm(&[1.0, 0.0]).unwrap(), std::f64::consts::FRAC_1_SQRT_2, 1e-12));
        let i = BodyExpr::firey_intersection(vec![BodyExpr::l2(2).unwrap(), BodyExpr::l2(2).unwrap()]).unwrap();
        assert!(close(i.norm(&[1.0, 0.0]).unwrap(), 2f64.sqrt(), 1e-12));
    }

    #[test]
    fn firey_sum_of_polytopes() {
        // kinks on both sides; SLSQP on the epigraph QP and Nelder-Mead on the dual ratio both
        // give sqrt(0.722) = 0.38² + 0.76²
        let body = BodyExpr::firey_sum(vec![BodyExpr::lp(3, 1.0).unwrap(), BodyExpr::cube(3).unwrap()]).unwrap();
        let v = body.norm(&[1.0, 0.9, -0.4]).unwrap();
        assert!((v - 0.722f64.sqrt()).abs() < 1e-6 * v, "{v}");
    }

    #[test]
    fn firey_sum_of_ellipsoids_is_ellipsoid() {
        // dual norms add in squares: A⁻¹ + B⁻¹ is the dual quadratic form of the sum
        let a = BodyExpr::ellipsoid_diag(&[4.0, 1.0]).unwrap();
        let b = BodyExpr::ellipsoid_diag(&[1.0, 9.0]).unwrap();
        let s = BodyExpr::firey_sum(vec![a, b]).unwrap();
        let inv: [f64; 2] = [1.0 / (0.25 + 1.0), 1.0 / (1.0 + 1.0 / 9.0)];
        let x: [f64; 2] = [0.3, -1.7];
        let exact = (inv[0] * x[0] * x[0] + inv[1] * x[1] * x[1]).sqrt();
        assert!(close(s.norm(&x).unwrap(), exact, 1e-10));
        let (v, g) = s.norm_and_subgradient(&x).unwrap();
        assert!(close(v, exact, 1e-10));
        assert!(close(g[0], inv[0] * x[0] / exact, 1e-6));
    }

    #[test]
    fn projection_of_ball_and_cube() {
        let e = SubspaceRec::from_spanning(&DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0])).unwrap();
        let cube = BodyExpr::cube(3).unwrap();
        // projection of the cube onto the diagonal line is [-√3, √3]
        let p = BodyExpr::projection(e.clone(), cube.clone()).unwrap();
        assert!(close(p.norm(&[1.0]).unwrap(), 1.0 / 3f64.sqrt(), 1e-7));
        // section of the cube with the diagonal line is [-1, 1]·(1,1,1), length √3
        let s = BodyExpr::section(e, cube).unwrap();
        assert!(close(s.norm(&[1.0]).unwrap(), 1.0 / 3f64.sqrt(), 1e-12));
        assert!(close(s.dual_norm(&[1.0]).unwrap(), 3f64.sqrt(), 1e-7));
    }

    #[test]
    fn projection_of_smooth_body() {
        let e = SubspaceRec::coordinate(4, 2).unwrap();
        let b = BodyExpr::lp(4, 1.5).unwrap();
        // coordinate projections of ℓ_p balls are ℓ_p balls
        let p = BodyExpr::projection(e, b).unwrap();
        let x = [0.7, -0.2];
        assert!(close(p.norm(&x).unwrap(), lp_eval(&x, 1.5, false).0, 1e-9));
    }

    #[test]
    fn linear_image_and_scale() {
        let t = LinearMapRec::diagonal(&[2.0, 1.0]).unwrap();
        let b = BodyExpr::linear_image(t, BodyExpr::l2(2).unwrap()).unwrap();
        assert!(close(b.norm(&[2.0, 0.0]).unwrap(), 1.0, 1e-15));
        assert!(close(b.dual_norm(&[1.0, 0.0]).unwrap(), 2.0, 1e-15));
        let s = BodyExpr::scale(2.0, BodyExpr::cube(2).unwrap()).unwrap();
        assert_eq!(s.norm(&[1.0, 0.5]).unwrap(), 0.5);
        assert_eq!(s.dual_norm(&[1.0, 0.5]).unwrap(), 3.0);
    }

    #[test]
    fn revolution_boundary_points() {
        let r = BodyExpr::revolution(3).unwrap();
        assert!(close(r.norm(&[1.0, 0.0, 0.0]).unwrap(), 1.0, 1e-15));
        assert!(close(r.norm(&[0.0, 0.0, 2f64.sqrt() - 1.0]).unwrap(), 1.0, 1e-15));
        assert!(close(r.dual_norm(&[0.0, 0.0, 1.0]).unwrap(), 2f64.sqrt() - 1.0, 1e-15));
        assert!(close(r.dual_norm(&[0.0, 1.0, 0.0]).unwrap(), 1.0, 1e-15));
        // support point must lie on the boundary
        let (h, y) = r.dual_norm_and_support_point(&[0.2, 0.1, 1.0]).unwrap();
        assert!(close(r.norm(&y).unwrap(), 1.0, 1e-12));
        assert!(close(dot(&y, &[0.2, 0.1, 1.0]), h, 1e-12));
    }

    #[test]
    fn zero_vector() {
        let b = BodyExpr::firey_sum(vec![BodyExpr::lp(3, 1.5).unwrap(), BodyExpr::cube(3).unwrap()]).unwrap();
        assert_eq!(b.norm(&[0.0; 3]).unwrap(), 0.0);
        assert_eq!(b.subgradient(&[0.0; 3]).unwrap(), vec![0.0; 3]);
        assert!(b.norm(&[0.0; 2]).is_err());
    }
}
