//! Exact uniform samplers for bodies with a known stochastic representation.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use super::{gaussian_vec, rng_for, ChainConfig, SampleBatch, SamplerKind};
use crate::body::{conjugate, BodyExpr, BodyKind, Side};
use crate::error::{ensure, Result};
use crate::linalg::{matvec, norm2, sym_pow};

fn supported(body: &BodyExpr, side: Side) -> bool {
    match body.kind() {
        BodyKind::Lp { .. } | BodyKind::Ellipsoid { .. } => true,
        BodyKind::Schatten { p, .. } => *p == 2.0,
        BodyKind::Revolution { .. } => side == Side::Primal,
        BodyKind::LinearImage { child, .. } | BodyKind::Scale { child, .. } => supported(child, side),
        BodyKind::Polar(child) => supported(child, side.flip()),
        _ => false,
    }
}

pub fn has_exact_sampler(body: &BodyExpr) -> bool {
    supported(body, Side::Primal)
}

/// Precomputed sampling plan: a leaf sampler followed by a linear map.
enum Leaf {
    /// Uniform on `B_p^n`.
    Lp { n: usize, p: f64, gamma: Option<Gamma<f64>> },
    Revolution { n: usize },
}

struct Plan {
    leaf: Leaf,
    map: Option<DMatrix<f64>>,
}

impl Plan {
    fn compose(mut self, t: DMatrix<f64>) -> Self {
        self.map = Some(match self.map {
            Some(m) => t * m,
            None => t,
        });
        self
    }
}

fn lp_leaf(n: usize, p: f64) -> Leaf {
    let gamma = (p.is_finite() && p != 2.0).then(|| Gamma::new(1.0 / p, 1.0).expect("positive shape"));
    Leaf::Lp { n, p, gamma }
}

fn plan(body: &BodyExpr, side: Side) -> Plan {
    let n = body.dim();
    match (body.kind(), side) {
        (BodyKind::Lp { n, p }, _) => {
            let p = if side == Side::Primal { *p } else { conjugate(*p) };
            Plan { leaf: lp_leaf(*n, p), map: None }
        }
        (BodyKind::Schatten { .. }, _) => Plan { leaf: lp_leaf(n, 2.0), map: None },
        (BodyKind::Ellipsoid { a, a_inv }, _) => {
            // {xᵀAx ≤ 1} = A^{-1/2} D; the polar is A^{1/2} D
            let m = if side == Side::Primal { sym_pow(a, -0.5, 0.0) } else { sym_pow(a_inv, -0.5, 0.0) };
            Plan { leaf: lp_leaf(n, 2.0), map: Some(m) }
        }
        (BodyKind::Revolution { n }, _) => Plan { leaf: Leaf::Revolution { n: *n }, map: None },
        (BodyKind::LinearImage { map, child }, Side::Primal) => plan(child, side).compose(map.matrix().clone()),
        (BodyKind::LinearImage { map, child }, Side::Dual) => {
            plan(child, side).compose(map.inverse().transpose())
        }
        (BodyKind::Scale { lambda, child }, _) => {
            let s = if side == Side::Primal { *lambda } else { 1.0 / lambda };
            plan(child, side).compose(DMatrix::identity(n, n) * s)
        }
        (BodyKind::Polar(child), _) => plan(child, side.flip()),
        _ => unreachable!("checked by supported()"),
    }
}

/// `x = Y / (Σ|Y_i|^p + E)^{1/p}` with `Y_i ∝ exp(−|y|^p)` and `E ~ Exp(1)` is uniform on `B_p^n`.
fn sample_lp(rng: &mut ChaCha8Rng, n: usize, p: f64, gamma: Option<&Gamma<f64>>, out: &mut [f64]) {
    if p.is_infinite() {
        out.iter_mut().for_each(|v| *v = 2.0 * rng.random::<f64>() - 1.0);
        return;
    }
    if p == 2.0 {
        let g = gaussian_vec(rng, n);
        let e: f64 = Exp1.sample(rng);
        let s = 1.0 / (g.iter().map(|v| v * v).sum::<f64>() + 2.0 * e).sqrt();
        out.iter_mut().zip(&g).for_each(|(o, v)| *o = v * s);
        return;
    }
    let gamma = gamma.expect("gamma law for finite p");
    let mut sum = 0.0;
    for o in out.iter_mut() {
        let g: f64 = gamma.sample(rng);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        *o = sign * g.powf(1.0 / p);
        sum += g;
    }
    let e: f64 = Exp1.sample(rng);
    let s = (sum + e).powf(-1.0 / p);
    out.iter_mut().for_each(|v| *v *= s);
}

/// Axis coordinate `y` has density ∝ `r(|y|)^{n−1}`; since `r(y) ≤ e^{−y}` on `[0, √2−1]` we
/// propose from the truncated exponential with rate `n − 1` and accept with `(r e^{y})^{n−1}`.
/// The equatorial part is uniform in the `(n−1)`-ball of radius `r(y)`.
fn sample_revolution(rng: &mut ChaCha8Rng, n: usize, out: &mut [f64]) {
    let h = std::f64::consts::SQRT_2 - 1.0;
    let k = (n - 1) as f64;
    let y = loop {
        let u: f64 = rng.random();
        let y = -(1.0 - u * (1.0 - (-k * h).exp())).ln() / k;
        let r = (2.0 - (1.0 + y) * (1.0 + y)).max(0.0).sqrt();
        let acc = ((r.ln() + y) * k).exp();
        if rng.random::<f64>() < acc {
            break y;
        }
    };
    let r = (2.0 - (1.0 + y) * (1.0 + y)).max(0.0).sqrt();
    let g = gaussian_vec(rng, n - 1);
    let rad = r * rng.random::<f64>().powf(1.0 / k) / norm2(&g);
    for (o, v) in out.iter_mut().zip(&g) {
        *o = v * rad;
    }
    out[n - 1] = if rng.random::<bool>() { y } else { -y };
}

/// Exact i.i.d. uniform sample; the seed drives stream 0 of the generator.
pub fn exact_sample(body: &BodyExpr, count: usize, seed: u64) -> Result<SampleBatch> {
    ensure!(has_exact_sampler(body), "no exact sampler for {}", body.descriptor());
    let plan = plan(body, Side::Primal);
    let n = body.dim();
    let mut rng = rng_for(seed, 0);
    let mut data = vec![0.0; count * n];
    let mut buf = vec![0.0; n];
    for chunk in data.chunks_exact_mut(n) {
        match &plan.leaf {
            Leaf::Lp { n, p, gamma } => sample_lp(&mut rng, *n, *p, gamma.as_ref(), &mut buf),
            Leaf::Revolution { n } => sample_revolution(&mut rng, *n, &mut buf),
        }
        match &plan.map {
            Some(m) => chunk.copy_from_slice(&matvec(m, &buf)),
            None => chunk.copy_from_slice(&buf),
        }
    }
    Ok(SampleBatch::new(body.descriptor(), ChainConfig::new(seed), SamplerKind::Exact, n, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn second_moment(b: &SampleBatch, i: usize) -> f64 {
        b.points().map(|p| p[i] * p[i]).sum::<f64>() / b.count() as f64
    }

    #[test]
    fn ball_and_cube_moments() {
        let n = 8;
        let ball = exact_sample(&BodyExpr::l2(n).unwrap(), 100_000, 1).unwrap();
        assert!((second_moment(&ball, 0) - 0.1).abs() < 0.003);
        let cube = exact_sample(&BodyExpr::cube(n).unwrap(), 100_000, 1).unwrap();
        assert!((second_moment(&cube, 3) - 1.0 / 3.0).abs() < 0.005);
    }

    #[test]
    fn cross_polytope_mass_of_inner_half() {
        // |½ B| / |B| = 2^{-n}
        let body = BodyExpr::lp(3, 1.0).unwrap();
        let b = exact_sample(&body, 200_000, 2).unwrap();
        let inner = b.points().filter(|p| body.norm(p).unwrap() <= 0.5).count() as f64 / 200_000.0;
        assert!((inner - 0.125).abs() < 0.003);
        assert!(b.points().all(|p| body.norm(p).unwrap() <= 1.0 + 1e-12));
    }

    #[test]
    fn revolution_moments_match_quadrature() {
        let n = 6;
        let body = BodyExpr::revolution(n).unwrap();
        let m = crate::body::revolution_moments(n);
        let b = exact_sample(&body, 200_000, 3).unwrap();
        assert!(b.points().all(|p| body.norm(p).unwrap() <= 1.0 + 1e-12));
        let perp = second_moment(&b, 0);
        let axis = second_moment(&b, n - 1);
        assert!((perp / m.var_perp - 1.0).abs() < 0.02, "{perp} {}", m.var_perp);
        assert!((axis / m.var_axis - 1.0).abs() < 0.02, "{axis} {}", m.var_axis);
    }

    #[test]
    fn polar_and_image_plans() {
        let t = crate::body::LinearMapRec::diagonal(&[2.0, 0.5]).unwrap();
        let body = BodyExpr::polar(BodyExpr::linear_image(t, BodyExpr::lp(2, 4.0).unwrap()).unwrap());
        assert!(has_exact_sampler(&body));
        let b = exact_sample(&body, 20_000, 4).unwrap();
        let worst = b.points().map(|p| body.norm(p).unwrap()).fold(0.0, f64::max);
        assert!(worst <= 1.0 + 1e-12 && worst > 0.99);
        assert!(!has_exact_sampler(&BodyExpr::firey_sum(vec![BodyExpr::l2(2).unwrap()]).unwrap()));
    }
}
