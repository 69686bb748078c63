use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::eval::conjugate;
use super::{BodyExpr, BodyKind};
use crate::linalg::sym_eigen;
use crate::stats::{integrate, ln_ball_volume};

/// Largest possible 2-convexity constant (attained by Hilbert space).
pub const NORDLANDER_CAP: f64 = 0.125;

/// Closed-form attributes of a body; fields are `None` when not derivable from the expression.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalyticAttrs {
    pub volume: Option<f64>,
    /// 2-convexity constant: `δ_K(ε) ≥ α ε²`.
    pub alpha: Option<f64>,
    /// 2-smoothness constant: `ρ_K(τ) ≤ β τ²`.
    pub beta: Option<f64>,
    /// Radius of the John ellipsoid when it is a centred ball.
    pub john_ball_radius: Option<f64>,
    /// Radius of the Löwner ellipsoid when it is a centred ball.
    pub loewner_ball_radius: Option<f64>,
}

/// Tunable analytic defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttrOptions {
    /// `α(ℓ_p) = lp_alpha_coeff · (p − 1)` for `1 < p ≤ 2`, capped at 1/8.
    pub lp_alpha_coeff: f64,
}

impl Default for AttrOptions {
    fn default() -> Self {
        Self { lp_alpha_coeff: 0.125 }
    }
}

/// Attributes of `K` (primal side) or of its polar `K°` (dual side).
#[derive(Debug, Clone, Copy, Default)]
struct SideAttrs {
    ln_volume: Option<f64>,
    alpha: Option<f64>,
    john: Option<f64>,
    loewner: Option<f64>,
}

fn lp_alpha(p: f64, coeff: f64) -> Option<f64> {
    (p > 1.0 && p <= 2.0).then(|| (coeff * (p - 1.0)).min(NORDLANDER_CAP))
}

/// `log |B_p^n| = n log(2Γ(1+1/p)) − log Γ(1+n/p)`.
pub fn ln_lp_volume(n: usize, p: f64) -> f64 {
    let n = n as f64;
    if p.is_infinite() {
        return n * 2f64.ln();
    }
    n * (2f64.ln() + ln_gamma(1.0 + 1.0 / p)) - ln_gamma(1.0 + n / p)
}

fn lp_radii(n: usize, p: f64) -> (f64, f64) {
    let r = (n as f64).powf(0.5 - 1.0 / p);
    if p <= 2.0 {
        (r, 1.0)
    } else {
        (1.0, r)
    }
}

/// Second-moment data of the revolution body in `R^n` (not volume normalised).
#[derive(Debug, Clone, Copy)]
pub struct RevolutionMoments {
    pub volume: f64,
    /// `E x_1²` for any equatorial coordinate.
    pub var_perp: f64,
    /// `E x_n²` along the axis.
    pub var_axis: f64,
}

/// Integrate `g(y) · r(y)^k` over `|y| ≤ √2 − 1`, `r(y)² = 2 − (1 + |y|)²`, via `y = h − s²`
/// which removes the square-root endpoint behaviour.
fn lens_integral(k: f64, g: impl Fn(f64) -> f64) -> f64 {
    let h = std::f64::consts::SQRT_2 - 1.0;
    let c = 2.0 * std::f64::consts::SQRT_2;
    let f = |s: f64| {
        let s2 = s * s;
        let r2 = s2 * (c - s2);
        let y = h - s2;
        2.0 * s * r2.max(0.0).powf(0.5 * k) * g(y)
    };
    2.0 * integrate(f, 0.0, h.sqrt(), 1e-15)
}

pub fn revolution_moments(n: usize) -> RevolutionMoments {
    let nf = n as f64;
    let base = lens_integral(nf - 1.0, |_| 1.0);
    let axis = lens_integral(nf - 1.0, |y| y * y);
    let perp = lens_integral(nf + 1.0, |_| 1.0);
    RevolutionMoments {
        volume: ln_ball_volume(n - 1).exp() * base,
        var_perp: perp / ((nf + 1.0) * base),
        var_axis: axis / base,
    }
}

/// `log |K°|` for the revolution body: the polar is `{|y| ≤ 1, |x_⊥| ≤ 1}` capped by
/// `2|x_⊥|² ≤ 2 − (|y| − 1)²` for `1 ≤ |y| ≤ 1 + √2`.
fn ln_revolution_polar_volume(n: usize) -> f64 {
    let nf = n as f64;
    let caps = std::f64::consts::SQRT_2
        * (0.5 * std::f64::consts::PI.ln() + ln_gamma(0.5 * (nf + 1.0)) - ln_gamma(0.5 * nf + 1.0)).exp()
        / 2.0;
    ln_ball_volume(n - 1) + (2.0 * (1.0 + caps)).ln()
}

fn ellipsoid_side(a: &nalgebra::DMatrix<f64>) -> SideAttrs {
    let n = a.nrows();
    let (vals, _) = sym_eigen(a);
    let ln_det: f64 = vals.iter().map(|v| v.ln()).sum();
    let (lo, hi) = (vals[0], vals[n - 1]);
    let ball = ((hi - lo) <= 1e-12 * hi).then(|| 1.0 / (0.5 * (lo + hi)).sqrt());
    SideAttrs {
        ln_volume: Some(ln_ball_volume(n) - 0.5 * ln_det),
        alpha: Some(NORDLANDER_CAP),
        john: ball,
        loewner: ball,
    }
}

fn firey_alpha(children: &[BodyExpr], side: super::Side, opts: &AttrOptions) -> Option<f64> {
    children
        .iter()
        .map(|c| side_attrs(c, side, opts).alpha)
        .collect::<Option<Vec<f64>>>()
        .map(|v| v.into_iter().fold(f64::INFINITY, f64::min) / 8.0)
}

fn side_attrs(body: &BodyExpr, side: super::Side, opts: &AttrOptions) -> SideAttrs {
    use super::Side::Primal;
    let n = body.dim();
    match body.kind() {
        BodyKind::Lp { p, .. } | BodyKind::Schatten { p, .. } => {
            let p = if side == Primal { *p } else { conjugate(*p) };
            let (size, ln_volume) = match body.kind() {
                BodyKind::Lp { n, .. } => (*n, Some(ln_lp_volume(*n, p))),
                BodyKind::Schatten { m, .. } => (*m, (p == 2.0).then(|| ln_ball_volume(m * m))),
                _ => unreachable!(),
            };
            let (john, loewner) = lp_radii(size, p);
            SideAttrs {
                ln_volume,
                alpha: lp_alpha(p, opts.lp_alpha_coeff),
                john: Some(john),
                loewner: Some(loewner),
            }
        }
        BodyKind::Ellipsoid { a, a_inv } => ellipsoid_side(if side == Primal { a } else { a_inv }),
        BodyKind::Revolution { n } => SideAttrs {
            ln_volume: Some(if side == Primal {
                revolution_moments(*n).volume.ln()
            } else {
                ln_revolution_polar_volume(*n)
            }),
            ..Default::default()
        },
        BodyKind::LinearImage { map, child } => {
            let c = side_attrs(child, side, opts);
            let ln_det = map.det().abs().ln();
            SideAttrs {
                ln_volume: c.ln_volume.map(|v| if side == Primal { v + ln_det } else { v - ln_det }),
                alpha: c.alpha,
                ..Default::default()
            }
        }
        BodyKind::Section { child, .. } | BodyKind::Projection { child, .. } => SideAttrs {
            alpha: side_attrs(child, side, opts).alpha,
            ..Default::default()
        },
        BodyKind::FireySum(c) | BodyKind::FireyIntersection(c) => SideAttrs {
            alpha: firey_alpha(c, side, opts),
            ..Default::default()
        },
        BodyKind::Polar(child) => side_attrs(child, side.flip(), opts),
        BodyKind::Scale { lambda, child } => {
            let c = side_attrs(child, side, opts);
            let s = if side == Primal { *lambda } else { 1.0 / lambda };
            SideAttrs {
                ln_volume: c.ln_volume.map(|v| v + n as f64 * s.ln()),
                alpha: c.alpha,
                john: c.john.map(|r| r * s),
                loewner: c.loewner.map(|r| r * s),
            }
        }
    }
}

impl BodyExpr {
    pub fn analytic_attrs(&self) -> AnalyticAttrs {
        self.analytic_attrs_with(&AttrOptions::default())
    }

    pub fn analytic_attrs_with(&self, opts: &AttrOptions) -> AnalyticAttrs {
        let primal = side_attrs(self, super::Side::Primal, opts);
        let dual = side_attrs(self, super::Side::Dual, opts);
        AnalyticAttrs {
            volume: primal.ln_volume.map(f64::exp),
            alpha: primal.alpha,
            beta: dual.alpha.map(|a| 1.0 / (16.0 * a)),
            john_ball_radius: primal.john,
            loewner_ball_radius: primal.loewner,
        }
    }

    /// `log |K|` when it has a closed form (avoids overflow of `volume` in high dimension).
    pub fn ln_volume_exact(&self) -> Option<f64> {
        side_attrs(self, super::Side::Primal, &AttrOptions::default()).ln_volume
    }
}
