//! Mean width functionals over uniform sphere directions:
//! `M = E‖θ‖_K`, `M* = E‖θ‖*_K`, `M₂* = (E(‖θ‖*_K)²)^{1/2}`.

use serde::{Deserialize, Serialize};

use crate::body::{BodyExpr, Side};
use crate::error::{ensure, Result};
use crate::sampling::sphere_sample;
use crate::stats::mean_se;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeanWidths {
    pub m: f64,
    pub m_se: f64,
    pub mstar: f64,
    pub mstar_se: f64,
    pub m2star: f64,
    /// Delta-method standard error of `M₂*`.
    pub m2star_se: f64,
    pub dirs: usize,
}

pub fn mean_widths(body: &BodyExpr, dirs: usize, seed: u64) -> Result<MeanWidths> {
    ensure!(dirs >= 2, "mean widths need at least two directions");
    let n = body.dim();
    let mut primal = Vec::with_capacity(dirs);
    let mut dual = Vec::with_capacity(dirs);
    let mut dual_sq = Vec::with_capacity(dirs);
    for th in sphere_sample(n, dirs, seed) {
        primal.push(body.eval(Side::Primal, &th, false)?.0);
        let h = body.eval(Side::Dual, &th, false)?.0;
        dual.push(h);
        dual_sq.push(h * h);
    }
    let (m, m_se) = mean_se(&primal);
    let (mstar, mstar_se) = mean_se(&dual);
    let (sq, sq_se) = mean_se(&dual_sq);
    let m2star = sq.sqrt();
    Ok(MeanWidths { m, m_se, mstar, mstar_se, m2star, m2star_se: sq_se / (2.0 * m2star), dirs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_and_scaled_ball() {
        let w = mean_widths(&BodyExpr::l2(6).unwrap(), 1000, 1).unwrap();
        for v in [w.m, w.mstar, w.m2star] {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let w = mean_widths(&BodyExpr::scale(2.0, BodyExpr::l2(6).unwrap()).unwrap(), 1000, 1).unwrap();
        assert!((w.mstar - 2.0).abs() < 1e-12 && (w.m - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cube_mean_width_matches_l1_integral() {
        // E|θ|_1 = n · E|θ_1| = n · Γ(n/2) / (√π Γ((n+1)/2)), n = 16
        let n = 16;
        let g = |x: f64| statrs::function::gamma::ln_gamma(x);
        let want = n as f64 * (g(n as f64 / 2.0) - g((n as f64 + 1.0) / 2.0)).exp() / std::f64::consts::PI.sqrt();
        let w = mean_widths(&BodyExpr::cube(n).unwrap(), 200_000, 2).unwrap();
        assert!((w.mstar - want).abs() < 3.0 * w.mstar_se, "{} {} {}", w.mstar, want, w.mstar_se);
    }
}
