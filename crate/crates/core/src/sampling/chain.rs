use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{rng_for, unit_vec, SampleBatch, SamplerKind};
use crate::body::BodyExpr;
use crate::error::{ensure, Result};
use crate::linalg::{axpy, norm2};

/// Hit-and-run configuration. `None` fields take the dimension-dependent defaults
/// (burn-in `50 n²`, thinning `n`); the start defaults to the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub seed: u64,
    pub burn_in: Option<usize>,
    pub thinning: Option<usize>,
    pub start: Option<Vec<f64>>,
    /// Independent chains, merged in chain order.
    pub chains: usize,
}

impl ChainConfig {
    pub fn new(seed: u64) -> Self {
        Self { seed, burn_in: None, thinning: None, start: None, chains: 1 }
    }

    pub fn burn_in_for(&self, n: usize) -> usize {
        self.burn_in.unwrap_or(50 * n * n)
    }

    pub fn thinning_for(&self, n: usize) -> usize {
        self.thinning.unwrap_or(n).max(1)
    }
}

/// Roots `t₋ < 0 < t₊` of `‖x + t d‖_K = 1` for interior `x`.
pub fn chord(body: &BodyExpr, x: &[f64], d: &[f64]) -> Result<(f64, f64)> {
    ensure!(x.len() == body.dim() && d.len() == body.dim(), "dimension mismatch");
    let f0 = body.norm(x)? - 1.0;
    ensure!(f0 < 0.0, "chord start must be interior (norm {})", f0 + 1.0);
    let dn = norm2(d);
    ensure!(dn > 0.0, "chord direction must be nonzero");
    let reach = (body.r_out() + norm2(x)) / dn * (1.0 + 1e-9);
    let plus = root(body, x, d, f0, reach)?;
    let neg: Vec<f64> = d.iter().map(|v| -v).collect();
    let minus = root(body, x, &neg, f0, reach)?;
    Ok((-minus, plus))
}

/// Illinois-safeguarded regula falsi for the unique root of the convex `t ↦ ‖x + t d‖ − 1`
/// on `(0, hi]`.
fn root(body: &BodyExpr, x: &[f64], d: &[f64], f0: f64, hi: f64) -> Result<f64> {
    let mut p = x.to_vec();
    let mut eval = |t: f64| -> Result<f64> {
        p.copy_from_slice(x);
        axpy(&mut p, t, d);
        Ok(body.norm(&p)? - 1.0)
    };
    let (mut a, mut fa) = (0.0, f0);
    let (mut b, mut fb) = (hi, eval(hi)?);
    let mut grow = 0;
    while fb < 0.0 {
        // crude radii are conservative, so this only triggers on rounding
        b *= 2.0;
        fb = eval(b)?;
        grow += 1;
        ensure!(grow < 60, "chord is unbounded: body is not bounded");
    }
    let mut side = 0;
    for _ in 0..200 {
        if b - a <= 1e-13 * b.max(1.0) {
            break;
        }
        let mut c = b - fb * (b - a) / (fb - fa);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = eval(c)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if fc < 0.0 {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if fc.abs() <= 1e-15 {
            break;
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

fn run_chain(body: &BodyExpr, config: &ChainConfig, stream: u64, count: usize) -> Result<Vec<f64>> {
    let n = body.dim();
    let mut rng = rng_for(config.seed, stream);
    let mut x = config.start.clone().unwrap_or_else(|| vec![0.0; n]);
    let burn = config.burn_in_for(n);
    let thin = config.thinning_for(n);
    let mut out = Vec::with_capacity(count * n);
    let step = |x: &mut Vec<f64>, rng: &mut rand_chacha::ChaCha8Rng| -> Result<()> {
        let d = unit_vec(rng, n);
        let (lo, hi) = chord(body, x, &d)?;
        let t = lo + (hi - lo) * rng.random::<f64>();
        axpy(x, t, &d);
        Ok(())
    };
    for _ in 0..burn {
        step(&mut x, &mut rng)?;
    }
    for _ in 0..count {
        for _ in 0..thin {
            step(&mut x, &mut rng)?;
        }
        out.extend_from_slice(&x);
    }
    Ok(out)
}

/// Hit-and-run: uniform direction, uniform point on the chord. Chains run on the worker pool and
/// are concatenated in chain order.
pub fn hit_and_run(body: &BodyExpr, config: &ChainConfig, count: usize) -> Result<SampleBatch> {
    let n = body.dim();
    ensure!(config.chains >= 1, "need at least one chain");
    ensure!(config.thinning.is_none_or(|t| t >= 1), "thinning must be at least 1");
    if let Some(s) = &config.start {
        ensure!(s.len() == n, "start point has wrong dimension");
        ensure!(body.norm(s)? < 1.0, "start point must be strictly inside the body");
    }
    let chains = config.chains;
    let per: Vec<usize> = (0..chains).map(|c| count / chains + usize::from(c < count % chains)).collect();
    let parts: Vec<Vec<f64>> = per
        .par_iter()
        .enumerate()
        .map(|(c, &k)| run_chain(body, config, c as u64, k))
        .collect::<Result<_>>()?;
    let data = parts.concat();
    Ok(SampleBatch::new(body.descriptor(), config.clone(), SamplerKind::HitAndRun, n, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chord_examples() {
        let cube = BodyExpr::cube(4).unwrap();
        let (a, b) = chord(&cube, &[0.0; 4], &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((a + 1.0).abs() < 1e-10 && (b - 1.0).abs() < 1e-10);
        let ball = BodyExpr::l2(3).unwrap();
        let (a, b) = chord(&ball, &[0.5, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        assert!((a + 0.75f64.sqrt()).abs() < 1e-10 && (b - 0.75f64.sqrt()).abs() < 1e-10);
        // ‖t(1,1)/√2‖_{1.5} = 1 at t = 2^{1/2 − 2/3}
        let l = BodyExpr::lp(2, 1.5).unwrap();
        let d = [0.5f64.sqrt(), 0.5f64.sqrt()];
        let (a, b) = chord(&l, &[0.0, 0.0], &d).unwrap();
        let t = 2f64.powf(-1.0 / 6.0);
        assert!((a + t).abs() < 1e-10 && (b - t).abs() < 1e-10);
    }

    #[test]
    fn chord_rejects_exterior_start() {
        let ball = BodyExpr::l2(2).unwrap();
        assert!(chord(&ball, &[1.5, 0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn deterministic_and_inside() {
        let body = BodyExpr::lp(3, 1.5).unwrap();
        let cfg = ChainConfig { chains: 2, ..ChainConfig::new(9) };
        let a = hit_and_run(&body, &cfg, 300).unwrap();
        let b = hit_and_run(&body, &cfg, 300).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.count(), 300);
        assert!(a.points().all(|p| body.norm(p).unwrap() <= 1.0 + 1e-9));
    }
}
