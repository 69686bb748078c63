//! Volume: closed form when the algebra provides one, otherwise Monte Carlo.
//!
//! The radial estimator uses `|K| = |D_n| · E_θ ‖θ‖_K^{−n}` over uniform directions. The
//! multiphase estimator walks the balls `r_k D` from the inner to the outer crude radius with
//! volume ratio 1.25 per phase and estimates each `|K ∩ r_{k−1} D| / |K ∩ r_k D|` by hit-and-run.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::body::BodyExpr;
use crate::error::{ensure, numeric, Result};
use crate::linalg::{axpy, dot, norm2};
use crate::sampling::{chord, derive_seed, rng_for, sphere_sample};
use crate::stats::{ln_ball_volume, mean_se};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VolumeMethod {
    Exact,
    Radial,
    Multiphase,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub ln_value: f64,
    /// Standard error of `ln_value` (zero when exact); approximately the relative error.
    pub ln_se: f64,
    pub is_exact: bool,
    pub method: VolumeMethod,
    pub samples: usize,
}

impl VolumeEstimate {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }

    /// Volume radius `(|K|/|D_n|)^{1/n}`.
    pub fn vol_rad(&self, n: usize) -> f64 {
        ((self.ln_value - ln_ball_volume(n)) / n as f64).exp()
    }

    fn exact(ln_value: f64) -> Self {
        Self { ln_value, ln_se: 0.0, is_exact: true, method: VolumeMethod::Exact, samples: 0 }
    }
}

const RADIAL_BUDGET: usize = 4_000_000;
const MULTIPHASE_BUDGET: usize = 40_000_000;

/// Exact volume when available, else the radial estimator, else multiphase.
pub fn volume(body: &BodyExpr, rel_err_target: f64, seed: u64) -> Result<VolumeEstimate> {
    ensure!(rel_err_target > 0.0, "relative error target must be positive");
    if let Some(lv) = body.ln_volume_exact() {
        return Ok(VolumeEstimate::exact(lv));
    }
    match volume_radial(body, rel_err_target, seed, RADIAL_BUDGET) {
        Ok(v) => Ok(v),
        Err(_) => volume_multiphase(body, rel_err_target, seed, MULTIPHASE_BUDGET),
    }
}

/// Radial Monte Carlo in batches of 20 000 directions until the standard error of the log
/// volume is at most `rel_err_target`.
pub fn volume_radial(body: &BodyExpr, rel_err_target: f64, seed: u64, max_dirs: usize) -> Result<VolumeEstimate> {
    let n = body.dim();
    let nf = n as f64;
    // shift keeps every term ≤ 1: ‖θ‖ ≥ 1/r_out
    let shift = nf * body.r_out().ln();
    let mut vals: Vec<f64> = Vec::new();
    let mut batch = 0u64;
    loop {
        for th in sphere_sample(n, 20_000, derive_seed(seed, batch)) {
            let r = body.norm(&th)?;
            vals.push((-nf * r.ln() - shift).exp());
        }
        batch += 1;
        let (m, se) = mean_se(&vals);
        let rel = se / m;
        if batch >= 2 && rel <= rel_err_target {
            return Ok(VolumeEstimate {
                ln_value: ln_ball_volume(n) + m.ln() + shift,
                ln_se: rel,
                is_exact: false,
                method: VolumeMethod::Radial,
                samples: vals.len(),
            });
        }
        if vals.len() >= max_dirs {
            return Err(numeric("radial volume estimator (relative standard error)", rel));
        }
    }
}

/// Chord of `K ∩ r D` through interior `x` along unit `d`.
fn capped_chord(body: &BodyExpr, x: &[f64], d: &[f64], r: f64) -> Result<(f64, f64)> {
    let (lo, hi) = chord(body, x, d)?;
    let b = dot(x, d);
    let c = dot(x, x) - r * r;
    let disc = (b * b - c).max(0.0).sqrt();
    Ok((lo.max(-b - disc), hi.min(-b + disc)))
}

/// Multiphase estimator. Each phase runs `per_phase` hit-and-run steps (warm-started from the
/// previous phase) and uses 20 batch means for the standard error; `per_phase` doubles until the
/// target is met or `max_steps` total steps are spent.
pub fn volume_multiphase(body: &BodyExpr, rel_err_target: f64, seed: u64, max_steps: usize) -> Result<VolumeEstimate> {
    let n = body.dim();
    let nf = n as f64;
    let r0 = body.r_in();
    let r_max = body.r_out();
    let q = 1.25f64.powf(1.0 / nf);
    let mut radii = vec![r0];
    while *radii.last().expect("nonempty") < r_max {
        let next = radii.last().expect("nonempty") * q;
        radii.push(next.min(r_max));
    }
    let phases = radii.len() - 1;
    let mut per_phase = 2000usize.max(40 * n);
    let mut spent = 0usize;
    let mut attempt = 0u64;
    loop {
        let mut rng = rng_for(derive_seed(seed, attempt), 0);
        let mut x = vec![0.0; n];
        let mut ln_ratio_sum = 0.0;
        let mut var_sum = 0.0;
        for k in 1..=phases {
            let (r_in, r_out) = (radii[k - 1], radii[k]);
            let step = |x: &mut Vec<f64>, rng: &mut rand_chacha::ChaCha8Rng| -> Result<()> {
                let d = crate::sampling::unit_vec(rng, n);
                let (lo, hi) = capped_chord(body, x, &d, r_out)?;
                let t = lo + (hi - lo) * rng.random::<f64>();
                axpy(x, t, &d);
                Ok(())
            };
            for _ in 0..10 * n {
                step(&mut x, &mut rng)?;
            }
            let batches = 20;
            let per_batch = per_phase.div_ceil(batches);
            let mut fracs = Vec::with_capacity(batches);
            for _ in 0..batches {
                let mut hits = 0usize;
                for _ in 0..per_batch {
                    step(&mut x, &mut rng)?;
                    if norm2(&x) <= r_in {
                        hits += 1;
                    }
                }
                fracs.push(hits as f64 / per_batch as f64);
            }
            spent += batches * per_batch + 10 * n;
            let (p, se) = mean_se(&fracs);
            ensure!(p > 0.0, "multiphase phase {k} saw no inner hits");
            ln_ratio_sum += p.ln();
            var_sum += (se / p).powi(2);
        }
        let ln_se = var_sum.sqrt();
        if ln_se <= rel_err_target {
            return Ok(VolumeEstimate {
                ln_value: ln_ball_volume(n) + nf * r0.ln() - ln_ratio_sum,
                ln_se,
                is_exact: false,
                method: VolumeMethod::Multiphase,
                samples: spent,
            });
        }
        if spent >= max_steps {
            return Err(numeric("multiphase volume estimator (relative standard error)", ln_se));
        }
        // the error scales like per_phase^{-1/2}
        let grow = (ln_se / rel_err_target).powi(2).clamp(2.0, 16.0);
        per_phase = (per_phase as f64 * grow).ceil() as usize;
        attempt += 1;
    }
}

/// Santaló product `s(K) = (|K| |K°| / |D_n|²)^{1/n}` with its log standard error.
pub fn santalo_product(body: &BodyExpr, rel_err_target: f64, seed: u64) -> Result<(f64, f64)> {
    let n = body.dim();
    let v = volume(body, rel_err_target, seed)?;
    let w = volume(&BodyExpr::polar(body.clone()), rel_err_target, derive_seed(seed, 1))?;
    let ln_s = (v.ln_value + w.ln_value - 2.0 * ln_ball_volume(n)) / n as f64;
    let se = (v.ln_se.powi(2) + w.ln_se.powi(2)).sqrt() / n as f64;
    Ok((ln_s.exp(), se))
}
