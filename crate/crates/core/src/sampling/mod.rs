//! Reproducible uniform sampling: hit-and-run chains, exact samplers for bodies with a known
//! stochastic representation, Haar-random subspaces and uniform sphere directions.

mod batch;
mod chain;
mod exact;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::body::{BodyExpr, SubspaceRec};
use crate::error::{ensure, Result};
use crate::linalg::{norm2, orthonormal_columns};

pub use batch::{SampleBatch, SamplerKind};
pub use chain::{chord, hit_and_run, ChainConfig};
pub use exact::{exact_sample, has_exact_sampler};

/// SplitMix64 finaliser, used to derive independent seeds from a base seed and a tag.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for chain/stream `stream` of `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn gaussian_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub(crate) fn unit_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let g = gaussian_vec(rng, n);
        let r = norm2(&g);
        if r > 1e-300 {
            return g.into_iter().map(|v| v / r).collect();
        }
    }
}

/// `count` uniform points on `S^{n-1}` (normalised Gaussians).
pub fn sphere_sample(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_for(seed, 0);
    (0..count).map(|_| unit_vec(&mut rng, n)).collect()
}

/// Haar-random `k`-dimensional subspace of `R^n`.
pub fn haar_subspace(n: usize, k: usize, seed: u64) -> Result<SubspaceRec> {
    ensure!(k >= 1 && k <= n, "haar_subspace needs 1 <= k <= n, got n={n}, k={k}");
    let mut rng = rng_for(seed, 0);
    let g = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    SubspaceRec::new(orthonormal_columns(&g))
}

/// Uniform sample from `body`: exact when a stochastic representation is known, otherwise
/// hit-and-run with `config`.
pub fn sample_uniform(body: &BodyExpr, config: &ChainConfig, count: usize) -> Result<SampleBatch> {
    if has_exact_sampler(body) && config.start.is_none() {
        return exact_sample(body, count, config.seed);
    }
    hit_and_run(body, config, count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_points_are_unit() {
        let pts = sphere_sample(7, 500, 3);
        assert!(pts.iter().all(|p| (norm2(p) - 1.0).abs() < 1e-12));
        assert_eq!(pts, sphere_sample(7, 500, 3));
        let m1: f64 = pts.iter().map(|p| p[0] * p[0]).sum::<f64>() / 500.0;
        // E θ₁² = 1/n, sd of θ₁² is about sqrt(2/(n(n+2)))
        assert!((m1 - 1.0 / 7.0).abs() < 3.0 * (2.0f64 / 63.0).sqrt() / 500f64.sqrt());
    }

    #[test]
    fn haar_subspaces() {
        let full = haar_subspace(5, 5, 1).unwrap();
        assert_eq!(full.complement().ncols(), 0);
        assert!(haar_subspace(3, 4, 1).is_err());
        let a = haar_subspace(8, 4, 1).unwrap();
        let b = haar_subspace(8, 4, 2).unwrap();
        let cos = (a.basis().transpose() * b.basis()).singular_values();
        assert!(cos.iter().all(|c| c.is_finite() && *c < 1.0 + 1e-12));
    }

    #[test]
    fn haar_projection_law() {
        // |first basis column · e₁|² ~ Beta(1/2, (n−1)/2), mean 1/n
        let n = 6;
        let trials = 10_000;
        let mean = (0..trials)
            .map(|s| haar_subspace(n, 2, derive_seed(11, s)).unwrap().basis()[(0, 0)].powi(2))
            .sum::<f64>()
            / trials as f64;
        assert!((mean - 1.0 / n as f64).abs() < 0.05 / n as f64, "{mean}");
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
