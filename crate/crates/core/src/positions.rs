//! Covariance estimation, isotropic transforms, the isotropic constant and position reports.
//!
//! `L_K` is reported as the root normalisation `L̂ = det(Σ̂)^{1/(2n)} / |K|^{1/n}`, so the cube has
//! `L = 1/√12` and a volume-1 isotropic body has covariance `L̂² I`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::body::{BodyExpr, LinearMapRec};
use crate::error::{ensure, numeric, Error, Result};
use crate::geometry::{b_max_norm, circumradius, john_ellipsoid, loewner_ellipsoid, mean_widths, volume, VolumeEstimate};
use crate::linalg::{dot, sym_eigen};
use crate::sampling::{derive_seed, sample_uniform, ChainConfig, SampleBatch};
use crate::stats::{ln_ball_volume, mean_se};

pub const DEFAULT_SAMPLE_SIZE: usize = 200_000;
pub const DEFAULT_DIRS: usize = 4_000;
/// Relative standard error asked of the volume estimator when no closed form exists.
pub const VOLUME_REL_ERR: f64 = 2e-3;
const JACKKNIFE_GROUPS: usize = 20;
const EIGEN_FLOOR: f64 = 1e-12;
const ELLIPSOID_TOL: f64 = 1e-6;
const EXTENT_RESTARTS: usize = 20;
const VOLUME_TAG: u64 = 0x766f6c;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PositionTag {
    Raw,
    Isotropic,
    John,
    Loewner,
}

impl fmt::Display for PositionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PositionTag::Raw => "RAW",
            PositionTag::Isotropic => "ISOTROPIC",
            PositionTag::John => "JOHN",
            PositionTag::Loewner => "LOEWNER",
        })
    }
}

impl FromStr for PositionTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(PositionTag::Raw),
            "iso" | "isotropic" => Ok(PositionTag::Isotropic),
            "john" => Ok(PositionTag::John),
            "loewner" | "lowner" => Ok(PositionTag::Loewner),
            _ => Err(Error::Parse(format!("unknown position tag '{s}' (raw|iso|john|loewner)"))),
        }
    }
}

/// Second-moment matrix `(1/N) Σ x xᵀ`: the unbiased covariance when the mean is known to be 0.
pub fn covariance(batch: &SampleBatch) -> Result<DMatrix<f64>> {
    let n = batch.dim();
    ensure!(batch.count() > n, "covariance needs more than n = {n} points, got {}", batch.count());
    Ok(scatter(batch, 0, batch.count()) / batch.count() as f64)
}

/// Unnormalised scatter `Σ x xᵀ` over points `lo..hi`.
fn scatter(batch: &SampleBatch, lo: usize, hi: usize) -> DMatrix<f64> {
    let n = batch.dim();
    let mut s = DMatrix::zeros(n, n);
    for i in lo..hi {
        let x = batch.point(i);
        for a in 0..n {
            let xa = x[a];
            for b in a..n {
                s[(a, b)] += xa * x[b];
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            s[(a, b)] = s[(b, a)];
        }
    }
    s
}

fn ln_det_spd(m: &DMatrix<f64>) -> Result<f64> {
    let (vals, _) = sym_eigen(m);
    let floor = EIGEN_FLOOR * m.trace();
    if vals[0] <= floor {
        return Err(numeric("covariance log-determinant (smallest eigenvalue)", vals[0]));
    }
    Ok(vals.iter().map(|v| v.ln()).sum())
}

/// `ln L̂ = ln det(Σ)/(2n) − ln|K|/n`.
fn ln_l_hat(cov: &DMatrix<f64>, ln_vol: f64) -> Result<f64> {
    let n = cov.nrows() as f64;
    Ok(ln_det_spd(cov)? / (2.0 * n) - ln_vol / n)
}

/// Leave-one-group-out jackknife standard error of `ln L̂` (volume held fixed).
fn jackknife_ln_l(batch: &SampleBatch, ln_vol: f64) -> Result<f64> {
    let count = batch.count();
    let g = JACKKNIFE_GROUPS.min(count / (batch.dim() + 1)).max(2);
    let bounds: Vec<usize> = (0..=g).map(|k| k * count / g).collect();
    let parts: Vec<DMatrix<f64>> = (0..g).map(|k| scatter(batch, bounds[k], bounds[k + 1])).collect();
    let total: DMatrix<f64> = parts.iter().fold(DMatrix::zeros(batch.dim(), batch.dim()), |a, b| a + b);
    let mut vals = Vec::with_capacity(g);
    for k in 0..g {
        let m = count - (bounds[k + 1] - bounds[k]);
        vals.push(ln_l_hat(&((&total - &parts[k]) / m as f64), ln_vol)?);
    }
    let mean = vals.iter().sum::<f64>() / g as f64;
    let ss: f64 = vals.iter().map(|v| (v - mean).powi(2)).sum();
    Ok((ss * (g as f64 - 1.0) / g as f64).sqrt())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsotropicTransform {
    pub map: LinearMapRec,
    pub l_hat: f64,
    pub cov_used: DMatrix<f64>,
    pub sample_size: usize,
    pub volume: VolumeEstimate,
}

/// `T = s Σ̂^{−1/2}` with `s = L̂`, so that `|T(K)| = 1` and `Cov(T(K)) = L̂² I`.
pub fn isotropic_transform(body: &BodyExpr, batch: &SampleBatch) -> Result<IsotropicTransform> {
    ensure!(batch.dim() == body.dim(), "batch dimension {} does not match body dimension {}", batch.dim(), body.dim());
    let vol = volume(body, VOLUME_REL_ERR, derive_seed(batch.config.seed, VOLUME_TAG))?;
    isotropic_transform_with(batch, vol)
}

/// As `isotropic_transform` with a precomputed volume of the body.
pub fn isotropic_transform_with(batch: &SampleBatch, vol: VolumeEstimate) -> Result<IsotropicTransform> {
    let cov = covariance(batch)?;
    let l_hat = ln_l_hat(&cov, vol.ln_value)?.exp();
    let (vals, vecs) = sym_eigen(&cov);
    let floor = EIGEN_FLOOR * cov.trace();
    let d = DMatrix::from_diagonal(&vals.map(|v| l_hat / v.max(floor).sqrt()));
    let map = LinearMapRec::new(&vecs * d * vecs.transpose())?;
    Ok(IsotropicTransform { map, l_hat, cov_used: cov, sample_size: batch.count(), volume: vol })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IsotropicConstant {
    pub value: f64,
    /// Jackknife over the sample combined with the volume estimator's error.
    pub se: f64,
    pub sample_size: usize,
}

/// `L̂` of the body behind `batch` given `ln |K|` and its standard error.
pub fn isotropic_constant_of(batch: &SampleBatch, ln_vol: f64, ln_vol_se: f64) -> Result<IsotropicConstant> {
    let cov = covariance(batch)?;
    let n = batch.dim() as f64;
    let value = ln_l_hat(&cov, ln_vol)?.exp();
    let jk = jackknife_ln_l(batch, ln_vol)?;
    let se = value * (jk * jk + (ln_vol_se / n).powi(2)).sqrt();
    Ok(IsotropicConstant { value, se, sample_size: batch.count() })
}

pub fn isotropic_constant(body: &BodyExpr, sample_size: usize, seed: u64) -> Result<IsotropicConstant> {
    let batch = sample_uniform(body, &ChainConfig::new(seed), sample_size)?;
    let vol = volume(body, VOLUME_REL_ERR, derive_seed(seed, VOLUME_TAG))?;
    isotropic_constant_of(&batch, vol.ln_value, vol.ln_se)
}

/// A body moved into a position and rescaled to volume 1 (up to the volume estimate).
#[derive(Debug, Clone)]
pub struct Placement {
    pub tag: PositionTag,
    pub body: BodyExpr,
    /// The placing map: `body = map(K)`.
    pub map: LinearMapRec,
    /// `ln |body|` and its standard error, carried over from the volume of `K`.
    pub ln_volume: f64,
    pub ln_volume_se: f64,
}

/// Place `body` in position `tag` with volume 1. The isotropic position draws `sample_size`
/// points for the covariance.
pub fn place(body: &BodyExpr, tag: PositionTag, sample_size: usize, seed: u64) -> Result<Placement> {
    let n = body.dim();
    let nf = n as f64;
    let vol = volume(body, VOLUME_REL_ERR, derive_seed(seed, VOLUME_TAG))?;
    let map = match tag {
        PositionTag::Raw => LinearMapRec::scalar(n, (-vol.ln_value / nf).exp())?,
        PositionTag::Isotropic => {
            let batch = sample_uniform(body, &ChainConfig::new(derive_seed(seed, 1)), sample_size)?;
            isotropic_transform_with(&batch, vol.clone())?.map
        }
        PositionTag::John | PositionTag::Loewner => {
            let e = if tag == PositionTag::John {
                john_ellipsoid(body, ELLIPSOID_TOL)?
            } else {
                loewner_ellipsoid(body, ELLIPSOID_TOL)?
            };
            // |M⁻¹K| = |K| / det M
            let ln_det_m = e.logvol() - ln_ball_volume(n);
            let lambda = ((ln_det_m - vol.ln_value) / nf).exp();
            let inv = e.shape().clone().try_inverse().ok_or_else(|| numeric("ellipsoid shape inverse", 0.0))?;
            LinearMapRec::new(inv * lambda)?
        }
    };
    let ln_volume = vol.ln_value + map.det().abs().ln();
    let placed = if map.matrix().is_identity(0.0) {
        body.clone()
    } else {
        BodyExpr::linear_image(map.clone(), body.clone())?
    };
    Ok(Placement { tag, body: placed, map, ln_volume, ln_volume_se: vol.ln_se })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositionReport {
    pub tag: PositionTag,
    pub descriptor: String,
    pub dim: usize,
    pub sample_size: usize,
    pub dirs: usize,
    pub seed: u64,
    pub l_hat: f64,
    pub l_hat_se: f64,
    /// `1/b̂`; the sphere maximum is a lower bound on `b`, so this is an upper estimate.
    pub inradius_hat: f64,
    pub inradius_hat_se: f64,
    pub diam_hat: f64,
    pub diam_hat_se: f64,
    pub mstar_hat: f64,
    pub mstar_hat_se: f64,
    pub m2star_hat: f64,
    pub m2star_hat_se: f64,
    pub m_hat: f64,
    pub m_hat_se: f64,
    pub b_hat: f64,
    pub b_hat_se: f64,
    pub volrad: f64,
    pub volrad_se: f64,
    /// `(1/n) ∫|x|² dx` on the volume-1 placement.
    pub second_moment: f64,
    pub second_moment_se: f64,
    /// `∫|x| dx / √n` on the volume-1 placement.
    pub first_abs_moment: f64,
    pub first_abs_moment_se: f64,
}

impl PositionReport {
    pub const CSV_HEADER: [&'static str; 26] = [
        "tag", "descriptor", "dim", "sample_size", "dirs", "seed", "L_hat", "L_hat_se", "inradius_hat",
        "inradius_hat_se", "diam_hat", "diam_hat_se", "Mstar_hat", "Mstar_hat_se", "M2star_hat", "M2star_hat_se",
        "M_hat", "M_hat_se", "b_hat", "b_hat_se", "volrad", "volrad_se", "second_moment", "second_moment_se",
        "first_abs_moment", "first_abs_moment_se",
    ];

    /// One CSV row in `CSV_HEADER` order.
    pub fn csv_row(&self) -> Vec<String> {
        let nums = [
            self.l_hat,
            self.l_hat_se,
            self.inradius_hat,
            self.inradius_hat_se,
            self.diam_hat,
            self.diam_hat_se,
            self.mstar_hat,
            self.mstar_hat_se,
            self.m2star_hat,
            self.m2star_hat_se,
            self.m_hat,
            self.m_hat_se,
            self.b_hat,
            self.b_hat_se,
            self.volrad,
            self.volrad_se,
            self.second_moment,
            self.second_moment_se,
            self.first_abs_moment,
            self.first_abs_moment_se,
        ];
        let mut row = vec![
            self.tag.to_string(),
            self.descriptor.clone(),
            self.dim.to_string(),
            self.sample_size.to_string(),
            self.dirs.to_string(),
            self.seed.to_string(),
        ];
        row.extend(nums.iter().map(|v| v.to_string()));
        row
    }
}

/// Mean and batch-means standard error (20 contiguous batches, robust to chain correlation).
pub(crate) fn batch_mean_se(v: &[f64]) -> (f64, f64) {
    let g = 20.min(v.len());
    if g < 2 {
        return mean_se(v);
    }
    let means: Vec<f64> = (0..g)
        .map(|k| {
            let s = &v[k * v.len() / g..(k + 1) * v.len() / g];
            s.iter().sum::<f64>() / s.len() as f64
        })
        .collect();
    let (_, se) = mean_se(&means);
    (v.iter().sum::<f64>() / v.len() as f64, se)
}

/// Place the body, sample it, and fill every field of the report.
pub fn position_report(
    body: &BodyExpr,
    tag: PositionTag,
    sample_size: usize,
    dirs: usize,
    seed: u64,
) -> Result<PositionReport> {
    let placement = place(body, tag, sample_size, seed)?;
    report_for(&placement, sample_size, dirs, seed)
}

/// Report on an already placed body.
pub fn report_for(placement: &Placement, sample_size: usize, dirs: usize, seed: u64) -> Result<PositionReport> {
    let p = &placement.body;
    let n = p.dim();
    let nf = n as f64;
    let batch = sample_uniform(p, &ChainConfig::new(derive_seed(seed, 2)), sample_size)?;
    let l = isotropic_constant_of(&batch, placement.ln_volume, placement.ln_volume_se)?;
    let b = b_max_norm(p, EXTENT_RESTARTS, derive_seed(seed, 3))?.value;
    let diam = 2.0 * circumradius(p, EXTENT_RESTARTS, derive_seed(seed, 4))?.value;
    let w = mean_widths(p, dirs, derive_seed(seed, 5))?;
    let sq: Vec<f64> = batch.points().map(|x| dot(x, x) / nf).collect();
    let ab: Vec<f64> = batch.points().map(|x| dot(x, x).sqrt() / nf.sqrt()).collect();
    let (second_moment, second_moment_se) = batch_mean_se(&sq);
    let (first_abs_moment, first_abs_moment_se) = batch_mean_se(&ab);
    let ln_volrad = (placement.ln_volume - ln_ball_volume(n)) / nf;
    let volrad = ln_volrad.exp();
    Ok(PositionReport {
        tag: placement.tag,
        descriptor: p.descriptor(),
        dim: n,
        sample_size,
        dirs,
        seed,
        l_hat: l.value,
        l_hat_se: l.se,
        inradius_hat: 1.0 / b,
        inradius_hat_se: 0.0,
        diam_hat: diam,
        diam_hat_se: 0.0,
        mstar_hat: w.mstar,
        mstar_hat_se: w.mstar_se,
        m2star_hat: w.m2star,
        m2star_hat_se: w.m2star_se,
        m_hat: w.m,
        m_hat_se: w.m_se,
        b_hat: b,
        b_hat_se: 0.0,
        volrad,
        volrad_se: volrad * placement.ln_volume_se / nf,
        second_moment,
        second_moment_se,
        first_abs_moment,
        first_abs_moment_se,
    })
}
