//! Geometric functionals of bodies: modulus of convexity, John/Löwner ellipsoids, extremal radii,
//! volume and mean widths.

mod ellipsoid;
mod extent;
mod modulus;
mod volume;
mod widths;

pub use ellipsoid::{
    analytic_ellipsoid, containment_ratio, coverage_ratio, john_ellipsoid, john_ellipsoid_with, loewner_ellipsoid,
    loewner_ellipsoid_with, JohnOptions, Which,
};
pub use extent::{b_max_norm, circumradius, diameter, half_width, inradius, power_ascent, sphere_max, structured_directions, SphereMax};
pub use modulus::{
    alpha_empirical, alpha_prime_empirical, alpha_prime_ratio, default_eps_grid, modulus_estimate, modulus_profile,
    ModulusEstimate,
};
pub use volume::{santalo_product, volume, volume_multiphase, volume_radial, VolumeEstimate, VolumeMethod};
pub use widths::{mean_widths, MeanWidths};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::linalg::{max_abs_diff, sym_eigen, sym_pow, symmetrize};
use crate::stats::ln_ball_volume;

/// The ellipsoid `{M u : |u| ≤ 1}` for a symmetric positive-definite `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidRec {
    shape: DMatrix<f64>,
    logvol: f64,
}

impl EllipsoidRec {
    pub fn new(shape: DMatrix<f64>) -> Result<Self> {
        ensure!(shape.is_square() && shape.nrows() >= 1, "ellipsoid shape must be square");
        let scale = shape.abs().max().max(1e-300);
        ensure!(
            max_abs_diff(&shape, &shape.transpose()) <= 1e-10 * scale.max(1.0),
            "ellipsoid shape is not symmetric"
        );
        let shape = symmetrize(&shape);
        let (vals, _) = sym_eigen(&shape);
        ensure!(vals[0] > 0.0, "ellipsoid shape is not positive definite (min eigenvalue {:.3e})", vals[0]);
        let logvol = ln_ball_volume(shape.nrows()) + vals.iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self { shape, logvol })
    }

    pub fn ball(n: usize, radius: f64) -> Result<Self> {
        Self::new(DMatrix::identity(n, n) * radius)
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    pub fn logvol(&self) -> f64 {
        self.logvol
    }

    pub fn dim(&self) -> usize {
        self.shape.nrows()
    }

    /// Semi-axis lengths, ascending.
    pub fn semi_axes(&self) -> Vec<f64> {
        sym_eigen(&self.shape).0.iter().copied().collect()
    }

    /// The polar ellipsoid `{M⁻¹ u}`.
    pub fn polar(&self) -> Self {
        let inv = sym_pow(&self.shape, -1.0, 0.0);
        Self::new(inv).expect("inverse of a positive-definite matrix")
    }

    /// The image under a linear map `T`: shape `(T M² Tᵀ)^{1/2}`.
    pub fn image(&self, t: &DMatrix<f64>) -> Result<Self> {
        let m2 = t * &self.shape * &self.shape * t.transpose();
        Self::new(sym_pow(&symmetrize(&m2), 0.5, 0.0))
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        crate::csvio::write_matrix_csv(out, &self.shape)
    }
}
