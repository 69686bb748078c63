use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::linalg::{complement_basis, max_abs_diff, orthonormal_columns, singular_values};

/// An invertible linear map with its inverse and determinant cached. Serialises as its matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DMatrix<f64>", into = "DMatrix<f64>")]
pub struct LinearMapRec {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    det: f64,
    sigma_min: f64,
    sigma_max: f64,
}

impl TryFrom<DMatrix<f64>> for LinearMapRec {
    type Error = crate::error::Error;

    fn try_from(m: DMatrix<f64>) -> Result<Self> {
        Self::new(m)
    }
}

impl From<LinearMapRec> for DMatrix<f64> {
    fn from(t: LinearMapRec) -> Self {
        t.matrix
    }
}

impl LinearMapRec {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        ensure!(matrix.is_square() && matrix.nrows() > 0, "linear map must be square and non-empty");
        ensure!(matrix.iter().all(|v| v.is_finite()), "linear map has non-finite entries");
        let det = matrix.determinant();
        ensure!(det != 0.0 && det.is_finite(), "linear map is singular (det = {det})");
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| crate::error::contract("linear map is not invertible"))?;
        let n = matrix.nrows();
        let err = max_abs_diff(&(&matrix * &inverse), &DMatrix::identity(n, n));
        ensure!(err <= 1e-8, "linear map is too ill-conditioned: |T T^-1 - I| = {err:.2e}");
        let sv = singular_values(&matrix);
        Ok(Self {
            sigma_min: sv.min(),
            sigma_max: sv.max(),
            matrix,
            inverse,
            det,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n)).expect("identity is invertible")
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)))
    }

    pub fn scalar(n: usize, s: f64) -> Result<Self> {
        Self::new(DMatrix::identity(n, n) * s)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn singular_range(&self) -> (f64, f64) {
        (self.sigma_min, self.sigma_max)
    }

    pub fn condition_number(&self) -> f64 {
        self.sigma_max / self.sigma_min
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &LinearMapRec) -> Result<Self> {
        Self::new(&self.matrix * &other.matrix)
    }

    pub fn inverted(&self) -> Self {
        Self {
            matrix: self.inverse.clone(),
            inverse: self.matrix.clone(),
            det: 1.0 / self.det,
            sigma_min: 1.0 / self.sigma_max,
            sigma_max: 1.0 / self.sigma_min,
        }
    }
}

/// A k-dimensional subspace of Rⁿ given by an orthonormal basis (n×k), with a cached
/// orthonormal basis of its complement.
#[derive(Debug, Clone)]
pub struct SubspaceRec {
    basis: DMatrix<f64>,
    complement: DMatrix<f64>,
}

impl SubspaceRec {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let (n, k) = basis.shape();
        ensure!(k >= 1 && k <= n, "subspace basis must be n×k with 1 <= k <= n, got {n}×{k}");
        let err = max_abs_diff(&(basis.transpose() * &basis), &DMatrix::identity(k, k));
        ensure!(err <= 1e-10, "subspace basis is not orthonormal (error {err:.2e})");
        let complement = complement_basis(&basis);
        Ok(Self { basis, complement })
    }

    /// Orthonormalise an arbitrary full-rank n×k spanning set.
    pub fn from_spanning(a: &DMatrix<f64>) -> Result<Self> {
        let (n, k) = a.shape();
        ensure!(k >= 1 && k <= n, "spanning set must be n×k with 1 <= k <= n");
        let sv = singular_values(a);
        ensure!(sv.min() > 1e-10 * sv.max(), "spanning set is rank deficient");
        Self::new(orthonormal_columns(a))
    }

    pub fn coordinate(n: usize, k: usize) -> Result<Self> {
        ensure!(k >= 1 && k <= n, "coordinate subspace needs 1 <= k <= n");
        Self::new(DMatrix::identity(n, n).columns(0, k).into_owned())
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn complement(&self) -> &DMatrix<f64> {
        &self.complement
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_map_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(LinearMapRec::new(m).is_err());
    }

    #[test]
    fn non_orthonormal_basis_rejected() {
        let b = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 0.0]);
        assert!(SubspaceRec::new(b.clone()).is_err());
        let s = SubspaceRec::from_spanning(&b).unwrap();
        assert_eq!((s.ambient(), s.dim(), s.complement().ncols()), (3, 1, 2));
    }

    #[test]
    fn cached_inverse() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 3.0]);
        let t = LinearMapRec::new(m).unwrap();
        assert!((t.det() - 6.0).abs() < 1e-12);
        assert!(max_abs_diff(&(t.matrix() * t.inverse()), &DMatrix::identity(2, 2)) < 1e-12);
    }
}
