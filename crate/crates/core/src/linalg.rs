//! Small dense helpers on top of nalgebra shared by the body algebra and the solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `y += s * x`
pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn matvec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.ncols(), x.len());
    let mut out = vec![0.0; m.nrows()];
    for (j, xj) in x.iter().enumerate() {
        if *xj == 0.0 {
            continue;
        }
        let col = m.column(j);
        for (o, c) in out.iter_mut().zip(col.iter()) {
            *o += c * xj;
        }
    }
    out
}

/// `mᵀ x`
pub fn matvec_t(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.nrows(), x.len());
    (0..m.ncols())
        .map(|j| m.column(j).iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// `m^power` for symmetric positive semi-definite `m`, with eigenvalues floored at `floor`.
pub fn sym_pow(m: &DMatrix<f64>, power: f64, floor: f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(m);
    let d = DVector::from_iterator(vals.len(), vals.iter().map(|v| v.max(floor).powf(power)));
    &vecs * DMatrix::from_diagonal(&d) * vecs.transpose()
}

/// Orthonormal basis of the column span of `a` (thin QR, signs fixed so the diagonal of R is positive).
pub fn orthonormal_columns(a: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = a.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Orthonormal basis of the orthogonal complement of the (orthonormal) columns of `q`.
pub fn complement_basis(q: &DMatrix<f64>) -> DMatrix<f64> {
    let n = q.nrows();
    let k = q.ncols();
    if k == n {
        return DMatrix::zeros(n, 0);
    }
    let p = DMatrix::identity(n, n) - q * q.transpose();
    let (vals, vecs) = sym_eigen(&p);
    let mut out = DMatrix::zeros(n, n - k);
    let mut c = 0;
    for i in (0..n).rev() {
        if c == n - k {
            break;
        }
        if vals[i] > 0.5 {
            out.set_column(c, &vecs.column(i));
            c += 1;
        }
    }
    out
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    m.clone().singular_values()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_is_orthogonal() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 0.0, 2.0, 3.0, -1.0]);
        let q = orthonormal_columns(&a);
        let c = complement_basis(&q);
        assert_eq!(c.ncols(), 2);
        assert!((q.transpose() * &c).amax() < 1e-12);
        assert!(max_abs_diff(&(c.transpose() * &c), &DMatrix::identity(2, 2)) < 1e-12);
    }

    #[test]
    fn sym_pow_inverts_square_root() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let h = sym_pow(&m, 0.5, 0.0);
        assert!(max_abs_diff(&(&h * &h), &m) < 1e-12);
        let hi = sym_pow(&m, -0.5, 0.0);
        assert!(max_abs_diff(&(&h * &hi), &DMatrix::identity(2, 2)) < 1e-12);
    }
}
