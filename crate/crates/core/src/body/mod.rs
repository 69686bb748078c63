//! Body expressions: centrally symmetric convex bodies built from closed-form leaves and
//! norm-preserving combinators.

mod attrs;
mod eval;
mod gauge;
mod grammar;
mod records;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{ensure, Result};
use crate::linalg::{max_abs_diff, sym_eigen, symmetrize};

pub use attrs::{ln_lp_volume, revolution_moments, AnalyticAttrs, AttrOptions, RevolutionMoments, NORDLANDER_CAP};
pub(crate) use eval::conjugate;
pub use eval::{Side, SOLVER_GAP_TOL};
pub use gauge::{fd_subgradient, gauge_bisection, support_ascent};
pub use grammar::{parse_body, parse_body_in};
pub use records::{LinearMapRec, SubspaceRec};

/// Node payload of a [`BodyExpr`].
#[derive(Debug)]
pub enum BodyKind {
    /// Unit ball of ℓ_p^n, `p` in `[1, ∞]` (∞ is stored as `f64::INFINITY`).
    Lp { n: usize, p: f64 },
    /// Unit ball of the Schatten-p norm on real m×m matrices, flattened row-major.
    Schatten { m: usize, p: f64 },
    /// `{x : xᵀ A x ≤ 1}`.
    Ellipsoid { a: DMatrix<f64>, a_inv: DMatrix<f64> },
    /// Revolution of the lens `T` (intersection of the disks of radius √2 centred at `(0, ±1)`)
    /// about the last coordinate axis.
    Revolution { n: usize },
    LinearImage { map: LinearMapRec, child: BodyExpr },
    /// `child ∩ E`, expressed in the coordinates of the basis of `E`.
    Section { space: SubspaceRec, child: BodyExpr },
    /// Orthogonal projection of `child` onto `E`, in the coordinates of the basis of `E`.
    Projection { space: SubspaceRec, child: BodyExpr },
    FireySum(Vec<BodyExpr>),
    FireyIntersection(Vec<BodyExpr>),
    Polar(BodyExpr),
    Scale { lambda: f64, child: BodyExpr },
}

#[derive(Debug)]
struct Node {
    kind: BodyKind,
    dim: usize,
    r_in: f64,
    r_out: f64,
    label: Option<String>,
}

/// An immutable, cheaply clonable body expression.
#[derive(Debug, Clone)]
pub struct BodyExpr(Arc<Node>);

fn crude_lp_radii(n: usize, p: f64) -> (f64, f64) {
    let e = 0.5 - 1.0 / p;
    let n = n as f64;
    (n.powf(e.min(0.0)), n.powf(e.max(0.0)))
}

fn check_p(p: f64) -> Result<()> {
    ensure!(p >= 1.0 && !p.is_nan(), "p must lie in [1, inf], got {p}");
    Ok(())
}

fn check_children(children: &[BodyExpr]) -> Result<usize> {
    ensure!(!children.is_empty(), "Firey combination needs at least one body");
    let n = children[0].dim();
    ensure!(
        children.iter().all(|c| c.dim() == n),
        "Firey combination of bodies with different dimensions"
    );
    Ok(n)
}

impl BodyExpr {
    fn from_kind(kind: BodyKind, dim: usize, r_in: f64, r_out: f64) -> Self {
        BodyExpr(Arc::new(Node { kind, dim, r_in, r_out, label: None }))
    }

    pub fn lp(n: usize, p: f64) -> Result<Self> {
        ensure!(n >= 1, "dimension must be positive");
        check_p(p)?;
        let (r, big_r) = crude_lp_radii(n, p);
        Ok(Self::from_kind(BodyKind::Lp { n, p }, n, r, big_r))
    }

    pub fn l2(n: usize) -> Result<Self> {
        Self::lp(n, 2.0)
    }

    pub fn cube(n: usize) -> Result<Self> {
        Self::lp(n, f64::INFINITY)
    }

    pub fn schatten(m: usize, p: f64) -> Result<Self> {
        ensure!(m >= 1, "matrix size must be positive");
        check_p(p)?;
        let (r, big_r) = crude_lp_radii(m, p);
        Ok(Self::from_kind(BodyKind::Schatten { m, p }, m * m, r, big_r))
    }

    pub fn ellipsoid(a: DMatrix<f64>) -> Result<Self> {
        ensure!(a.is_square() && a.nrows() >= 1, "ellipsoid matrix must be square");
        ensure!(a.iter().all(|v| v.is_finite()), "ellipsoid matrix has non-finite entries");
        let scale = a.abs().max().max(1.0);
        ensure!(
            max_abs_diff(&a, &a.transpose()) <= 1e-10 * scale,
            "ellipsoid matrix is not symmetric"
        );
        let a = symmetrize(&a);
        let (vals, _) = sym_eigen(&a);
        let (lo, hi) = (vals[0], vals[vals.len() - 1]);
        ensure!(lo > 0.0 && lo > 1e-14 * hi, "ellipsoid matrix is not positive definite");
        let a_inv = symmetrize(&a.clone().try_inverse().expect("positive definite"));
        let n = a.nrows();
        Ok(Self::from_kind(
            BodyKind::Ellipsoid { a, a_inv },
            n,
            1.0 / hi.sqrt(),
            1.0 / lo.sqrt(),
        ))
    }

    pub fn ellipsoid_diag(diag: &[f64]) -> Result<Self> {
        Self::ellipsoid(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)))
    }

    pub fn revolution(n: usize) -> Result<Self> {
        ensure!(n >= 2, "revolution body needs n >= 2");
        Ok(Self::from_kind(BodyKind::Revolution { n }, n, std::f64::consts::SQRT_2 - 1.0, 1.0))
    }

    pub fn linear_image(map: LinearMapRec, child: BodyExpr) -> Result<Self> {
        ensure!(
            map.dim() == child.dim(),
            "linear map is {}×{} but body has dimension {}",
            map.dim(),
            map.dim(),
            child.dim()
        );
        let (smin, smax) = map.singular_range();
        let (r, big_r) = (child.r_in() * smin, child.r_out() * smax);
        let n = child.dim();
        Ok(Self::from_kind(BodyKind::LinearImage { map, child }, n, r, big_r))
    }

    pub fn section(space: SubspaceRec, child: BodyExpr) -> Result<Self> {
        ensure!(
            space.ambient() == child.dim(),
            "subspace lives in R^{} but body has dimension {}",
            space.ambient(),
            child.dim()
        );
        let (r, big_r, k) = (child.r_in(), child.r_out(), space.dim());
        Ok(Self::from_kind(BodyKind::Section { space, child }, k, r, big_r))
    }

    pub fn projection(space: SubspaceRec, child: BodyExpr) -> Result<Self> {
        ensure!(
            space.ambient() == child.dim(),
            "subspace lives in R^{} but body has dimension {}",
            space.ambient(),
            child.dim()
        );
        let (r, big_r, k) = (child.r_in(), child.r_out(), space.dim());
        Ok(Self::from_kind(BodyKind::Projection { space, child }, k, r, big_r))
    }

    pub fn firey_sum(children: Vec<BodyExpr>) -> Result<Self> {
        let n = check_children(&children)?;
        let r = children.iter().map(|c| c.r_in().powi(2)).sum::<f64>().sqrt();
        let big_r = children.iter().map(|c| c.r_out().powi(2)).sum::<f64>().sqrt();
        Ok(Self::from_kind(BodyKind::FireySum(children), n, r, big_r))
    }

    pub fn firey_intersection(children: Vec<BodyExpr>) -> Result<Self> {
        let n = check_children(&children)?;
        let r = 1.0 / children.iter().map(|c| c.r_in().powi(-2)).sum::<f64>().sqrt();
        let big_r = 1.0 / children.iter().map(|c| c.r_out().powi(-2)).sum::<f64>().sqrt();
        Ok(Self::from_kind(BodyKind::FireyIntersection(children), n, r, big_r))
    }

    pub fn polar(child: BodyExpr) -> Self {
        let (n, r, big_r) = (child.dim(), 1.0 / child.r_out(), 1.0 / child.r_in());
        Self::from_kind(BodyKind::Polar(child), n, r, big_r)
    }

    pub fn scale(lambda: f64, child: BodyExpr) -> Result<Self> {
        ensure!(lambda > 0.0 && lambda.is_finite(), "scale factor must be positive, got {lambda}");
        let (n, r, big_r) = (child.dim(), child.r_in() * lambda, child.r_out() * lambda);
        Ok(Self::from_kind(BodyKind::Scale { lambda, child }, n, r, big_r))
    }

    /// Attach a display label (used for bodies read from files).
    pub fn with_label(self, label: impl Into<String>) -> Self {
        let node = Arc::try_unwrap(self.0).unwrap_or_else(|arc| Node {
            kind: clone_kind(&arc.kind),
            dim: arc.dim,
            r_in: arc.r_in,
            r_out: arc.r_out,
            label: None,
        });
        BodyExpr(Arc::new(Node { label: Some(label.into()), ..node }))
    }

    pub fn kind(&self) -> &BodyKind {
        &self.0.kind
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.0.dim
    }

    /// Crude inner radius: `r_in · D ⊂ K`.
    pub fn r_in(&self) -> f64 {
        self.0.r_in
    }

    /// Crude outer radius: `K ⊂ r_out · D`.
    pub fn r_out(&self) -> f64 {
        self.0.r_out
    }

    /// Grammar-style descriptor; matrices read from files print their file name.
    pub fn descriptor(&self) -> String {
        self.to_string()
    }
}

fn clone_kind(k: &BodyKind) -> BodyKind {
    match k {
        BodyKind::Lp { n, p } => BodyKind::Lp { n: *n, p: *p },
        BodyKind::Schatten { m, p } => BodyKind::Schatten { m: *m, p: *p },
        BodyKind::Ellipsoid { a, a_inv } => BodyKind::Ellipsoid { a: a.clone(), a_inv: a_inv.clone() },
        BodyKind::Revolution { n } => BodyKind::Revolution { n: *n },
        BodyKind::LinearImage { map, child } => BodyKind::LinearImage { map: map.clone(), child: child.clone() },
        BodyKind::Section { space, child } => BodyKind::Section { space: space.clone(), child: child.clone() },
        BodyKind::Projection { space, child } => BodyKind::Projection { space: space.clone(), child: child.clone() },
        BodyKind::FireySum(c) => BodyKind::FireySum(c.clone()),
        BodyKind::FireyIntersection(c) => BodyKind::FireyIntersection(c.clone()),
        BodyKind::Polar(c) => BodyKind::Polar(c.clone()),
        BodyKind::Scale { lambda, child } => BodyKind::Scale { lambda: *lambda, child: child.clone() },
    }
}

fn fmt_p(p: f64) -> String {
    if p.is_infinite() {
        "inf".to_string()
    } else {
        format!("{p}")
    }
}

fn fmt_list(f: &mut fmt::Formatter<'_>, name: &str, children: &[BodyExpr]) -> fmt::Result {
    write!(f, "{name}(")?;
    for (i, c) in children.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{c}")?;
    }
    write!(f, ")")
}

impl fmt::Display for BodyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = self.0.label.as_deref();
        let src = |default: String| label.map(str::to_string).unwrap_or(default);
        match self.kind() {
            BodyKind::Lp { n, p } => write!(f, "lp(n={n}, p={})", fmt_p(*p)),
            BodyKind::Schatten { m, p } => write!(f, "schatten(m={m}, p={})", fmt_p(*p)),
            BodyKind::Ellipsoid { a, .. } => {
                let diag = DMatrix::from_diagonal(&a.diagonal());
                if max_abs_diff(a, &diag) == 0.0 {
                    let d: Vec<String> = a.diagonal().iter().map(|v| format!("{v}")).collect();
                    write!(f, "ellipsoid(diag=[{}])", d.join(","))
                } else {
                    write!(f, "ellipsoid(matrix={})", src(format!("<{}x{}>", a.nrows(), a.ncols())))
                }
            }
            BodyKind::Revolution { n } => write!(f, "revolution(n={n})"),
            BodyKind::LinearImage { map, child } => {
                write!(f, "linimg(matrix={}, {child})", src(format!("<{0}x{0}>", map.dim())))
            }
            BodyKind::Section { space, child } => write!(
                f,
                "section(basis={}, {child})",
                src(format!("<{}x{}>", space.ambient(), space.dim()))
            ),
            BodyKind::Projection { space, child } => write!(
                f,
                "project(basis={}, {child})",
                src(format!("<{}x{}>", space.ambient(), space.dim()))
            ),
            BodyKind::FireySum(c) => fmt_list(f, "fsum", c),
            BodyKind::FireyIntersection(c) => fmt_list(f, "fint", c),
            BodyKind::Polar(c) => write!(f, "polar({c})"),
            BodyKind::Scale { lambda, child } => write!(f, "scale({lambda}, {child})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_propagate() {
        let s = BodyExpr::schatten(3, 1.5).unwrap();
        assert_eq!(s.dim(), 9);
        let e = SubspaceRec::coordinate(9, 4).unwrap();
        assert_eq!(BodyExpr::section(e.clone(), s.clone()).unwrap().dim(), 4);
        assert_eq!(BodyExpr::projection(e, s).unwrap().dim(), 4);
    }

    #[test]
    fn mismatched_dims_rejected() {
        let a = BodyExpr::lp(3, 1.5).unwrap();
        let b = BodyExpr::lp(4, 1.5).unwrap();
        assert!(BodyExpr::firey_sum(vec![a.clone(), b]).is_err());
        assert!(BodyExpr::firey_sum(vec![]).is_err());
        assert!(BodyExpr::linear_image(LinearMapRec::identity(2), a.clone()).is_err());
        assert!(BodyExpr::scale(-1.0, a).is_err());
        assert!(BodyExpr::lp(3, 0.5).is_err());
    }

    #[test]
    fn crude_radii() {
        let cube = BodyExpr::cube(4).unwrap();
        assert_eq!((cube.r_in(), cube.r_out()), (1.0, 2.0));
        let p = BodyExpr::polar(cube);
        assert_eq!((p.r_in(), p.r_out()), (0.5, 1.0));
        let e = BodyExpr::ellipsoid_diag(&[4.0, 1.0]).unwrap();
        assert_eq!((e.r_in(), e.r_out()), (0.5, 1.0));
    }

    #[test]
    fn descriptor_round_trips_through_grammar() {
        let b = BodyExpr::firey_sum(vec![
            BodyExpr::lp(3, 1.5).unwrap(),
            BodyExpr::polar(BodyExpr::cube(3).unwrap()),
            BodyExpr::scale(2.0, BodyExpr::ellipsoid_diag(&[1.0, 2.0, 3.0]).unwrap()).unwrap(),
        ])
        .unwrap();
        let s = b.descriptor();
        assert_eq!(s, "fsum(lp(n=3, p=1.5), polar(lp(n=3, p=inf)), scale(2, ellipsoid(diag=[1,2,3])))");
        assert_eq!(parse_body(&s).unwrap().descriptor(), s);
    }
}
