//! Numerical laboratory for uniformly convex symmetric bodies: composable norm oracles, uniform
//! samplers, position solvers and estimators for isotropic constants, ψ₂ norms and marginals.

pub mod body;
pub mod csvio;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod marginals;
pub mod optim;
pub mod positions;
pub mod sampling;
pub mod stats;

pub use body::{AnalyticAttrs, BodyExpr, LinearMapRec, Side, SubspaceRec};
pub use error::{Error, Result};
pub use geometry::EllipsoidRec;
