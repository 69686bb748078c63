//! The claim registry: statement, default experiment and verdict predicates for every claim.

use serde_json::{json, Value};

use super::predicate::{Predicate, Scoped};
use super::ClaimId;

pub const DEFAULT_SEED: u64 = 20_240_601;
const DEFAULT_DIMS: [usize; 4] = [8, 16, 32, 64];

/// Drift allowed in the slope interval of one-sided flatness checks.
pub const DRIFT: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct RegistryEntry {
    pub id: ClaimId,
    pub statement: &'static str,
    pub bodies: Vec<&'static str>,
    pub dims: Vec<usize>,
    pub params: Vec<(&'static str, Value)>,
    pub predicates: Vec<Scoped>,
    /// Whether per-series log-log fits are computed.
    pub fit: bool,
}

fn flat(lo: Option<f64>, hi: Option<f64>) -> Scoped {
    Scoped::all(Predicate::Flat { max_ratio: 3.0, slope_lo: lo, slope_hi: hi })
}

fn at_most(bound: f64) -> Scoped {
    Scoped::all(Predicate::AtMost { bound, sigmas: 0.0 })
}

pub fn registry() -> Vec<RegistryEntry> {
    ClaimId::ALL.into_iter().map(entry).collect()
}

pub fn entry(id: ClaimId) -> RegistryEntry {
    let lp = "lp(n={n}, p={p})";
    let d = DEFAULT_DIMS.to_vec();
    let (statement, bodies, dims, mut params, predicates, fit) = match id {
        ClaimId::Hyperplane => (
            "Every central hyperplane section of an isotropic volume-one 2-convex body has volume at least c·sqrt(alpha); measured as max slab section times sqrt(alpha)",
            vec![lp],
            d,
            vec![("p", json!(1.5)), ("samples", json!(100_000)), ("dirs", json!(50)), ("slab", json!(0.1))],
            vec![flat(Some(-DRIFT), None)],
            true,
        ),
        ClaimId::FiniteVr => (
            "An isotropic volume-one 2-convex body contains c·sqrt(alpha)·sqrt(n)·D_n; measured as inradius / (sqrt(alpha)·r_n) with r_n the volume-one ball radius",
            vec![lp],
            d,
            vec![("p", json!([1.25, 1.5])), ("samples", json!(200_000)), ("groups", json!(4)), ("restarts", json!(20))],
            vec![flat(Some(0.0), Some(0.0))],
            true,
        ),
        ClaimId::LkBound => (
            "The isotropic constant of a 2-convex body is at most c/sqrt(alpha); measured as L_hat·sqrt(alpha) <= 1",
            vec![lp],
            d,
            vec![("p", json!([1.25, 1.5])), ("samples", json!(100_000))],
            vec![at_most(1.0)],
            true,
        ),
        ClaimId::Psi2Bounds => (
            "C1·h(theta)/sqrt(n) <= psi2(<.,theta>) <= C2·h(theta)/(sqrt(alpha)·sqrt(n)); c1 = min and c2 = max·sqrt(alpha) of psi2·sqrt(n)/h over directions",
            vec![lp],
            d,
            vec![("p", json!(1.5)), ("samples", json!(50_000)), ("dirs", json!(50))],
            vec![Scoped::all(Predicate::Spread { max_ratio: 3.0 })],
            true,
        ),
        ClaimId::RandomSection => (
            "A random floor(n/2)-dimensional section E of an isotropic 2-convex body contains c·sqrt(alpha)·sqrt(n)·(D_n ∩ E); measured as min over subspaces of inradius / (sqrt(alpha)·r_n)",
            vec![lp],
            d,
            vec![("p", json!(1.5)), ("samples", json!(100_000)), ("subspaces", json!(20)), ("restarts", json!(10))],
            vec![flat(Some(-DRIFT), Some(DRIFT))],
            true,
        ),
        ClaimId::Ovr2Smooth => (
            "A 2-smooth body with constant beta has outer volume ratio at most C·sqrt(beta); measured as (|Loewner|/|K|)^(1/n) / sqrt(beta)",
            vec!["polar(lp(n={n}, p={p}))"],
            d,
            vec![("p", json!([1.25, 1.5]))],
            vec![flat(None, Some(DRIFT))],
            true,
        ),
        ClaimId::FireyAlpha => (
            "2-Firey sums and intersections of 2-convex bodies are 2-convex with constant min(alpha_i)/8; measured as alpha_empirical / prediction >= 1",
            vec!["fsum(lp(n={n}, p=1.5), lp(n={n}, p=1.25))", "fint(lp(n={n}, p=1.5), scale(2, lp(n={n}, p=1.75)))"],
            vec![2, 4],
            vec![("restarts", json!(20))],
            vec![Scoped::all(Predicate::AtLeast { bound: 1.0, sigmas: 0.0 })],
            false,
        ),
        ClaimId::LqLk => (
            "Bodies built from l_p (1 < p <= 2) by subspaces, quotients and 2-Firey sums and intersections have L_K <= C·sqrt(q), q = p/(p-1); measured as L_hat/sqrt(q) <= 1",
            vec![lp],
            vec![4, 6, 8],
            vec![("p", json!(1.5)), ("samples", json!(1_000))],
            vec![at_most(1.0)],
            true,
        ),
        ClaimId::SchattenLk => (
            "Unit balls of Schatten classes S_p^m (1 < p <= 2) have L_K <= C·sqrt(q), q = p/(p-1); measured as L_hat/sqrt(q) <= 1",
            vec!["schatten(m={m}, p={p})"],
            vec![2, 3, 4],
            vec![("p", json!(1.5)), ("samples", json!(20_000))],
            vec![at_most(1.0)],
            true,
        ),
        ClaimId::JohnMstarb => (
            "In John position M*(K)·b(K) <= C/sqrt(alpha); measured as M*·b·sqrt(alpha) <= 4",
            vec![lp],
            d,
            vec![("p", json!(1.5)), ("dirs", json!(2_000)), ("restarts", json!(20))],
            vec![at_most(4.0)],
            true,
        ),
        ClaimId::InvFiniteVr => (
            "In John position (integral of |x|^2)^(1/2) <= C·sqrt(n)/alpha for a volume-one 2-convex body; measured as (integral |x|^2)^(1/2)·alpha / r_n",
            vec![lp],
            d,
            vec![("p", json!(1.5)), ("samples", json!(100_000))],
            vec![flat(None, Some(DRIFT))],
            true,
        ),
        ClaimId::EssIso => (
            "In John position the integral of |x| over a volume-one 2-convex body is at most C·M*(K)/sqrt(alpha); measured as (integral |x|)·sqrt(alpha) / M*",
            vec![lp],
            d,
            vec![("p", json!(1.5)), ("samples", json!(100_000)), ("dirs", json!(2_000))],
            vec![Scoped::all(Predicate::Spread { max_ratio: 3.0 })],
            true,
        ),
        ClaimId::CuspDiam => (
            "The isotropic volume-one image of the cusped body of revolution has diameter at least c·n; fitted log-log slope of the diameter in [0.85, 1.15]",
            vec!["revolution(n={n})"],
            d,
            vec![("samples", json!(100_000)), ("restarts", json!(20))],
            vec![
                Scoped::on("quadrature", Predicate::SlopeIn { lo: 0.85, hi: 1.15 }),
                Scoped::on("sampled", Predicate::Agree { reference: "quadrature".into(), rel_tol: 0.05 }),
            ],
            true,
        ),
        ClaimId::SmallDiam => (
            "In Loewner position with volume radius one, a 2-convex body has diameter at most (C/lambda)·n^(1/2 - lambda); upper end of the slope interval below 0.48",
            vec![lp, "revolution(n={n})"],
            d,
            vec![("p", json!(1.5)), ("restarts", json!(20))],
            vec![Scoped::all(Predicate::SlopeCiBelow { bound: 0.48 })],
            true,
        ),
        ClaimId::Shell => (
            "The mass outside the thin shell ||x|/sqrt(n) - rho| < eps·rho decreases with n",
            vec![lp],
            d,
            vec![("p", json!(1.5)), ("samples", json!(100_000)), ("eps", json!(0.05))],
            vec![Scoped::all(Predicate::Decreasing { sigmas: 3.0 })],
            true,
        ),
        ClaimId::GaussMarginals => (
            "Most one-dimensional marginals are approximately Gaussian: the median of H(theta) over random directions decreases strictly in n and is at most 0.1 at the largest n",
            vec![lp, "revolution(n={n})"],
            vec![16, 32, 64],
            vec![("p", json!(1.5)), ("samples", json!(100_000)), ("dirs", json!(100))],
            vec![Scoped::all(Predicate::Decreasing { sigmas: 0.0 }), Scoped::all(Predicate::LastAtMost { bound: 0.1 })],
            true,
        ),
        ClaimId::Tails => (
            "Directional tails satisfy P(<x,theta> > t) <= 2·exp(-2·alpha·n·(t/w)^2), w = h_K(theta); counted as 3-sigma violations over a t-grid",
            vec![lp],
            vec![16, 64],
            vec![("p", json!(1.5)), ("samples", json!(100_000)), ("dirs", json!(20)), ("t_points", json!(10))],
            vec![at_most(0.0)],
            false,
        ),
        ClaimId::Lipschitz => (
            "|x| concentrates around its median and mean at the rate 2·exp(-2·alpha·n·(t/d_K)^2) (and 4·exp for the mean); counted as 3-sigma violations",
            vec![lp],
            d,
            vec![("p", json!(1.5)), ("samples", json!(100_000))],
            vec![at_most(0.0)],
            false,
        ),
        ClaimId::Invariance => (
            "Symmetric-interval Gaussian discrepancies transform exactly under linear maps; max discrepancy times sqrt(N) at most 5",
            vec![lp],
            d,
            vec![("p", json!(1.5)), ("samples", json!(100_000)), ("dirs", json!(10)), ("t_points", json!(10))],
            vec![at_most(5.0)],
            false,
        ),
        ClaimId::Urysohn => (
            "1/M(K) <= VolRad(K) <= M*(K); counted as inequalities violated by more than 3 standard errors",
            vec!["lp(n={n}, p=1.5)", "lp(n={n}, p=inf)", "revolution(n={n})", "polar(revolution(n={n}))", "fsum(lp(n={n}, p=1.5), lp(n={n}, p=4))"],
            vec![4, 8, 16],
            vec![("dirs", json!(4_000))],
            vec![at_most(0.0)],
            false,
        ),
        ClaimId::Santalo => (
            "The Santalo product (|K|·|K°|/|D_n|^2)^(1/n) lies in [0.5, 1 + 1e-3] (upper end within 3 standard errors)",
            vec!["lp(n={n}, p=1.5)", "lp(n={n}, p=inf)", "revolution(n={n})", "polar(revolution(n={n}))", "fsum(lp(n={n}, p=1.5), lp(n={n}, p=4))"],
            vec![4, 8, 16],
            vec![("rel_err", json!(2e-3))],
            vec![
                Scoped::all(Predicate::AtMost { bound: 1.0 + 1e-3, sigmas: 3.0 }),
                Scoped::all(Predicate::AtLeast { bound: 0.5, sigmas: 0.0 }),
            ],
            false,
        ),
    };
    params.push(("reps", json!(1)));
    RegistryEntry { id, statement, bodies, dims, params, predicates, fit }
}
