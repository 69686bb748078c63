//! Norm algebra on randomly generated bodies from the expression grammar.

mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn norm_is_homogeneous((b, p) in body_with_points(1), t in scalar()) {
        homogeneity(&b, &p[0], t).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn norm_is_subadditive((b, p) in body_with_points(2)) {
        triangle(&b, &p[0], &p[1]).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn norm_and_dual_norm_pair((b, p) in body_with_points(2)) {
        duality_pairing(&b, &p[0], &p[1]).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn double_polar_is_identity((b, p) in body_with_points(1)) {
        bipolarity(&b, &p[0]).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn firey_self_sum_shrinks_by_root_two((b, p) in body_with_points(1)) {
        firey_self_sum(&b, &p[0]).map_err(TestCaseError::fail)?;
    }
}
