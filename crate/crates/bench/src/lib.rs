//! Benchmark-only crate; shared fixtures for the criterion benches.

use orgutil_core::aggregation::{AggregationTree, Member};
use orgutil_core::utility::UtilityExpr;

/// The two-member organization used throughout the benches.
pub fn reference_members() -> Vec<Member> {
    vec![
        Member::new("A", UtilityExpr::affine1(5.0, 1.0)),
        Member::new("B", UtilityExpr::affine1(-5.0, 3.0)),
    ]
}

/// A k-of-n committee with staggered thresholds.
pub fn committee(n: usize, k: usize) -> AggregationTree {
    AggregationTree::k_of_n(
        k,
        (0..n)
            .map(|i| {
                AggregationTree::Leaf(Member::new(
                    format!("m{i}"),
                    UtilityExpr::affine1(i as f64 - n as f64 / 2.0, 0.5 + 0.1 * i as f64),
                ))
            })
            .collect(),
    )
}
