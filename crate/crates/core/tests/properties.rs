//! Property tests for the algebraic invariants of the link functions, the
//! aggregation pipeline, and the closed forms.

use proptest::prelude::*;

use orgutil_core::aggregation::{
    derive_org_utility, org_screening, polyarchy_closed_form, unanimity_closed_form,
    AggregationTree, Member,
};
use orgutil_core::logsumexp::lse_with_bounds;
use orgutil_core::risk::{
    certainty_equivalent, expected_utility, min_winning_probability, EvaluableUtility, Lottery,
    LotteryBranch,
};
use orgutil_core::utility::{
    screening_prob, utility_from_prob, OutcomeVector, Probability, UtilityExpr,
};

fn member_strategy() -> impl Strategy<Value = (f64, f64)> {
    // intercepts and strictly positive slopes on the scales the library is
    // used at
    (-5.0..5.0f64, 0.05..3.0f64)
}

fn members_from(params: &[(f64, f64)]) -> Vec<Member> {
    params
        .iter()
        .enumerate()
        .map(|(i, &(alpha, beta))| Member::new(format!("m{i}"), UtilityExpr::affine1(alpha, beta)))
        .collect()
}

proptest! {
    #[test]
    fn logit_inverts_logistic_link(u in -30.0..30.0f64) {
        let p = screening_prob(&UtilityExpr::Constant { value: u }, &OutcomeVector::scalar(0.0))
            .unwrap();
        let back = utility_from_prob(p).unwrap();
        prop_assert!((back - u).abs() < 1e-9, "{u} -> {back}");
    }

    #[test]
    fn lse_sandwich(args in prop::collection::vec(-700.0..700.0f64, 1..=6)) {
        let r = lse_with_bounds(&args).unwrap();
        prop_assert!(r.lower <= r.lse + 1e-12);
        prop_assert!(r.lse <= r.upper + 1e-12);
    }

    #[test]
    fn closed_forms_match_pipeline(
        params in prop::collection::vec(member_strategy(), 2..=4),
        x in -10.0..10.0f64,
    ) {
        let members = members_from(&params);
        let exprs: Vec<UtilityExpr> = members.iter().map(|m| m.utility.clone()).collect();
        let and_org = derive_org_utility(&AggregationTree::unanimity_over(members.clone())).unwrap();
        let or_org = derive_org_utility(&AggregationTree::polyarchy_over(members)).unwrap();
        let point = OutcomeVector::scalar(x);
        let unan = unanimity_closed_form(&exprs).unwrap().eval1(x);
        let poly = polyarchy_closed_form(&exprs).unwrap().eval1(x);
        prop_assert!((unan - and_org.eval_pipeline(&point).unwrap()).abs() < 1e-8);
        prop_assert!((poly - or_org.eval_pipeline(&point).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn de_morgan_duality(
        params in prop::collection::vec((-4.0..4.0f64, -2.0..2.0f64), 2..=4),
        x in -6.0..6.0f64,
    ) {
        let members = members_from(&params);
        let negated: Vec<Member> = members
            .iter()
            .map(|m| Member::new(
                m.id.clone(),
                UtilityExpr::Negate { child: Box::new(m.utility.clone()) },
            ))
            .collect();
        let or = derive_org_utility(&AggregationTree::polyarchy_over(members)).unwrap();
        let and = derive_org_utility(&AggregationTree::unanimity_over(negated)).unwrap();
        let lhs = or.eval1(x).unwrap();
        let rhs = -and.eval1(x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn k_of_n_normalization(
        params in prop::collection::vec(member_strategy(), 2..=5),
        x in -10.0..10.0f64,
    ) {
        let members = members_from(&params);
        let n = members.len();
        let leaves: Vec<AggregationTree> =
            members.clone().into_iter().map(AggregationTree::Leaf).collect();
        let point = OutcomeVector::scalar(x);
        let p_and = org_screening(&AggregationTree::unanimity_over(members.clone()), &point)
            .unwrap()
            .value();
        let p_or =
            org_screening(&AggregationTree::polyarchy_over(members), &point).unwrap().value();
        let p_kn =
            org_screening(&AggregationTree::k_of_n(n, leaves.clone()), &point).unwrap().value();
        let p_k1 = org_screening(&AggregationTree::k_of_n(1, leaves), &point).unwrap().value();
        prop_assert!((p_and - p_kn).abs() < 1e-12);
        prop_assert!((p_or - p_k1).abs() < 1e-12);
    }

    #[test]
    fn and_associativity(
        a in member_strategy(),
        b in member_strategy(),
        c in member_strategy(),
        x in -10.0..10.0f64,
    ) {
        let m = |i: usize, (alpha, beta): (f64, f64)| {
            Member::new(format!("m{i}"), UtilityExpr::affine1(alpha, beta))
        };
        let nested = AggregationTree::and(vec![
            AggregationTree::Leaf(m(0, a)),
            AggregationTree::and(vec![AggregationTree::Leaf(m(1, b)), AggregationTree::Leaf(m(2, c))]),
        ]);
        let flat = AggregationTree::and(vec![
            AggregationTree::Leaf(m(0, a)),
            AggregationTree::Leaf(m(1, b)),
            AggregationTree::Leaf(m(2, c)),
        ]);
        let lhs = derive_org_utility(&nested).unwrap().eval1(x).unwrap();
        let rhs = derive_org_utility(&flat).unwrap().eval1(x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn screening_dominated_by_extremal_member(
        params in prop::collection::vec(member_strategy(), 2..=5),
        x in -10.0..10.0f64,
    ) {
        let members = members_from(&params);
        let point = OutcomeVector::scalar(x);
        let ps: Vec<f64> = members
            .iter()
            .map(|m| screening_prob(&m.utility, &point).unwrap().value())
            .collect();
        let min = ps.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = ps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s_and = org_screening(&AggregationTree::unanimity_over(members.clone()), &point)
            .unwrap()
            .value();
        let s_or =
            org_screening(&AggregationTree::polyarchy_over(members), &point).unwrap().value();
        prop_assert!(s_and <= min + 1e-15);
        prop_assert!(s_or >= max - 1e-15);
    }

    #[test]
    fn certainty_equivalent_consistent(
        params in prop::collection::vec(member_strategy(), 2..=3),
        win in 1.0..10.0f64,
        loss in -10.0..-1.0f64,
        p_win in 0.05..0.95f64,
    ) {
        let members = members_from(&params);
        let org = derive_org_utility(&AggregationTree::unanimity_over(members)).unwrap();
        let u = EvaluableUtility::from_org(org).unwrap();
        let lottery = Lottery::new(vec![
            LotteryBranch { outcome: win, prob: Probability::new(p_win).unwrap() },
            LotteryBranch { outcome: loss, prob: Probability::new(1.0 - p_win).unwrap() },
        ])
        .unwrap();
        let ce = certainty_equivalent(&u, &lottery).unwrap();
        let eu = expected_utility(&u, &lottery).unwrap();
        prop_assert!((u.eval(ce).unwrap() - eu).abs() < 1e-8);
        // degenerate lottery collapses to its only outcome
        let sure = Lottery::new(vec![LotteryBranch {
            outcome: win,
            prob: Probability::new(1.0).unwrap(),
        }])
        .unwrap();
        let ce_sure = certainty_equivalent(&u, &sure).unwrap();
        prop_assert!((ce_sure - win).abs() < 1e-8);
    }

    #[test]
    fn min_winning_probability_defining_equation(
        alpha in -3.0..3.0f64,
        beta in 0.05..2.0f64,
        win in 2.0..10.0f64,
        loss in -10.0..-2.0f64,
    ) {
        let u = EvaluableUtility::from_expr(UtilityExpr::affine1(alpha, beta)).unwrap();
        match min_winning_probability(&u, win, loss) {
            Ok(p) => {
                let p = p.value();
                let residual =
                    p * u.eval(win).unwrap() + (1.0 - p) * u.eval(loss).unwrap();
                prop_assert!(residual.abs() < 1e-10);
            }
            // degenerate bets are legitimately rejected when the sign
            // preconditions fail
            Err(_) => {
                let u_win = u.eval(win).unwrap();
                let u_loss = u.eval(loss).unwrap();
                prop_assert!(u_win <= 0.0 || u_loss >= 0.0);
            }
        }
    }
}
