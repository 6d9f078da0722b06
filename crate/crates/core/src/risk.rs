//! Lottery evaluation under a 1-D utility (member or organizational):
//! expected utility, certainty equivalents, minimum winning probabilities,
//! and acceptance probability under the logistic noise convention.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::{monotone_on_grid, AggregationError, OrgUtility};
use crate::numeric;
use crate::utility::{Interval, Probability, UtilityError, UtilityExpr};

#[derive(Debug, Error, PartialEq)]
pub enum RiskError {
    #[error(transparent)]
    Utility(#[from] UtilityError),
    #[error(transparent)]
    Aggregation(#[from] AggregationError),
    #[error("lottery branch probabilities sum to {sum}, expected 1")]
    BranchProbabilities { sum: f64 },
    #[error("lottery needs at least one branch")]
    EmptyLottery,
    #[error("lottery outcome {outcome} must be finite")]
    NonFiniteOutcome { outcome: f64 },
    #[error("outcome {outcome} lies outside the evaluable domain [{lo}, {hi}]")]
    DomainExceeded { outcome: f64, lo: f64, hi: f64 },
    #[error("utility is not strictly monotone on its domain; certainty equivalent undefined")]
    NonMonotonicUtility,
    #[error("expected utility {eu} is outside the utility range over the (expanded) domain")]
    RangeExceeded { eu: f64 },
    #[error("degenerate bet: {0}")]
    DegenerateBet(BetDegeneracy),
    #[error("root refinement failed to reach tolerance")]
    NoConvergence,
}

/// The two ways a binary bet stops being a real decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetDegeneracy {
    /// `u(win) <= 0`: the bet is rejected at any winning probability.
    NeverAccepts,
    /// `u(loss) >= 0`: the bet is accepted at any winning probability.
    AlwaysAccepts,
}

impl std::fmt::Display for BetDegeneracy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BetDegeneracy::NeverAccepts => write!(f, "u(win) <= 0, never accepted"),
            BetDegeneracy::AlwaysAccepts => write!(f, "u(loss) >= 0, always accepted"),
        }
    }
}

/// One branch of a finite lottery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LotteryBranch {
    pub outcome: f64,
    pub prob: Probability,
}

/// Finite set of (outcome, probability) pairs with probabilities summing
/// to 1 within 1e-12.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LotteryRepr", into = "LotteryRepr")]
pub struct Lottery {
    branches: Vec<LotteryBranch>,
}

#[derive(Serialize, Deserialize)]
struct LotteryRepr {
    branches: Vec<LotteryBranch>,
}

impl TryFrom<LotteryRepr> for Lottery {
    type Error = RiskError;
    fn try_from(repr: LotteryRepr) -> Result<Self, Self::Error> {
        Lottery::new(repr.branches)
    }
}

impl From<Lottery> for LotteryRepr {
    fn from(l: Lottery) -> Self {
        LotteryRepr { branches: l.branches }
    }
}

impl Lottery {
    pub fn new(branches: Vec<LotteryBranch>) -> Result<Self, RiskError> {
        if branches.is_empty() {
            return Err(RiskError::EmptyLottery);
        }
        for b in &branches {
            if !b.outcome.is_finite() {
                return Err(RiskError::NonFiniteOutcome { outcome: b.outcome });
            }
        }
        let sum: f64 = branches.iter().map(|b| b.prob.value()).sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(RiskError::BranchProbabilities { sum });
        }
        Ok(Self { branches })
    }

    /// Even-odds binary bet paying `win` or `loss`.
    pub fn even_bet(win: f64, loss: f64) -> Self {
        let half = Probability::new(0.5).expect("0.5 is a probability");
        Self::new(vec![
            LotteryBranch { outcome: win, prob: half },
            LotteryBranch { outcome: loss, prob: half },
        ])
        .expect("even bet is a valid lottery")
    }

    pub fn branches(&self) -> &[LotteryBranch] {
        &self.branches
    }
}

/// Default root-finding domain for certainty equivalents.
const DEFAULT_DOMAIN: Interval = Interval { lo: -50.0, hi: 50.0 };

/// Grid used when detecting monotonicity of the wrapped utility.
const MONOTONICITY_GRID: usize = 2001;

enum UtilitySource {
    Expr(UtilityExpr),
    Org(OrgUtility),
}

/// A 1-D utility (raw expression or derived organizational utility)
/// together with the finite interval used for root finding. Monotonicity
/// over that interval is detected on construction and consulted by
/// [`certainty_equivalent`].
pub struct EvaluableUtility {
    source: UtilitySource,
    domain: Interval,
    monotone_increasing: Option<bool>,
}

impl EvaluableUtility {
    pub fn from_expr(expr: UtilityExpr) -> Result<Self, RiskError> {
        Self::from_expr_on(expr, DEFAULT_DOMAIN)
    }

    pub fn from_expr_on(expr: UtilityExpr, domain: Interval) -> Result<Self, RiskError> {
        expr.validate()?;
        // probe 1-D evaluability once
        expr.eval_slice(&[0.0])?;
        let mut out =
            Self { source: UtilitySource::Expr(expr), domain, monotone_increasing: None };
        out.monotone_increasing = out.detect_monotone();
        Ok(out)
    }

    pub fn from_org(org: OrgUtility) -> Result<Self, RiskError> {
        let domain = org.domain();
        Self::from_org_on(org, domain)
    }

    pub fn from_org_on(org: OrgUtility, domain: Interval) -> Result<Self, RiskError> {
        let mut out = Self { source: UtilitySource::Org(org), domain, monotone_increasing: None };
        out.monotone_increasing = out.detect_monotone();
        Ok(out)
    }

    fn detect_monotone(&self) -> Option<bool> {
        monotone_on_grid(|x| self.eval_unchecked(x).ok(), self.domain, MONOTONICITY_GRID)
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// `Some(true)` strictly increasing on the domain, `Some(false)`
    /// strictly decreasing, `None` neither.
    pub fn monotone_increasing(&self) -> Option<bool> {
        self.monotone_increasing
    }

    fn eval_unchecked(&self, x: f64) -> Result<f64, RiskError> {
        match &self.source {
            UtilitySource::Expr(expr) => Ok(expr.eval_slice(&[x])?),
            UtilitySource::Org(org) => Ok(org.eval1(x)?),
        }
    }

    /// Evaluates at `x`, enforcing the declared domain.
    pub fn eval(&self, x: f64) -> Result<f64, RiskError> {
        if !self.domain.contains(x) {
            return Err(RiskError::DomainExceeded {
                outcome: x,
                lo: self.domain.lo,
                hi: self.domain.hi,
            });
        }
        self.eval_unchecked(x)
    }
}

/// Probability-weighted utility of the lottery's outcomes.
pub fn expected_utility(u: &EvaluableUtility, lottery: &Lottery) -> Result<f64, RiskError> {
    let mut acc = 0.0;
    for b in lottery.branches() {
        acc += b.prob.value() * u.eval(b.outcome)?;
    }
    Ok(acc)
}

/// Bisection tolerance for certainty equivalents: both the residual
/// `|u(x*) - EU|` and the bracket width must drop below this.
const CE_TOL: f64 = 1e-9;

/// The sure amount whose utility equals the lottery's expected utility.
/// Requires a strictly monotone utility; bisection brackets start at the
/// declared domain and expand up to 4x before giving up.
pub fn certainty_equivalent(u: &EvaluableUtility, lottery: &Lottery) -> Result<f64, RiskError> {
    let increasing = match u.monotone_increasing() {
        Some(inc) => inc,
        None => return Err(RiskError::NonMonotonicUtility),
    };
    let eu = expected_utility(u, lottery)?;

    let (mut lo, mut hi) = (u.domain.lo, u.domain.hi);
    let original_width = hi - lo;
    let bracketed = |lo_v: f64, hi_v: f64| -> bool {
        let (umin, umax) = if increasing { (lo_v, hi_v) } else { (hi_v, lo_v) };
        umin <= eu && eu <= umax
    };
    let (mut ulo, mut uhi) = (u.eval_unchecked(lo)?, u.eval_unchecked(hi)?);
    while !bracketed(ulo, uhi) {
        if hi - lo >= 4.0 * original_width {
            return Err(RiskError::RangeExceeded { eu });
        }
        let mid = 0.5 * (lo + hi);
        let half = hi - lo; // doubles the bracket
        lo = mid - half;
        hi = mid + half;
        ulo = u.eval_unchecked(lo)?;
        uhi = u.eval_unchecked(hi)?;
    }

    let mut best = f64::NAN;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let umid = u.eval_unchecked(mid)?;
        best = mid;
        let below = if increasing { umid < eu } else { umid > eu };
        if below {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < CE_TOL && (umid - eu).abs() < CE_TOL {
            return Ok(mid);
        }
    }
    // the bracket collapsed to floating-point resolution; accept if the
    // residual criterion holds
    if (u.eval_unchecked(best)? - eu).abs() < CE_TOL {
        Ok(best)
    } else {
        Err(RiskError::NoConvergence)
    }
}

/// The winning probability that makes a binary bet exactly break even:
/// `p u(win) + (1-p) u(loss) = 0`, i.e. `p = -u(loss) / (u(win) - u(loss))`.
pub fn min_winning_probability(
    u: &EvaluableUtility,
    win: f64,
    loss: f64,
) -> Result<Probability, RiskError> {
    let u_win = u.eval(win)?;
    let u_loss = u.eval(loss)?;
    if u_win <= 0.0 {
        return Err(RiskError::DegenerateBet(BetDegeneracy::NeverAccepts));
    }
    if u_loss >= 0.0 {
        return Err(RiskError::DegenerateBet(BetDegeneracy::AlwaysAccepts));
    }
    let p = -u_loss / (u_win - u_loss);
    Ok(Probability::new(p).expect("interior by construction"))
}

/// Probability that logistic noise lets the organization accept the
/// lottery: `P[EU + eps > 0]`.
pub fn acceptance_probability(
    u: &EvaluableUtility,
    lottery: &Lottery,
) -> Result<Probability, RiskError> {
    let eu = expected_utility(u, lottery)?;
    Ok(Probability::with_complement(numeric::logistic(eu), numeric::logistic(-eu)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::{derive_org_utility, AggregationTree, Member};
    use approx::assert_abs_diff_eq;

    fn running_example(unanimity: bool) -> EvaluableUtility {
        let members = vec![
            Member::new("A", UtilityExpr::affine1(5.0, 1.0)),
            Member::new("B", UtilityExpr::affine1(-5.0, 3.0)),
        ];
        let tree = if unanimity {
            AggregationTree::unanimity_over(members)
        } else {
            AggregationTree::polyarchy_over(members)
        };
        EvaluableUtility::from_org(derive_org_utility(&tree).unwrap()).unwrap()
    }

    #[test]
    fn expected_utility_running_example() {
        let bet = Lottery::even_bet(10.0, -10.0);
        let eu_unan = expected_utility(&running_example(true), &bet).unwrap();
        let eu_poly = expected_utility(&running_example(false), &bet).unwrap();
        assert_abs_diff_eq!(eu_unan, -12.50338037370111, epsilon = 1e-9);
        assert_abs_diff_eq!(eu_poly, 17.50000015295813, epsilon = 1e-9);
        // published rounding
        assert!((eu_unan - -12.5).abs() < 0.05);
        assert!((eu_poly - 17.5).abs() < 0.05);
    }

    #[test]
    fn expected_utility_degenerate_lottery() {
        let u = EvaluableUtility::from_expr(UtilityExpr::affine1(2.0, 3.0)).unwrap();
        let l = Lottery::new(vec![LotteryBranch {
            outcome: 7.0,
            prob: Probability::new(1.0).unwrap(),
        }])
        .unwrap();
        assert_eq!(expected_utility(&u, &l).unwrap(), 2.0 + 3.0 * 7.0);
    }

    #[test]
    fn expected_utility_checks_domain() {
        let u = EvaluableUtility::from_expr_on(
            UtilityExpr::affine1(0.0, 1.0),
            Interval::new(-1.0, 1.0).unwrap(),
        )
        .unwrap();
        let err = expected_utility(&u, &Lottery::even_bet(10.0, -10.0)).unwrap_err();
        assert!(matches!(err, RiskError::DomainExceeded { .. }));
    }

    #[test]
    fn certainty_equivalent_running_example() {
        let bet = Lottery::even_bet(10.0, -10.0);
        let ce_unan = certainty_equivalent(&running_example(true), &bet).unwrap();
        let ce_poly = certainty_equivalent(&running_example(false), &bet).unwrap();
        assert_abs_diff_eq!(ce_unan, -2.4754440407839623, epsilon = 1e-7);
        assert_abs_diff_eq!(ce_poly, 4.374904817479365, epsilon = 1e-7);
        // published rounding: sure loss of 2.5, sure gain of 4.4
        assert!((ce_unan - -2.5).abs() < 0.05);
        assert!((ce_poly - 4.4).abs() < 0.05);
        // ordering: unanimity treats the bet as a loss, polyarchy as a gain
        assert!(ce_unan < 0.0 && 0.0 < ce_poly);
    }

    #[test]
    fn certainty_equivalent_consistency() {
        let bet = Lottery::even_bet(10.0, -10.0);
        for u in [running_example(true), running_example(false)] {
            let ce = certainty_equivalent(&u, &bet).unwrap();
            let eu = expected_utility(&u, &bet).unwrap();
            assert!((u.eval(ce).unwrap() - eu).abs() < 1e-8);
        }
    }

    #[test]
    fn certainty_equivalent_of_sure_thing_is_the_thing() {
        let u = EvaluableUtility::from_expr(UtilityExpr::ExpCara { scale: 10.0, rate: 10.0 })
            .unwrap();
        let l = Lottery::new(vec![LotteryBranch {
            outcome: 3.25,
            prob: Probability::new(1.0).unwrap(),
        }])
        .unwrap();
        assert_abs_diff_eq!(certainty_equivalent(&u, &l).unwrap(), 3.25, epsilon = 1e-8);
    }

    #[test]
    fn certainty_equivalent_rejects_non_monotone() {
        let tree = AggregationTree::unanimity_over(vec![
            Member::new("pro", UtilityExpr::affine1(1.0, 1.0)),
            Member::new("anti", UtilityExpr::affine1(-1.0, -0.5)),
        ]);
        let u = EvaluableUtility::from_org(derive_org_utility(&tree).unwrap()).unwrap();
        assert_eq!(u.monotone_increasing(), None);
        let err = certainty_equivalent(&u, &Lottery::even_bet(10.0, -10.0)).unwrap_err();
        assert_eq!(err, RiskError::NonMonotonicUtility);
    }

    #[test]
    fn certainty_equivalent_handles_decreasing_utilities() {
        let u = EvaluableUtility::from_expr(UtilityExpr::affine1(1.0, -2.0)).unwrap();
        assert_eq!(u.monotone_increasing(), Some(false));
        let bet = Lottery::even_bet(8.0, -4.0);
        let ce = certainty_equivalent(&u, &bet).unwrap();
        // EU = 0.5(1-16) + 0.5(1+8) = -3; u(x) = -3 at x = 2
        assert_abs_diff_eq!(ce, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn certainty_equivalent_at_domain_edge() {
        // EU at the utility range boundary still brackets
        let u = EvaluableUtility::from_expr_on(
            UtilityExpr::affine1(0.0, 1.0),
            Interval::new(-1.0, 1.0).unwrap(),
        )
        .unwrap();
        let l = Lottery::new(vec![LotteryBranch {
            outcome: 1.0,
            prob: Probability::new(1.0).unwrap(),
        }])
        .unwrap();
        assert_abs_diff_eq!(certainty_equivalent(&u, &l).unwrap(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn min_winning_probability_running_example() {
        let p_unan = min_winning_probability(&running_example(true), 10.0, -10.0).unwrap();
        let p_poly = min_winning_probability(&running_example(false), 10.0, -10.0).unwrap();
        assert_abs_diff_eq!(p_unan.value(), 0.7273066227270769, epsilon = 1e-9);
        assert_abs_diff_eq!(p_poly.value(), 0.1111111103557607, epsilon = 1e-9);
        assert!((p_unan.value() - 0.73).abs() < 0.01);
        assert!((p_poly.value() - 0.11).abs() < 0.01);
        assert!(p_unan.value() > p_poly.value());
    }

    #[test]
    fn min_winning_probability_risk_neutral() {
        let u = EvaluableUtility::from_expr(UtilityExpr::affine1(0.0, 1.0)).unwrap();
        let p = min_winning_probability(&u, 10.0, -10.0).unwrap();
        assert_abs_diff_eq!(p.value(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn min_winning_probability_satisfies_indifference() {
        let u = running_example(true);
        let p = min_winning_probability(&u, 10.0, -10.0).unwrap().value();
        let residual = p * u.eval(10.0).unwrap() + (1.0 - p) * u.eval(-10.0).unwrap();
        assert!(residual.abs() < 1e-10);
    }

    #[test]
    fn min_winning_probability_degenerate_cases() {
        let pessimist =
            EvaluableUtility::from_expr(UtilityExpr::affine1(-100.0, 1.0)).unwrap();
        assert_eq!(
            min_winning_probability(&pessimist, 10.0, -10.0).unwrap_err(),
            RiskError::DegenerateBet(BetDegeneracy::NeverAccepts)
        );
        let optimist = EvaluableUtility::from_expr(UtilityExpr::affine1(100.0, 1.0)).unwrap();
        assert_eq!(
            min_winning_probability(&optimist, 10.0, -10.0).unwrap_err(),
            RiskError::DegenerateBet(BetDegeneracy::AlwaysAccepts)
        );
    }

    #[test]
    fn acceptance_probability_values() {
        let u0 = EvaluableUtility::from_expr(UtilityExpr::Constant { value: 0.0 }).unwrap();
        let bet = Lottery::even_bet(10.0, -10.0);
        assert_eq!(acceptance_probability(&u0, &bet).unwrap().value(), 0.5);
        // logistic CDF at the running-example expected utilities
        let a_unan = acceptance_probability(&running_example(true), &bet).unwrap();
        let a_poly = acceptance_probability(&running_example(false), &bet).unwrap();
        assert_abs_diff_eq!(a_unan.value(), 3.714063165510379e-6, epsilon = 1e-12);
        assert_abs_diff_eq!(a_poly.complement(), 2.5109987086081894e-8, epsilon = 1e-15);
    }

    #[test]
    fn lottery_validation() {
        assert_eq!(Lottery::new(vec![]).unwrap_err(), RiskError::EmptyLottery);
        let bad = Lottery::new(vec![
            LotteryBranch { outcome: 1.0, prob: Probability::new(0.6).unwrap() },
            LotteryBranch { outcome: 2.0, prob: Probability::new(0.6).unwrap() },
        ]);
        assert!(matches!(bad.unwrap_err(), RiskError::BranchProbabilities { .. }));
    }

    #[test]
    fn lottery_serde_shape() {
        let l = Lottery::even_bet(10.0, -10.0);
        let json = serde_json::to_string(&l).unwrap();
        assert_eq!(
            json,
            r#"{"branches":[{"outcome":10.0,"prob":0.5},{"outcome":-10.0,"prob":0.5}]}"#
        );
        let back: Lottery = serde_json::from_str(&json).unwrap();
        assert_eq!(back, l);
        // invalid sums are rejected at parse time
        let bad = r#"{"branches":[{"outcome":1.0,"prob":0.9},{"outcome":2.0,"prob":0.9}]}"#;
        assert!(serde_json::from_str::<Lottery>(bad).is_err());
    }

    #[test]
    fn translation_shifts_utilities_but_indifference_is_recomputed() {
        // shifting u by a constant changes the break-even probability; the
        // invariant is the defining equation itself, recomputed per u
        let base = EvaluableUtility::from_expr(UtilityExpr::affine1(1.0, 1.0)).unwrap();
        let shifted = EvaluableUtility::from_expr(UtilityExpr::Sum {
            children: vec![UtilityExpr::affine1(1.0, 1.0), UtilityExpr::Constant { value: 2.0 }],
        })
        .unwrap();
        for u in [&base, &shifted] {
            let p = min_winning_probability(u, 10.0, -10.0).unwrap().value();
            let r = p * u.eval(10.0).unwrap() + (1.0 - p) * u.eval(-10.0).unwrap();
            assert!(r.abs() < 1e-10);
        }
        let pb = min_winning_probability(&base, 10.0, -10.0).unwrap().value();
        let ps = min_winning_probability(&shifted, 10.0, -10.0).unwrap().value();
        assert!((pb - ps).abs() > 1e-3);
    }
}
