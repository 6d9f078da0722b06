//! Derives an organization's utility function from its members' random
//! utilities and an explicit aggregation structure, then puts the derived
//! preferences to work: risk analysis of lotteries and two strategic models
//! (Cournot duopoly, principal-agent contracting).
//!
//! The pipeline has three steps:
//! 1. map each member's deterministic utility `u_i(x)` to an approval
//!    probability through the logistic link (`utility` module),
//! 2. combine member probabilities with an AND/OR/k-of-N structure
//!    (`aggregation` module),
//! 3. invert the link to recover the deterministic utility that reproduces
//!    the organization's approval behavior.
//!
//! For pure AND/OR structures over affine members the organizational utility
//! has an exact log-sum-exp form (`logsumexp` module) which doubles as a
//! numerically robust fast path. `risk` evaluates lotteries under any 1-D
//! utility; `games` embeds derived utilities into market and contracting
//! models.

pub mod aggregation;
pub mod games;
pub mod logsumexp;
mod numeric;
pub mod risk;
pub mod utility;

pub use aggregation::{
    approx_org_utility, derive_org_utility, derive_org_utility_on, org_screening,
    polyarchy_closed_form, unanimity_closed_form, AggregationError, AggregationTree, Member,
    OrgUtility,
};
pub use logsumexp::{lse_with_bounds, AffineTerm, LogSumExpForm, LseBounds, LseError, MinMaxAffine};
pub use risk::{
    acceptance_probability, certainty_equivalent, expected_utility, min_winning_probability,
    BetDegeneracy, EvaluableUtility, Lottery, LotteryBranch, RiskError,
};
pub use utility::{
    error_rates, eval_utility, screening_prob, utility_from_prob, ErrorRates, Interval,
    OutcomeVector, Probability, UtilityError, UtilityExpr,
};
