//! Aggregation structures over members and the derivation of organizational
//! screening and utility functions.
//!
//! A structure is an AND/OR/k-of-N tree whose leaves are members. Member
//! approval events are independent, so the organizational screening function
//! follows from probability calculus: AND multiplies member probabilities,
//! OR multiplies rejection probabilities, and k-of-N is the tail of a
//! Poisson-binomial count. Inverting the logistic link on the aggregate
//! screening yields the organizational utility.
//!
//! Evaluation runs in log-probability space, carrying `log p` and
//! `log(1 - p)` side by side. The logit is then just their difference, which
//! stays accurate even when one side of the probability underflows in linear
//! space (e.g. polyarchies far in the tail).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logsumexp::{AffineTerm, LogSumExpForm, LseError, MinMaxAffine};
use crate::numeric::{log1mexp, softplus};
use crate::utility::{Interval, OutcomeVector, Probability, UtilityError, UtilityExpr};

/// Closed forms expand all non-empty member subsets (`2^N - 1` terms);
/// beyond this many members only the probability pipeline is used.
pub(crate) const MAX_CLOSED_FORM_MEMBERS: usize = 20;

/// Points used for grid-based monotonicity detection and closed-form
/// verification grids.
const MONOTONICITY_GRID: usize = 2001;

#[derive(Debug, Error, PartialEq)]
pub enum AggregationError {
    #[error(transparent)]
    Utility(#[from] UtilityError),
    #[error("invalid aggregation structure: {0}")]
    InvalidStructure(String),
    #[error("duplicate member id `{0}`")]
    DuplicateMemberId(String),
    #[error("organizational screening saturated to {p} at x = {at:?}")]
    DegenerateProbability { p: f64, at: Vec<f64> },
    #[error("closed form requires affine member utilities")]
    NotAffine,
    #[error("closed form requires at least two members")]
    TooFewMembers,
    #[error("closed-form expansion is limited to {MAX_CLOSED_FORM_MEMBERS} members, got {0}")]
    TooManyMembers(usize),
    #[error(transparent)]
    Lse(#[from] LseError),
}

/// A member of the organization: a label plus a deterministic utility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub id: String,
    pub utility: UtilityExpr,
}

impl Member {
    pub fn new(id: impl Into<String>, utility: UtilityExpr) -> Self {
        Self { id: id.into(), utility }
    }
}

/// AND/OR/k-of-N tree over members. AND is equivalent to k-of-N with
/// `k = n`, OR to `k = 1`; both are kept as explicit node kinds because the
/// closed forms exist only for them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AggregationTree {
    Leaf(Member),
    And { children: Vec<AggregationTree> },
    Or { children: Vec<AggregationTree> },
    #[serde(rename = "kofn")]
    KofN { k: usize, children: Vec<AggregationTree> },
}

impl AggregationTree {
    pub fn leaf(member: Member) -> Self {
        AggregationTree::Leaf(member)
    }

    pub fn and(children: Vec<AggregationTree>) -> Self {
        AggregationTree::And { children }
    }

    pub fn or(children: Vec<AggregationTree>) -> Self {
        AggregationTree::Or { children }
    }

    pub fn k_of_n(k: usize, children: Vec<AggregationTree>) -> Self {
        AggregationTree::KofN { k, children }
    }

    /// Convenience: AND over plain members.
    pub fn unanimity_over(members: Vec<Member>) -> Self {
        AggregationTree::And { children: members.into_iter().map(AggregationTree::Leaf).collect() }
    }

    /// Convenience: OR over plain members.
    pub fn polyarchy_over(members: Vec<Member>) -> Self {
        AggregationTree::Or { children: members.into_iter().map(AggregationTree::Leaf).collect() }
    }

    /// Structural invariants: arity, k range, unique member ids, finite
    /// utility parameters.
    pub fn validate(&self) -> Result<(), AggregationError> {
        let mut ids = std::collections::HashSet::new();
        self.validate_node(&mut ids)
    }

    fn validate_node<'a>(
        &'a self,
        ids: &mut std::collections::HashSet<&'a str>,
    ) -> Result<(), AggregationError> {
        match self {
            AggregationTree::Leaf(member) => {
                if !ids.insert(member.id.as_str()) {
                    return Err(AggregationError::DuplicateMemberId(member.id.clone()));
                }
                member.utility.validate()?;
                Ok(())
            }
            AggregationTree::And { children } | AggregationTree::Or { children } => {
                if children.len() < 2 {
                    return Err(AggregationError::InvalidStructure(format!(
                        "and/or node needs at least 2 children, got {}",
                        children.len()
                    )));
                }
                children.iter().try_for_each(|c| c.validate_node(ids))
            }
            AggregationTree::KofN { k, children } => {
                if children.is_empty() || *k < 1 || *k > children.len() {
                    return Err(AggregationError::InvalidStructure(format!(
                        "k-of-n node needs 1 <= k <= n, got k={k}, n={}",
                        children.len()
                    )));
                }
                children.iter().try_for_each(|c| c.validate_node(ids))
            }
        }
    }

    /// Members in depth-first, left-to-right order.
    pub fn members(&self) -> Vec<&Member> {
        let mut out = Vec::new();
        self.collect_members(&mut out);
        out
    }

    fn collect_members<'a>(&'a self, out: &mut Vec<&'a Member>) {
        match self {
            AggregationTree::Leaf(member) => out.push(member),
            AggregationTree::And { children }
            | AggregationTree::Or { children }
            | AggregationTree::KofN { children, .. } => {
                children.iter().for_each(|c| c.collect_members(out));
            }
        }
    }

    pub fn dimension(&self) -> usize {
        self.members().iter().map(|m| m.utility.dimension()).max().unwrap_or(0)
    }

    /// If the tree uses only AND internal nodes (or is a single leaf),
    /// returns the members.
    fn pure_and_members(&self) -> Option<Vec<&Member>> {
        let mut out = Vec::new();
        if self.collect_pure(&mut out, true) {
            Some(out)
        } else {
            None
        }
    }

    fn pure_or_members(&self) -> Option<Vec<&Member>> {
        let mut out = Vec::new();
        if self.collect_pure(&mut out, false) {
            Some(out)
        } else {
            None
        }
    }

    fn collect_pure<'a>(&'a self, out: &mut Vec<&'a Member>, want_and: bool) -> bool {
        match self {
            AggregationTree::Leaf(member) => {
                out.push(member);
                true
            }
            AggregationTree::And { children } if want_and => {
                children.iter().all(|c| c.collect_pure(out, want_and))
            }
            AggregationTree::Or { children } if !want_and => {
                children.iter().all(|c| c.collect_pure(out, want_and))
            }
            _ => false,
        }
    }

    /// `(log p, log(1 - p))` of the node's approval probability at `x`.
    fn log_screening(&self, x: &[f64]) -> Result<(f64, f64), AggregationError> {
        match self {
            AggregationTree::Leaf(member) => {
                let u = member.utility.eval_slice(x)?;
                Ok((-softplus(-u), -softplus(u)))
            }
            AggregationTree::And { children } => {
                let mut lp = 0.0;
                for child in children {
                    lp += child.log_screening(x)?.0;
                }
                Ok((lp, log1mexp(lp.min(0.0))))
            }
            AggregationTree::Or { children } => {
                let mut lq = 0.0;
                for child in children {
                    lq += child.log_screening(x)?.1;
                }
                Ok((log1mexp(lq.min(0.0)), lq))
            }
            AggregationTree::KofN { k, children } => {
                // Exact Poisson-binomial count distribution; tail and
                // complement are sums of non-negative terms, so no
                // cancellation beyond the DP itself.
                let mut dist = vec![0.0f64; children.len() + 1];
                dist[0] = 1.0;
                for (i, child) in children.iter().enumerate() {
                    let (lp, lq) = child.log_screening(x)?;
                    let (p, q) = (lp.exp(), lq.exp());
                    for j in (0..=i).rev() {
                        dist[j + 1] += dist[j] * p;
                        dist[j] *= q;
                    }
                }
                let tail: f64 = dist[*k..].iter().sum();
                let comp: f64 = dist[..*k].iter().sum();
                Ok((tail.ln(), comp.ln()))
            }
        }
    }
}

/// Probability that the organization approves outcome `x`, assuming member
/// evaluation errors are independent.
pub fn org_screening(
    tree: &AggregationTree,
    x: &OutcomeVector,
) -> Result<Probability, AggregationError> {
    tree.validate()?;
    let (lp, lq) = tree.log_screening(x.values())?;
    Ok(Probability::with_complement(lp.min(0.0).exp(), lq.min(0.0).exp()))
}

/// How the organizational utility moves along one outcome dimension over the
/// declared domain: `Some(true)` strictly increasing, `Some(false)` strictly
/// decreasing, `None` neither (or not detectable).
pub type MonotonicityFlags = Vec<Option<bool>>;

/// Derived organizational utility: the deterministic utility that, under
/// the same logistic noise, reproduces the organization's aggregate
/// approval probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct OrgUtility {
    tree: AggregationTree,
    closed_form: Option<LogSumExpForm>,
    domain: Interval,
    dimension: usize,
    monotone_increasing: MonotonicityFlags,
}

impl OrgUtility {
    pub fn tree(&self) -> &AggregationTree {
        &self.tree
    }

    /// Exact log-sum-exp representation, present when every member is
    /// affine and the tree is pure AND or pure OR.
    pub fn closed_form(&self) -> Option<&LogSumExpForm> {
        self.closed_form.as_ref()
    }

    /// Domain on which monotonicity flags were detected.
    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Per-dimension monotonicity detected numerically on the declared
    /// domain grid.
    pub fn monotone_increasing(&self) -> &MonotonicityFlags {
        &self.monotone_increasing
    }

    /// Evaluates the organizational utility. Uses the closed form when
    /// available (it cannot saturate); otherwise runs the probability
    /// pipeline and reports saturation honestly.
    pub fn eval(&self, x: &OutcomeVector) -> Result<f64, AggregationError> {
        self.eval_slice(x.values())
    }

    pub(crate) fn eval_slice(&self, x: &[f64]) -> Result<f64, AggregationError> {
        if let Some(form) = &self.closed_form {
            return Ok(form.eval_slice(x));
        }
        self.eval_pipeline_slice(x)
    }

    /// One-dimensional shorthand for [`OrgUtility::eval`].
    pub fn eval1(&self, x: f64) -> Result<f64, AggregationError> {
        self.eval_slice(&[x])
    }

    /// Evaluates strictly through the probability pipeline
    /// (`logit(G(F(u_1(x)), ...))`), bypassing any closed form. The
    /// ground-truth path the closed forms are verified against.
    pub fn eval_pipeline(&self, x: &OutcomeVector) -> Result<f64, AggregationError> {
        self.eval_pipeline_slice(x.values())
    }

    fn eval_pipeline_slice(&self, x: &[f64]) -> Result<f64, AggregationError> {
        let (lp, lq) = self.tree.log_screening(x)?;
        if lp == f64::NEG_INFINITY || lq == f64::NEG_INFINITY {
            let p = if lp == f64::NEG_INFINITY { 0.0 } else { 1.0 };
            return Err(AggregationError::DegenerateProbability { p, at: x.to_vec() });
        }
        // logit(p) = log p - log(1 - p)
        Ok(lp - lq)
    }

    /// Organizational screening at `x`.
    pub fn screening(&self, x: &OutcomeVector) -> Result<Probability, AggregationError> {
        let (lp, lq) = self.tree.log_screening(x.values())?;
        Ok(Probability::with_complement(lp.min(0.0).exp(), lq.min(0.0).exp()))
    }
}

/// Derives the organizational utility on the default domain `[-10, 10]`.
pub fn derive_org_utility(tree: &AggregationTree) -> Result<OrgUtility, AggregationError> {
    derive_org_utility_on(tree, Interval::new(-10.0, 10.0).expect("static interval"))
}

/// Derives the organizational utility, detecting monotonicity on `domain`.
pub fn derive_org_utility_on(
    tree: &AggregationTree,
    domain: Interval,
) -> Result<OrgUtility, AggregationError> {
    tree.validate()?;
    let dimension = tree.dimension();
    let closed_form = closed_form_for(tree);
    let mut org = OrgUtility {
        tree: tree.clone(),
        closed_form,
        domain,
        dimension,
        monotone_increasing: vec![None; dimension],
    };
    org.monotone_increasing = detect_monotonicity(&org, domain, dimension);
    Ok(org)
}

fn closed_form_for(tree: &AggregationTree) -> Option<LogSumExpForm> {
    let (members, unanimity) = match (tree.pure_and_members(), tree.pure_or_members()) {
        (Some(m), _) if !matches!(tree, AggregationTree::Leaf(_)) => (m, true),
        (_, Some(m)) => (m, false),
        _ => return None,
    };
    if members.len() > MAX_CLOSED_FORM_MEMBERS {
        return None;
    }
    let terms: Option<Vec<AffineTerm>> = members.iter().map(|m| affine_term(&m.utility)).collect();
    let terms = terms?;
    let sign = if unanimity { -1 } else { 1 };
    Some(LogSumExpForm::from_members(&terms, sign, unanimity))
}

fn affine_term(u: &UtilityExpr) -> Option<AffineTerm> {
    match u {
        UtilityExpr::Affine { alpha, beta } => {
            Some(AffineTerm { alpha: *alpha, beta: beta.clone() })
        }
        _ => None,
    }
}

fn detect_monotonicity(org: &OrgUtility, domain: Interval, dimension: usize) -> MonotonicityFlags {
    (0..dimension)
        .map(|axis| {
            let mid = 0.5 * (domain.lo + domain.hi);
            let mut base = vec![mid; dimension];
            crate::aggregation::monotone_on_grid(
                |x| {
                    base[axis] = x;
                    org.eval_slice(&base).ok()
                },
                domain,
                MONOTONICITY_GRID,
            )
        })
        .collect()
}

/// Grid-based strict monotonicity detection: `Some(true)` if every
/// consecutive difference exceeds `1e-12`, `Some(false)` if every one is
/// below `-1e-12`, `None` otherwise (including evaluation failures).
pub(crate) fn monotone_on_grid<F: FnMut(f64) -> Option<f64>>(
    mut f: F,
    domain: Interval,
    points: usize,
) -> Option<bool> {
    const STRICT: f64 = 1e-12;
    let mut prev: Option<f64> = None;
    let mut all_up = true;
    let mut all_down = true;
    for x in domain.grid(points) {
        let v = f(x)?;
        if let Some(p) = prev {
            all_up &= v - p > STRICT;
            all_down &= p - v > STRICT;
            if !all_up && !all_down {
                return None;
            }
        }
        prev = Some(v);
    }
    if all_up {
        Some(true)
    } else if all_down {
        Some(false)
    } else {
        None
    }
}

fn affine_members(members: &[UtilityExpr]) -> Result<Vec<AffineTerm>, AggregationError> {
    if members.len() < 2 {
        return Err(AggregationError::TooFewMembers);
    }
    if members.len() > MAX_CLOSED_FORM_MEMBERS {
        return Err(AggregationError::TooManyMembers(members.len()));
    }
    members.iter().map(|u| affine_term(u).ok_or(AggregationError::NotAffine)).collect()
}

/// Exact unanimity utility over affine members:
/// `-log(sum over non-empty subsets S of e^{-sum_{i in S} u_i(x)})`.
pub fn unanimity_closed_form(members: &[UtilityExpr]) -> Result<LogSumExpForm, AggregationError> {
    let terms = affine_members(members)?;
    Ok(LogSumExpForm::from_members(&terms, -1, true))
}

/// Mirror image of [`unanimity_closed_form`]:
/// `+log(sum over non-empty subsets S of e^{+sum_{i in S} u_i(x)})`.
pub fn polyarchy_closed_form(members: &[UtilityExpr]) -> Result<LogSumExpForm, AggregationError> {
    let terms = affine_members(members)?;
    Ok(LogSumExpForm::from_members(&terms, 1, false))
}

/// Piecewise-linear approximation of a pure AND/OR tree over affine
/// members: the pointwise min (AND) or max (OR) over members and their
/// subset sums. Sandwiches the exact utility within
/// `log(2^N - 1)`.
pub fn approx_org_utility(tree: &AggregationTree) -> Result<MinMaxAffine, AggregationError> {
    tree.validate()?;
    closed_form_for(tree).map(|f| f.min_max_approximation()).ok_or(AggregationError::NotAffine)
}
