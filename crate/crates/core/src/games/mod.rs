//! Strategic-interaction models with organizational utilities in place of
//! the usual risk-neutral firm: Cournot quantity competition under demand
//! uncertainty, and optimal linear contracting with a CARA agent.

mod contract;
mod cournot;

pub use contract::{
    agent_expected_utility, agent_optimal_effort, optimal_contract, AnnealSettings,
    ContractConfig, ContractResult,
};
pub use cournot::{
    cournot_best_response, cournot_equilibrium, cournot_expected_utility, CournotConfig,
    EquilibriumResult,
};

use thiserror::Error;

use crate::aggregation::{derive_org_utility, AggregationError, AggregationTree, OrgUtility};

#[derive(Debug, Error, PartialEq)]
pub enum GamesError {
    #[error(transparent)]
    Aggregation(#[from] AggregationError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("quantity {q} outside [0, {q_max}]")]
    QuantityOutOfBounds { q: f64, q_max: f64 },
    #[error("objective has multiple separated local maxima near q = {near:?}")]
    NonUnimodalObjective { near: Vec<f64> },
    #[error("no convergence after {iterations} iterations (residual {residual})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("agent first-order condition has no root in [0, {boundary}]")]
    NoInteriorSolution { boundary: f64 },
    #[error("no contract in bounds satisfies the participation constraint")]
    Infeasible,
    #[error("derived firm utility must be one-dimensional, got dimension {dimension}")]
    DerivedUtilityNotScalar { dimension: usize },
}

/// How a firm evaluates profit (or net income): as-is, or through a derived
/// organizational utility over the 1-D monetary outcome.
#[derive(Debug, Clone)]
pub enum FirmPreference {
    RiskNeutral,
    Derived(OrgUtility),
}

impl FirmPreference {
    /// Derives the organizational utility of `tree` and wraps it as a firm
    /// preference over 1-D profit.
    pub fn derived(tree: &AggregationTree) -> Result<Self, GamesError> {
        let org = derive_org_utility(tree)?;
        if org.dimension() > 1 {
            return Err(GamesError::DerivedUtilityNotScalar { dimension: org.dimension() });
        }
        Ok(FirmPreference::Derived(org))
    }

    pub(crate) fn eval(&self, money: f64) -> Result<f64, GamesError> {
        match self {
            FirmPreference::RiskNeutral => Ok(money),
            FirmPreference::Derived(org) => Ok(org.eval1(money)?),
        }
    }

    /// Whether the preference is known to be strictly increasing in money
    /// (risk-neutral always is; derived utilities consult their detected
    /// monotonicity).
    pub(crate) fn known_increasing(&self) -> bool {
        match self {
            FirmPreference::RiskNeutral => true,
            FirmPreference::Derived(org) => {
                org.dimension() == 1 && org.monotone_increasing().first() == Some(&Some(true))
            }
        }
    }
}
