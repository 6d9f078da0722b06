//! Deterministic utility components of random-utility models and the
//! conversions between utility space and probability (screening) space.
//!
//! A member's random utility is `U(x) = u(x) + eps` with
//! `eps ~ Logistic(0, 1)`. The noise distribution is fixed by convention:
//! rescaling the deterministic part has the same effect as rescaling the
//! noise, and fixing the scale keeps the logit inversion exact and unique.
//! Consequently the noise never appears as data here, only through the
//! logistic link in [`screening_prob`] and its inverse [`utility_from_prob`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric;

#[derive(Debug, Error, PartialEq)]
pub enum UtilityError {
    #[error("outcome vector has dimension {got}, expression references dimension {needed}")]
    DimensionMismatch { needed: usize, got: usize },
    #[error("probability {p} is degenerate: logit requires 0 < p < 1")]
    DegenerateProbability { p: f64 },
    #[error("domain [{lo}, {hi}] must straddle 0")]
    BadDomain { lo: f64, hi: f64 },
    #[error("non-finite parameter in utility expression: {context}")]
    NonFiniteParameter { context: &'static str },
    #[error("non-finite outcome component at index {index}")]
    NonFiniteOutcome { index: usize },
}

/// A probability in `[0, 1]`.
///
/// Alongside `p` the type carries the complement `1 - p`, tracked exactly
/// by the operations that produce probabilities (the logistic link, the
/// aggregation pipeline). Near 1 the complement holds far more information
/// than `1 - p` recomputed from the rounded `p`, which is what keeps the
/// logit inversion accurate deep in the tails.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability {
    p: f64,
    q: f64,
}

impl Probability {
    pub fn new(p: f64) -> Result<Self, UtilityError> {
        if p.is_finite() && (0.0..=1.0).contains(&p) {
            Ok(Self { p, q: 1.0 - p })
        } else {
            Err(UtilityError::DegenerateProbability { p })
        }
    }

    /// Pairs a probability with a separately computed complement.
    pub(crate) fn with_complement(p: f64, q: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q));
        Self { p, q }
    }

    pub fn value(self) -> f64 {
        self.p
    }

    /// `1 - p`, at full precision when produced by a link function.
    pub fn complement(self) -> f64 {
        self.q
    }
}

impl PartialEq for Probability {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
    }
}

impl PartialOrd for Probability {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.p.partial_cmp(&other.p)
    }
}

impl TryFrom<f64> for Probability {
    type Error = UtilityError;
    fn try_from(p: f64) -> Result<Self, Self::Error> {
        Self::new(p)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.p
    }
}

/// Outcome of a project under evaluation: one real value per attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OutcomeVector(Vec<f64>);

impl OutcomeVector {
    pub fn new(values: Vec<f64>) -> Result<Self, UtilityError> {
        for (index, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(UtilityError::NonFiniteOutcome { index });
            }
        }
        Ok(Self(values))
    }

    /// One-dimensional outcome.
    pub fn scalar(x: f64) -> Self {
        Self(vec![x])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }
}

/// A closed, finite interval with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, UtilityError> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(UtilityError::BadDomain { lo, hi })
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }

    /// Evenly spaced nodes including both endpoints.
    pub fn grid(&self, points: usize) -> impl Iterator<Item = f64> + '_ {
        let step = self.width() / (points - 1) as f64;
        (0..points).map(move |i| {
            if i + 1 == points {
                self.hi
            } else {
                self.lo + i as f64 * step
            }
        })
    }
}

/// Deterministic utility component, kept as closed data rather than an opaque
/// callable so that aggregation can pattern-match on affine leaves and build
/// exact log-sum-exp forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilityExpr {
    /// Fixed utility regardless of outcome.
    Constant { value: f64 },
    /// The outcome component at `index` (0-based).
    Var { index: usize },
    /// `alpha + beta . x` over the first `beta.len()` outcome components.
    Affine { alpha: f64, beta: Vec<f64> },
    /// Constant absolute risk aversion over the first outcome component:
    /// `scale * (1 - e^{-x / rate})`.
    ExpCara { scale: f64, rate: f64 },
    Sum { children: Vec<UtilityExpr> },
    Scale { factor: f64, child: Box<UtilityExpr> },
    Negate { child: Box<UtilityExpr> },
}

impl UtilityExpr {
    pub fn affine1(alpha: f64, beta: f64) -> Self {
        UtilityExpr::Affine { alpha, beta: vec![beta] }
    }

    /// Smallest outcome dimension this expression can be evaluated at.
    pub fn dimension(&self) -> usize {
        match self {
            UtilityExpr::Constant { .. } => 0,
            UtilityExpr::Var { index } => index + 1,
            UtilityExpr::Affine { beta, .. } => beta.len(),
            UtilityExpr::ExpCara { .. } => 1,
            UtilityExpr::Sum { children } => {
                children.iter().map(UtilityExpr::dimension).max().unwrap_or(0)
            }
            UtilityExpr::Scale { child, .. } | UtilityExpr::Negate { child } => child.dimension(),
        }
    }

    /// Checks that every numeric parameter is finite, so the expression
    /// evaluates to a finite value at every finite outcome.
    pub fn validate(&self) -> Result<(), UtilityError> {
        let bad = |context| Err(UtilityError::NonFiniteParameter { context });
        match self {
            UtilityExpr::Constant { value } if !value.is_finite() => bad("constant value"),
            UtilityExpr::Affine { alpha, beta } => {
                if !alpha.is_finite() || beta.iter().any(|b| !b.is_finite()) {
                    bad("affine coefficients")
                } else {
                    Ok(())
                }
            }
            UtilityExpr::ExpCara { scale, rate } => {
                if !scale.is_finite() || !rate.is_finite() || *rate == 0.0 {
                    bad("cara scale/rate")
                } else {
                    Ok(())
                }
            }
            UtilityExpr::Sum { children } => children.iter().try_for_each(UtilityExpr::validate),
            UtilityExpr::Scale { factor, child } => {
                if !factor.is_finite() {
                    bad("scale factor")
                } else {
                    child.validate()
                }
            }
            UtilityExpr::Negate { child } => child.validate(),
            _ => Ok(()),
        }
    }

    pub(crate) fn eval_slice(&self, x: &[f64]) -> Result<f64, UtilityError> {
        let need = |needed: usize| -> Result<(), UtilityError> {
            if x.len() >= needed {
                Ok(())
            } else {
                Err(UtilityError::DimensionMismatch { needed, got: x.len() })
            }
        };
        match self {
            UtilityExpr::Constant { value } => Ok(*value),
            UtilityExpr::Var { index } => {
                need(index + 1)?;
                Ok(x[*index])
            }
            UtilityExpr::Affine { alpha, beta } => {
                need(beta.len())?;
                Ok(alpha + beta.iter().zip(x).map(|(b, v)| b * v).sum::<f64>())
            }
            UtilityExpr::ExpCara { scale, rate } => {
                need(1)?;
                Ok(scale * (1.0 - (-x[0] / rate).exp()))
            }
            UtilityExpr::Sum { children } => {
                children.iter().map(|c| c.eval_slice(x)).sum::<Result<f64, _>>()
            }
            UtilityExpr::Scale { factor, child } => Ok(factor * child.eval_slice(x)?),
            UtilityExpr::Negate { child } => Ok(-child.eval_slice(x)?),
        }
    }
}

/// Evaluates the deterministic utility of outcome `x`. Pure and
/// deterministic.
pub fn eval_utility(u: &UtilityExpr, x: &OutcomeVector) -> Result<f64, UtilityError> {
    u.eval_slice(x.values())
}

/// Probability that a member with deterministic utility `u` approves
/// outcome `x`: `P[u(x) + eps > 0]` under `eps ~ Logistic(0, 1)`, i.e. the
/// logistic CDF at `u(x)`.
pub fn screening_prob(u: &UtilityExpr, x: &OutcomeVector) -> Result<Probability, UtilityError> {
    let v = eval_utility(u, x)?;
    Ok(Probability::with_complement(numeric::logistic(v), numeric::logistic(-v)))
}

/// Inverse of the logistic link: the unique deterministic utility that
/// yields acceptance probability `p`. Out-of-range probabilities are an
/// error, not a saturation; silent clamping would hide aggregation bugs.
pub fn utility_from_prob(p: Probability) -> Result<f64, UtilityError> {
    let (value, complement) = (p.value(), p.complement());
    if value <= 0.0 || complement <= 0.0 {
        return Err(UtilityError::DegenerateProbability { p: value });
    }
    Ok(value.ln() - complement.ln())
}

/// Omission and commission error rates of a screening function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRates {
    /// Probability of rejecting a good project (`x > 0`).
    pub omission: Probability,
    /// Probability of accepting a bad project (`x < 0`).
    pub commission: Probability,
}

/// Number of trapezoid nodes per half-domain used by [`error_rates`].
const ERROR_RATE_NODES: usize = 2001;

/// Integrates screening errors of a 1-D utility over `domain`, which must
/// straddle 0. `quality_density` weights project outcomes and defaults to
/// the uniform density on `domain`; a supplied density is normalized by its
/// integral over the domain.
pub fn error_rates(
    u: &UtilityExpr,
    domain: Interval,
    quality_density: Option<&dyn Fn(f64) -> f64>,
) -> Result<ErrorRates, UtilityError> {
    if !(domain.lo < 0.0 && domain.hi > 0.0) {
        return Err(UtilityError::BadDomain { lo: domain.lo, hi: domain.hi });
    }
    // Probe once so dimension errors surface before quadrature.
    u.eval_slice(&[0.0])?;

    let uniform = 1.0 / domain.width();
    let density = |x: f64| quality_density.map_or(uniform, |d| d(x));
    let screen = |x: f64| numeric::logistic(u.eval_slice(&[x]).expect("1-D utility"));

    let mass = match quality_density {
        None => 1.0,
        Some(_) => {
            numeric::trapezoid(density, domain.lo, 0.0, ERROR_RATE_NODES)
                + numeric::trapezoid(density, 0.0, domain.hi, ERROR_RATE_NODES)
        }
    };

    let omission =
        numeric::trapezoid(|x| (1.0 - screen(x)) * density(x), 0.0, domain.hi, ERROR_RATE_NODES);
    let commission =
        numeric::trapezoid(|x| screen(x) * density(x), domain.lo, 0.0, ERROR_RATE_NODES);

    Ok(ErrorRates {
        omission: Probability::new((omission / mass).clamp(0.0, 1.0))?,
        commission: Probability::new((commission / mass).clamp(0.0, 1.0))?,
    })
}
