//! Numerically stable log-sum-exp and the exact closed forms it induces for
//! organizational utilities over affine members.
//!
//! `LSE(x_1..x_n) = log(e^{x_1} + ... + e^{x_n})` is sandwiched by
//! `max(x) <= LSE(x) <= max(x) + log n`, so a `-LSE` of negated member
//! utilities traces the pointwise minimum of members and their subset sums
//! (unanimity) while `+LSE` traces the maximum (polyarchy).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LseError {
    #[error("log-sum-exp requires at least one argument")]
    EmptyInput,
    #[error("log-sum-exp arguments must be finite, got {value}")]
    NonFiniteInput { value: f64 },
}

/// Result of [`lse_with_bounds`]: the stabilized value together with the
/// max / max + log n envelope that is guaranteed to contain it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LseBounds {
    pub lse: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Max-shifted log-sum-exp of `args` plus its approximation bounds.
pub fn lse_with_bounds(args: &[f64]) -> Result<LseBounds, LseError> {
    if args.is_empty() {
        return Err(LseError::EmptyInput);
    }
    if let Some(&value) = args.iter().find(|v| !v.is_finite()) {
        return Err(LseError::NonFiniteInput { value });
    }
    let max = args.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let lse = max + args.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
    Ok(LseBounds { lse, lower: max, upper: max + (args.len() as f64).ln() })
}

pub(crate) fn lse(args: &[f64]) -> f64 {
    let max = args.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + args.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// One exponent argument of a log-sum-exp form: `alpha + beta . x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineTerm {
    pub alpha: f64,
    pub beta: Vec<f64>,
}

impl AffineTerm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.alpha + self.beta.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn dimension(&self) -> usize {
        self.beta.len()
    }

    fn add(&mut self, other: &AffineTerm) {
        self.alpha += other.alpha;
        if self.beta.len() < other.beta.len() {
            self.beta.resize(other.beta.len(), 0.0);
        }
        for (b, o) in self.beta.iter_mut().zip(&other.beta) {
            *b += o;
        }
    }

    fn negated(&self) -> AffineTerm {
        AffineTerm { alpha: -self.alpha, beta: self.beta.iter().map(|b| -b).collect() }
    }
}

/// Exact closed form of an organizational utility over affine members:
/// `sign * log(sum_S e^{t_S(x)})` where the terms `t_S` run over all
/// non-empty member subsets. `sign = -1` with negated subset sums encodes
/// unanimity, `sign = +1` with plain subset sums encodes polyarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSumExpForm {
    /// `-1` for unanimity, `+1` for polyarchy.
    pub sign: i8,
    pub terms: Vec<AffineTerm>,
}

impl LogSumExpForm {
    /// Expands all non-empty subset sums of `members`; `negate_terms` flips
    /// each sum (the unanimity convention).
    pub(crate) fn from_members(members: &[AffineTerm], sign: i8, negate_terms: bool) -> Self {
        let n = members.len();
        debug_assert!(n <= super::aggregation::MAX_CLOSED_FORM_MEMBERS);
        let mut terms = Vec::with_capacity((1usize << n) - 1);
        for mask in 1u32..(1u32 << n) {
            let mut term = AffineTerm { alpha: 0.0, beta: Vec::new() };
            for (i, member) in members.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    term.add(member);
                }
            }
            terms.push(if negate_terms { term.negated() } else { term });
        }
        LogSumExpForm { sign, terms }
    }

    pub fn eval_slice(&self, x: &[f64]) -> f64 {
        let args: Vec<f64> = self.terms.iter().map(|t| t.eval(x)).collect();
        f64::from(self.sign) * lse(&args)
    }

    pub fn eval1(&self, x: f64) -> f64 {
        self.eval_slice(&[x])
    }

    pub fn dimension(&self) -> usize {
        self.terms.iter().map(AffineTerm::dimension).max().unwrap_or(0)
    }

    /// Piecewise-linear envelope: pointwise min of the (un-negated) terms
    /// for unanimity, pointwise max for polyarchy.
    pub fn min_max_approximation(&self) -> MinMaxAffine {
        if self.sign < 0 {
            // -LSE(-t_S) is approximated by min(t_S)
            MinMaxAffine {
                take_max: false,
                terms: self.terms.iter().map(AffineTerm::negated).collect(),
            }
        } else {
            MinMaxAffine { take_max: true, terms: self.terms.clone() }
        }
    }
}

/// Pointwise min or max over a family of affine functions. This is the
/// piecewise-linear approximation of the exact log-sum-exp form, accurate
/// to within `log(number of terms)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxAffine {
    /// `true`: pointwise maximum (polyarchy); `false`: minimum (unanimity).
    pub take_max: bool,
    pub terms: Vec<AffineTerm>,
}

impl MinMaxAffine {
    pub fn eval_slice(&self, x: &[f64]) -> f64 {
        let it = self.terms.iter().map(|t| t.eval(x));
        if self.take_max {
            it.fold(f64::NEG_INFINITY, f64::max)
        } else {
            it.fold(f64::INFINITY, f64::min)
        }
    }

    pub fn eval1(&self, x: f64) -> f64 {
        self.eval_slice(&[x])
    }

    /// Width of the sandwich bound: `log(number of terms)`.
    pub fn bound_width(&self) -> f64 {
        (self.terms.len() as f64).ln()
    }
}
