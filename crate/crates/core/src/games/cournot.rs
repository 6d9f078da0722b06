//! Cournot duopoly with an uncertain demand intercept.
//!
//! Inverse demand is `P(Q) = max(a - b Q, 0)` with `a ~ Normal(a_mean,
//! a_sd^2)`; firm profit is `(P - c) q`. Each firm maximizes the expected
//! value of its preference applied to profit. Expected utilities integrate
//! the truncated normal range `a_mean +/- integration_halfwidth_sds * a_sd`
//! with Gauss-Legendre panels, splitting at the price-floor kink `a = b Q`
//! when it falls inside the range.

use serde::{Deserialize, Serialize};

use super::{FirmPreference, GamesError};
use crate::numeric::{golden_section_max, LegendreRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CournotConfig {
    /// Mean demand intercept.
    pub a_mean: f64,
    /// Standard deviation of the demand intercept.
    pub a_sd: f64,
    /// Demand slope.
    pub b: f64,
    /// Marginal cost.
    pub c: f64,
    /// Upper bound of the quantity search range.
    #[serde(default = "default_q_max")]
    pub q_max: f64,
    /// Best-response iteration stops when quantities change less than this.
    #[serde(default = "default_convergence_tol")]
    pub convergence_tol: f64,
    /// Half-width of the intercept integration range, in standard
    /// deviations.
    #[serde(default = "default_halfwidth")]
    pub integration_halfwidth_sds: f64,
}

fn default_q_max() -> f64 {
    12.0
}

fn default_convergence_tol() -> f64 {
    1e-7
}

fn default_halfwidth() -> f64 {
    10.0
}

impl CournotConfig {
    /// The reference market parameterization: mean intercept 10, intercept
    /// SD 2, slope 0.5, marginal cost 1.
    pub fn reference() -> Self {
        Self {
            a_mean: 10.0,
            a_sd: 2.0,
            b: 0.5,
            c: 1.0,
            q_max: default_q_max(),
            convergence_tol: default_convergence_tol(),
            integration_halfwidth_sds: default_halfwidth(),
        }
    }

    pub fn validate(&self) -> Result<(), GamesError> {
        let fields = [
            self.a_mean,
            self.a_sd,
            self.b,
            self.c,
            self.q_max,
            self.convergence_tol,
            self.integration_halfwidth_sds,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(GamesError::InvalidConfig("non-finite field".into()));
        }
        if self.a_mean <= self.c {
            return Err(GamesError::InvalidConfig(format!(
                "a_mean ({}) must exceed marginal cost ({})",
                self.a_mean, self.c
            )));
        }
        if self.a_sd < 0.0 || self.b <= 0.0 || self.c < 0.0 || self.q_max <= 0.0 {
            return Err(GamesError::InvalidConfig(
                "require a_sd >= 0, b > 0, c >= 0, q_max > 0".into(),
            ));
        }
        if self.convergence_tol <= 0.0 || self.integration_halfwidth_sds <= 0.0 {
            return Err(GamesError::InvalidConfig(
                "require positive convergence_tol and integration halfwidth".into(),
            ));
        }
        Ok(())
    }

    /// Symmetric risk-neutral equilibrium quantity `(a_mean - c) / (3b)`,
    /// used to initialize the best-response iteration.
    pub fn initial_quantity(&self) -> f64 {
        ((self.a_mean - self.c) / (3.0 * self.b)).clamp(0.0, self.q_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub q_i: f64,
    pub q_j: f64,
    /// Expected utility of firm i at the equilibrium quantities (under its
    /// own preference).
    pub eu_i: f64,
    pub eu_j: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Panel layout of the demand-intercept quadrature.
const QUAD_DEGREE: usize = 24;
const QUAD_PANELS: usize = 12;
/// Best-response coarse scan size (also the unimodality check).
const SCAN_POINTS: usize = 512;
/// Golden-section bracket width for the best response.
const BR_TOL: f64 = 1e-8;
/// Iteration cap of the equilibrium loop.
const MAX_EQ_ITERATIONS: usize = 10_000;

struct Market<'a> {
    cfg: &'a CournotConfig,
    rule: LegendreRule,
}

impl<'a> Market<'a> {
    fn new(cfg: &'a CournotConfig) -> Self {
        Self { cfg, rule: LegendreRule::new(QUAD_DEGREE) }
    }

    fn profit(&self, a: f64, q_own: f64, q_total: f64) -> f64 {
        ((a - self.cfg.b * q_total).max(0.0) - self.cfg.c) * q_own
    }

    fn expected_utility(
        &self,
        pref: &FirmPreference,
        q_own: f64,
        q_other: f64,
    ) -> Result<f64, GamesError> {
        let cfg = self.cfg;
        let q_total = q_own + q_other;
        if cfg.a_sd == 0.0 {
            return pref.eval(self.profit(cfg.a_mean, q_own, q_total));
        }
        let half = cfg.integration_halfwidth_sds * cfg.a_sd;
        let (lo, hi) = (cfg.a_mean - half, cfg.a_mean + half);
        let norm = 1.0 / (cfg.a_sd * (2.0 * std::f64::consts::PI).sqrt());
        let pdf = |a: f64| {
            let z = (a - cfg.a_mean) / cfg.a_sd;
            norm * (-0.5 * z * z).exp()
        };

        // Evaluate the preference through a fallible closure; saturation
        // errors surface after integration.
        let mut failure: Option<GamesError> = None;
        let mut integrate = |seg_lo: f64, seg_hi: f64| -> f64 {
            self.rule.integrate_composite(seg_lo, seg_hi, QUAD_PANELS, |a| {
                match pref.eval(self.profit(a, q_own, q_total)) {
                    Ok(u) => u * pdf(a),
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            })
        };

        let kink = cfg.b * q_total;
        let total = if kink > lo && kink < hi {
            integrate(lo, kink) + integrate(kink, hi)
        } else {
            integrate(lo, hi)
        };
        match failure {
            Some(e) => Err(e),
            None => Ok(total),
        }
    }
}

/// Expected utility of producing `q_own` against `q_other` under the given
/// preference.
pub fn cournot_expected_utility(
    pref: &FirmPreference,
    q_own: f64,
    q_other: f64,
    cfg: &CournotConfig,
) -> Result<f64, GamesError> {
    cfg.validate()?;
    for q in [q_own, q_other] {
        if !(0.0..=cfg.q_max).contains(&q) {
            return Err(GamesError::QuantityOutOfBounds { q, q_max: cfg.q_max });
        }
    }
    Market::new(cfg).expected_utility(pref, q_own, q_other)
}

/// Profit-maximizing quantity against `q_other`, located by a coarse scan
/// (which doubles as a unimodality check) followed by golden-section
/// refinement.
pub fn cournot_best_response(
    pref: &FirmPreference,
    q_other: f64,
    cfg: &CournotConfig,
) -> Result<f64, GamesError> {
    cfg.validate()?;
    if !(0.0..=cfg.q_max).contains(&q_other) {
        return Err(GamesError::QuantityOutOfBounds { q: q_other, q_max: cfg.q_max });
    }
    Market::new(cfg).best_response(pref, q_other)
}

impl Market<'_> {
    fn best_response(&self, pref: &FirmPreference, q_other: f64) -> Result<f64, GamesError> {
        let step = self.cfg.q_max / (SCAN_POINTS - 1) as f64;
        let mut values = Vec::with_capacity(SCAN_POINTS);
        for i in 0..SCAN_POINTS {
            let q = (i as f64 * step).min(self.cfg.q_max);
            values.push(self.expected_utility(pref, q, q_other)?);
        }
        let peaks = local_maxima(&values);
        if peaks.len() > 1 {
            return Err(GamesError::NonUnimodalObjective {
                near: peaks.iter().map(|&i| i as f64 * step).collect(),
            });
        }
        let peak = peaks[0];
        let lo = if peak == 0 { 0.0 } else { (peak - 1) as f64 * step };
        let hi = ((peak + 1) as f64 * step).min(self.cfg.q_max);

        let mut failure: Option<GamesError> = None;
        let q = golden_section_max(
            |q| match self.expected_utility(pref, q, q_other) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NEG_INFINITY
                }
            },
            lo,
            hi,
            BR_TOL,
        );
        match failure {
            Some(e) => Err(e),
            None => Ok(q),
        }
    }
}

/// Indices of significantly separated local maxima of a scanned objective.
/// Plateaus and sub-tolerance wiggles collapse into one peak.
fn local_maxima(values: &[f64]) -> Vec<usize> {
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * scale;
    let global = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut peaks: Vec<usize> = Vec::new();
    let n = values.len();
    for i in 0..n {
        let up = i == 0 || values[i] >= values[i - 1];
        let down = i + 1 == n || values[i] >= values[i + 1];
        if up && down && values[i] > global - tol {
            peaks.push(i);
        }
    }
    // merge adjacent indices and peaks separated by shallow dips
    let mut merged: Vec<usize> = Vec::new();
    for &p in &peaks {
        match merged.last() {
            Some(&last) => {
                let dip = values[last..=p].iter().cloned().fold(f64::INFINITY, f64::min);
                if values[p].min(values[last]) - dip > tol {
                    merged.push(p);
                } else if values[p] > values[last] {
                    *merged.last_mut().expect("non-empty") = p;
                }
            }
            None => merged.push(p),
        }
    }
    merged
}

/// Alternating best-response iteration from the symmetric risk-neutral
/// starting point, run until quantities change by less than
/// `convergence_tol` (or the iteration cap is hit, which is an error).
pub fn cournot_equilibrium(
    pref_i: &FirmPreference,
    pref_j: &FirmPreference,
    cfg: &CournotConfig,
) -> Result<EquilibriumResult, GamesError> {
    cfg.validate()?;
    let market = Market::new(cfg);
    let mut q_i = cfg.initial_quantity();
    let mut q_j = cfg.initial_quantity();
    let mut residual = f64::INFINITY;
    for iteration in 1..=MAX_EQ_ITERATIONS {
        let q_i_next = market.best_response(pref_i, q_j)?;
        let q_j_next = market.best_response(pref_j, q_i_next)?;
        residual = (q_i_next - q_i).abs().max((q_j_next - q_j).abs());
        q_i = q_i_next;
        q_j = q_j_next;
        if residual < cfg.convergence_tol {
            return Ok(EquilibriumResult {
                q_i,
                q_j,
                eu_i: market.expected_utility(pref_i, q_i, q_j)?,
                eu_j: market.expected_utility(pref_j, q_j, q_i)?,
                iterations: iteration,
                converged: true,
            });
        }
    }
    Err(GamesError::NoConvergence { iterations: MAX_EQ_ITERATIONS, residual })
}
