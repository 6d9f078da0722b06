//! Principal-agent contracting with a CARA agent and a linear wage.
//!
//! Output is `R ~ Normal(e, sigma^2)` for agent effort `e`; the contract
//! pays `w = w_F + w_V R`. The agent's utility is
//! `-e^{-gamma w} - e^2/2`, so the expected utility has the exact form
//! `-exp(-gamma (w_F + w_V e) + gamma^2 w_V^2 sigma^2 / 2) - e^2/2`.
//! Incentive compatibility fixes effort from the agent's first-order
//! condition; participation requires the agent's expected utility to reach
//! the reservation level. The principal maximizes the expected value of its
//! preference over net income `R - w` by seeded simulated annealing
//! followed by a deterministic polish.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FirmPreference, GamesError};
use crate::numeric::{golden_section_max, HermiteRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealSettings {
    pub initial_temp: f64,
    /// Geometric cooling factor applied every 100 proposals.
    pub cooling: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for AnnealSettings {
    fn default() -> Self {
        Self { initial_temp: 1.0, cooling: 0.95, iterations: 50_000, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractConfig {
    /// Output noise standard deviation.
    pub sigma: f64,
    /// Agent's coefficient of absolute risk aversion.
    pub gamma: f64,
    /// Agent's reservation utility (participation threshold).
    pub reservation_utility: f64,
    #[serde(default = "default_w_f_bounds")]
    pub w_f_bounds: (f64, f64),
    #[serde(default = "default_w_v_bounds")]
    pub w_v_bounds: (f64, f64),
    #[serde(default = "default_e_max")]
    pub e_max: f64,
    #[serde(default)]
    pub annealing: AnnealSettings,
}

fn default_w_f_bounds() -> (f64, f64) {
    (-5.0, 10.0)
}

fn default_w_v_bounds() -> (f64, f64) {
    (0.0, 1.0)
}

fn default_e_max() -> f64 {
    5.0
}

impl ContractConfig {
    /// The reference task environment: output noise SD 3, risk aversion
    /// 0.5, reservation utility -5.
    pub fn reference() -> Self {
        Self {
            sigma: 3.0,
            gamma: 0.5,
            reservation_utility: -5.0,
            w_f_bounds: default_w_f_bounds(),
            w_v_bounds: default_w_v_bounds(),
            e_max: default_e_max(),
            annealing: AnnealSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<(), GamesError> {
        let fields = [
            self.sigma,
            self.gamma,
            self.reservation_utility,
            self.w_f_bounds.0,
            self.w_f_bounds.1,
            self.w_v_bounds.0,
            self.w_v_bounds.1,
            self.e_max,
            self.annealing.initial_temp,
            self.annealing.cooling,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(GamesError::InvalidConfig("non-finite field".into()));
        }
        if self.sigma <= 0.0 || self.gamma <= 0.0 || self.e_max <= 0.0 {
            return Err(GamesError::InvalidConfig("require sigma, gamma, e_max > 0".into()));
        }
        if self.w_f_bounds.0 >= self.w_f_bounds.1 || self.w_v_bounds.0 >= self.w_v_bounds.1 {
            return Err(GamesError::InvalidConfig("empty search bounds".into()));
        }
        if self.w_v_bounds.0 < 0.0 {
            return Err(GamesError::InvalidConfig("variable wage must be non-negative".into()));
        }
        if !(0.0 < self.annealing.cooling && self.annealing.cooling < 1.0)
            || self.annealing.initial_temp <= 0.0
        {
            return Err(GamesError::InvalidConfig("bad annealing schedule".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractResult {
    pub w_f: f64,
    pub w_v: f64,
    pub effort: f64,
    pub principal_eu: f64,
    pub agent_eu: f64,
    /// True when the optimum sits on a search bound, which usually means
    /// the bounds are binding rather than the economics.
    pub at_bound: bool,
}

/// Exact expected utility of the agent under contract `(w_f, w_v)` and
/// effort `e`, via the Gaussian moment identity for the exponential term.
pub fn agent_expected_utility(w_f: f64, w_v: f64, e: f64, cfg: &ContractConfig) -> f64 {
    let g = cfg.gamma;
    let exponent = -g * (w_f + w_v * e) + 0.5 * g * g * w_v * w_v * cfg.sigma * cfg.sigma;
    -exponent.exp() - 0.5 * e * e
}

/// First-order condition residual `d E[U_agent] / d e`.
fn effort_foc(w_f: f64, w_v: f64, e: f64, cfg: &ContractConfig) -> f64 {
    let g = cfg.gamma;
    let exponent = -g * (w_f + w_v * e) + 0.5 * g * g * w_v * w_v * cfg.sigma * cfg.sigma;
    g * w_v * exponent.exp() - e
}

const FOC_TOL: f64 = 1e-10;

/// Effort maximizing the agent's expected utility given the contract,
/// solved from the first-order condition by safeguarded Newton iteration.
/// Returns 0 when `w_v` is 0 (no incentive, and effort is pure cost).
pub fn agent_optimal_effort(w_f: f64, w_v: f64, cfg: &ContractConfig) -> Result<f64, GamesError> {
    cfg.validate()?;
    if w_v < 0.0 {
        return Err(GamesError::InvalidConfig("variable wage must be non-negative".into()));
    }
    if w_v == 0.0 {
        return Ok(0.0);
    }
    solve_effort(w_f, w_v, cfg)
}

fn solve_effort(w_f: f64, w_v: f64, cfg: &ContractConfig) -> Result<f64, GamesError> {
    let g = |e: f64| effort_foc(w_f, w_v, e, cfg);
    if w_v == 0.0 {
        return Ok(0.0);
    }
    if g(cfg.e_max) > 0.0 {
        return Err(GamesError::NoInteriorSolution { boundary: cfg.e_max });
    }
    // g is strictly decreasing with g(0) > 0: Newton with a bisection
    // safeguard cannot escape [lo, hi]
    let (mut lo, mut hi) = (0.0f64, cfg.e_max);
    let mut e = 0.5 * cfg.e_max;
    for _ in 0..200 {
        let ge = g(e);
        if ge.abs() < FOC_TOL {
            return Ok(e);
        }
        if ge > 0.0 {
            lo = e;
        } else {
            hi = e;
        }
        let gamma = cfg.gamma;
        let exponent =
            -gamma * (w_f + w_v * e) + 0.5 * gamma * gamma * w_v * w_v * cfg.sigma * cfg.sigma;
        let slope = -gamma * gamma * w_v * w_v * exponent.exp() - 1.0;
        let newton = e - ge / slope;
        e = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    Ok(e)
}

/// Nodes of the principal's expected-utility quadrature.
const PRINCIPAL_QUAD_DEGREE: usize = 61;
/// Scan resolution of the deterministic polish over the variable wage.
const POLISH_SCAN: usize = 512;
/// Proposal scale relative to each bound width.
const PROPOSAL_SCALE: f64 = 0.1;
/// Cooling is applied once per this many proposals.
const COOLING_INTERVAL: usize = 100;

struct ContractProblem<'a> {
    cfg: &'a ContractConfig,
    principal: &'a FirmPreference,
    rule: HermiteRule,
}

impl<'a> ContractProblem<'a> {
    fn new(cfg: &'a ContractConfig, principal: &'a FirmPreference) -> Self {
        Self { cfg, principal, rule: HermiteRule::new(PRINCIPAL_QUAD_DEGREE) }
    }

    fn principal_eu(&self, w_f: f64, w_v: f64, e: f64) -> Result<f64, GamesError> {
        let mut failure: Option<GamesError> = None;
        let value = self.rule.expectation(e, self.cfg.sigma, |r| {
            match self.principal.eval((1.0 - w_v) * r - w_f) {
                Ok(u) => u,
                Err(err) => {
                    failure.get_or_insert(err);
                    0.0
                }
            }
        });
        match failure {
            Some(err) => Err(err),
            None => Ok(value),
        }
    }

    /// Objective at a candidate contract: `None` when the participation
    /// constraint fails or effort has no interior solution (hard
    /// rejection), `Some((principal_eu, effort))` otherwise.
    fn objective(&self, w_f: f64, w_v: f64) -> Result<Option<(f64, f64)>, GamesError> {
        let effort = match solve_effort(w_f, w_v, self.cfg) {
            Ok(e) => e,
            Err(GamesError::NoInteriorSolution { .. }) => return Ok(None),
            Err(other) => return Err(other),
        };
        if agent_expected_utility(w_f, w_v, effort, self.cfg) < self.cfg.reservation_utility {
            return Ok(None);
        }
        Ok(Some((self.principal_eu(w_f, w_v, effort)?, effort)))
    }

    /// Smallest fixed wage in bounds satisfying participation at `w_v`.
    /// The agent's expected utility is strictly increasing in `w_f`, so
    /// this is the exact minimizer of the principal's cost given `w_v`.
    /// Returns the feasible (upper) end of the final bisection bracket.
    fn pc_binding_w_f(&self, w_v: f64) -> Result<Option<f64>, GamesError> {
        let (lo, hi) = self.cfg.w_f_bounds;
        let slack = |w_f: f64| -> Result<f64, GamesError> {
            let effort = match solve_effort(w_f, w_v, self.cfg) {
                Ok(e) => e,
                Err(GamesError::NoInteriorSolution { .. }) => return Ok(f64::NEG_INFINITY),
                Err(other) => return Err(other),
            };
            Ok(agent_expected_utility(w_f, w_v, effort, self.cfg) - self.cfg.reservation_utility)
        };
        if slack(lo)? >= 0.0 {
            return Ok(Some(lo));
        }
        if slack(hi)? < 0.0 {
            return Ok(None);
        }
        let (mut lo, mut hi) = (lo, hi);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if slack(mid)? >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some(hi))
    }
}

/// Contract maximizing the principal's expected utility of net income,
/// subject to the agent's incentive compatibility (effort from the
/// first-order condition) and participation (hard feasibility) constraints.
///
/// Seeded simulated annealing scans the `(w_F, w_V)` box; a deterministic
/// polish then refines the incumbent. When the principal's preference is
/// known to increase in money, the polish tracks the binding participation
/// constraint (` w_F` set to the exact constrained minimum given `w_V`,
/// golden-section over `w_V`), which axis-aligned steps alone cannot
/// follow. A pattern search handles the remaining cases.
pub fn optimal_contract(
    principal: &FirmPreference,
    cfg: &ContractConfig,
) -> Result<ContractResult, GamesError> {
    cfg.validate()?;
    if let FirmPreference::Derived(org) = principal {
        if org.dimension() > 1 {
            return Err(GamesError::DerivedUtilityNotScalar { dimension: org.dimension() });
        }
    }
    let problem = ContractProblem::new(cfg, principal);

    let start = find_feasible_start(&problem)?;
    let annealed = anneal(&problem, start)?;
    let patterned = pattern_polish(&problem, annealed)?;
    let candidate = if principal.known_increasing() {
        let reduced = boundary_polish(&problem)?;
        best_of(patterned, reduced)
    } else {
        patterned
    };

    let (obj, w_f, w_v) = candidate;
    let effort = solve_effort(w_f, w_v, cfg)?;
    let agent_eu = agent_expected_utility(w_f, w_v, effort, cfg);
    let near = |x: f64, bound: f64| (x - bound).abs() < 1e-6;
    let at_bound = near(w_f, cfg.w_f_bounds.0)
        || near(w_f, cfg.w_f_bounds.1)
        || near(w_v, cfg.w_v_bounds.0)
        || near(w_v, cfg.w_v_bounds.1)
        || near(effort, cfg.e_max);
    Ok(ContractResult { w_f, w_v, effort, principal_eu: obj, agent_eu, at_bound })
}

type Candidate = (f64, f64, f64); // (objective, w_f, w_v)

fn best_of(a: Candidate, b: Candidate) -> Candidate {
    if b.0 > a.0 {
        b
    } else {
        a
    }
}

fn find_feasible_start(problem: &ContractProblem) -> Result<Candidate, GamesError> {
    let cfg = problem.cfg;
    let center =
        (0.5 * (cfg.w_f_bounds.0 + cfg.w_f_bounds.1), 0.5 * (cfg.w_v_bounds.0 + cfg.w_v_bounds.1));
    if let Some((obj, _)) = problem.objective(center.0, center.1)? {
        return Ok((obj, center.0, center.1));
    }
    let mut best: Option<Candidate> = None;
    for i in 0..=40 {
        for j in 0..=40 {
            let w_f = cfg.w_f_bounds.0 + (cfg.w_f_bounds.1 - cfg.w_f_bounds.0) * i as f64 / 40.0;
            let w_v = cfg.w_v_bounds.0 + (cfg.w_v_bounds.1 - cfg.w_v_bounds.0) * j as f64 / 40.0;
            if let Some((obj, _)) = problem.objective(w_f, w_v)? {
                if best.is_none_or(|b| obj > b.0) {
                    best = Some((obj, w_f, w_v));
                }
            }
        }
    }
    best.ok_or(GamesError::Infeasible)
}

fn anneal(problem: &ContractProblem, start: Candidate) -> Result<Candidate, GamesError> {
    let cfg = problem.cfg;
    let settings = &cfg.annealing;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let scale_f = PROPOSAL_SCALE * (cfg.w_f_bounds.1 - cfg.w_f_bounds.0);
    let scale_v = PROPOSAL_SCALE * (cfg.w_v_bounds.1 - cfg.w_v_bounds.0);

    let (mut cur, mut w_f, mut w_v) = start;
    let mut best = start;
    let mut temp = settings.initial_temp;
    for i in 0..settings.iterations {
        if i > 0 && i % COOLING_INTERVAL == 0 {
            temp *= settings.cooling;
        }
        let cand_f =
            (w_f + rng.random_range(-scale_f..=scale_f)).clamp(cfg.w_f_bounds.0, cfg.w_f_bounds.1);
        let cand_v =
            (w_v + rng.random_range(-scale_v..=scale_v)).clamp(cfg.w_v_bounds.0, cfg.w_v_bounds.1);
        // participation failures are rejected outright
        let Some((obj, _)) = problem.objective(cand_f, cand_v)? else { continue };
        let delta = obj - cur;
        if delta > 0.0 || rng.random::<f64>() < (delta / temp).exp() {
            (cur, w_f, w_v) = (obj, cand_f, cand_v);
            if cur > best.0 {
                best = (cur, w_f, w_v);
            }
        }
    }
    Ok(best)
}

/// Eight-direction pattern search with halving steps. Converges on
/// interior optima; on a curved constraint boundary it can stall, which is
/// why the monotone case gets [`boundary_polish`] as well.
fn pattern_polish(problem: &ContractProblem, start: Candidate) -> Result<Candidate, GamesError> {
    let cfg = problem.cfg;
    let (mut cur, mut w_f, mut w_v) = start;
    let mut step_f = PROPOSAL_SCALE * (cfg.w_f_bounds.1 - cfg.w_f_bounds.0);
    let mut step_v = PROPOSAL_SCALE * (cfg.w_v_bounds.1 - cfg.w_v_bounds.0);
    const DIRS: [(f64, f64); 8] =
        [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
    let mut evals = 0usize;
    while step_f.max(step_v) > 1e-6 && evals < 100_000 {
        let mut improved = false;
        for (df, dv) in DIRS {
            let cand_f = (w_f + df * step_f).clamp(cfg.w_f_bounds.0, cfg.w_f_bounds.1);
            let cand_v = (w_v + dv * step_v).clamp(cfg.w_v_bounds.0, cfg.w_v_bounds.1);
            evals += 1;
            if let Some((obj, _)) = problem.objective(cand_f, cand_v)? {
                if obj > cur {
                    (cur, w_f, w_v) = (obj, cand_f, cand_v);
                    improved = true;
                }
            }
        }
        if !improved {
            step_f *= 0.5;
            step_v *= 0.5;
        }
    }
    Ok((cur, w_f, w_v))
}

/// Polish along the binding participation constraint: for each `w_V` the
/// cheapest feasible `w_F` is exact (monotonicity), leaving a 1-D problem
/// scanned coarsely and refined by golden section.
fn boundary_polish(problem: &ContractProblem) -> Result<Candidate, GamesError> {
    let cfg = problem.cfg;
    let (lo, hi) = cfg.w_v_bounds;
    let step = (hi - lo) / (POLISH_SCAN - 1) as f64;

    let failure: std::cell::RefCell<Option<GamesError>> = std::cell::RefCell::new(None);
    let reduced = |w_v: f64| -> f64 {
        let r = (|| -> Result<f64, GamesError> {
            match problem.pc_binding_w_f(w_v)? {
                None => Ok(f64::NEG_INFINITY),
                Some(w_f) => match problem.objective(w_f, w_v)? {
                    Some((obj, _)) => Ok(obj),
                    None => Ok(f64::NEG_INFINITY),
                },
            }
        })();
        match r {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NEG_INFINITY
            }
        }
    };

    let mut best = (f64::NEG_INFINITY, 0usize);
    for i in 0..POLISH_SCAN {
        let w_v = (lo + i as f64 * step).min(hi);
        let v = reduced(w_v);
        if v > best.0 {
            best = (v, i);
        }
    }
    if let Some(err) = failure.borrow_mut().take() {
        return Err(err);
    }
    if best.0 == f64::NEG_INFINITY {
        return Err(GamesError::Infeasible);
    }
    let bracket_lo = if best.1 == 0 { lo } else { lo + (best.1 - 1) as f64 * step };
    let bracket_hi = (lo + (best.1 + 1) as f64 * step).min(hi);
    let w_v = golden_section_max(&reduced, bracket_lo, bracket_hi, 1e-10);
    if let Some(err) = failure.borrow_mut().take() {
        return Err(err);
    }

    let w_f = problem.pc_binding_w_f(w_v)?.ok_or(GamesError::Infeasible)?;
    let (obj, _) = problem.objective(w_f, w_v)?.ok_or(GamesError::Infeasible)?;
    Ok((obj, w_f, w_v))
}
