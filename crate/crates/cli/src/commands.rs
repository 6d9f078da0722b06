//! Implementations of the `derive`, `risk`, and `games` subcommands. Every
//! number written out is the untouched result of a library call.

use serde::Deserialize;
use serde_json::{json, Value};

use orgutil_core::aggregation::{
    derive_org_utility_on, AggregationError, AggregationTree, Member,
};
use orgutil_core::games::{
    cournot_equilibrium, cournot_expected_utility, optimal_contract, ContractConfig,
    CournotConfig, FirmPreference, GamesError,
};
use orgutil_core::risk::{
    acceptance_probability, certainty_equivalent, expected_utility, min_winning_probability,
    EvaluableUtility, Lottery, RiskError,
};
use orgutil_core::utility::{eval_utility, screening_prob, Interval, OutcomeVector};

use crate::table::{Cell, Table};
use crate::CliError;

#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        let err = || CliError::input(format!("bad grid `{s}`, expected MIN:MAX:POINTS"));
        if parts.len() != 3 {
            return Err(err());
        }
        let min: f64 = parts[0].parse().map_err(|_| err())?;
        let max: f64 = parts[1].parse().map_err(|_| err())?;
        let points: usize = parts[2].parse().map_err(|_| err())?;
        if !(min.is_finite() && max.is_finite() && min < max && points >= 2) {
            return Err(err());
        }
        Ok(Self { min, max, points })
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.min, self.max).expect("validated on parse")
    }

    pub fn values(&self) -> Vec<f64> {
        self.interval().grid(self.points).collect()
    }
}

pub fn load_tree(path: &std::path::Path) -> Result<AggregationTree, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let tree: AggregationTree = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    tree.validate().map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(tree)
}

/// The two-member organization used by the games and figure defaults: an
/// optimistic low-sensitivity member and a pessimistic high-sensitivity one.
pub fn reference_members() -> Vec<Member> {
    use orgutil_core::utility::UtilityExpr;
    vec![
        Member::new("A", UtilityExpr::affine1(5.0, 1.0)),
        Member::new("B", UtilityExpr::affine1(-5.0, 3.0)),
    ]
}

fn reference_firm(label: &str) -> Result<FirmPreference, CliError> {
    match label {
        "N" => Ok(FirmPreference::RiskNeutral),
        "U" => FirmPreference::derived(&AggregationTree::unanimity_over(reference_members()))
            .map_err(CliError::from_games),
        "P" => FirmPreference::derived(&AggregationTree::polyarchy_over(reference_members()))
            .map_err(CliError::from_games),
        _ => unreachable!("internal firm label"),
    }
}

// ---------------------------------------------------------------------------
// derive

pub fn run_derive(tree: &AggregationTree, grid: GridSpec) -> Result<Table, CliError> {
    if tree.dimension() > 1 {
        return Err(CliError::input(format!(
            "derive requires a one-dimensional structure, got dimension {}",
            tree.dimension()
        )));
    }
    let org = derive_org_utility_on(tree, grid.interval())
        .map_err(|e| CliError::input(e.to_string()))?;
    let members: Vec<Member> = tree.members().into_iter().cloned().collect();

    let mut columns: Vec<String> = vec!["x".into(), "u_org".into(), "s_org".into()];
    for m in &members {
        columns.push(format!("u_{}", m.id));
        columns.push(format!("s_{}", m.id));
    }
    columns.push("note".into());
    let mut table = Table::with_columns(columns);

    for x in grid.values() {
        let point = OutcomeVector::scalar(x);
        let mut row = vec![Cell::Float(x)];
        let mut note = Cell::Empty;
        match org.eval(&point) {
            Ok(u) => row.push(Cell::Float(u)),
            Err(AggregationError::DegenerateProbability { .. }) => {
                row.push(Cell::Empty);
                note = Cell::Text("degenerate".into());
            }
            Err(e) => return Err(CliError::numerical(e.to_string())),
        }
        let s = org.screening(&point).map_err(|e| CliError::numerical(e.to_string()))?;
        row.push(Cell::Float(s.value()));
        for m in &members {
            let u = eval_utility(&m.utility, &point)
                .map_err(|e| CliError::input(e.to_string()))?;
            let p = screening_prob(&m.utility, &point)
                .map_err(|e| CliError::input(e.to_string()))?;
            row.push(Cell::Float(u));
            row.push(Cell::Float(p.value()));
        }
        row.push(note);
        table.push(row);
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// risk

pub fn load_lottery(path: &std::path::Path) -> Result<Lottery, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Root-finding domain used for certainty equivalents.
const RISK_DOMAIN: Interval = Interval { lo: -50.0, hi: 50.0 };

pub fn run_risk(tree: &AggregationTree, lottery: &Lottery) -> Result<Value, CliError> {
    if tree.dimension() > 1 {
        return Err(CliError::input("risk analysis requires a one-dimensional structure".into()));
    }
    let org = derive_org_utility_on(tree, RISK_DOMAIN)
        .map_err(|e| CliError::input(e.to_string()))?;
    let u = EvaluableUtility::from_org_on(org, RISK_DOMAIN)
        .map_err(|e| CliError::numerical(e.to_string()))?;

    let eu = expected_utility(&u, lottery).map_err(|e| CliError::numerical(e.to_string()))?;
    let accept =
        acceptance_probability(&u, lottery).map_err(|e| CliError::numerical(e.to_string()))?;

    let (ce, ce_reason) = match certainty_equivalent(&u, lottery) {
        Ok(v) => (json!(v), Value::Null),
        Err(RiskError::NonMonotonicUtility) => (Value::Null, json!("non-monotone")),
        Err(e) => return Err(CliError::numerical(e.to_string())),
    };

    // the minimum winning probability only exists for binary bets
    let (min_win, min_win_reason) = if lottery.branches().len() == 2 {
        let (a, b) = (lottery.branches()[0].outcome, lottery.branches()[1].outcome);
        let (win, loss) = if a >= b { (a, b) } else { (b, a) };
        match min_winning_probability(&u, win, loss) {
            Ok(p) => (json!(p.value()), Value::Null),
            Err(RiskError::DegenerateBet(kind)) => (Value::Null, json!(kind.to_string())),
            Err(e) => return Err(CliError::numerical(e.to_string())),
        }
    } else {
        (Value::Null, json!("not a binary bet"))
    };

    Ok(json!({
        "expected_utility": eu,
        "certainty_equivalent": ce,
        "certainty_equivalent_reason": ce_reason,
        "acceptance_probability": accept.value(),
        "min_winning_probability": min_win,
        "min_winning_probability_reason": min_win_reason,
        "tolerances": {
            "certainty_equivalent_residual": 1e-9,
            "lottery_probability_sum": 1e-12
        },
    }))
}

// ---------------------------------------------------------------------------
// games

pub struct GamesRun {
    pub table: Table,
    pub game: &'static str,
    pub seed: Option<u64>,
}

pub fn run_games(path: &std::path::Path, seed: Option<u64>) -> Result<GamesRun, CliError> {
    #[derive(Deserialize)]
    struct ScenarioFile {
        game: String,
        #[serde(flatten)]
        rest: serde_json::Map<String, Value>,
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let scenario: ScenarioFile = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let rest = Value::Object(scenario.rest);
    match scenario.game.as_str() {
        "cournot" => {
            let cfg: CournotConfig = serde_json::from_value(rest)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            cfg.validate().map_err(|e| CliError::input(e.to_string()))?;
            Ok(GamesRun { table: cournot_table(&cfg)?, game: "cournot", seed: None })
        }
        "contract" => {
            let mut cfg: ContractConfig = serde_json::from_value(rest)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            if let Some(seed) = seed {
                cfg.annealing.seed = seed;
            }
            cfg.validate().map_err(|e| CliError::input(e.to_string()))?;
            let seed = cfg.annealing.seed;
            Ok(GamesRun { table: contract_table(&cfg)?, game: "contract", seed: Some(seed) })
        }
        other => Err(CliError::input(format!("unknown game `{other}`"))),
    }
}

pub const COURNOT_PAIRS: [&str; 6] = ["NN", "NU", "NP", "UU", "UP", "PP"];
pub const CONTRACT_PRINCIPALS: [&str; 3] = ["N", "U", "P"];

pub fn cournot_table(cfg: &CournotConfig) -> Result<Table, CliError> {
    let mut table = Table::new(vec![
        "pair",
        "q_i",
        "q_j",
        "total_q",
        "eu_i",
        "eu_j",
        "profit_i",
        "profit_j",
        "iterations",
        "converged",
        "error",
    ]);
    for pair in COURNOT_PAIRS {
        let firm_i = reference_firm(&pair[0..1])?;
        let firm_j = reference_firm(&pair[1..2])?;
        match cournot_equilibrium(&firm_i, &firm_j, cfg) {
            Ok(eq) => {
                let profit_i =
                    cournot_expected_utility(&FirmPreference::RiskNeutral, eq.q_i, eq.q_j, cfg)
                        .map_err(CliError::from_games)?;
                let profit_j =
                    cournot_expected_utility(&FirmPreference::RiskNeutral, eq.q_j, eq.q_i, cfg)
                        .map_err(CliError::from_games)?;
                table.push(vec![
                    Cell::Text(pair.into()),
                    Cell::Float(eq.q_i),
                    Cell::Float(eq.q_j),
                    Cell::Float(eq.q_i + eq.q_j),
                    Cell::Float(eq.eu_i),
                    Cell::Float(eq.eu_j),
                    Cell::Float(profit_i),
                    Cell::Float(profit_j),
                    Cell::Int(eq.iterations as i64),
                    Cell::Bool(eq.converged),
                    Cell::Empty,
                ]);
            }
            Err(e @ (GamesError::NoConvergence { .. } | GamesError::NonUnimodalObjective { .. })) => {
                table.push(vec![
                    Cell::Text(pair.into()),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Bool(false),
                    Cell::Text(e.to_string()),
                ]);
            }
            Err(e) => return Err(CliError::from_games(e)),
        }
    }
    Ok(table)
}

pub fn contract_table(cfg: &ContractConfig) -> Result<Table, CliError> {
    let mut table = Table::new(vec![
        "principal",
        "w_f",
        "w_v",
        "effort",
        "principal_eu",
        "agent_eu",
        "at_bound",
        "error",
    ]);
    for label in CONTRACT_PRINCIPALS {
        let principal = reference_firm(label)?;
        match optimal_contract(&principal, cfg) {
            Ok(r) => table.push(vec![
                Cell::Text(label.into()),
                Cell::Float(r.w_f),
                Cell::Float(r.w_v),
                Cell::Float(r.effort),
                Cell::Float(r.principal_eu),
                Cell::Float(r.agent_eu),
                Cell::Bool(r.at_bound),
                Cell::Empty,
            ]),
            Err(e @ GamesError::Infeasible) => table.push(vec![
                Cell::Text(label.into()),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Text(e.to_string()),
            ]),
            Err(e) => return Err(CliError::from_games(e)),
        }
    }
    Ok(table)
}
