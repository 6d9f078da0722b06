//! Figure-reproduction datasets. Each figure id maps to a bundled spec file
//! carrying the grid and parameters, so rebuilding any dataset needs no
//! user input beyond the id.

use serde::{Deserialize, Serialize};

use orgutil_core::aggregation::{derive_org_utility_on, AggregationTree, Member, OrgUtility};
use orgutil_core::games::{ContractConfig, CournotConfig};
use orgutil_core::utility::{eval_utility, screening_prob, Interval, OutcomeVector, UtilityExpr};

use crate::commands::{contract_table, cournot_table, reference_members, GridSpec};
use crate::table::{Cell, Table};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureId {
    ScreeningExamples,
    PipelineDemo,
    UnanPolyLinear,
    CertaintyEquiv,
    VaryN,
    OpposingViews,
    Games,
    CaraAppendix,
    MultivariateAppendix,
}

impl FigureId {
    pub const ALL: [FigureId; 9] = [
        FigureId::ScreeningExamples,
        FigureId::PipelineDemo,
        FigureId::UnanPolyLinear,
        FigureId::CertaintyEquiv,
        FigureId::VaryN,
        FigureId::OpposingViews,
        FigureId::Games,
        FigureId::CaraAppendix,
        FigureId::MultivariateAppendix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::ScreeningExamples => "screening_examples",
            FigureId::PipelineDemo => "pipeline_demo",
            FigureId::UnanPolyLinear => "unan_poly_linear",
            FigureId::CertaintyEquiv => "certainty_equiv",
            FigureId::VaryN => "vary_n",
            FigureId::OpposingViews => "opposing_views",
            FigureId::Games => "games",
            FigureId::CaraAppendix => "cara_appendix",
            FigureId::MultivariateAppendix => "multivariate_appendix",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, CliError> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == name)
            .ok_or_else(|| CliError::input(format!("unknown figure `{name}`")))
    }

    /// Bundled spec JSON for this figure.
    pub fn bundled_spec(self) -> &'static str {
        match self {
            FigureId::ScreeningExamples => include_str!("../figures/screening_examples.json"),
            FigureId::PipelineDemo => include_str!("../figures/pipeline_demo.json"),
            FigureId::UnanPolyLinear => include_str!("../figures/unan_poly_linear.json"),
            FigureId::CertaintyEquiv => include_str!("../figures/certainty_equiv.json"),
            FigureId::VaryN => include_str!("../figures/vary_n.json"),
            FigureId::OpposingViews => include_str!("../figures/opposing_views.json"),
            FigureId::Games => include_str!("../figures/games.json"),
            FigureId::CaraAppendix => include_str!("../figures/cara_appendix.json"),
            FigureId::MultivariateAppendix => include_str!("../figures/multivariate_appendix.json"),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct FigureGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct FigureSpec {
    pub figure_id: FigureId,
    pub grid: FigureGrid,
    #[serde(default)]
    pub output_path: Option<String>,
}

impl FigureSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let spec: FigureSpec =
            serde_json::from_str(text).map_err(|e| CliError::input(format!("figure spec: {e}")))?;
        if spec.grid.points < 2 || spec.grid.x_min >= spec.grid.x_max {
            return Err(CliError::input("figure grid needs points >= 2 and x_min < x_max".into()));
        }
        Ok(spec)
    }

    fn grid_spec(&self) -> GridSpec {
        GridSpec { min: self.grid.x_min, max: self.grid.x_max, points: self.grid.points }
    }

    pub fn default_output(&self) -> String {
        self.output_path.clone().unwrap_or_else(|| format!("{}.csv", self.figure_id.name()))
    }
}

fn derive_on(tree: &AggregationTree, domain: Interval) -> Result<OrgUtility, CliError> {
    derive_org_utility_on(tree, domain).map_err(|e| CliError::input(e.to_string()))
}

fn org_cell(org: &OrgUtility, x: &OutcomeVector) -> Result<Cell, CliError> {
    use orgutil_core::aggregation::AggregationError;
    match org.eval(x) {
        Ok(u) => Ok(Cell::Float(u)),
        Err(AggregationError::DegenerateProbability { .. }) => Ok(Cell::Empty),
        Err(e) => Err(CliError::numerical(e.to_string())),
    }
}

pub fn generate(spec: &FigureSpec, seed: Option<u64>) -> Result<Table, CliError> {
    let grid = spec.grid_spec();
    match spec.figure_id {
        FigureId::ScreeningExamples => screening_examples(grid),
        FigureId::PipelineDemo => pipeline_demo(grid),
        FigureId::UnanPolyLinear => member_pair_curves(grid, reference_members()),
        FigureId::CertaintyEquiv => certainty_equiv(grid),
        FigureId::VaryN => vary_n(grid),
        FigureId::OpposingViews => opposing_views(grid),
        FigureId::Games => games(seed),
        FigureId::CaraAppendix => member_pair_curves(
            grid,
            vec![
                Member::new("A", UtilityExpr::ExpCara { scale: 10.0, rate: 10.0 }),
                Member::new("B", UtilityExpr::ExpCara { scale: 10.0, rate: 5.0 }),
            ],
        ),
        FigureId::MultivariateAppendix => multivariate(grid),
    }
}

/// Four screening shapes: a smooth evaluator, a sharp one, and the
/// unanimity/polyarchy aggregates of the two.
fn screening_examples(grid: GridSpec) -> Result<Table, CliError> {
    let smooth = Member::new("a", UtilityExpr::affine1(0.0, 0.5));
    let sharp = Member::new("b", UtilityExpr::affine1(0.0, 2.0));
    let and = AggregationTree::unanimity_over(vec![smooth.clone(), sharp.clone()]);
    let or = AggregationTree::polyarchy_over(vec![smooth.clone(), sharp.clone()]);
    let org_and = derive_on(&and, grid.interval())?;
    let org_or = derive_on(&or, grid.interval())?;

    let mut table = Table::new(vec!["x", "s_a", "s_b", "s_unan", "s_poly"]);
    for x in grid.values() {
        let point = OutcomeVector::scalar(x);
        table.push(vec![
            Cell::Float(x),
            Cell::Float(screening_prob(&smooth.utility, &point).unwrap().value()),
            Cell::Float(screening_prob(&sharp.utility, &point).unwrap().value()),
            Cell::Float(org_and.screening(&point).map_err(|e| CliError::numerical(e.to_string()))?.value()),
            Cell::Float(org_or.screening(&point).map_err(|e| CliError::numerical(e.to_string()))?.value()),
        ]);
    }
    Ok(table)
}

/// The utility-to-screening-to-aggregate walk for two members.
fn pipeline_demo(grid: GridSpec) -> Result<Table, CliError> {
    let a = Member::new("A", UtilityExpr::affine1(0.5, 0.25));
    let b = Member::new("B", UtilityExpr::affine1(1.0, 1.0));
    let and = AggregationTree::unanimity_over(vec![a.clone(), b.clone()]);
    let org = derive_on(&and, grid.interval())?;

    let mut table = Table::new(vec!["x", "u_a", "u_b", "s_a", "s_b", "s_unan"]);
    for x in grid.values() {
        let point = OutcomeVector::scalar(x);
        table.push(vec![
            Cell::Float(x),
            Cell::Float(eval_utility(&a.utility, &point).unwrap()),
            Cell::Float(eval_utility(&b.utility, &point).unwrap()),
            Cell::Float(screening_prob(&a.utility, &point).unwrap().value()),
            Cell::Float(screening_prob(&b.utility, &point).unwrap().value()),
            Cell::Float(org.screening(&point).map_err(|e| CliError::numerical(e.to_string()))?.value()),
        ]);
    }
    Ok(table)
}

/// Member curves, their sum, and the two derived organizational utilities.
fn member_pair_curves(grid: GridSpec, members: Vec<Member>) -> Result<Table, CliError> {
    let (a, b) = (members[0].clone(), members[1].clone());
    let sum = UtilityExpr::Sum { children: vec![a.utility.clone(), b.utility.clone()] };
    let and = AggregationTree::unanimity_over(members.clone());
    let or = AggregationTree::polyarchy_over(members);
    let org_and = derive_on(&and, grid.interval())?;
    let org_or = derive_on(&or, grid.interval())?;

    let mut table = Table::new(vec!["x", "u_a", "u_b", "u_sum", "u_unan", "u_poly"]);
    for x in grid.values() {
        let point = OutcomeVector::scalar(x);
        table.push(vec![
            Cell::Float(x),
            Cell::Float(eval_utility(&a.utility, &point).unwrap()),
            Cell::Float(eval_utility(&b.utility, &point).unwrap()),
            Cell::Float(eval_utility(&sum, &point).unwrap()),
            org_cell(&org_and, &point)?,
            org_cell(&org_or, &point)?,
        ]);
    }
    Ok(table)
}

/// The utility curves the certainty-equivalent comparison is read from;
/// the `risk` subcommand reproduces the bet numbers themselves.
fn certainty_equiv(grid: GridSpec) -> Result<Table, CliError> {
    let and = AggregationTree::unanimity_over(reference_members());
    let or = AggregationTree::polyarchy_over(reference_members());
    let org_and = derive_on(&and, grid.interval())?;
    let org_or = derive_on(&or, grid.interval())?;
    let mut table = Table::new(vec!["x", "u_unan", "u_poly"]);
    for x in grid.values() {
        let point = OutcomeVector::scalar(x);
        table.push(vec![Cell::Float(x), org_cell(&org_and, &point)?, org_cell(&org_or, &point)?]);
    }
    Ok(table)
}

/// Unanimity and polyarchy utilities as identical members accumulate.
fn vary_n(grid: GridSpec) -> Result<Table, CliError> {
    let member = |i: usize| Member::new(format!("m{i}"), UtilityExpr::affine1(0.0, 1.0));
    let mut orgs_and = Vec::new();
    let mut orgs_or = Vec::new();
    let mut columns = vec!["x".to_string()];
    for n in 1..=5usize {
        let members: Vec<Member> = (0..n).map(member).collect();
        let (and, or) = if n == 1 {
            let leaf = AggregationTree::Leaf(members[0].clone());
            (leaf.clone(), leaf)
        } else {
            (
                AggregationTree::unanimity_over(members.clone()),
                AggregationTree::polyarchy_over(members),
            )
        };
        orgs_and.push(derive_on(&and, grid.interval())?);
        orgs_or.push(derive_on(&or, grid.interval())?);
    }
    for n in 1..=5 {
        columns.push(format!("u_and_n{n}"));
    }
    for n in 1..=5 {
        columns.push(format!("u_or_n{n}"));
    }
    let mut table = Table::with_columns(columns);
    for x in grid.values() {
        let point = OutcomeVector::scalar(x);
        let mut row = vec![Cell::Float(x)];
        for org in &orgs_and {
            row.push(org_cell(org, &point)?);
        }
        for org in &orgs_or {
            row.push(org_cell(org, &point)?);
        }
        table.push(row);
    }
    Ok(table)
}

/// Members with opposite tastes: unimodal/bimodal utilities and the
/// bell- and basin-shaped screenings they induce.
fn opposing_views(grid: GridSpec) -> Result<Table, CliError> {
    let a = Member::new("pro", UtilityExpr::affine1(1.0, 1.0));
    let b = Member::new("anti", UtilityExpr::affine1(-1.0, -0.5));
    let and = AggregationTree::unanimity_over(vec![a.clone(), b.clone()]);
    let or = AggregationTree::polyarchy_over(vec![a.clone(), b.clone()]);
    let org_and = derive_on(&and, grid.interval())?;
    let org_or = derive_on(&or, grid.interval())?;

    let mut table = Table::new(vec!["x", "u_a", "u_b", "u_unan", "u_poly", "s_unan", "s_poly"]);
    for x in grid.values() {
        let point = OutcomeVector::scalar(x);
        table.push(vec![
            Cell::Float(x),
            Cell::Float(eval_utility(&a.utility, &point).unwrap()),
            Cell::Float(eval_utility(&b.utility, &point).unwrap()),
            org_cell(&org_and, &point)?,
            org_cell(&org_or, &point)?,
            Cell::Float(org_and.screening(&point).map_err(|e| CliError::numerical(e.to_string()))?.value()),
            Cell::Float(org_or.screening(&point).map_err(|e| CliError::numerical(e.to_string()))?.value()),
        ]);
    }
    Ok(table)
}

/// Equilibrium outcomes for every structure pairing plus the three
/// optimal contracts, at the reference parameterizations.
fn games(seed: Option<u64>) -> Result<Table, CliError> {
    let cournot = cournot_table(&CournotConfig::reference())?;
    let mut contract_cfg = ContractConfig::reference();
    if let Some(seed) = seed {
        contract_cfg.annealing.seed = seed;
    }
    let contract = contract_table(&contract_cfg)?;

    let mut columns: Vec<String> = vec!["model".into()];
    columns.extend(cournot.columns.iter().cloned());
    columns.extend(contract.columns.iter().filter(|c| c.as_str() != "error").cloned());
    let n_cournot = cournot.columns.len();
    let n_contract = contract.columns.len() - 1;

    let mut table = Table::with_columns(columns);
    for row in cournot.rows {
        let mut cells = vec![Cell::Text("cournot".into())];
        cells.extend(row);
        cells.extend(std::iter::repeat_n(Cell::Empty, n_contract));
        table.push(cells);
    }
    for row in contract.rows {
        let mut cells = vec![Cell::Text("contract".into())];
        let (body, error) = {
            let mut r = row;
            let e = r.pop().expect("error column");
            (r, e)
        };
        cells.extend(std::iter::repeat_n(Cell::Empty, n_cournot - 1));
        cells.push(error);
        cells.extend(body);
        table.push(cells);
    }
    Ok(table)
}

/// Two-argument members on a square mesh.
fn multivariate(grid: GridSpec) -> Result<Table, CliError> {
    let a = Member::new("A", UtilityExpr::Affine { alpha: 0.0, beta: vec![1.0, 1.0] });
    let b = Member::new("B", UtilityExpr::Affine { alpha: 0.0, beta: vec![2.0, 3.0] });
    let and = AggregationTree::unanimity_over(vec![a.clone(), b.clone()]);
    let or = AggregationTree::polyarchy_over(vec![a.clone(), b.clone()]);
    let org_and = derive_on(&and, grid.interval())?;
    let org_or = derive_on(&or, grid.interval())?;

    let mut table = Table::new(vec!["x1", "x2", "u_a", "u_b", "u_unan", "u_poly"]);
    for x1 in grid.values() {
        for x2 in grid.values() {
            let point = OutcomeVector::new(vec![x1, x2]).expect("finite grid");
            table.push(vec![
                Cell::Float(x1),
                Cell::Float(x2),
                Cell::Float(eval_utility(&a.utility, &point).unwrap()),
                Cell::Float(eval_utility(&b.utility, &point).unwrap()),
                org_cell(&org_and, &point)?,
                org_cell(&org_or, &point)?,
            ]);
        }
    }
    Ok(table)
}
