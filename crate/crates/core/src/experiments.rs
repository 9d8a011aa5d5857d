//! Deterministic reproductions of the simulation studies as CSV tables.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::domain::{
    cc_expected_utility, make_theta_ladder, BeliefMatrix, ContractMenu, Scenario, TypeIndex,
    TypeLadder,
};
use crate::error::{Error, Result};
use crate::generate::{concentrated_row, random_row_peaked_at};
use crate::solver::{equal_allocation, solve_optimal};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_BUDGET: f64 = 500.0;
pub const FIG2_BUDGET: f64 = 650.0;
/// Budget added per extra CI in the growing-budget series, as a share of
/// the base budget.
pub const GROWTH_PER_CI: f64 = 0.3;
/// The improvement over equal allocation reported at three CIs.
pub const REPORTED_RATIO_AT_3: f64 = 1.75;
pub const THETA_SPREAD: f64 = 0.5;
pub const FIG2_MODAL: f64 = 0.7;
pub const W_LEVELS_NOTE: &str =
    "w levels 1,3,9(,27); theta from geometric ladder with spread 0.5; beta 0.5; v 2";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Fig1,
    Fig2,
    Fig3,
}

impl ExperimentId {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    Fixed,
    Grow,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub n_min: usize,
    pub n_max: usize,
    pub budget: BudgetMode,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(id: ExperimentId) -> Self {
        let (n_min, n_max) = match id {
            ExperimentId::Fig1 => (3, 8),
            _ => (4, 4),
        };
        Self {
            id,
            n_min,
            n_max,
            budget: BudgetMode::Both,
            seed: DEFAULT_SEED,
            out: None,
        }
    }

    fn check(&self) -> Result<()> {
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(Error::InvalidArgument(format!(
                "empty N range {}..={}",
                self.n_min, self.n_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub experiment: String,
    pub seed: u64,
    /// SHA-256 over the JSON of every scenario used, in order.
    pub scenario_sha256: String,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

impl ResultTable {
    fn new(columns: &[&str], provenance: Provenance) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            provenance,
        }
    }

    fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Header plus one line per row, six decimals, `NaN` cells left empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| fmt_cell(*x)))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv is ascii"))
    }

    /// Writes the CSV to `path` and the provenance next to it as
    /// `<path>.provenance.json`.
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        let mut side = path.as_os_str().to_owned();
        side.push(".provenance.json");
        let mut f = std::fs::File::create(PathBuf::from(side))?;
        serde_json::to_writer_pretty(&mut f, &self.provenance)?;
        writeln!(f)?;
        Ok(())
    }
}

fn fmt_cell(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        let s = format!("{x:.6}");
        if s == "-0.000000" {
            "0.000000".into()
        } else {
            s
        }
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn hash_scenarios<'a>(scenarios: impl IntoIterator<Item = &'a Scenario>) -> String {
    let mut h = Sha256::new();
    for s in scenarios {
        h.update(s.to_json().as_bytes());
    }
    let mut out = String::with_capacity(64);
    for b in h.finalize() {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

fn default_ladder(m: usize) -> Result<TypeLadder> {
    let all_w = [1.0, 3.0, 9.0, 27.0];
    let all_r = [3.0, 6.0, 9.0, 12.0];
    let all_min = [20.0, 60.0, 100.0, 140.0];
    let w = all_w[..m].to_vec();
    let theta = make_theta_ladder(&w, 4, THETA_SPREAD)?;
    TypeLadder::new(w, theta, all_r[..m].to_vec(), all_min[..m].to_vec())
}

/// The default setting with `n` CIs and seed 42.
pub fn default_scenario(n: usize) -> Result<Scenario> {
    default_scenario_seeded(n, DEFAULT_SEED)
}

/// Three vulnerability levels `w = (1, 3, 9)` with four criticality levels,
/// rates `(3, 6, 9)`, minimums `(20, 60, 100)`, `v = 2`, `β = 0.5` and a
/// budget of 500.
///
/// CI `i` is believed most likely to sit on vulnerability level `i mod 3`
/// and on a random criticality level. Its belief rows and true type come
/// from a generator stream of its own, so the first `n` CIs are the same
/// for every larger `n`. True types are drawn from the beliefs.
pub fn default_scenario_seeded(n: usize, seed: u64) -> Result<Scenario> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one CI".into()));
    }
    let ladder = default_ladder(3)?;
    let (m, k) = (ladder.m(), ladder.k());
    let mut p = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let theta_at = rand::Rng::gen_range(&mut rng, 0..k);
        let p_row = random_row_peaked_at(&mut rng, m, i % m);
        let q_row = random_row_peaked_at(&mut rng, k, theta_at);
        let w = WeightedIndex::new(&p_row)
            .expect("row is stochastic")
            .sample(&mut rng);
        let t = WeightedIndex::new(&q_row)
            .expect("row is stochastic")
            .sample(&mut rng);
        p.push(p_row);
        q.push(q_row);
        truth.push(TypeIndex::new(w, t));
    }
    Scenario::new(
        ladder,
        BeliefMatrix::new(p, q)?,
        truth,
        DEFAULT_BUDGET,
        0.5,
        2.0,
    )
}

/// Four CIs on four vulnerability levels `w = (1, 3, 9, 27)` with minimums
/// `(20, 60, 100, 140)` and a budget of 650. CI `i` truly has type `(i, i)`
/// and the beliefs put 0.7 on it, the rest spread evenly.
pub fn fig2_scenario() -> Result<Scenario> {
    let ladder = default_ladder(4)?;
    let n = 4;
    let p = (0..n).map(|i| concentrated_row(4, i, FIG2_MODAL)).collect();
    let q = (0..n).map(|i| concentrated_row(4, i, FIG2_MODAL)).collect();
    let truth = (0..n).map(|i| TypeIndex::new(i, i)).collect();
    Scenario::new(
        ladder,
        BeliefMatrix::new(p, q)?,
        truth,
        FIG2_BUDGET,
        0.5,
        2.0,
    )
}

/// Budget used for `n` CIs in the growing series.
pub fn grown_budget(n: usize, n_first: usize) -> f64 {
    DEFAULT_BUDGET * (1.0 + GROWTH_PER_CI * n.saturating_sub(n_first) as f64)
}

struct Comparison {
    feasible: bool,
    optimal: f64,
    equal: f64,
    equal_meets_minimums: bool,
}

fn compare_with_equal(s: &Scenario) -> Result<Comparison> {
    let equal_menu = equal_allocation(s);
    let equal = cc_expected_utility(&equal_menu, &s.beliefs, &s.ladder)?;
    let share = s.t_max / s.n() as f64;
    let equal_meets_minimums = s
        .assigned_types()
        .iter()
        .all(|&t| share >= s.ladder.min_resources(t));
    let result = solve_optimal(s)?;
    Ok(Comparison {
        feasible: result.is_optimal(),
        optimal: result.objective.unwrap_or(f64::NAN),
        equal,
        equal_meets_minimums,
    })
}

/// CC utility of the optimal menu against equal allocation as the number
/// of CIs grows, under a fixed and a growing budget.
///
/// Rows with no feasible menu carry `feasible = 0` and empty utilities.
/// `reported_ratio` is filled at `n = 3` only.
pub fn experiment_fig1(config: &ExperimentConfig) -> Result<ResultTable> {
    config.check()?;
    if config.n_min < 3 {
        return Err(Error::InvalidArgument("fig1 starts at three CIs".into()));
    }
    let fixed = matches!(config.budget, BudgetMode::Fixed | BudgetMode::Both);
    let grow = matches!(config.budget, BudgetMode::Grow | BudgetMode::Both);
    let mut columns = vec!["n"];
    if fixed {
        columns.extend([
            "t_max_fixed",
            "cc_optimal_fixed",
            "cc_equal_fixed",
            "ratio_fixed",
            "feasible_fixed",
            "equal_meets_minimums_fixed",
        ]);
    }
    if grow {
        columns.extend([
            "t_max_grow",
            "cc_optimal_grow",
            "cc_equal_grow",
            "ratio_grow",
            "feasible_grow",
            "equal_meets_minimums_grow",
        ]);
    }
    columns.push("reported_ratio");

    let mut scenarios = Vec::new();
    let mut rows = Vec::new();
    for n in config.n_min..=config.n_max {
        let base = default_scenario_seeded(n, config.seed)?;
        let mut row = vec![n as f64];
        let mut budgets = Vec::new();
        if fixed {
            budgets.push(DEFAULT_BUDGET);
        }
        if grow {
            budgets.push(grown_budget(n, 3));
        }
        for t_max in budgets {
            let s = base.clone().with_t_max(t_max);
            let c = compare_with_equal(&s)?;
            row.extend([
                t_max,
                c.optimal,
                c.equal,
                c.optimal / c.equal,
                flag(c.feasible),
                flag(c.equal_meets_minimums),
            ]);
            scenarios.push(s);
        }
        row.push(if n == 3 {
            REPORTED_RATIO_AT_3
        } else {
            f64::NAN
        });
        rows.push(row);
    }

    let mut table = ResultTable::new(
        &columns,
        Provenance {
            experiment: "fig1".into(),
            seed: config.seed,
            scenario_sha256: hash_scenarios(&scenarios),
            note: W_LEVELS_NOTE.into(),
        },
    );
    for r in rows {
        table.push(r);
    }
    Ok(table)
}

/// `θwvT − βR` for the true type of `ci` at the entry designed for `of`.
fn entry_utility(s: &Scenario, ci: usize, menu: &ContractMenu, of: usize) -> f64 {
    let e = menu.entry_for(of).expect("menu covers every CI");
    let ty = s.true_types[ci];
    s.ladder.theta(ty) * s.ladder.w(ty) * s.v * e.t - s.beta * e.reward
}

/// Realized utility of each CI (by true type) under the optimal menu and
/// under equal allocation. An infeasible design leaves the CI with nothing.
pub fn fig2_table(s: &Scenario, seed: u64) -> Result<ResultTable> {
    let optimal = solve_optimal(s)?.menu;
    let equal = equal_allocation(s);
    let mut table = ResultTable::new(
        &[
            "ci",
            "true_w_level",
            "true_theta_level",
            "t_optimal",
            "u_optimal",
            "t_equal",
            "u_equal",
        ],
        Provenance {
            experiment: "fig2".into(),
            seed,
            scenario_sha256: hash_scenarios([s]),
            note: W_LEVELS_NOTE.into(),
        },
    );
    for ci in 0..s.n() {
        let (t_opt, u_opt) = match &optimal {
            Some(m) => (m.entry_for(ci).unwrap().t, entry_utility(s, ci, m, ci)),
            None => (0.0, 0.0),
        };
        let ty = s.true_types[ci];
        table.push(vec![
            (ci + 1) as f64,
            (ty.w + 1) as f64,
            (ty.theta + 1) as f64,
            t_opt,
            u_opt,
            equal.entry_for(ci).unwrap().t,
            entry_utility(s, ci, &equal, ci),
        ]);
    }
    Ok(table)
}

/// Utility of CI `i` (true type) when it takes the entry designed for CI
/// `j`, for every pair. Columns are `ci` then `entry_1..entry_N`.
pub fn fig3_table(s: &Scenario, seed: u64) -> Result<ResultTable> {
    let menu = solve_optimal(s)?
        .menu
        .ok_or_else(|| Error::InvalidScenario("fig3 needs a feasible design".into()))?;
    fig3_matrix_table(s, &menu, seed)
}

/// The fig3 matrix for an arbitrary menu over all CIs of `s`.
pub fn fig3_matrix_table(s: &Scenario, menu: &ContractMenu, seed: u64) -> Result<ResultTable> {
    let names: Vec<String> = (1..=s.n()).map(|j| format!("entry_{j}")).collect();
    let mut columns = vec!["ci"];
    columns.extend(names.iter().map(String::as_str));
    let mut table = ResultTable::new(
        &columns,
        Provenance {
            experiment: "fig3".into(),
            seed,
            scenario_sha256: hash_scenarios([s]),
            note: W_LEVELS_NOTE.into(),
        },
    );
    for i in 0..s.n() {
        let mut row = vec![(i + 1) as f64];
        row.extend((0..s.n()).map(|j| entry_utility(s, i, menu, j)));
        table.push(row);
    }
    Ok(table)
}

pub fn experiment_fig2(config: &ExperimentConfig) -> Result<ResultTable> {
    config.check()?;
    fig2_table(&fig2_scenario()?, config.seed)
}

pub fn experiment_fig3(config: &ExperimentConfig) -> Result<ResultTable> {
    config.check()?;
    fig3_table(&fig2_scenario()?, config.seed)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    match config.id {
        ExperimentId::Fig1 => experiment_fig1(config),
        ExperimentId::Fig2 => experiment_fig2(config),
        ExperimentId::Fig3 => experiment_fig3(config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::validate_ladder;

    #[test]
    fn default_scenario_has_valid_ladder() {
        let s = default_scenario(3).unwrap();
        assert!(validate_ladder(&s.ladder).ok);
        assert_eq!(s.ladder.m(), 3);
        assert_eq!(s.ladder.k(), 4);
        assert_eq!(s.t_max, 500.0);
        assert_eq!(default_scenario(1).unwrap().n(), 1);
    }

    #[test]
    fn default_scenario_is_prefix_stable() {
        let small = default_scenario(3).unwrap();
        let big = default_scenario(7).unwrap();
        assert_eq!(big.subset(&[0, 1, 2]).unwrap(), small);
    }

    #[test]
    fn fig2_overrides() {
        let s = fig2_scenario().unwrap();
        assert_eq!(s.ladder.w_levels(), &[1.0, 3.0, 9.0, 27.0]);
        assert_eq!(s.ladder.t_min(), &[20.0, 60.0, 100.0, 140.0]);
        assert_eq!(s.t_max, 650.0);
        assert_eq!(s.assigned_types(), s.true_types);
    }

    #[test]
    fn equal_against_itself_is_one() {
        let s = default_scenario(3).unwrap();
        let m = equal_allocation(&s);
        let u = cc_expected_utility(&m, &s.beliefs, &s.ladder).unwrap();
        assert_eq!(u / u, 1.0);
    }

    #[test]
    fn zero_budget_gives_zero_utilities() {
        let s = fig2_scenario().unwrap().with_t_max(0.0);
        let t = fig2_table(&s, 0).unwrap();
        assert!(t.column("u_optimal").unwrap().iter().all(|&u| u == 0.0));
        assert!(t.column("u_equal").unwrap().iter().all(|&u| u == 0.0));
    }

    #[test]
    fn constant_menu_gives_constant_rows() {
        let s = fig2_scenario().unwrap();
        let mut m = equal_allocation(&s);
        for e in &mut m.entries {
            e.reward = 500.0;
        }
        let t = fig3_matrix_table(&s, &m, 0).unwrap();
        for row in &t.rows {
            assert!(row[1..].iter().all(|&x| x == row[1]));
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = ResultTable::new(
            &["a", "b"],
            Provenance {
                experiment: "x".into(),
                seed: 1,
                scenario_sha256: String::new(),
                note: String::new(),
            },
        );
        t.push(vec![1.0, f64::NAN]);
        t.push(vec![-0.0, 2.5]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n1.000000,\n0.000000,2.500000\n");
    }
}
