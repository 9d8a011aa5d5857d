//! Optimal contract menus.
//!
//! With linear rewards and valuations the control center's expected
//! utility is `Σ_i c_i T_i` and every relaxed constraint is linear in `T`,
//! so the design problem is a small LP. Three routes are provided: the
//! two-CI closed form, the general LP, and an exhaustive grid search used
//! to cross-check the LP.

use serde::Serialize;

use crate::domain::{cc_expected_utility, ContractMenu, Scenario, TypeIndex};
use crate::error::{Error, Result};
use crate::feasibility::{
    build_relaxed_constraints, ConstraintLabel, ConstraintSet, Sense, Valuation, SLACK_TOL,
};
use crate::lp::{self, LinearProgram, LpOutcome, Row, RowSense};

const GRID_LIMIT: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InfeasibilityReason {
    /// The minimum resources of the CIs exceed the budget.
    BudgetBelowMinimums { required: f64, available: f64 },
    /// The lowest CI values resources below what it pays for them, so its IR
    /// constraint forces zero resources while its minimum is positive.
    /// Rates, levels or `β` need adjusting.
    LowestIrUnsatisfiable { ci: usize, margin: f64 },
    /// Minimums and budget fit, but no allocation meets the incentive constraints.
    IncentiveConstraints,
    /// The grid search found no admissible point.
    EmptyGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Multiplier {
    pub label: ConstraintLabel,
    pub value: f64,
}

/// Lagrange multipliers of the relaxed problem at a reported solution.
///
/// Stationarity reads `c + Σ μ_k ∇g_k − λ·1 = 0` with every inequality
/// written as `g_k(T) ≥ 0` and `λ` the multiplier of the budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktDiagnostics {
    pub lambda: f64,
    pub multipliers: Vec<Multiplier>,
    /// Largest `|∂L/∂T_i|`.
    pub stationarity_residual: f64,
    /// Largest `|μ_k g_k(T)|`.
    pub complementary_slackness_residual: f64,
    /// Smallest constraint slack at the point (negative if infeasible).
    pub min_primal_slack: f64,
}

impl KktDiagnostics {
    pub fn multiplier(&self, label: ConstraintLabel) -> Option<f64> {
        self.multipliers
            .iter()
            .find(|m| m.label == label)
            .map(|m| m.value)
    }

    pub fn min_multiplier(&self) -> f64 {
        self.multipliers
            .iter()
            .map(|m| m.value)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<InfeasibilityReason>,
    pub menu: Option<ContractMenu>,
    /// Expected control-center utility of the menu.
    pub objective: Option<f64>,
    pub diagnostics: Option<KktDiagnostics>,
}

impl SolveResult {
    fn infeasible(reason: InfeasibilityReason) -> Self {
        Self {
            status: SolveStatus::Infeasible,
            reason: Some(reason),
            menu: None,
            objective: None,
            diagnostics: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Resources in menu order; empty when infeasible.
    pub fn resources(&self) -> Vec<f64> {
        self.menu
            .as_ref()
            .map(ContractMenu::resources)
            .unwrap_or_default()
    }
}

/// Per-CI objective weight `c_i = (Σ_k q_ik θ_k)(Σ_j p_ij w_j (r_j − 1))`,
/// indexed by CI id.
pub fn lp_coefficients(scenario: &Scenario) -> Vec<f64> {
    let ladder = &scenario.ladder;
    let b = &scenario.beliefs;
    (0..scenario.n())
        .map(|i| {
            let weight: f64 = b.p()[i]
                .iter()
                .zip(ladder.w_levels())
                .zip(ladder.reward_rates())
                .map(|((p, w), r)| p * w * (r - 1.0))
                .sum();
            b.expected_theta(i, ladder) * weight
        })
        .collect()
}

/// `Σ |c_i|`, the Lipschitz constant of the objective in the ℓ∞ norm.
pub fn lipschitz_bound(scenario: &Scenario) -> f64 {
    lp_coefficients(scenario).iter().map(|c| c.abs()).sum()
}

struct Prepared {
    order: Vec<usize>,
    assigned: Vec<TypeIndex>,
    t_min: Vec<f64>,
    constraints: ConstraintSet,
}

fn prepare(scenario: &Scenario) -> Result<Prepared> {
    scenario.ladder.ensure_valid()?;
    let order = scenario.ladder_order();
    let assigned = scenario.assigned_types();
    let constraints = build_relaxed_constraints(scenario, &order, &assigned)?;
    let t_min = order
        .iter()
        .map(|&i| scenario.ladder.min_resources(assigned[i]))
        .collect();
    Ok(Prepared {
        order,
        assigned,
        t_min,
        constraints,
    })
}

/// Reasons that can be decided before any optimisation.
fn quick_infeasibility(scenario: &Scenario, prep: &Prepared) -> Option<InfeasibilityReason> {
    let required: f64 = prep.t_min.iter().sum();
    if required > scenario.t_max + SLACK_TOL {
        return Some(InfeasibilityReason::BudgetBelowMinimums {
            required,
            available: scenario.t_max,
        });
    }
    let lowest = prep.order[0];
    let val = Valuation::of(
        &scenario.ladder,
        prep.assigned[lowest],
        scenario.beta,
        scenario.v,
    );
    let margin = val.value - val.cost;
    if margin < 0.0 && prep.t_min[0] > 0.0 {
        return Some(InfeasibilityReason::LowestIrUnsatisfiable { ci: lowest, margin });
    }
    None
}

fn finish(
    scenario: &Scenario,
    prep: &Prepared,
    t: &[f64],
    diagnostics: Option<KktDiagnostics>,
) -> Result<SolveResult> {
    let menu = ContractMenu::from_allocation(&scenario.ladder, &prep.order, &prep.assigned, t);
    let objective = cc_expected_utility(&menu, &scenario.beliefs, &scenario.ladder)?;
    Ok(SolveResult {
        status: SolveStatus::Optimal,
        reason: None,
        menu: Some(menu),
        objective: Some(objective),
        diagnostics,
    })
}

/// Evaluates KKT residuals for multipliers given per constraint of `set`
/// (the budget entry is `λ`).
fn kkt_diagnostics(set: &ConstraintSet, c: &[f64], t: &[f64], values: &[f64]) -> KktDiagnostics {
    let n = set.n_vars();
    let mut grad = c.to_vec();
    let mut lambda = 0.0;
    let mut multipliers = Vec::new();
    let mut cs: f64 = 0.0;
    let mut min_slack = f64::INFINITY;
    for (con, &mu) in set.constraints.iter().zip(values) {
        min_slack = min_slack.min(con.slack(t));
        if con.sense == Sense::Eq {
            lambda = mu;
            for g in grad.iter_mut() {
                *g -= mu;
            }
            continue;
        }
        for k in 0..n {
            grad[k] += mu * con.coeffs[k];
        }
        cs = cs.max((mu * (con.lhs(t) - con.bound)).abs());
        multipliers.push(Multiplier {
            label: con.label,
            value: mu,
        });
    }
    KktDiagnostics {
        lambda,
        multipliers,
        stationarity_residual: grad.iter().fold(0.0, |a, g| a.max(g.abs())),
        complementary_slackness_residual: cs,
        min_primal_slack: min_slack,
    }
}

/// Closed form for two CIs: the lower CI gets its minimum and the upper CI
/// the rest of the budget. Infeasible only when the two minimums exceed
/// the budget; incentive constraints are not re-checked here.
pub fn solve_two_ci(scenario: &Scenario) -> Result<SolveResult> {
    if scenario.n() != 2 {
        return Err(Error::NotTwoCi(scenario.n()));
    }
    let prep = prepare(scenario)?;
    let required = prep.t_min[0] + prep.t_min[1];
    if required > scenario.t_max + SLACK_TOL {
        return Ok(SolveResult::infeasible(
            InfeasibilityReason::BudgetBelowMinimums {
                required,
                available: scenario.t_max,
            },
        ));
    }
    let t = [prep.t_min[0], scenario.t_max - prep.t_min[0]];
    let c_all = lp_coefficients(scenario);
    let c = [c_all[prep.order[0]], c_all[prep.order[1]]];
    // With c_hi ≥ c_lo the budget multiplier is c_hi, the lower minimum
    // absorbs the difference, and every other multiplier is zero.
    let diagnostics = (c[1] >= c[0]).then(|| {
        let values: Vec<f64> = prep
            .constraints
            .constraints
            .iter()
            .map(|con| match con.label {
                ConstraintLabel::Budget => c[1],
                ConstraintLabel::Min(ci) if ci == prep.order[0] => c[1] - c[0],
                _ => 0.0,
            })
            .collect();
        kkt_diagnostics(&prep.constraints, &c, &t, &values)
    });
    finish(scenario, &prep, &t, diagnostics)
}

/// Maximises expected control-center utility over the relaxed constraint
/// set. Among several optimal menus, returns the one with the smallest
/// resources for the lowest CI, then the next, and so on.
pub fn solve_optimal(scenario: &Scenario) -> Result<SolveResult> {
    let prep = prepare(scenario)?;
    if let Some(reason) = quick_infeasibility(scenario, &prep) {
        return Ok(SolveResult::infeasible(reason));
    }
    let n = prep.order.len();
    let c_all = lp_coefficients(scenario);
    let c: Vec<f64> = prep.order.iter().map(|&i| c_all[i]).collect();

    // Substitute T = t_min + x so the minimums become x ≥ 0.
    let mut rows = Vec::new();
    let mut row_of = Vec::new();
    for (idx, con) in prep.constraints.constraints.iter().enumerate() {
        if matches!(con.label, ConstraintLabel::Min(_)) {
            continue;
        }
        let shift: f64 = con.coeffs.iter().zip(&prep.t_min).map(|(a, t)| a * t).sum();
        rows.push(Row {
            coeffs: con.coeffs.clone(),
            sense: match con.sense {
                Sense::Ge => RowSense::Ge,
                Sense::Eq => RowSense::Eq,
            },
            rhs: con.bound - shift,
        });
        row_of.push(idx);
    }
    let program = LinearProgram {
        objective: c.clone(),
        rows,
    };
    let sol = match lp::maximize(&program, true) {
        LpOutcome::Optimal(sol) => sol,
        LpOutcome::Infeasible => {
            return Ok(SolveResult::infeasible(
                InfeasibilityReason::IncentiveConstraints,
            ))
        }
        LpOutcome::Unbounded => {
            return Err(Error::Numerical(
                "relaxed problem reported unbounded".into(),
            ))
        }
        LpOutcome::IterationLimit => {
            return Err(Error::Numerical("simplex iteration limit reached".into()))
        }
    };
    let t: Vec<f64> = sol.x.iter().zip(&prep.t_min).map(|(x, m)| x + m).collect();

    let mut values = vec![0.0; prep.constraints.constraints.len()];
    for (row, &idx) in row_of.iter().enumerate() {
        values[idx] = match prep.constraints.constraints[idx].sense {
            Sense::Eq => sol.duals[row],
            Sense::Ge => -sol.duals[row],
        };
    }
    for (k, &ci) in prep.order.iter().enumerate() {
        let idx = prep
            .constraints
            .constraints
            .iter()
            .position(|con| con.label == ConstraintLabel::Min(ci))
            .expect("every CI has a minimum");
        values[idx] = -sol.reduced_costs[k];
    }
    let diagnostics = kkt_diagnostics(&prep.constraints, &c, &t, &values);
    debug_assert_eq!(t.len(), n);
    finish(scenario, &prep, &t, Some(diagnostics))
}

/// Smallest budget for which the relaxed problem is feasible, or `None`
/// when no budget works. The incentive constraints are homogeneous in `T`,
/// so every budget at or above this value is feasible as well.
pub fn minimum_budget(scenario: &Scenario) -> Result<Option<f64>> {
    let prep = prepare(scenario)?;
    let n = prep.order.len();
    let rows = prep
        .constraints
        .constraints
        .iter()
        .filter(|con| con.sense == Sense::Ge && !matches!(con.label, ConstraintLabel::Min(_)))
        .map(|con| {
            let shift: f64 = con.coeffs.iter().zip(&prep.t_min).map(|(a, t)| a * t).sum();
            Row {
                coeffs: con.coeffs.clone(),
                sense: RowSense::Ge,
                rhs: con.bound - shift,
            }
        })
        .collect();
    let program = LinearProgram {
        objective: vec![-1.0; n],
        rows,
    };
    match lp::maximize(&program, false) {
        LpOutcome::Optimal(sol) => Ok(Some(prep.t_min.iter().sum::<f64>() - sol.objective)),
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::Numerical("minimum budget unbounded below".into())),
        LpOutcome::IterationLimit => {
            Err(Error::Numerical("simplex iteration limit reached".into()))
        }
    }
}

/// Exhaustive search over allocations `T_i = t_min,i + k_i·step` for every
/// CI but the highest, which takes what is left of the budget. Keeps the
/// admissible point with the largest expected utility; ties go to the
/// first point in lexicographic order.
pub fn brute_force_oracle(scenario: &Scenario, step: f64) -> Result<SolveResult> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "grid step must be positive, got {step}"
        )));
    }
    let prep = prepare(scenario)?;
    let n = prep.order.len();
    let spare = scenario.t_max - prep.t_min.iter().sum::<f64>();
    if spare < -SLACK_TOL {
        return Ok(SolveResult::infeasible(InfeasibilityReason::EmptyGrid));
    }
    let units = (spare.max(0.0) / step + 1e-9).floor() as u64;
    let points = grid_points(units, n);
    if points > GRID_LIMIT {
        return Err(Error::GridTooLarge(points));
    }

    // Each inequality is checked as soon as every variable it touches is set.
    let mut by_depth: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (idx, con) in prep.constraints.constraints.iter().enumerate() {
        if con.sense == Sense::Eq || matches!(con.label, ConstraintLabel::Min(_)) {
            continue;
        }
        let last = con.coeffs.iter().rposition(|a| *a != 0.0).unwrap_or(0);
        by_depth[last].push(idx);
    }

    // Expected utility straight from the belief sums, per CI in ladder order.
    let beliefs = &scenario.beliefs;
    let ladder = &scenario.ladder;
    let utility = |t: &[f64]| -> f64 {
        prep.order
            .iter()
            .zip(t)
            .map(|(&ci, &t)| {
                let theta_bar = beliefs.expected_theta(ci, ladder);
                let inner: f64 = (0..ladder.m())
                    .map(|j| {
                        beliefs.p()[ci][j]
                            * ladder.w_levels()[j]
                            * (ladder.reward_rates()[j] * t - t)
                    })
                    .sum();
                theta_bar * inner
            })
            .sum()
    };

    let mut search = GridSearch {
        constraints: &prep.constraints,
        by_depth: &by_depth,
        t_min: &prep.t_min,
        t_max: scenario.t_max,
        step,
        t: vec![0.0; n],
        best: None,
        utility: &utility,
    };
    search.descend(0, units);
    match search.best {
        Some((_, t)) => finish(scenario, &prep, &t, None),
        None => Ok(SolveResult::infeasible(InfeasibilityReason::EmptyGrid)),
    }
}

fn grid_points(units: u64, n: usize) -> u128 {
    // C(units + n − 1, n − 1)
    let k = n.saturating_sub(1) as u128;
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc.saturating_mul(units as u128 + i) / i;
        if acc > GRID_LIMIT * 10 {
            return acc;
        }
    }
    acc
}

struct GridSearch<'a, F: Fn(&[f64]) -> f64> {
    constraints: &'a ConstraintSet,
    by_depth: &'a [Vec<usize>],
    t_min: &'a [f64],
    t_max: f64,
    step: f64,
    t: Vec<f64>,
    best: Option<(f64, Vec<f64>)>,
    utility: &'a F,
}

impl<F: Fn(&[f64]) -> f64> GridSearch<'_, F> {
    fn admissible(&self, depth: usize) -> bool {
        self.by_depth[depth]
            .iter()
            .all(|&idx| self.constraints.constraints[idx].slack(&self.t) >= -SLACK_TOL)
    }

    fn descend(&mut self, depth: usize, units_left: u64) {
        let n = self.t.len();
        if depth == n - 1 {
            let used: f64 = self.t[..depth].iter().sum();
            self.t[depth] = self.t_max - used;
            if self.admissible(depth) {
                let u = (self.utility)(&self.t);
                if self.best.as_ref().is_none_or(|(b, _)| u > *b) {
                    self.best = Some((u, self.t.clone()));
                }
            }
            return;
        }
        for k in 0..=units_left {
            self.t[depth] = self.t_min[depth] + k as f64 * self.step;
            if self.admissible(depth) {
                self.descend(depth + 1, units_left - k);
            }
        }
    }
}

/// Splits the budget evenly. No feasibility claims are made.
pub fn equal_allocation(scenario: &Scenario) -> ContractMenu {
    let order = scenario.ladder_order();
    let share = scenario.t_max / scenario.n() as f64;
    ContractMenu::from_allocation(
        &scenario.ladder,
        &order,
        &scenario.assigned_types(),
        &vec![share; order.len()],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BeliefMatrix, TypeLadder};
    use crate::feasibility::{check_ic_full, check_monotonicity};

    fn default_ladder() -> TypeLadder {
        TypeLadder::new(
            vec![1.0, 3.0, 9.0],
            vec![1.0, 1.2],
            vec![3.0, 6.0, 9.0],
            vec![20.0, 60.0, 100.0],
        )
        .unwrap()
    }

    fn point_mass(types: Vec<TypeIndex>, t_max: f64) -> Scenario {
        let l = default_ladder();
        let b = BeliefMatrix::point_mass(&types, l.m(), l.k()).unwrap();
        Scenario::new(l, b, types, t_max, 0.5, 2.0).unwrap()
    }

    fn two_ci(t_min: [f64; 2], t_max: f64) -> Scenario {
        let l = TypeLadder::new(vec![1.0, 3.0], vec![1.0], vec![3.0, 6.0], t_min.to_vec()).unwrap();
        let types = vec![TypeIndex::new(0, 0), TypeIndex::new(1, 0)];
        let b = BeliefMatrix::point_mass(&types, 2, 1).unwrap();
        Scenario::new(l, b, types, t_max, 0.5, 2.0).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let r = solve_two_ci(&two_ci([20.0, 60.0], 500.0)).unwrap();
        assert_eq!(r.resources(), vec![20.0, 480.0]);
        let r = solve_two_ci(&two_ci([300.0, 300.0], 500.0)).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        let r = solve_two_ci(&two_ci([250.0, 250.0], 500.0)).unwrap();
        assert_eq!(r.resources(), vec![250.0, 250.0]);
    }

    #[test]
    fn closed_form_needs_two() {
        let s = point_mass(vec![TypeIndex::new(0, 0)], 100.0);
        assert!(matches!(solve_two_ci(&s), Err(Error::NotTwoCi(1))));
    }

    #[test]
    fn lp_matches_closed_form_for_default_pair() {
        let s = two_ci([20.0, 60.0], 500.0);
        let lp = solve_optimal(&s).unwrap();
        let cf = solve_two_ci(&s).unwrap();
        for (a, b) in lp.resources().iter().zip(cf.resources()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn two_ci_kkt_matches_printed_stationarity() {
        // With a single θ level the expected-θ factor is 1, so c_i is the
        // belief sum written in the two-CI Lagrangian.
        let s = two_ci([20.0, 60.0], 500.0);
        let beta = s.beta;
        let v = s.v;
        let (w1, w2, r1, r2, th) = (1.0, 3.0, 3.0, 6.0, 1.0);
        for r in [solve_optimal(&s).unwrap(), solve_two_ci(&s).unwrap()] {
            let d = r.diagnostics.clone().expect("multipliers");
            let t = r.resources();
            let mu1 = d.multiplier(ConstraintLabel::Ir(0)).unwrap();
            let mu2 = d.multiplier(ConstraintLabel::Dlic(1)).unwrap();
            let mu3 = d.multiplier(ConstraintLabel::Min(0)).unwrap();
            let mu4 = d.multiplier(ConstraintLabel::Min(1)).unwrap();
            let ulic = d.multiplier(ConstraintLabel::Ulic(0)).unwrap();
            assert!(ulic.abs() < 1e-9);
            let lambda = d.lambda;
            let c1 = w1 * (r1 - 1.0);
            let c2 = w2 * (r2 - 1.0);
            let st1 = c1 + mu1 * (th * w1 * v - beta * r1) + mu2 * (beta * r1 - th * w2 * v) + mu3
                - lambda;
            let st2 = c2 + mu2 * (th * w2 * v - beta * r2) + mu4 - lambda;
            assert!(st1.abs() < 1e-6 && st2.abs() < 1e-6, "{st1} {st2}");
            assert!((mu1 * (th * w1 * v * t[0] - beta * r1 * t[0])).abs() < 1e-6);
            assert!(
                (mu2 * (th * w2 * (v * t[1] - v * t[0]) - beta * (r2 * t[1] - r1 * t[0]))).abs()
                    < 1e-6
            );
            assert!((mu3 * (t[0] - 20.0)).abs() < 1e-6);
            assert!((mu4 * (t[1] - 60.0)).abs() < 1e-6);
            for mu in [mu1, mu2, mu3, mu4] {
                assert!(mu >= -1e-9);
            }
            assert!(d.complementary_slackness_residual <= 1e-6);
            assert!(d.stationarity_residual <= 1e-6);
        }
    }

    #[test]
    fn single_ci_takes_whole_budget() {
        let s = point_mass(vec![TypeIndex::new(1, 0)], 500.0);
        let r = solve_optimal(&s).unwrap();
        assert_eq!(r.resources(), vec![500.0]);
        let s = point_mass(vec![TypeIndex::new(1, 0)], 50.0);
        assert_eq!(solve_optimal(&s).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn three_ci_default_against_grid() {
        let s = point_mass(
            vec![
                TypeIndex::new(0, 0),
                TypeIndex::new(1, 0),
                TypeIndex::new(2, 0),
            ],
            500.0,
        );
        let lp = solve_optimal(&s).unwrap();
        let grid = brute_force_oracle(&s, 1.0).unwrap();
        assert!(lp.is_optimal() && grid.is_optimal());
        let (a, b) = (lp.objective.unwrap(), grid.objective.unwrap());
        assert!(a >= b - 1e-6 && a <= b + lipschitz_bound(&s), "{a} vs {b}");
        assert!((lp.resources()[0] - 20.0).abs() < 1e-9);
        let menu = lp.menu.unwrap();
        assert!(check_monotonicity(&menu, &s.ladder, 0.5, 2.0).satisfied);
        assert!(check_ic_full(&menu, &s.ladder, 0.5, 2.0).satisfied);
    }

    #[test]
    fn oracle_edge_cases() {
        let s = two_ci([20.0, 60.0], 500.0);
        assert_eq!(
            brute_force_oracle(&s, 1.0).unwrap().resources(),
            vec![20.0, 480.0]
        );
        let one = point_mass(vec![TypeIndex::new(0, 0)], 500.0);
        assert_eq!(
            brute_force_oracle(&one, 500.0).unwrap().resources(),
            vec![500.0]
        );
        let tight = two_ci([300.0, 300.0], 500.0);
        let r = brute_force_oracle(&tight, 1.0).unwrap();
        assert_eq!(r.reason, Some(InfeasibilityReason::EmptyGrid));
        let big = point_mass(vec![TypeIndex::new(0, 0); 6], 1e6);
        assert!(matches!(
            brute_force_oracle(&big, 0.5),
            Err(Error::GridTooLarge(_))
        ));
        assert!(brute_force_oracle(&s, 0.0).is_err());
    }

    #[test]
    fn equal_split() {
        let s = point_mass(vec![TypeIndex::new(0, 0); 4], 500.0);
        assert_eq!(equal_allocation(&s).resources(), vec![125.0; 4]);
        let s = point_mass(vec![TypeIndex::new(0, 0)], 500.0);
        assert_eq!(equal_allocation(&s).resources(), vec![500.0]);
        let s = point_mass(vec![TypeIndex::new(0, 0); 3], 500.0);
        assert_eq!(equal_allocation(&s).resources(), vec![500.0 / 3.0; 3]);
    }

    #[test]
    fn lowest_ir_failure_is_distinguished() {
        // θ·w·v = 1·1·1 = 1 < β·r = 0.5·3
        let l = default_ladder();
        let types = vec![TypeIndex::new(0, 0), TypeIndex::new(1, 0)];
        let b = BeliefMatrix::point_mass(&types, l.m(), l.k()).unwrap();
        let s = Scenario::new(l, b, types, 500.0, 0.5, 1.0).unwrap();
        let r = solve_optimal(&s).unwrap();
        assert!(matches!(
            r.reason,
            Some(InfeasibilityReason::LowestIrUnsatisfiable { ci: 0, .. })
        ));
    }

    #[test]
    fn flat_objective_gives_lexicographic_minimum() {
        // Identical CIs share one coefficient; the local constraints force an even split.
        let l = TypeLadder::new(vec![1.0], vec![1.0], vec![3.0], vec![10.0]).unwrap();
        let types = vec![TypeIndex::new(0, 0); 3];
        let b = BeliefMatrix::point_mass(&types, 1, 1).unwrap();
        let s = Scenario::new(l, b, types, 90.0, 0.5, 2.0).unwrap();
        let r = solve_optimal(&s).unwrap();
        assert_eq!(r.resources(), vec![30.0, 30.0, 30.0]);
    }

    #[test]
    fn envy_binds_when_low_type_values_upper_contract() {
        // θ_1 w_1 v = 2·1·4 = 8 exceeds β r_2 = 0.5·6, so the lower CI would
        // take the upper entry unless it receives more than its minimum.
        let l = TypeLadder::new(
            vec![1.0, 3.0],
            vec![1.0, 2.0],
            vec![3.0, 6.0],
            vec![20.0, 60.0],
        )
        .unwrap();
        let types = vec![TypeIndex::new(0, 1), TypeIndex::new(1, 0)];
        let b = BeliefMatrix::point_mass(&types, 2, 2).unwrap();
        let s = Scenario::new(l, b, types, 500.0, 0.5, 4.0).unwrap();
        let lp = solve_optimal(&s).unwrap();
        assert!(lp.is_optimal());
        assert!(lp.resources()[0] > 20.0 + 1.0);
        let d = lp.diagnostics.unwrap();
        assert!(d.multiplier(ConstraintLabel::Ulic(0)).unwrap() > 0.0);
    }
}
