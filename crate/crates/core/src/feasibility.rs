//! Participation and truth-telling constraints on contract menus.
//!
//! The full system has one IR constraint per CI and an IC constraint for
//! every ordered pair. Once CIs are sorted by `θ·w`, the adjacent
//! (downward and upward) IC constraints plus IR of the lowest CI imply the
//! full system, which is what the solvers optimise over.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::domain::{ContractMenu, Scenario, TypeIndex, TypeLadder};
use crate::error::{Error, Result};
use crate::generate;

/// Absolute slack tolerance for every constraint check.
pub const SLACK_TOL: f64 = 1e-9;

/// Identifies a constraint. CI numbers are scenario CI ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintLabel {
    Ir(usize),
    /// CI `.0` prefers its own entry over the entry of CI `.1`.
    Ic(usize, usize),
    Dlic(usize),
    Ulic(usize),
    Min(usize),
    Budget,
    /// Resources do not decrease moving up to this CI.
    MonotoneResources(usize),
    /// Utility does not decrease moving up to this CI.
    MonotoneUtility(usize),
    /// Entry for this CI is out of composite-type order.
    Order(usize),
}

impl fmt::Display for ConstraintLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ir(i) => write!(f, "IR({i})"),
            Self::Ic(i, j) => write!(f, "IC({i},{j})"),
            Self::Dlic(i) => write!(f, "DLIC({i})"),
            Self::Ulic(i) => write!(f, "ULIC({i})"),
            Self::Min(i) => write!(f, "MIN({i})"),
            Self::Budget => write!(f, "BUDGET"),
            Self::MonotoneResources(i) => write!(f, "MONO_T({i})"),
            Self::MonotoneUtility(i) => write!(f, "MONO_U({i})"),
            Self::Order(i) => write!(f, "ORDER({i})"),
        }
    }
}

impl Serialize for ConstraintLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    /// `coeffs·T ≥ bound`
    Ge,
    /// `coeffs·T = bound`
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearConstraint {
    pub label: ConstraintLabel,
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub bound: f64,
}

impl LinearConstraint {
    pub fn lhs(&self, t: &[f64]) -> f64 {
        self.coeffs.iter().zip(t).map(|(a, x)| a * x).sum()
    }

    /// Positive or zero when satisfied.
    pub fn slack(&self, t: &[f64]) -> f64 {
        let d = self.lhs(t) - self.bound;
        match self.sense {
            Sense::Ge => d,
            Sense::Eq => -d.abs(),
        }
    }
}

/// Linear constraints over the resources `T` of the CIs in `order`
/// (variable `k` is the allocation of CI `order[k]`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintSet {
    pub order: Vec<usize>,
    pub constraints: Vec<LinearConstraint>,
}

impl ConstraintSet {
    pub fn n_vars(&self) -> usize {
        self.order.len()
    }

    pub fn count(&self, pred: impl Fn(&ConstraintLabel) -> bool) -> usize {
        self.constraints.iter().filter(|c| pred(&c.label)).count()
    }

    pub fn get(&self, label: ConstraintLabel) -> Option<&LinearConstraint> {
        self.constraints.iter().find(|c| c.label == label)
    }

    /// Evaluates every constraint at `t` (in variable order).
    pub fn evaluate(&self, t: &[f64]) -> FeasibilityReport {
        let mut report = FeasibilityReport::default();
        for c in &self.constraints {
            report.push(c.label, c.lhs(t), c.bound, c.slack(t));
        }
        report.finish()
    }

    /// Evaluates a menu whose entries follow `self.order`.
    pub fn evaluate_menu(&self, menu: &ContractMenu) -> Result<FeasibilityReport> {
        let ids: Vec<usize> = menu.entries.iter().map(|e| e.ci).collect();
        if ids != self.order {
            return Err(Error::DimensionMismatch(
                "menu entries do not follow the constraint order".into(),
            ));
        }
        Ok(self.evaluate(&menu.resources()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub label: ConstraintLabel,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FeasibilityReport {
    pub satisfied: bool,
    pub violations: Vec<Violation>,
    /// Smallest slack seen across all checked constraints (0 when nothing was checked).
    pub min_slack: f64,
    #[serde(skip)]
    checked: usize,
}

impl FeasibilityReport {
    fn push(&mut self, label: ConstraintLabel, lhs: f64, rhs: f64, slack: f64) {
        if self.checked == 0 || slack < self.min_slack {
            self.min_slack = slack;
        }
        self.checked += 1;
        if slack < -SLACK_TOL || slack.is_nan() {
            self.violations.push(Violation {
                label,
                lhs,
                rhs,
                slack,
            });
        }
    }

    fn finish(mut self) -> Self {
        self.satisfied = self.violations.is_empty();
        self
    }

    pub fn merge(mut self, other: FeasibilityReport) -> Self {
        if other.checked > 0 && (self.checked == 0 || other.min_slack < self.min_slack) {
            self.min_slack = other.min_slack;
        }
        self.checked += other.checked;
        self.violations.extend(other.violations);
        self.finish()
    }
}

/// `θ·w·v` and `β·r` of a type: the CI values `T` at the first and pays the second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Valuation {
    pub value: f64,
    pub cost: f64,
}

impl Valuation {
    pub fn of(ladder: &TypeLadder, ty: TypeIndex, beta: f64, v: f64) -> Self {
        Self {
            value: ladder.composite(ty) * v,
            cost: beta * ladder.rate(ty),
        }
    }

    /// Utility of this type when taking an entry with resources `t` and reward `reward`.
    pub fn utility(&self, t: f64, reward: f64, beta: f64) -> f64 {
        self.value * t - beta * reward
    }
}

/// IR under the assigned types: `θ_i w_i v T_i − β R_i ≥ 0` for every entry.
pub fn check_ir(menu: &ContractMenu, ladder: &TypeLadder, beta: f64, v: f64) -> FeasibilityReport {
    let mut report = FeasibilityReport::default();
    for e in &menu.entries {
        let u = Valuation::of(ladder, e.assigned, beta, v).utility(e.t, e.reward, beta);
        report.push(ConstraintLabel::Ir(e.ci), u, 0.0, u);
    }
    report.finish()
}

/// All `N(N−1)` IC constraints under the assigned types.
pub fn check_ic_full(
    menu: &ContractMenu,
    ladder: &TypeLadder,
    beta: f64,
    v: f64,
) -> FeasibilityReport {
    let mut report = FeasibilityReport::default();
    for own in &menu.entries {
        let val = Valuation::of(ladder, own.assigned, beta, v);
        let lhs = val.utility(own.t, own.reward, beta);
        for other in menu.entries.iter().filter(|o| o.ci != own.ci) {
            let rhs = val.utility(other.t, other.reward, beta);
            report.push(ConstraintLabel::Ic(own.ci, other.ci), lhs, rhs, lhs - rhs);
        }
    }
    report.finish()
}

/// Resources and realised utilities must not decrease along the menu, which
/// is listed ascending by assigned `θ·w`.
pub fn check_monotonicity(
    menu: &ContractMenu,
    ladder: &TypeLadder,
    beta: f64,
    v: f64,
) -> FeasibilityReport {
    let mut report = FeasibilityReport::default();
    for pair in menu.entries.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        let c_lo = ladder.composite(lo.assigned);
        let c_hi = ladder.composite(hi.assigned);
        report.push(ConstraintLabel::Order(hi.ci), c_hi, c_lo, c_hi - c_lo);
        report.push(
            ConstraintLabel::MonotoneResources(hi.ci),
            hi.t,
            lo.t,
            hi.t - lo.t,
        );
        let u_lo = Valuation::of(ladder, lo.assigned, beta, v).utility(lo.t, lo.reward, beta);
        let u_hi = Valuation::of(ladder, hi.assigned, beta, v).utility(hi.t, hi.reward, beta);
        report.push(
            ConstraintLabel::MonotoneUtility(hi.ci),
            u_hi,
            u_lo,
            u_hi - u_lo,
        );
    }
    report.finish()
}

/// Builds DLIC, ULIC, IR of the lowest CI, per-CI minimums and the budget
/// equality. `order` lists CI ids ascending by assigned `θ·w`; `assigned`
/// is indexed by CI id.
pub fn build_relaxed_constraints(
    scenario: &Scenario,
    order: &[usize],
    assigned: &[TypeIndex],
) -> Result<ConstraintSet> {
    let ladder = &scenario.ladder;
    ladder.ensure_valid()?;
    if order.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    if assigned.len() != scenario.n() || order.iter().any(|&i| i >= scenario.n()) {
        return Err(Error::DimensionMismatch(
            "order or assigned types do not match the scenario".into(),
        ));
    }
    if assigned.iter().any(|t| !ladder.contains(*t)) {
        return Err(Error::DimensionMismatch(
            "assigned type outside ladder".into(),
        ));
    }
    let composite: Vec<f64> = order
        .iter()
        .map(|&i| ladder.composite(assigned[i]))
        .collect();
    if composite.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::Unsorted);
    }

    let n = order.len();
    let val: Vec<Valuation> = order
        .iter()
        .map(|&i| Valuation::of(ladder, assigned[i], scenario.beta, scenario.v))
        .collect();
    let mut constraints = Vec::with_capacity(4 * n);
    let row = |entries: &[(usize, f64)]| {
        let mut c = vec![0.0; n];
        for &(k, a) in entries {
            c[k] += a;
        }
        c
    };

    // DLIC(k): (α_k − ρ_k) T_k ≥ (α_k − ρ_{k−1}) T_{k−1}
    for k in 1..n {
        constraints.push(LinearConstraint {
            label: ConstraintLabel::Dlic(order[k]),
            coeffs: row(&[
                (k, val[k].value - val[k].cost),
                (k - 1, -(val[k].value - val[k - 1].cost)),
            ]),
            sense: Sense::Ge,
            bound: 0.0,
        });
    }
    // ULIC(k): (α_k − ρ_k) T_k ≥ (α_k − ρ_{k+1}) T_{k+1}
    for k in 0..n.saturating_sub(1) {
        constraints.push(LinearConstraint {
            label: ConstraintLabel::Ulic(order[k]),
            coeffs: row(&[
                (k, val[k].value - val[k].cost),
                (k + 1, -(val[k].value - val[k + 1].cost)),
            ]),
            sense: Sense::Ge,
            bound: 0.0,
        });
    }
    constraints.push(LinearConstraint {
        label: ConstraintLabel::Ir(order[0]),
        coeffs: row(&[(0, val[0].value - val[0].cost)]),
        sense: Sense::Ge,
        bound: 0.0,
    });
    for (k, &ci) in order.iter().enumerate() {
        constraints.push(LinearConstraint {
            label: ConstraintLabel::Min(ci),
            coeffs: row(&[(k, 1.0)]),
            sense: Sense::Ge,
            bound: ladder.min_resources(assigned[ci]),
        });
    }
    constraints.push(LinearConstraint {
        label: ConstraintLabel::Budget,
        coeffs: vec![1.0; n],
        sense: Sense::Eq,
        bound: scenario.t_max,
    });
    Ok(ConstraintSet {
        order: order.to_vec(),
        constraints,
    })
}

/// Relaxed constraints for all CIs of a scenario in ladder order.
pub fn relaxed_constraints(scenario: &Scenario) -> Result<ConstraintSet> {
    build_relaxed_constraints(
        scenario,
        &scenario.ladder_order(),
        &scenario.assigned_types(),
    )
}

/// The full constraint system of the original problem: every IR, every IC
/// pair, minimums and budget, written as linear forms in `T`.
pub fn build_full_constraints(
    scenario: &Scenario,
    order: &[usize],
    assigned: &[TypeIndex],
) -> Result<ConstraintSet> {
    let relaxed = build_relaxed_constraints(scenario, order, assigned)?;
    let ladder = &scenario.ladder;
    let n = order.len();
    let val: Vec<Valuation> = order
        .iter()
        .map(|&i| Valuation::of(ladder, assigned[i], scenario.beta, scenario.v))
        .collect();
    let mut constraints = Vec::new();
    for k in 0..n {
        let mut c = vec![0.0; n];
        c[k] = val[k].value - val[k].cost;
        constraints.push(LinearConstraint {
            label: ConstraintLabel::Ir(order[k]),
            coeffs: c,
            sense: Sense::Ge,
            bound: 0.0,
        });
    }
    for k in 0..n {
        for j in (0..n).filter(|&j| j != k) {
            let mut c = vec![0.0; n];
            c[k] = val[k].value - val[k].cost;
            c[j] = -(val[k].value - val[j].cost);
            constraints.push(LinearConstraint {
                label: ConstraintLabel::Ic(order[k], order[j]),
                coeffs: c,
                sense: Sense::Ge,
                bound: 0.0,
            });
        }
    }
    constraints.extend(
        relaxed
            .constraints
            .into_iter()
            .filter(|c| matches!(c.label, ConstraintLabel::Min(_) | ConstraintLabel::Budget)),
    );
    Ok(ConstraintSet {
        order: order.to_vec(),
        constraints,
    })
}

/// How [`verify_theorem1_with`] draws its menus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MenuSampling {
    /// Menus that satisfy DLIC, ULIC and IR of the lowest CI.
    Relaxed,
    /// Same, except one upward local constraint is broken on purpose.
    BreakUlic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SufficiencyCheck {
    pub trials: usize,
    /// Trials whose menu passed full IC and full IR.
    pub passed: usize,
    /// Candidate menus rejected while sampling.
    pub rejected_draws: usize,
}

impl SufficiencyCheck {
    pub fn fraction(&self) -> f64 {
        self.passed as f64 / self.trials as f64
    }
}

/// Samples menus satisfying only the local constraints over random valid
/// ladders and reports how many satisfy the full IC and IR systems.
pub fn verify_theorem1(trials: usize, seed: u64) -> Result<SufficiencyCheck> {
    verify_theorem1_with(trials, seed, MenuSampling::Relaxed)
}

pub fn verify_theorem1_with(
    trials: usize,
    seed: u64,
    sampling: MenuSampling,
) -> Result<SufficiencyCheck> {
    const MAX_DRAWS: usize = 100_000;
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let mut passed = 0;
    let mut rejected_draws = 0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let mut draws = 0;
        let (menu, scenario) = loop {
            if draws == MAX_DRAWS {
                return Err(Error::InvalidArgument(format!(
                    "trial {trial}: no admissible menu after {MAX_DRAWS} draws"
                )));
            }
            draws += 1;
            let n = rng.gen_range(2..=6);
            let scenario = generate::random_local_ic_scenario(&mut rng, n)?;
            let Some(menu) = generate::sample_local_ic_menu(&mut rng, &scenario, sampling) else {
                rejected_draws += 1;
                continue;
            };
            let relaxed = build_relaxed_constraints(
                &scenario,
                &scenario.ladder_order(),
                &scenario.assigned_types(),
            )?
            .evaluate_menu(&menu)?;
            let local_ok = relaxed.violations.iter().all(|v| {
                !matches!(
                    v.label,
                    ConstraintLabel::Dlic(_) | ConstraintLabel::Ulic(_) | ConstraintLabel::Ir(_)
                )
            });
            match sampling {
                MenuSampling::Relaxed if !local_ok => {
                    rejected_draws += 1;
                    continue;
                }
                _ => break (menu, scenario),
            }
        };
        let ladder = &scenario.ladder;
        let ic = check_ic_full(&menu, ladder, scenario.beta, scenario.v);
        let ir = check_ir(&menu, ladder, scenario.beta, scenario.v);
        if ic.satisfied && ir.satisfied {
            passed += 1;
        }
    }
    Ok(SufficiencyCheck {
        trials,
        passed,
        rejected_draws,
    })
}
