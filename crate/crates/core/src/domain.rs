//! Problem-instance types and the elementary utility formulas.
//!
//! A CI carries two hidden types: a vulnerability level `w` and a
//! criticality level `θ`. The control center only sees belief rows over
//! both ladders. Rewards are linear, `R(T) = r·T`, with the rate `r` fixed
//! by the vulnerability level, and a CI values resources linearly,
//! `V(T) = v·T`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row sums of belief matrices must be within this of one.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Relative slack allowed when checking the `θ_K·w_i ≤ θ_1·w_{i+1}` separation.
const SEPARATION_RTOL: f64 = 1e-12;

/// Ordered vulnerability and criticality levels with per-level reward rates
/// and minimum resources.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeLadder {
    w_levels: Vec<f64>,
    theta_levels: Vec<f64>,
    reward_rates: Vec<f64>,
    t_min: Vec<f64>,
}

impl TypeLadder {
    /// Checks only shapes and finiteness. Ordering invariants are reported by
    /// [`validate_ladder`], so an ill-formed ladder can still be loaded and inspected.
    pub fn new(
        w_levels: Vec<f64>,
        theta_levels: Vec<f64>,
        reward_rates: Vec<f64>,
        t_min: Vec<f64>,
    ) -> Result<Self> {
        if w_levels.is_empty() || theta_levels.is_empty() {
            return Err(Error::DimensionMismatch(
                "ladder needs at least one w level and one theta level".into(),
            ));
        }
        if reward_rates.len() != w_levels.len() || t_min.len() != w_levels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} w levels but {} reward rates and {} minimums",
                w_levels.len(),
                reward_rates.len(),
                t_min.len()
            )));
        }
        let all = w_levels
            .iter()
            .chain(&theta_levels)
            .chain(&reward_rates)
            .chain(&t_min);
        if all.clone().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "ladder values must be finite".into(),
            ));
        }
        Ok(Self {
            w_levels,
            theta_levels,
            reward_rates,
            t_min,
        })
    }

    pub fn w_levels(&self) -> &[f64] {
        &self.w_levels
    }

    pub fn theta_levels(&self) -> &[f64] {
        &self.theta_levels
    }

    pub fn reward_rates(&self) -> &[f64] {
        &self.reward_rates
    }

    pub fn t_min(&self) -> &[f64] {
        &self.t_min
    }

    /// Number of vulnerability levels (M).
    pub fn m(&self) -> usize {
        self.w_levels.len()
    }

    /// Number of criticality levels (K).
    pub fn k(&self) -> usize {
        self.theta_levels.len()
    }

    pub fn w(&self, ty: TypeIndex) -> f64 {
        self.w_levels[ty.w]
    }

    pub fn theta(&self, ty: TypeIndex) -> f64 {
        self.theta_levels[ty.theta]
    }

    pub fn rate(&self, ty: TypeIndex) -> f64 {
        self.reward_rates[ty.w]
    }

    pub fn min_resources(&self, ty: TypeIndex) -> f64 {
        self.t_min[ty.w]
    }

    /// `θ·w` of a type; the key CIs are ordered by.
    pub fn composite(&self, ty: TypeIndex) -> f64 {
        self.theta(ty) * self.w(ty)
    }

    pub fn contains(&self, ty: TypeIndex) -> bool {
        ty.w < self.m() && ty.theta < self.k()
    }

    pub fn is_valid(&self) -> bool {
        validate_ladder(self).ok
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        let report = validate_ladder(self);
        if report.ok {
            Ok(())
        } else {
            Err(Error::InvalidLadder(report.violations))
        }
    }
}

/// One broken ladder invariant. Indices are 0-based level positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LadderViolation {
    NonPositive {
        field: String,
        index: usize,
        value: f64,
    },
    NegativeMinimum {
        index: usize,
        value: f64,
    },
    WNotIncreasing {
        index: usize,
    },
    ThetaNotIncreasing {
        index: usize,
    },
    /// `θ_K·w_i > θ_1·w_{i+1}`.
    Separation {
        index: usize,
        lhs: f64,
        rhs: f64,
    },
    RatesNotIncreasing {
        index: usize,
    },
    MinimumDecreasing {
        index: usize,
    },
}

impl fmt::Display for LadderViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonPositive {
                field,
                index,
                value,
            } => {
                write!(f, "{field}[{index}] = {value} is not positive")
            }
            Self::NegativeMinimum { index, value } => {
                write!(f, "t_min[{index}] = {value} is negative")
            }
            Self::WNotIncreasing { index } => {
                write!(f, "w_levels not strictly increasing at {index}")
            }
            Self::ThetaNotIncreasing { index } => {
                write!(f, "theta_levels not strictly increasing at {index}")
            }
            Self::Separation { index, lhs, rhs } => write!(
                f,
                "theta_K*w[{index}] = {lhs} exceeds theta_1*w[{}] = {rhs}",
                index + 1
            ),
            Self::RatesNotIncreasing { index } => {
                write!(f, "reward_rates not strictly increasing at {index}")
            }
            Self::MinimumDecreasing { index } => write!(f, "t_min decreases at {index}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub ok: bool,
    pub violations: Vec<LadderViolation>,
}

/// Reports every broken ladder invariant. Violations are data, never an error.
pub fn validate_ladder(ladder: &TypeLadder) -> LadderReport {
    let mut violations = Vec::new();
    for (field, values) in [
        ("w_levels", &ladder.w_levels),
        ("theta_levels", &ladder.theta_levels),
        ("reward_rates", &ladder.reward_rates),
    ] {
        for (index, &value) in values.iter().enumerate() {
            if value <= 0.0 {
                violations.push(LadderViolation::NonPositive {
                    field: field.to_string(),
                    index,
                    value,
                });
            }
        }
    }
    for (index, &value) in ladder.t_min.iter().enumerate() {
        if value < 0.0 {
            violations.push(LadderViolation::NegativeMinimum { index, value });
        }
    }
    for i in 1..ladder.w_levels.len() {
        if ladder.w_levels[i] <= ladder.w_levels[i - 1] {
            violations.push(LadderViolation::WNotIncreasing { index: i });
        }
    }
    for i in 1..ladder.theta_levels.len() {
        if ladder.theta_levels[i] <= ladder.theta_levels[i - 1] {
            violations.push(LadderViolation::ThetaNotIncreasing { index: i });
        }
    }
    let theta_lo = ladder.theta_levels[0];
    let theta_hi = ladder.theta_levels[ladder.k() - 1];
    for i in 0..ladder.m().saturating_sub(1) {
        let lhs = theta_hi * ladder.w_levels[i];
        let rhs = theta_lo * ladder.w_levels[i + 1];
        if lhs - rhs > SEPARATION_RTOL * rhs.abs().max(1.0) {
            violations.push(LadderViolation::Separation { index: i, lhs, rhs });
        }
    }
    for i in 1..ladder.reward_rates.len() {
        if ladder.reward_rates[i] <= ladder.reward_rates[i - 1] {
            violations.push(LadderViolation::RatesNotIncreasing { index: i });
        }
    }
    for i in 1..ladder.t_min.len() {
        if ladder.t_min[i] < ladder.t_min[i - 1] {
            violations.push(LadderViolation::MinimumDecreasing { index: i });
        }
    }
    LadderReport {
        ok: violations.is_empty(),
        violations,
    }
}

/// Builds `k` geometrically spaced criticality levels starting at 1 whose
/// overall ratio `θ_K/θ_1` is `bound^spread`, where `bound` is the smallest
/// step ratio `w_{i+1}/w_i`. Any `spread` in (0, 1] keeps the separation
/// property. With a single w level there is no step to respect and the
/// bound is taken as 2.
pub fn make_theta_ladder(w_levels: &[f64], k: usize, spread: f64) -> Result<Vec<f64>> {
    if k < 1 {
        return Err(Error::InvalidArgument(
            "need at least one theta level".into(),
        ));
    }
    if !(spread > 0.0 && spread <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "spread must lie in (0, 1], got {spread}"
        )));
    }
    if w_levels.is_empty() || w_levels.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidArgument("w levels must be positive".into()));
    }
    if w_levels.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidArgument(
            "w levels must be strictly increasing".into(),
        ));
    }
    if k == 1 {
        return Ok(vec![1.0]);
    }
    let bound = w_levels
        .windows(2)
        .map(|p| p[1] / p[0])
        .fold(f64::INFINITY, f64::min);
    let bound = if bound.is_finite() { bound } else { 2.0 };
    let ratio = if spread == 1.0 {
        bound
    } else {
        bound.powf(spread)
    };
    let last = (k - 1) as f64;
    let mut theta: Vec<f64> = (0..k).map(|i| ratio.powf(i as f64 / last)).collect();
    theta[0] = 1.0;
    theta[k - 1] = ratio;
    Ok(theta)
}

/// The control center's beliefs: `p[i][j]` is the probability CI `i` has
/// vulnerability level `j`, `q[i][k]` that it has criticality level `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefMatrix {
    p: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
}

impl BeliefMatrix {
    pub fn new(p: Vec<Vec<f64>>, q: Vec<Vec<f64>>) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::DimensionMismatch(format!(
                "p has {} rows, q has {}",
                p.len(),
                q.len()
            )));
        }
        for (name, m) in [("p", &p), ("q", &q)] {
            let width = m.first().map_or(0, Vec::len);
            for (i, row) in m.iter().enumerate() {
                if row.len() != width || width == 0 {
                    return Err(Error::DimensionMismatch(format!(
                        "{name} row {i} has {} entries, expected {width}",
                        row.len()
                    )));
                }
                if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                    return Err(Error::InvalidBeliefs(format!(
                        "{name} row {i} has an entry outside [0, 1]"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidBeliefs(format!(
                        "{name} row {i} sums to {sum}"
                    )));
                }
            }
        }
        Ok(Self { p, q })
    }

    /// Beliefs that put all mass on the given types.
    pub fn point_mass(types: &[TypeIndex], m: usize, k: usize) -> Result<Self> {
        let one_hot = |n: usize, at: usize| {
            let mut row = vec![0.0; n];
            row[at] = 1.0;
            row
        };
        if types.iter().any(|t| t.w >= m || t.theta >= k) {
            return Err(Error::DimensionMismatch("type outside ladder".into()));
        }
        Self::new(
            types.iter().map(|t| one_hot(m, t.w)).collect(),
            types.iter().map(|t| one_hot(k, t.theta)).collect(),
        )
    }

    pub fn p(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn q(&self) -> &[Vec<f64>] {
        &self.q
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    /// Most likely type of CI `i`; ties go to the lower level.
    pub fn modal_type(&self, i: usize) -> TypeIndex {
        TypeIndex {
            w: argmax_first(&self.p[i]),
            theta: argmax_first(&self.q[i]),
        }
    }

    /// `Σ_k q[i][k]·θ_k`.
    pub fn expected_theta(&self, i: usize, ladder: &TypeLadder) -> f64 {
        dot(&self.q[i], ladder.theta_levels())
    }

    fn select(&self, ids: &[usize]) -> Self {
        Self {
            p: ids.iter().map(|&i| self.p[i].clone()).collect(),
            q: ids.iter().map(|&i| self.q[i].clone()).collect(),
        }
    }
}

pub(crate) fn argmax_first(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = j;
        }
    }
    best
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// 0-based position of a type on both ladders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct TypeIndex {
    pub w: usize,
    pub theta: usize,
}

impl TypeIndex {
    pub fn new(w: usize, theta: usize) -> Self {
        Self { w, theta }
    }
}

impl From<(usize, usize)> for TypeIndex {
    fn from((w, theta): (usize, usize)) -> Self {
        Self { w, theta }
    }
}

impl From<TypeIndex> for (usize, usize) {
    fn from(t: TypeIndex) -> Self {
        (t.w, t.theta)
    }
}

/// A complete problem instance. `true_types` stay hidden from the solvers;
/// only CI agents and evaluation code look at them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioFile", into = "ScenarioFile")]
pub struct Scenario {
    pub ladder: TypeLadder,
    pub beliefs: BeliefMatrix,
    pub true_types: Vec<TypeIndex>,
    pub t_max: f64,
    pub beta: f64,
    pub v: f64,
}

impl Scenario {
    pub fn new(
        ladder: TypeLadder,
        beliefs: BeliefMatrix,
        true_types: Vec<TypeIndex>,
        t_max: f64,
        beta: f64,
        v: f64,
    ) -> Result<Self> {
        let n = beliefs.n();
        if n == 0 {
            return Err(Error::InvalidScenario(
                "scenario needs at least one CI".into(),
            ));
        }
        if true_types.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} belief rows but {} true types",
                true_types.len()
            )));
        }
        if beliefs.p[0].len() != ladder.m() || beliefs.q[0].len() != ladder.k() {
            return Err(Error::DimensionMismatch(format!(
                "beliefs are {}x{} / {}x{}, ladder has M={} K={}",
                n,
                beliefs.p[0].len(),
                n,
                beliefs.q[0].len(),
                ladder.m(),
                ladder.k()
            )));
        }
        if let Some(i) = true_types.iter().position(|t| !ladder.contains(*t)) {
            return Err(Error::DimensionMismatch(format!(
                "true type of CI {i} is outside the ladder"
            )));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidScenario(format!(
                "beta must lie in (0, 1), got {beta}"
            )));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "v must be positive, got {v}"
            )));
        }
        if !(t_max >= 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "t_max must be nonnegative, got {t_max}"
            )));
        }
        Ok(Self {
            ladder,
            beliefs,
            true_types,
            t_max,
            beta,
            v,
        })
    }

    /// Number of CIs.
    pub fn n(&self) -> usize {
        self.true_types.len()
    }

    /// Modal type of every CI under the beliefs, ties toward the lower level.
    pub fn assigned_types(&self) -> Vec<TypeIndex> {
        (0..self.n()).map(|i| self.beliefs.modal_type(i)).collect()
    }

    /// CI ids sorted ascending by assigned `θ·w`, ties by id.
    pub fn ladder_order(&self) -> Vec<usize> {
        let assigned = self.assigned_types();
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.sort_by(|&a, &b| {
            self.ladder
                .composite(assigned[a])
                .total_cmp(&self.ladder.composite(assigned[b]))
                .then(a.cmp(&b))
        });
        order
    }

    /// A scenario over the listed CIs only, renumbered `0..ids.len()` in the given order.
    pub fn subset(&self, ids: &[usize]) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::EmptyActiveSet);
        }
        if let Some(&bad) = ids.iter().find(|&&i| i >= self.n()) {
            return Err(Error::InvalidArgument(format!("no CI with id {bad}")));
        }
        Ok(Self {
            ladder: self.ladder.clone(),
            beliefs: self.beliefs.select(ids),
            true_types: ids.iter().map(|&i| self.true_types[i]).collect(),
            t_max: self.t_max,
            beta: self.beta,
            v: self.v,
        })
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// On-disk layout of a scenario. Field names are the interchange format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    w_levels: Vec<f64>,
    theta_levels: Vec<f64>,
    reward_rates: Vec<f64>,
    t_min: Vec<f64>,
    p: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    true_types: Vec<TypeIndex>,
    t_max: f64,
    beta: f64,
    v: f64,
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = Error;

    fn try_from(f: ScenarioFile) -> Result<Self> {
        let ladder = TypeLadder::new(f.w_levels, f.theta_levels, f.reward_rates, f.t_min)?;
        let beliefs = BeliefMatrix::new(f.p, f.q)?;
        Scenario::new(ladder, beliefs, f.true_types, f.t_max, f.beta, f.v)
    }
}

impl From<Scenario> for ScenarioFile {
    fn from(s: Scenario) -> Self {
        Self {
            w_levels: s.ladder.w_levels,
            theta_levels: s.ladder.theta_levels,
            reward_rates: s.ladder.reward_rates,
            t_min: s.ladder.t_min,
            p: s.beliefs.p,
            q: s.beliefs.q,
            true_types: s.true_types,
            t_max: s.t_max,
            beta: s.beta,
            v: s.v,
        }
    }
}

/// One contract `(T, R(T))` together with the CI it was designed for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractEntry {
    pub ci: usize,
    /// Type used to design this entry (the CI's modal type).
    pub assigned: TypeIndex,
    pub t: f64,
    pub reward: f64,
}

/// A menu of contracts, one per CI, listed ascending by assigned `θ·w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractMenu {
    pub entries: Vec<ContractEntry>,
}

impl ContractMenu {
    /// Builds a menu from resources listed in the same order as `order`.
    /// Rewards use the assigned level's rate.
    pub fn from_allocation(
        ladder: &TypeLadder,
        order: &[usize],
        assigned: &[TypeIndex],
        t: &[f64],
    ) -> Self {
        let entries = order
            .iter()
            .zip(t)
            .map(|(&ci, &t)| ContractEntry {
                ci,
                assigned: assigned[ci],
                t,
                reward: ladder.rate(assigned[ci]) * t,
            })
            .collect();
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry_for(&self, ci: usize) -> Option<&ContractEntry> {
        self.entries.iter().find(|e| e.ci == ci)
    }

    /// Resources listed in menu order.
    pub fn resources(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.t).collect()
    }

    pub fn total_resources(&self) -> f64 {
        self.entries.iter().map(|e| e.t).sum()
    }
}

/// Utility of a CI of type `(θ, w)` holding `t` resources at reward rate `rate`:
/// `θ·w·v·t − β·rate·t`.
pub fn ci_utility(theta: f64, w: f64, t: f64, reward_rate: f64, beta: f64, v: f64) -> f64 {
    theta * w * v * t - beta * (reward_rate * t)
}

/// The control center's utility from protecting one CI of known type:
/// `θ·w·(rate·t − t)`.
pub fn cc_utility_single(theta: f64, w: f64, t: f64, reward_rate: f64) -> f64 {
    theta * w * (reward_rate * t - t)
}

/// Expected control-center utility of a menu under the beliefs:
/// `Σ_i (Σ_k q_ik θ_k)(Σ_j p_ij w_j (r_j T_i − T_i))`.
///
/// The inner reward applies the rate of the hypothesised level `j` to CI
/// `i`'s allocation.
pub fn cc_expected_utility(
    menu: &ContractMenu,
    beliefs: &BeliefMatrix,
    ladder: &TypeLadder,
) -> Result<f64> {
    if menu.len() != beliefs.n() {
        return Err(Error::DimensionMismatch(format!(
            "menu has {} entries for {} CIs",
            menu.len(),
            beliefs.n()
        )));
    }
    if beliefs.p[0].len() != ladder.m() || beliefs.q[0].len() != ladder.k() {
        return Err(Error::DimensionMismatch(
            "belief widths do not match the ladder".into(),
        ));
    }
    let mut seen = vec![false; beliefs.n()];
    let mut total = 0.0;
    for e in &menu.entries {
        if e.ci >= beliefs.n() || std::mem::replace(&mut seen[e.ci], true) {
            return Err(Error::DimensionMismatch(format!(
                "menu entry for CI {} is out of range or duplicated",
                e.ci
            )));
        }
        let theta_bar = beliefs.expected_theta(e.ci, ladder);
        let inner: f64 = beliefs.p[e.ci]
            .iter()
            .zip(ladder.w_levels())
            .zip(ladder.reward_rates())
            .map(|((&p, &w), &r)| p * w * (r * e.t - e.t))
            .sum();
        total += theta_bar * inner;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ladder(w: &[f64], theta: &[f64]) -> TypeLadder {
        let m = w.len();
        TypeLadder::new(
            w.to_vec(),
            theta.to_vec(),
            (1..=m).map(|j| 3.0 * j as f64).collect(),
            vec![0.0; m],
        )
        .unwrap()
    }

    #[test]
    fn separation_violation_is_reported() {
        let report = validate_ladder(&ladder(&[1.0, 4.0, 9.0], &[1.0, 1.5, 2.0, 2.5]));
        assert!(!report.ok);
        // 2.5·1 ≤ 4 holds, 2.5·4 = 10 > 9 does not.
        assert_eq!(
            report.violations,
            vec![LadderViolation::Separation {
                index: 1,
                lhs: 10.0,
                rhs: 9.0
            }]
        );
    }

    #[test]
    fn small_ladder_passes() {
        assert!(validate_ladder(&ladder(&[1.0, 3.0], &[1.0, 2.0])).ok);
    }

    #[test]
    fn decreasing_w_is_reported() {
        let report = validate_ladder(&ladder(&[2.0, 1.0], &[1.0]));
        assert!(report
            .violations
            .contains(&LadderViolation::WNotIncreasing { index: 1 }));
    }

    #[test]
    fn rate_and_minimum_ordering_checked() {
        let l =
            TypeLadder::new(vec![1.0, 3.0], vec![1.0], vec![6.0, 3.0], vec![60.0, 20.0]).unwrap();
        let v = validate_ladder(&l).violations;
        assert!(v.contains(&LadderViolation::RatesNotIncreasing { index: 1 }));
        assert!(v.contains(&LadderViolation::MinimumDecreasing { index: 1 }));
    }

    #[test]
    fn theta_ladder_hits_the_bound_at_full_spread() {
        let theta = make_theta_ladder(&[1.0, 4.0], 2, 1.0).unwrap();
        assert_eq!(theta, vec![1.0, 4.0]);
        assert!(validate_ladder(&ladder(&[1.0, 4.0], &theta)).ok);
    }

    #[test]
    fn single_theta_level() {
        assert_eq!(
            make_theta_ladder(&[1.0, 3.0, 9.0], 1, 0.5).unwrap(),
            vec![1.0]
        );
    }

    #[test]
    fn tight_w_ratio_bounds_theta() {
        let w = [1.0, 1.05];
        let theta = make_theta_ladder(&w, 4, 1.0).unwrap();
        assert_eq!(theta.len(), 4);
        assert!(theta.windows(2).all(|p| p[1] > p[0]));
        assert!(theta[3] / theta[0] <= 1.05 + 1e-12);
        assert!(validate_ladder(&ladder(&w, &theta)).ok);
    }

    #[test]
    fn theta_ladder_rejects_bad_input() {
        assert!(make_theta_ladder(&[1.0, 2.0], 0, 1.0).is_err());
        assert!(make_theta_ladder(&[2.0, 1.0], 2, 1.0).is_err());
        assert!(make_theta_ladder(&[1.0, 2.0], 2, 0.0).is_err());
    }

    #[test]
    fn utility_formulas() {
        assert_eq!(ci_utility(1.0, 1.0, 10.0, 3.0, 0.5, 2.0), 5.0);
        assert_eq!(ci_utility(1.0, 1.0, 0.0, 3.0, 0.5, 2.0), 0.0);
        assert_eq!(ci_utility(1.0, 2.0, 10.0, 6.0, 0.5, 2.0), 10.0);
        assert_eq!(cc_utility_single(1.0, 1.0, 10.0, 3.0), 20.0);
        assert_eq!(cc_utility_single(2.0, 3.0, 17.0, 1.0), 0.0);
        assert_eq!(cc_utility_single(2.0, 3.0, 0.0, 6.0), 0.0);
    }

    #[test]
    fn expected_utility_with_point_mass_matches_single() {
        let l = ladder(&[1.0, 3.0], &[1.0, 2.0]);
        let types = [TypeIndex::new(0, 0)];
        let beliefs = BeliefMatrix::point_mass(&types, 2, 2).unwrap();
        let menu = ContractMenu::from_allocation(&l, &[0], &types, &[10.0]);
        let got = cc_expected_utility(&menu, &beliefs, &l).unwrap();
        assert_eq!(got, cc_utility_single(1.0, 1.0, 10.0, 3.0));
    }

    #[test]
    fn expected_utility_of_empty_allocation_is_zero() {
        let l = ladder(&[1.0, 3.0], &[1.0, 2.0]);
        let types = [TypeIndex::new(0, 0), TypeIndex::new(1, 1)];
        let beliefs = BeliefMatrix::new(vec![vec![0.5, 0.5]; 2], vec![vec![0.5, 0.5]; 2]).unwrap();
        let menu = ContractMenu::from_allocation(&l, &[0, 1], &types, &[0.0, 0.0]);
        assert_eq!(cc_expected_utility(&menu, &beliefs, &l).unwrap(), 0.0);
    }

    #[test]
    fn expected_utility_uniform_two_ci() {
        // Term by term: θ̄ = 1.5 for both CIs.
        // CI0 (T=20):  0.5·1·(3·20−20) + 0.5·3·(6·20−20) = 20 + 150 = 170
        // CI1 (T=480): 0.5·1·(3·480−480) + 0.5·3·(6·480−480) = 480 + 3600 = 4080
        // total = 1.5·(170 + 4080) = 6375
        let l = ladder(&[1.0, 3.0], &[1.0, 2.0]);
        let types = [TypeIndex::new(0, 0), TypeIndex::new(1, 1)];
        let beliefs = BeliefMatrix::new(vec![vec![0.5, 0.5]; 2], vec![vec![0.5, 0.5]; 2]).unwrap();
        let menu = ContractMenu::from_allocation(&l, &[0, 1], &types, &[20.0, 480.0]);
        let got = cc_expected_utility(&menu, &beliefs, &l).unwrap();
        assert!((got - 6375.0).abs() < 1e-9, "{got}");
    }

    #[test]
    fn expected_utility_rejects_size_mismatch() {
        let l = ladder(&[1.0, 3.0], &[1.0, 2.0]);
        let types = [TypeIndex::new(0, 0)];
        let beliefs = BeliefMatrix::new(vec![vec![0.5, 0.5]; 2], vec![vec![0.5, 0.5]; 2]).unwrap();
        let menu = ContractMenu::from_allocation(&l, &[0], &types, &[1.0]);
        assert!(cc_expected_utility(&menu, &beliefs, &l).is_err());
    }

    #[test]
    fn beliefs_must_be_row_stochastic() {
        assert!(BeliefMatrix::new(vec![vec![0.5, 0.4]], vec![vec![1.0]]).is_err());
        assert!(BeliefMatrix::new(vec![vec![1.2, -0.2]], vec![vec![1.0]]).is_err());
        assert!(BeliefMatrix::new(vec![vec![0.5, 0.5]], vec![vec![1.0]]).is_ok());
    }

    #[test]
    fn modal_type_ties_go_low() {
        let b = BeliefMatrix::new(vec![vec![0.4, 0.4, 0.2]], vec![vec![0.5, 0.5]]).unwrap();
        assert_eq!(b.modal_type(0), TypeIndex::new(0, 0));
    }

    #[test]
    fn scenario_json_roundtrip_uses_flat_schema() {
        let l = ladder(&[1.0, 3.0], &[1.0, 2.0]);
        let types = vec![TypeIndex::new(1, 0), TypeIndex::new(0, 1)];
        let beliefs = BeliefMatrix::point_mass(&types, 2, 2).unwrap();
        let s = Scenario::new(l, beliefs, types, 500.0, 0.5, 2.0).unwrap();
        let json = s.to_json();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let mut keys: Vec<_> = value.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "beta",
                "p",
                "q",
                "reward_rates",
                "t_max",
                "t_min",
                "theta_levels",
                "true_types",
                "v",
                "w_levels"
            ]
        );
        assert_eq!(value["true_types"], serde_json::json!([[1, 0], [0, 1]]));
        assert_eq!(Scenario::from_json(&json).unwrap(), s);
    }

    #[test]
    fn scenario_rejects_bad_beta() {
        let l = ladder(&[1.0], &[1.0]);
        let types = vec![TypeIndex::new(0, 0)];
        let beliefs = BeliefMatrix::point_mass(&types, 1, 1).unwrap();
        assert!(Scenario::new(l.clone(), beliefs.clone(), types.clone(), 1.0, 1.0, 2.0).is_err());
        assert!(Scenario::new(l, beliefs, types, 1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn ladder_order_sorts_by_composite() {
        let l = ladder(&[1.0, 3.0], &[1.0, 2.0]);
        let types = vec![
            TypeIndex::new(1, 1),
            TypeIndex::new(0, 0),
            TypeIndex::new(1, 0),
            TypeIndex::new(0, 1),
        ];
        let beliefs = BeliefMatrix::point_mass(&types, 2, 2).unwrap();
        let s = Scenario::new(l, beliefs, types, 500.0, 0.5, 2.0).unwrap();
        assert_eq!(s.ladder_order(), vec![1, 3, 2, 0]);
    }
}
