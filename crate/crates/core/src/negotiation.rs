//! The control center's design / offer / sign loop.
//!
//! The CC designs menus from assigned (modal) types. CI agents answer with
//! their true types. A round is one call to the solver. Every round that
//! does not end in signatures removes at least one CI from the active set:
//! an infeasible design excludes the least critical CI, and an offer that
//! is not unanimously accepted loses the CIs that declined or deviated.
//! Declining is final. After a declined offer, up to as many excluded CIs as
//! declined are readmitted (most recently excluded first, each at most
//! once) provided their minimum resources still fit the budget. Together
//! these rules bound the number of rounds by `2N`.

use serde::{Deserialize, Serialize};

use crate::domain::{argmax_first, BeliefMatrix, ContractMenu, Scenario, TypeIndex, TypeLadder};
use crate::error::{Error, Result};
use crate::solver::{solve_optimal, InfeasibilityReason};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    Declared,
    RequestsReceived,
    Designing,
    Offered,
    Signed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exclusion {
    pub ci: usize,
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegotiationState {
    pub phase: Phase,
    /// Ascending CI ids.
    pub active_set: Vec<usize>,
    /// In exclusion order. Readmitted CIs are removed from this list.
    pub excluded: Vec<Exclusion>,
    pub offers: Option<ContractMenu>,
    pub signatures: Vec<usize>,
}

impl NegotiationState {
    fn new(n: usize) -> Self {
        Self {
            phase: Phase::Declared,
            active_set: (0..n).collect(),
            excluded: Vec::new(),
            offers: None,
            signatures: Vec::new(),
        }
    }
}

/// A CI agent's answer to a menu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "ci", rename_all = "snake_case")]
pub enum Choice {
    /// The entry designed for the given CI.
    Entry(usize),
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum NegotiationEvent {
    Phase {
        phase: Phase,
    },
    Excluded {
        ci: usize,
        round: usize,
        reason: InfeasibilityReason,
    },
    Offered {
        round: usize,
        menu: ContractMenu,
    },
    Answered {
        round: usize,
        ci: usize,
        choice: Choice,
    },
    Withdrew {
        ci: usize,
        round: usize,
        choice: Choice,
    },
    Readmitted {
        ci: usize,
        round: usize,
    },
    RoundCapReached {
        rounds: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegotiationTrace {
    pub events: Vec<NegotiationEvent>,
    pub rounds: usize,
    pub final_state: NegotiationState,
    /// The signed menu, absent when nobody signed.
    pub final_menu: Option<ContractMenu>,
}

impl NegotiationTrace {
    pub fn signatures(&self) -> &[usize] {
        &self.final_state.signatures
    }

    /// CI ids in the order they were excluded, including later readmissions.
    pub fn exclusion_order(&self) -> Vec<usize> {
        self.events
            .iter()
            .filter_map(|e| match e {
                NegotiationEvent::Excluded { ci, .. } => Some(*ci),
                _ => None,
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NegotiationConfig {
    /// Safety cap on solve rounds. `None` means `2N`.
    pub max_rounds: Option<usize>,
}

/// The active CI whose modal criticality level is lowest. Ties go to the
/// higher modal probability, then to the lower id.
pub fn least_critical(beliefs: &BeliefMatrix, active: &[usize]) -> Result<usize> {
    let key = |i: usize| {
        let row = &beliefs.q()[i];
        let level = argmax_first(row);
        (level, row[level])
    };
    let mut best: Option<(usize, (usize, f64))> = None;
    for &i in active {
        if i >= beliefs.n() {
            return Err(Error::InvalidArgument(format!("no CI with id {i}")));
        }
        let k = key(i);
        let better = match best {
            None => true,
            Some((b, bk)) => k.0 < bk.0 || (k.0 == bk.0 && (k.1 > bk.1 || (k.1 == bk.1 && i < b))),
        };
        if better {
            best = Some((i, k));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::EmptyActiveSet)
}

/// The entry a CI of type `true_type` picks from `menu`, or `Reject` when
/// every entry leaves it with negative utility.
///
/// Utilities within `1e-9·max(1, |u|)` of the best count as ties, broken
/// toward the CI's own entry (`own`) and then toward the lowest CI id.
pub fn ci_agent_choose(
    menu: &ContractMenu,
    true_type: TypeIndex,
    ladder: &TypeLadder,
    beta: f64,
    v: f64,
    own: Option<usize>,
) -> Choice {
    let value = ladder.theta(true_type) * ladder.w(true_type) * v;
    let utils: Vec<(usize, f64)> = menu
        .entries
        .iter()
        .map(|e| (e.ci, value * e.t - beta * e.reward))
        .collect();
    let Some(best) = utils.iter().map(|u| u.1).reduce(f64::max) else {
        return Choice::Reject;
    };
    let tol = 1e-9 * best.abs().max(1.0);
    if best < -tol {
        return Choice::Reject;
    }
    let near: Vec<usize> = utils
        .iter()
        .filter(|u| u.1 >= best - tol)
        .map(|u| u.0)
        .collect();
    match own {
        Some(o) if near.contains(&o) => Choice::Entry(o),
        _ => Choice::Entry(*near.iter().min().expect("best entry is near itself")),
    }
}

/// Solves on `active` and relabels the menu with global CI ids.
fn design(
    scenario: &Scenario,
    active: &[usize],
) -> Result<std::result::Result<ContractMenu, InfeasibilityReason>> {
    let sub = scenario.subset(active)?;
    let result = solve_optimal(&sub)?;
    Ok(match result.menu {
        Some(mut menu) => {
            for e in &mut menu.entries {
                e.ci = active[e.ci];
            }
            Ok(menu)
        }
        None => Err(result
            .reason
            .unwrap_or(InfeasibilityReason::IncentiveConstraints)),
    })
}

struct Engine<'a> {
    scenario: &'a Scenario,
    state: NegotiationState,
    events: Vec<NegotiationEvent>,
    readmitted: Vec<bool>,
}

impl Engine<'_> {
    fn enter(&mut self, phase: Phase) {
        if self.state.phase != phase {
            self.state.phase = phase;
            self.events.push(NegotiationEvent::Phase { phase });
        }
    }

    fn required(&self, ids: &[usize]) -> f64 {
        let assigned = self.scenario.assigned_types();
        ids.iter()
            .map(|&i| self.scenario.ladder.min_resources(assigned[i]))
            .sum()
    }

    /// Brings back up to `slots` excluded CIs, newest exclusion first.
    fn readmit(&mut self, slots: usize, round: usize) {
        let mut left = slots;
        let mut k = self.state.excluded.len();
        while left > 0 && k > 0 {
            k -= 1;
            let ci = self.state.excluded[k].ci;
            if self.readmitted[ci] {
                continue;
            }
            let mut trial = self.state.active_set.clone();
            trial.push(ci);
            if self.required(&trial) > self.scenario.t_max {
                continue;
            }
            self.readmitted[ci] = true;
            self.state.excluded.remove(k);
            self.state.active_set = trial;
            self.state.active_set.sort_unstable();
            self.events.push(NegotiationEvent::Readmitted { ci, round });
            left -= 1;
        }
    }
}

/// Runs the design / offer / sign loop to completion.
pub fn run_negotiation(scenario: &Scenario, config: NegotiationConfig) -> Result<NegotiationTrace> {
    let n = scenario.n();
    let cap = config.max_rounds.unwrap_or(2 * n);
    let mut eng = Engine {
        scenario,
        state: NegotiationState::new(n),
        events: vec![NegotiationEvent::Phase {
            phase: Phase::Declared,
        }],
        readmitted: vec![false; n],
    };
    eng.enter(Phase::RequestsReceived);

    let mut rounds = 0;
    let mut final_menu = None;
    while !eng.state.active_set.is_empty() {
        if rounds == cap {
            eng.events
                .push(NegotiationEvent::RoundCapReached { rounds });
            break;
        }
        rounds += 1;
        eng.enter(Phase::Designing);
        eng.state.offers = None;

        let menu = match design(scenario, &eng.state.active_set)? {
            Ok(menu) => menu,
            Err(reason) => {
                let ci = least_critical(&scenario.beliefs, &eng.state.active_set)?;
                eng.state.active_set.retain(|&i| i != ci);
                eng.state.excluded.push(Exclusion { ci, round: rounds });
                eng.events.push(NegotiationEvent::Excluded {
                    ci,
                    round: rounds,
                    reason,
                });
                continue;
            }
        };

        eng.enter(Phase::Offered);
        eng.events.push(NegotiationEvent::Offered {
            round: rounds,
            menu: menu.clone(),
        });
        eng.state.offers = Some(menu.clone());

        let mut declined = Vec::new();
        for &ci in &eng.state.active_set {
            let choice = ci_agent_choose(
                &menu,
                scenario.true_types[ci],
                &scenario.ladder,
                scenario.beta,
                scenario.v,
                Some(ci),
            );
            eng.events.push(NegotiationEvent::Answered {
                round: rounds,
                ci,
                choice,
            });
            if choice != Choice::Entry(ci) {
                declined.push((ci, choice));
            }
        }

        if declined.is_empty() {
            eng.enter(Phase::Signed);
            eng.state.signatures = eng.state.active_set.clone();
            final_menu = Some(menu);
            break;
        }
        for &(ci, choice) in &declined {
            eng.events.push(NegotiationEvent::Withdrew {
                ci,
                round: rounds,
                choice,
            });
        }
        eng.state
            .active_set
            .retain(|i| !declined.iter().any(|d| d.0 == *i));
        eng.readmit(declined.len(), rounds);
    }

    if final_menu.is_none() {
        eng.state.offers = None;
    }
    Ok(NegotiationTrace {
        events: eng.events,
        rounds,
        final_state: eng.state,
        final_menu,
    })
}

/// Rebuilds the signed menu from the trace's events alone: the signatories
/// are the CIs never excluded or withdrawn, plus readmissions.
pub fn replay(scenario: &Scenario, trace: &NegotiationTrace) -> Result<Option<ContractMenu>> {
    let mut active: Vec<usize> = (0..scenario.n()).collect();
    let mut signed = false;
    for e in &trace.events {
        match e {
            NegotiationEvent::Excluded { ci, .. } | NegotiationEvent::Withdrew { ci, .. } => {
                active.retain(|i| i != ci)
            }
            NegotiationEvent::Readmitted { ci, .. } => {
                active.push(*ci);
                active.sort_unstable();
            }
            NegotiationEvent::Phase {
                phase: Phase::Signed,
            } => signed = true,
            _ => {}
        }
    }
    if !signed || active.is_empty() {
        return Ok(None);
    }
    match design(scenario, &active)? {
        Ok(menu) => Ok(Some(menu)),
        Err(_) => Err(Error::Numerical(
            "trace signs a set the solver finds infeasible".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ContractEntry;

    fn q_only(rows: Vec<Vec<f64>>) -> BeliefMatrix {
        let p = vec![vec![1.0]; rows.len()];
        BeliefMatrix::new(p, rows).unwrap()
    }

    #[test]
    fn least_critical_prefers_confident_low_level() {
        let b = q_only(vec![
            vec![0.9, 0.05, 0.05],
            vec![0.6, 0.2, 0.2],
            vec![0.1, 0.1, 0.8],
        ]);
        assert_eq!(least_critical(&b, &[0, 1, 2]).unwrap(), 0);
        assert_eq!(least_critical(&b, &[1, 2]).unwrap(), 1);
        assert_eq!(least_critical(&b, &[2]).unwrap(), 2);
    }

    #[test]
    fn least_critical_identical_rows_take_lowest_id() {
        let b = q_only(vec![vec![0.5, 0.5]; 3]);
        assert_eq!(least_critical(&b, &[2, 1, 0]).unwrap(), 0);
        assert!(matches!(
            least_critical(&b, &[]),
            Err(Error::EmptyActiveSet)
        ));
    }

    fn ladder() -> TypeLadder {
        TypeLadder::new(vec![1.0, 3.0], vec![1.0], vec![3.0, 6.0], vec![0.0, 0.0]).unwrap()
    }

    fn entry(ci: usize, t: f64, rate: f64) -> ContractEntry {
        ContractEntry {
            ci,
            assigned: TypeIndex::new(0, 0),
            t,
            reward: rate * t,
        }
    }

    #[test]
    fn negative_utility_rejects() {
        // value 1·1·1 = 1 per unit, cost 0.5·3 = 1.5 per unit
        let menu = ContractMenu {
            entries: vec![entry(0, 10.0, 3.0)],
        };
        let c = ci_agent_choose(&menu, TypeIndex::new(0, 0), &ladder(), 0.5, 1.0, Some(0));
        assert_eq!(c, Choice::Reject);
    }

    #[test]
    fn identical_entries_pick_own() {
        let menu = ContractMenu {
            entries: vec![entry(0, 10.0, 3.0), entry(1, 10.0, 3.0)],
        };
        let ty = TypeIndex::new(1, 0);
        assert_eq!(
            ci_agent_choose(&menu, ty, &ladder(), 0.5, 2.0, Some(1)),
            Choice::Entry(1)
        );
        assert_eq!(
            ci_agent_choose(&menu, ty, &ladder(), 0.5, 2.0, None),
            Choice::Entry(0)
        );
    }

    #[test]
    fn single_ci_signs_immediately() {
        let l = TypeLadder::new(vec![1.0], vec![1.0], vec![2.0], vec![10.0]).unwrap();
        let b = BeliefMatrix::point_mass(&[TypeIndex::new(0, 0)], 1, 1).unwrap();
        let s = Scenario::new(l, b, vec![TypeIndex::new(0, 0)], 50.0, 0.5, 2.0).unwrap();
        let trace = run_negotiation(&s, NegotiationConfig::default()).unwrap();
        assert_eq!(trace.rounds, 1);
        assert_eq!(trace.signatures(), &[0]);
        assert_eq!(trace.final_menu.unwrap().entries[0].t, 50.0);
    }

    #[test]
    fn budget_below_minimum_ends_unsigned() {
        let l = TypeLadder::new(vec![1.0], vec![1.0], vec![2.0], vec![10.0]).unwrap();
        let b = BeliefMatrix::point_mass(&[TypeIndex::new(0, 0)], 1, 1).unwrap();
        let s = Scenario::new(l, b, vec![TypeIndex::new(0, 0)], 5.0, 0.5, 2.0).unwrap();
        let trace = run_negotiation(&s, NegotiationConfig::default()).unwrap();
        assert!(trace.signatures().is_empty());
        assert_eq!(trace.exclusion_order(), vec![0]);
        assert!(trace.final_menu.is_none());
        assert_eq!(replay(&s, &trace).unwrap(), None);
    }

    #[test]
    fn declining_ci_withdraws_and_rest_sign() {
        // CI 1 is believed to be high-w but really sits on the low level and
        // values its own (expensive) entry below zero.
        let l = TypeLadder::new(vec![1.0, 3.0], vec![1.0], vec![3.0, 6.0], vec![0.0, 0.0]).unwrap();
        let b =
            BeliefMatrix::point_mass(&[TypeIndex::new(0, 0), TypeIndex::new(1, 0)], 2, 1).unwrap();
        let truth = vec![TypeIndex::new(0, 0), TypeIndex::new(0, 0)];
        let s = Scenario::new(l, b, truth, 100.0, 0.5, 1.6).unwrap();
        let trace = run_negotiation(&s, NegotiationConfig::default()).unwrap();
        assert!(trace.rounds <= 4);
        assert!(trace
            .events
            .iter()
            .any(|e| matches!(e, NegotiationEvent::Withdrew { ci: 1, .. })));
        assert_eq!(trace.signatures(), &[0]);
        assert_eq!(replay(&s, &trace).unwrap(), trace.final_menu);
    }
}
