//! Random problem instances for property checks and cross-validation.

use rand::Rng;

use crate::domain::{
    make_theta_ladder, BeliefMatrix, ContractMenu, Scenario, TypeIndex, TypeLadder,
};
use crate::error::Result;
use crate::feasibility::{MenuSampling, Valuation};

/// A belief row with `modal` mass on `at` and the rest spread evenly.
pub fn concentrated_row(len: usize, at: usize, modal: f64) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let rest = (1.0 - modal) / (len - 1) as f64;
    (0..len)
        .map(|j| if j == at { modal } else { rest })
        .collect()
}

/// A random row-stochastic row whose largest entry sits at `at`.
pub fn random_row_peaked_at<R: Rng>(rng: &mut R, len: usize, at: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let modal = rng.gen_range(0.5..0.95);
    let weights: Vec<f64> = (0..len - 1).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut rest = weights.into_iter().map(|x| x / total * (1.0 - modal));
    (0..len)
        .map(|j| if j == at { modal } else { rest.next().unwrap() })
        .collect()
}

/// A valid ladder with random sizes and levels. Criticality levels never
/// reach the separation bound, so CIs at different vulnerability levels
/// never share a composite type.
pub fn random_ladder<R: Rng>(
    rng: &mut R,
    m: usize,
    k: usize,
    with_minimums: bool,
) -> Result<TypeLadder> {
    ladder_with_steps(rng, m, k, with_minimums, 1.3..4.0, 0.1..0.9)
}

fn ladder_with_steps<R: Rng>(
    rng: &mut R,
    m: usize,
    k: usize,
    with_minimums: bool,
    w_step: std::ops::Range<f64>,
    spread: std::ops::Range<f64>,
) -> Result<TypeLadder> {
    let mut w = vec![rng.gen_range(0.5..2.0)];
    for _ in 1..m {
        let last = *w.last().unwrap();
        w.push(last * rng.gen_range(w_step.clone()));
    }
    let theta = make_theta_ladder(&w, k, rng.gen_range(spread))?;
    let mut r = vec![rng.gen_range(1.5..4.0)];
    for _ in 1..m {
        let last = *r.last().unwrap();
        r.push(last + rng.gen_range(0.5..4.0));
    }
    let t_min = if with_minimums {
        let mut t = vec![rng.gen_range(0..40) as f64];
        for _ in 1..m {
            let last = *t.last().unwrap();
            t.push(last + rng.gen_range(0..60) as f64);
        }
        t
    } else {
        vec![0.0; m]
    };
    TypeLadder::new(w, theta, r, t_min)
}

fn lowest_type(ladder: &TypeLadder, types: &[TypeIndex]) -> TypeIndex {
    *types
        .iter()
        .min_by(|a, b| ladder.composite(**a).total_cmp(&ladder.composite(**b)))
        .unwrap()
}

/// Point-mass scenario over a random ladder with no minimums, with `v`
/// chosen so the lowest CI's IR constraint admits positive resources.
pub fn random_local_ic_scenario<R: Rng>(rng: &mut R, n: usize) -> Result<Scenario> {
    let m = rng.gen_range(1..=4);
    let k = rng.gen_range(1..=4);
    let ladder = random_ladder(rng, m, k, false)?;
    let types: Vec<TypeIndex> = (0..n)
        .map(|_| TypeIndex::new(rng.gen_range(0..m), rng.gen_range(0..k)))
        .collect();
    let beta = rng.gen_range(0.1..0.9);
    let low = lowest_type(&ladder, &types);
    let v = beta * ladder.rate(low) / ladder.composite(low) * rng.gen_range(1.05..3.0);
    let beliefs = BeliefMatrix::point_mass(&types, m, k)?;
    Scenario::new(ladder, beliefs, types, 1.0, beta, v)
}

/// Admissible range for the upper CI's resources given the lower CI's,
/// from the downward constraint of the upper CI and the upward constraint
/// of the lower one.
pub(crate) fn local_ic_window(lower: Valuation, upper: Valuation, t_lower: f64) -> (f64, f64) {
    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    let rows = [
        (
            upper.value - upper.cost,
            (upper.value - lower.cost) * t_lower,
        ),
        (
            upper.cost - lower.value,
            (lower.cost - lower.value) * t_lower,
        ),
    ];
    for (coef, rhs) in rows {
        if coef > 0.0 {
            lo = lo.max(rhs / coef);
        } else if coef < 0.0 {
            hi = hi.min(rhs / coef);
        } else if rhs > 0.0 {
            return (1.0, 0.0);
        }
    }
    (lo, hi)
}

/// Draws a menu for `scenario` (using its assigned types) by walking up the
/// ladder and sampling each CI's resources inside the window left by its
/// lower neighbour. Returns `None` when a window is empty or when the
/// requested violation cannot be placed.
pub fn sample_local_ic_menu<R: Rng>(
    rng: &mut R,
    scenario: &Scenario,
    sampling: MenuSampling,
) -> Option<ContractMenu> {
    let order = scenario.ladder_order();
    let assigned = scenario.assigned_types();
    let vals: Vec<Valuation> = order
        .iter()
        .map(|&i| Valuation::of(&scenario.ladder, assigned[i], scenario.beta, scenario.v))
        .collect();
    let n = order.len();
    let broken = match sampling {
        MenuSampling::Relaxed => None,
        MenuSampling::BreakUlic => Some(rng.gen_range(1..n)),
    };
    let mut t = vec![rng.gen_range(1.0..100.0)];
    for k in 1..n {
        let (lo, hi) = local_ic_window(vals[k - 1], vals[k], t[k - 1]);
        if lo > hi {
            return None;
        }
        let next = if broken == Some(k) {
            if !hi.is_finite() {
                return None;
            }
            hi * rng.gen_range(1.01..1.5) + 1.0
        } else if lo == hi {
            lo
        } else {
            let hi = if hi.is_finite() {
                hi
            } else {
                lo + lo.max(50.0)
            };
            rng.gen_range(lo..=hi)
        };
        t.push(next);
    }
    Some(ContractMenu::from_allocation(
        &scenario.ladder,
        &order,
        &assigned,
        &t,
    ))
}

/// Two CIs at distinct vulnerability levels, the lower CI first, with
/// concentrated beliefs and integer minimums and budget.
///
/// `v` is drawn so that the lower type clears its own participation
/// constraint but does not value the upper type's resources above their
/// cost (`θ_1 w_1 v ≤ β r_2`). Outside that regime the upward constraint
/// of the lower CI can bind and the low type is no longer held at its
/// minimum.
pub fn random_two_ci_scenario<R: Rng>(rng: &mut R) -> Result<Scenario> {
    let m = rng.gen_range(2..=4);
    let k = rng.gen_range(1..=4);
    let ladder = random_ladder(rng, m, k, true)?;
    let w_lo = rng.gen_range(0..m - 1);
    let w_hi = rng.gen_range(w_lo + 1..m);
    let types = vec![
        TypeIndex::new(w_lo, rng.gen_range(0..k)),
        TypeIndex::new(w_hi, rng.gen_range(0..k)),
    ];
    let beta = rng.gen_range(0.2..0.9);
    let low = ladder.composite(types[0]);
    let v_min = beta * ladder.rate(types[0]) / low;
    let v_max = beta * ladder.rate(types[1]) / low;
    let v = v_min + (v_max - v_min) * rng.gen_range(0.05..1.0);
    let beliefs = BeliefMatrix::new(
        types
            .iter()
            .map(|t| random_row_peaked_at(rng, m, t.w))
            .collect(),
        types
            .iter()
            .map(|t| random_row_peaked_at(rng, k, t.theta))
            .collect(),
    )?;
    let floor: f64 = types.iter().map(|t| ladder.min_resources(*t)).sum();
    let t_max = floor + rng.gen_range(0..600) as f64;
    Scenario::new(ladder, beliefs, types, t_max, beta, v)
}

/// `n` CIs with random types on a random ladder, concentrated beliefs,
/// integer minimums and an integer budget at most 300 above the sum of
/// minimums. `v` keeps the lowest CI's IR constraint satisfiable.
pub fn random_scenario<R: Rng>(rng: &mut R, n: usize) -> Result<Scenario> {
    let m = rng.gen_range(2..=4);
    let k = rng.gen_range(1..=4);
    let ladder = random_ladder(rng, m, k, true)?;
    let types: Vec<TypeIndex> = (0..n)
        .map(|_| TypeIndex::new(rng.gen_range(0..m), rng.gen_range(0..k)))
        .collect();
    let beta = rng.gen_range(0.2..0.9);
    let low = lowest_type(&ladder, &types);
    let v = beta * ladder.rate(low) / ladder.composite(low) * rng.gen_range(1.05..4.0);
    let beliefs = BeliefMatrix::new(
        types
            .iter()
            .map(|t| random_row_peaked_at(rng, m, t.w))
            .collect(),
        types
            .iter()
            .map(|t| random_row_peaked_at(rng, k, t.theta))
            .collect(),
    )?;
    let floor: f64 = types.iter().map(|t| ladder.min_resources(*t)).sum();
    let t_max = floor + rng.gen_range(0..=300) as f64;
    Scenario::new(ladder, beliefs, types, t_max, beta, v)
}

/// Like [`random_scenario`] but every CI sits on its own vulnerability
/// level, so no two CIs are forced onto the same allocation, and the budget
/// is an integer between 10 and 300 above the smallest feasible budget.
/// The admissible region then has full dimension. Steps between w levels
/// are at least 2 and the θ spread at most 0.6, which keeps the ratio
/// windows between neighbours wide enough for a unit grid to land near the
/// optimum. When no budget is feasible, the budget sits above the sum of
/// minimums instead. Needs `n ≤ 4`.
pub fn random_separated_scenario<R: Rng>(rng: &mut R, n: usize) -> Result<Scenario> {
    let m = rng.gen_range(n.max(2)..=4.max(n));
    let k = rng.gen_range(1..=4);
    let ladder = ladder_with_steps(rng, m, k, true, 2.0..4.0, 0.1..0.6)?;
    let mut levels: Vec<usize> = rand::seq::index::sample(rng, m, n).into_vec();
    levels.sort_unstable();
    let types: Vec<TypeIndex> = levels
        .into_iter()
        .map(|w| TypeIndex::new(w, rng.gen_range(0..k)))
        .collect();
    let beta = rng.gen_range(0.2..0.9);
    let low = lowest_type(&ladder, &types);
    let v = beta * ladder.rate(low) / ladder.composite(low) * rng.gen_range(1.05..4.0);
    let beliefs = BeliefMatrix::new(
        types
            .iter()
            .map(|t| random_row_peaked_at(rng, m, t.w))
            .collect(),
        types
            .iter()
            .map(|t| random_row_peaked_at(rng, k, t.theta))
            .collect(),
    )?;
    let floor: f64 = types.iter().map(|t| ladder.min_resources(*t)).sum();
    let scenario = Scenario::new(ladder, beliefs, types, floor, beta, v)?;
    let base = match crate::solver::minimum_budget(&scenario)? {
        Some(b) => b.ceil() + 10.0,
        None => floor,
    };
    let t_max = base + rng.gen_range(0..=290) as f64;
    Ok(scenario.with_t_max(t_max))
}
