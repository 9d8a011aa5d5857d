//! Designs the optimal menu for a scenario read from JSON (or the default
//! five-CI scenario) and checks it against the full IR and IC systems.
//!
//! `cargo run --example optimal_menu -- scenario.json`

use cip_contract::domain::{validate_ladder, Scenario};
use cip_contract::experiments::default_scenario;
use cip_contract::feasibility::{check_ic_full, check_ir, check_monotonicity};
use cip_contract::solver::{equal_allocation, minimum_budget, solve_optimal};

fn main() -> cip_contract::Result<()> {
    let scenario = match std::env::args().nth(1) {
        Some(path) => Scenario::from_json(&std::fs::read_to_string(path)?)?,
        None => default_scenario(5)?,
    };
    let report = validate_ladder(&scenario.ladder);
    if !report.ok {
        println!("ladder rejected: {:?}", report.violations);
        return Ok(());
    }
    println!("smallest workable budget: {:?}", minimum_budget(&scenario)?);

    let result = solve_optimal(&scenario)?;
    let Some(menu) = &result.menu else {
        println!("no admissible menu: {:?}", result.reason);
        return Ok(());
    };
    println!("{:>4} {:>8} {:>10} {:>10}", "ci", "type", "T", "R");
    for e in &menu.entries {
        println!(
            "{:>4} {:>8} {:>10.3} {:>10.3}",
            e.ci,
            format!("({},{})", e.assigned.w, e.assigned.theta),
            e.t,
            e.reward
        );
    }
    let (b, v) = (scenario.beta, scenario.v);
    let full =
        check_ir(menu, &scenario.ladder, b, v).merge(check_ic_full(menu, &scenario.ladder, b, v));
    println!("full IR + IC satisfied: {}", full.satisfied);
    println!(
        "monotone: {}",
        check_monotonicity(menu, &scenario.ladder, b, v).satisfied
    );
    let equal = equal_allocation(&scenario);
    let u_eq =
        cip_contract::domain::cc_expected_utility(&equal, &scenario.beliefs, &scenario.ladder)?;
    println!(
        "CC utility {:.3} (equal split {:.3})",
        result.objective.unwrap(),
        u_eq
    );
    Ok(())
}
