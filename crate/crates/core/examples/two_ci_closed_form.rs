//! Two CIs: the closed form against the LP, with the KKT multipliers.

use cip_contract::domain::{BeliefMatrix, Scenario, TypeIndex, TypeLadder};
use cip_contract::solver::{lp_coefficients, solve_optimal, solve_two_ci};

fn main() -> cip_contract::Result<()> {
    let ladder = TypeLadder::new(
        vec![1.0, 3.0, 9.0],
        vec![1.0, 1.2],
        vec![3.0, 6.0, 9.0],
        vec![20.0, 60.0, 100.0],
    )?;
    let types = vec![TypeIndex::new(0, 0), TypeIndex::new(1, 0)];
    let beliefs = BeliefMatrix::point_mass(&types, 3, 2)?;
    let scenario = Scenario::new(ladder, beliefs, types, 500.0, 0.5, 2.0)?;

    let c = lp_coefficients(&scenario);
    println!("objective weights c = {c:?}");

    let closed = solve_two_ci(&scenario)?;
    let lp = solve_optimal(&scenario)?;
    println!("closed form T = {:?}", closed.resources());
    println!("LP          T = {:?}", lp.resources());
    println!("CC utility {:.3}", lp.objective.unwrap());

    if let Some(d) = lp.diagnostics {
        println!("budget multiplier lambda = {:.4}", d.lambda);
        for m in d.multipliers.iter().filter(|m| m.value.abs() > 1e-9) {
            println!("  {:<10} {:.4}", m.label.to_string(), m.value);
        }
        println!("stationarity residual {:.2e}", d.stationarity_residual);
    }
    Ok(())
}
