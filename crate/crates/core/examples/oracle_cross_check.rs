//! Cross-checks the LP against exhaustive grid search on random scenarios.

use cip_contract::generate::random_separated_scenario;
use cip_contract::solver::{brute_force_oracle, lipschitz_bound, solve_optimal};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cip_contract::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    println!(
        "{:>2} {:>12} {:>12} {:>10} {:>8}",
        "n", "lp", "grid", "gap", "L"
    );
    for i in 0..9 {
        let n = 2 + i % 3;
        let s = random_separated_scenario(&mut rng, n)?;
        let lp = solve_optimal(&s)?;
        let grid = brute_force_oracle(&s, 1.0)?;
        match (lp.objective, grid.objective) {
            (Some(a), Some(b)) => println!(
                "{n:>2} {a:>12.3} {b:>12.3} {:>10.4} {:>8.3}",
                a - b,
                lipschitz_bound(&s)
            ),
            _ => println!("{n:>2} lp {:?} grid {:?}", lp.status, grid.status),
        }
    }
    Ok(())
}
