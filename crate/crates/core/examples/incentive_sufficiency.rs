//! Menus that meet only the neighbouring incentive constraints and the
//! lowest CI's participation constraint still satisfy every pairwise
//! constraint. Breaking one upward constraint on purpose shows the check
//! has teeth.

use cip_contract::feasibility::{verify_theorem1, verify_theorem1_with, MenuSampling};

fn main() -> cip_contract::Result<()> {
    let ok = verify_theorem1(1000, 11)?;
    println!(
        "local menus: {}/{} pass full IC and IR ({} draws rejected)",
        ok.passed, ok.trials, ok.rejected_draws
    );
    let broken = verify_theorem1_with(200, 11, MenuSampling::BreakUlic)?;
    println!(
        "menus with a broken upward constraint: {}/{} pass",
        broken.passed, broken.trials
    );
    Ok(())
}
