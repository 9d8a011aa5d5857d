//! The design / offer / sign loop with a generous and a tight budget.

use cip_contract::experiments::fig2_scenario;
use cip_contract::negotiation::{run_negotiation, NegotiationConfig, NegotiationEvent};

fn main() -> cip_contract::Result<()> {
    for t_max in [650.0, 200.0] {
        let s = fig2_scenario()?.with_t_max(t_max);
        let trace = run_negotiation(&s, NegotiationConfig::default())?;
        println!("budget {t_max}: {} rounds", trace.rounds);
        for e in &trace.events {
            match e {
                NegotiationEvent::Phase { phase } => println!("  -> {phase:?}"),
                NegotiationEvent::Excluded { ci, round, reason } => {
                    println!("  round {round}: exclude CI {ci} ({reason:?})")
                }
                NegotiationEvent::Offered { round, menu } => {
                    println!("  round {round}: offer T = {:.2?}", menu.resources())
                }
                NegotiationEvent::Answered { ci, choice, .. } => {
                    println!("    CI {ci}: {choice:?}")
                }
                other => println!("  {other:?}"),
            }
        }
        println!("  signed {:?}\n", trace.signatures());
    }
    Ok(())
}
