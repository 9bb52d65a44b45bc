//! The instant-deposit attack and two countermeasures: a random activation
//! delay and a time-weighted mint ratio.
//!
//!     cargo run --example flash_attack

use demm::security::{replay_flash_attack, AttackOutcome, AttackPlan, Mitigation};

fn main() -> anyhow::Result<()> {
    let plan = AttackPlan::textbook();
    let plain = replay_flash_attack(&plan, &Mitigation::None)?;
    for step in &plain.steps {
        println!("{:<14} reserves {:?} weights {:?}", step.label, step.state.reserves(), step.state.weights());
    }
    println!("profit {:?} = ${}", plain.profit, plain.profit_value);
    let cf = &plain.counterfactual;
    println!("with a frozen exponent the swap back pays {} s; profit {:?}", cf.swap_back_output, cf.profit);

    for m in [Mitigation::Delay { min: 1, max: 3 }, Mitigation::Twap { k: 1 }] {
        let r = replay_flash_attack(&plan, &m)?;
        match &r.outcome {
            AttackOutcome::Completed => println!("{m:?}: completed, profit ${}", r.profit_value.display_dp(4)),
            AttackOutcome::Aborted { step, reason } => println!("{m:?}: aborted at step {step}: {reason}"),
        }
    }
    Ok(())
}
