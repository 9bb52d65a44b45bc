//! Flash-deposit attack replay and the two countermeasures: delayed
//! activation of deposits and minting from a time-weighted exponent.

mod attack;
mod block;

use serde::{Deserialize, Serialize};

pub use attack::{
    frozen_counterfactual, replay_flash_attack, AttackOutcome, AttackPlan, AttackReport, AttackStep,
    FrozenCounterfactual,
};
pub use block::{
    twap_mint_quote, Activation, ActivationResult, BlockClock, BlockEngine, DelayedProvide, EngineConfig,
    PendingDeposit, TwapWindow,
};

/// How liquidity provision is guarded.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Mitigation {
    #[default]
    None,
    /// Deposits activate after a uniform random number of blocks in `[min, max]`.
    Delay { min: u64, max: u64 },
    /// Exponents are set from the geometric mean of the last `k + 1` block-start ratios.
    Twap { k: usize },
}
