//! Dynamic exponent market maker: pools whose invariant exponents move with
//! liquidity, a constant-product baseline, market and analytics helpers,
//! flash-deposit attack replay with mitigations, and a scenario engine.

pub mod analytics;
pub mod cpmm;
pub mod demm;
pub mod engine;
mod error;
pub mod invariant;
pub mod market;
pub mod numerics;
pub mod security;
mod types;

pub use cpmm::{CpmmDeposit, CpmmRedemption, CpmmState};
pub use demm::{DemmPool, DemmState, FeePolicy, LpLedger, TradeQuote, Withdrawal};
pub use error::{LpShortfall, PoolError, PoolResult};
pub use numerics::{Dec, NumericError, Rounding};
pub use types::{AccountId, TokenId};

/// Reserves and weights may not fall below `10^POSITIVITY_FLOOR`.
pub const POSITIVITY_FLOOR: i64 = -30;
