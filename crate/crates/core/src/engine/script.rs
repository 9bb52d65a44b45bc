//! Scenario scripts: a JSON list of blocks, each a list of pool events.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::numerics::Dec;
use crate::security::Mitigation;
use crate::types::{AccountId, TokenId};

use super::EngineError;

pub const FORMAT_VERSION: u32 = 1;

pub type Amounts = BTreeMap<TokenId, Dec>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioScript {
    pub format_version: u32,
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub fee_rho: Dec,
    #[serde(default)]
    pub mitigation: Mitigation,
    pub blocks: Vec<Vec<Event>>,
}

fn one() -> Dec {
    Dec::one()
}

/// One event plus an optional check of its outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    #[serde(flatten)]
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    /// Opens a fresh pool, or loads one from a snapshot file (path relative to the script).
    Init {
        #[serde(default)]
        tokens: Vec<TokenId>,
        #[serde(default)]
        reserves: Vec<Dec>,
        #[serde(default)]
        genesis: Option<AccountId>,
        #[serde(default)]
        from_snapshot: Option<String>,
    },
    Trade {
        account: AccountId,
        token_in: TokenId,
        token_out: TokenId,
        amount: Dec,
        /// Overrides the script's fee fraction for this trade.
        #[serde(default)]
        rho: Option<Dec>,
    },
    Provide {
        account: AccountId,
        amounts: Amounts,
    },
    ProvideDelayed {
        account: AccountId,
        amounts: Amounts,
    },
    TwapProvide {
        account: AccountId,
        amounts: Amounts,
    },
    Withdraw {
        account: AccountId,
        #[serde(default)]
        lp: Amounts,
        /// Tokens whose whole LP balance is redeemed.
        #[serde(default)]
        all: Vec<TokenId>,
    },
    ClaimFees {
        account: AccountId,
        token: TokenId,
    },
    SetPrices {
        prices: Amounts,
    },
    /// Moves the pool to the no-arbitrage state at the current prices.
    Arbitrage {
        #[serde(default)]
        method: ArbitrageMethod,
    },
    AddToken {
        account: AccountId,
        anchor: TokenId,
        anchor_amount: Dec,
        token: TokenId,
        reserve: Dec,
        governance_approved: bool,
    },
    /// Keeps running on the child holding `keep`; the other child is written
    /// out as a snapshot artifact.
    SplitPool {
        keep: Vec<TokenId>,
        governance_approved: bool,
        #[serde(default)]
        artifact: Option<String>,
    },
    AssertState(StateCheck),
    Report(Report),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArbitrageMethod {
    #[default]
    ClosedForm,
    /// Two-token bisection on the trade size.
    Bisection,
}

/// Expected pool state; every listed value is compared.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateCheck {
    /// Relative tolerance; zero demands exact equality.
    pub tolerance: Dec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<TokenId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reserves: Option<Amounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Amounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balances: Option<BTreeMap<AccountId, Amounts>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fee_pots: Option<BTreeMap<AccountId, Amounts>>,
    /// Net token flow of accounts since the start of the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flows: Option<BTreeMap<AccountId, Amounts>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending: Option<usize>,
}

/// Expected outcome of the event it is attached to.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    #[serde(default)]
    pub tolerance: Option<Dec>,
    /// The event must fail with a message containing this text; the run continues.
    #[serde(default)]
    pub error: Option<String>,
    /// Trade output, claimed fee.
    #[serde(default)]
    pub amount: Option<Dec>,
    #[serde(default)]
    pub fee: Option<Dec>,
    #[serde(default)]
    pub minted: Option<Amounts>,
    #[serde(default)]
    pub payout: Option<Amounts>,
    #[serde(default)]
    pub reserves: Option<Amounts>,
    #[serde(default)]
    pub weights: Option<Amounts>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Report {
    /// Records the state; `label` makes it available to later trade curves.
    State {
        #[serde(default)]
        label: Option<String>,
    },
    Position {
        account: AccountId,
        /// Defaults to the account's recorded deposits.
        #[serde(default)]
        basis: Option<Amounts>,
    },
    PoolPosition {
        #[serde(default)]
        basis: Option<Amounts>,
    },
    IlCurve {
        moving: TokenId,
        lo: Dec,
        hi: Dec,
        points: usize,
        /// Accounts with their own columns; bases are their recorded deposits.
        accounts: Vec<AccountId>,
        file: String,
    },
    TradeCurve {
        token_in: TokenId,
        token_out: TokenId,
        volumes: Vec<Dec>,
        /// Labels of recorded states; `current` is the live pool.
        states: Vec<String>,
        file: String,
    },
    Allocation {
        file: String,
    },
}

impl ScenarioScript {
    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.blocks.iter().flatten()
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let invalid = |m: String| Err(EngineError::Invalid(m));
        if self.format_version != FORMAT_VERSION {
            return invalid(format!("unsupported format_version {}", self.format_version));
        }
        if self.blocks.is_empty() {
            return invalid("scenario has no blocks".into());
        }
        match self.events().next() {
            Some(Event { kind: EventKind::Init { .. }, .. }) => {}
            _ => return invalid("the first event must be init".into()),
        }
        if !self.fee_rho.is_positive() || self.fee_rho > Dec::one() {
            return invalid(format!("fee_rho {} is outside (0, 1]", self.fee_rho));
        }
        if let Mitigation::Delay { min, max } = self.mitigation {
            if min > max {
                return invalid(format!("delay range {min}..{max} is empty"));
            }
        }
        for (b, block) in self.blocks.iter().enumerate() {
            for (i, ev) in block.iter().enumerate() {
                let at = |m: &str| EngineError::Invalid(format!("block {b} event {i}: {m}"));
                match &ev.kind {
                    EventKind::Init { tokens, reserves, genesis, from_snapshot } => {
                        let fresh = !tokens.is_empty() || !reserves.is_empty() || genesis.is_some();
                        if fresh == from_snapshot.is_some() {
                            return Err(at("init needs either tokens/reserves/genesis or from_snapshot"));
                        }
                        if fresh && genesis.is_none() {
                            return Err(at("init needs a genesis account"));
                        }
                    }
                    EventKind::AssertState(check) if check.tolerance.is_negative() => {
                        return Err(at("negative tolerance"));
                    }
                    EventKind::Report(Report::IlCurve { points: 0, .. }) => return Err(at("empty grid")),
                    _ => {}
                }
                if let Some(Expect { tolerance: Some(t), .. }) = &ev.expect {
                    if t.is_negative() {
                        return Err(at("negative tolerance"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parses and validates a script, reporting the JSON path of any schema error.
pub fn parse_scenario(text: &str) -> Result<ScenarioScript, EngineError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let script: ScenarioScript = serde_path_to_error::deserialize(de).map_err(|e| EngineError::Schema {
        path: e.path().to_string(),
        line: e.inner().line(),
        message: e.inner().to_string(),
    })?;
    script.validate()?;
    Ok(script)
}
