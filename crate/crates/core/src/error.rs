use thiserror::Error;

use crate::numerics::{Dec, NumericError};
use crate::types::{AccountId, TokenId};

/// Detail for [`PoolError::InsufficientLp`], boxed to keep results small.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpShortfall {
    pub account: AccountId,
    pub token: TokenId,
    pub held: Dec,
    pub requested: Dec,
}

/// Failures of pool state transitions. A failed operation leaves the pool untouched.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PoolError {
    #[error("token {0} is not in the pool")]
    UnknownToken(String),
    #[error("token {0} is not in the pool; a withdrawn token can only be re-introduced with add_token")]
    DepletedToken(String),
    #[error("token {0} is already in the pool")]
    DuplicateToken(TokenId),
    #[error("a pool needs at least {min} tokens, got {got}")]
    TooFewTokens { min: usize, got: usize },
    #[error("expected {expected} amounts, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: Dec },
    #[error("{what} must not be negative, got {value}")]
    Negative { what: &'static str, value: Dec },
    #[error("cannot trade token {0} against itself")]
    SameToken(String),
    #[error("{0} has no positive entry")]
    Empty(&'static str),
    #[error("account {} holds {} LP {}, cannot redeem {}", .0.account, .0.held, .0.token, .0.requested)]
    InsufficientLp(Box<LpShortfall>),
    #[error("{what} would fall below the positivity floor ({value})")]
    BelowFloor { what: String, value: Dec },
    #[error("fraction {0} is outside (0, 1]")]
    FractionOutOfRange(Dec),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("unknown account {0}")]
    UnknownAccount(String),
    #[error("missing price for token {0}")]
    MissingPrice(TokenId),
    #[error("price for token {token} must be positive, got {value}")]
    BadPrice { token: TokenId, value: Dec },
    #[error("operation supports two-token pools only, pool has {0}")]
    NotTwoToken(usize),
    #[error("the pool has been emptied")]
    PoolEmpty,
    #[error("time-weighted mint rejected: token {token} would mint {minted} LP")]
    MintRejected { token: TokenId, minted: Dec },
    #[error("inconsistent pool state: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

pub type PoolResult<T> = Result<T, PoolError>;
