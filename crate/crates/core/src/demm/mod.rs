//! Dynamic exponent market maker.
//!
//! The pool state is `(r, w)`: reserves and the exponent vector of the
//! invariant `prod x_t^w_t`. Every token has its own LP token and the LP supply
//! of token `t` is always exactly `w_t`. Deposits may be in any proportion; the
//! exponent absorbs them so relative spot prices never move on provision or
//! withdrawal.
//!
//! Rounding always favours the pool: outputs, payouts and minted LP are
//! truncated, retained reserves are rounded up.

mod admin;
mod ledger;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cpmm::{above_floor, positive};
use crate::error::{LpShortfall, PoolError, PoolResult};
use crate::invariant;
use crate::numerics::{precision, Dec, Rounding};
use crate::types::{AccountId, TokenId};

pub use ledger::LpLedger;

/// Reserves and exponent of a dynamic-exponent pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemmState {
    tokens: Vec<TokenId>,
    reserves: Vec<Dec>,
    weights: Vec<Dec>,
}

/// Fraction `rho` of each trade input that actually trades; the rest,
/// `(1 - rho) * input`, is the fee paid to holders of the input token's LP.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Dec", into = "Dec")]
pub struct FeePolicy {
    rho: Dec,
}

impl FeePolicy {
    pub fn new(rho: Dec) -> PoolResult<Self> {
        if !rho.is_positive() || rho > Dec::one() {
            return Err(PoolError::FractionOutOfRange(rho));
        }
        Ok(FeePolicy { rho })
    }

    pub fn free() -> Self {
        FeePolicy { rho: Dec::one() }
    }

    pub fn rho(&self) -> &Dec {
        &self.rho
    }
}

impl Default for FeePolicy {
    fn default() -> Self {
        Self::free()
    }
}

impl TryFrom<Dec> for FeePolicy {
    type Error = PoolError;
    fn try_from(rho: Dec) -> PoolResult<Self> {
        FeePolicy::new(rho)
    }
}

impl From<FeePolicy> for Dec {
    fn from(f: FeePolicy) -> Dec {
        f.rho
    }
}

/// Outcome of a swap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeQuote {
    pub token_in: TokenId,
    pub token_out: TokenId,
    /// Full input paid by the trader, fee included.
    pub amount_in: Dec,
    pub amount_out: Dec,
    pub fee_charged: Dec,
}

/// Outcome of a redemption.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Withdrawal {
    /// Paid out per token, aligned with the token order before the redemption.
    pub payout: Vec<Dec>,
    /// Tokens whose whole supply was redeemed and which left the pool.
    pub removed: Vec<TokenId>,
}

impl DemmState {
    pub fn new(tokens: Vec<TokenId>, reserves: Vec<Dec>, weights: Vec<Dec>) -> PoolResult<Self> {
        for len in [reserves.len(), weights.len()] {
            if len != tokens.len() {
                return Err(PoolError::LengthMismatch { expected: tokens.len(), got: len });
            }
        }
        check_unique(&tokens)?;
        for r in &reserves {
            positive("reserve", r)?;
        }
        for w in &weights {
            positive("weight", w)?;
        }
        Ok(DemmState { tokens, reserves, weights })
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn reserves(&self) -> &[Dec] {
        &self.reserves
    }

    pub fn weights(&self) -> &[Dec] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> PoolResult<usize> {
        self.tokens
            .iter()
            .position(|t| t.as_str() == token)
            .ok_or_else(|| PoolError::UnknownToken(token.to_string()))
    }

    pub fn reserve(&self, token: &str) -> PoolResult<&Dec> {
        Ok(&self.reserves[self.index_of(token)?])
    }

    pub fn weight(&self, token: &str) -> PoolResult<&Dec> {
        Ok(&self.weights[self.index_of(token)?])
    }

    /// Price of token `o` in units of token `i`: `(r_i / w_i) / (r_o / w_o)`.
    pub fn spot_price(&self, o: &str, i: &str) -> PoolResult<Dec> {
        let (io, ii) = (self.index_of(o)?, self.index_of(i)?);
        if io == ii {
            return Err(PoolError::SameToken(o.to_string()));
        }
        Ok(invariant::spot_price(
            &self.reserves[ii],
            &self.weights[ii],
            &self.reserves[io],
            &self.weights[io],
        )?)
    }

    /// `ln` of the current invariant value, `sum w_t ln r_t`.
    pub fn log_invariant(&self, prec: u32) -> PoolResult<Dec> {
        Ok(invariant::log_invariant(&self.reserves, &self.weights, prec)?)
    }

    /// Output of a swap without applying it.
    pub fn quote(&self, token_in: &str, token_out: &str, amount_in: &Dec, fee: &FeePolicy) -> PoolResult<TradeQuote> {
        Ok(self.swap_plan(token_in, token_out, amount_in, fee)?.quote)
    }

    fn swap_plan(&self, token_in: &str, token_out: &str, amount_in: &Dec, fee: &FeePolicy) -> PoolResult<SwapPlan> {
        let (i, o) = (self.index_of(token_in)?, self.index_of(token_out)?);
        if i == o {
            return Err(PoolError::SameToken(token_in.to_string()));
        }
        positive("trade input", amount_in)?;
        let effective = if fee.rho == Dec::one() {
            amount_in.clone()
        } else {
            amount_in.mul_round(&fee.rho, precision(), Rounding::Floor)
        };
        positive("effective trade input", &effective)?;
        let retained = invariant::swap_retained(
            &self.reserves[i],
            &self.reserves[o],
            &self.weights[i],
            &self.weights[o],
            &effective,
        )?;
        let amount_out = &self.reserves[o] - &retained;
        positive("trade output", &amount_out)?;
        above_floor(format!("reserve of {token_out}"), &retained)?;
        let fee_charged = amount_in - &effective;
        Ok(SwapPlan {
            i,
            o,
            effective,
            retained,
            quote: TradeQuote {
                token_in: self.tokens[i].clone(),
                token_out: self.tokens[o].clone(),
                amount_in: amount_in.clone(),
                amount_out,
                fee_charged,
            },
        })
    }

    pub(crate) fn set_reserves(&mut self, reserves: Vec<Dec>) {
        debug_assert_eq!(reserves.len(), self.reserves.len());
        self.reserves = reserves;
    }
}

struct SwapPlan {
    i: usize,
    o: usize,
    effective: Dec,
    retained: Dec,
    quote: TradeQuote,
}

/// A dynamic-exponent pool together with its LP ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemmPool {
    state: DemmState,
    ledger: LpLedger,
    /// Tokens whose supply was fully redeemed; they can return only via `add_token`.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    retired: BTreeSet<TokenId>,
}

impl DemmPool {
    /// Opens a pool with unit exponents; `genesis` receives one LP token of
    /// each kind. The reserves are assumed to be of equal external value.
    pub fn new(tokens: Vec<TokenId>, reserves: Vec<Dec>, genesis: &str) -> PoolResult<Self> {
        if tokens.len() < 2 {
            return Err(PoolError::TooFewTokens { min: 2, got: tokens.len() });
        }
        let weights = vec![Dec::one(); tokens.len()];
        let state = DemmState::new(tokens, reserves, weights)?;
        let mut ledger = LpLedger::new();
        let genesis = AccountId::from(genesis);
        for t in &state.tokens {
            ledger.credit(&genesis, t, &Dec::one());
        }
        Ok(DemmPool { state, ledger, retired: BTreeSet::new() })
    }

    /// Rebuilds a pool from parts, checking that LP column sums equal the weights.
    pub fn from_parts(state: DemmState, ledger: LpLedger, retired: BTreeSet<TokenId>) -> PoolResult<Self> {
        let pool = DemmPool { state, ledger, retired };
        pool.check_consistency()?;
        Ok(pool)
    }

    pub fn state(&self) -> &DemmState {
        &self.state
    }

    pub fn ledger(&self) -> &LpLedger {
        &self.ledger
    }

    pub fn retired(&self) -> &BTreeSet<TokenId> {
        &self.retired
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.state.tokens
    }

    pub fn reserves(&self) -> &[Dec] {
        &self.state.reserves
    }

    pub fn weights(&self) -> &[Dec] {
        &self.state.weights
    }

    pub fn spot_price(&self, o: &str, i: &str) -> PoolResult<Dec> {
        self.state.spot_price(o, i)
    }

    /// Maps `token -> amount` onto the pool's token order (missing tokens are zero).
    pub fn align(&self, amounts: &BTreeMap<TokenId, Dec>) -> PoolResult<Vec<Dec>> {
        for t in amounts.keys() {
            if self.state.index_of(t.as_str()).is_err() {
                return Err(self.missing_token(t.as_str()));
            }
        }
        Ok(self.state.tokens.iter().map(|t| amounts.get(t).cloned().unwrap_or_default()).collect())
    }

    fn missing_token(&self, token: &str) -> PoolError {
        if self.retired.contains(token) {
            PoolError::DepletedToken(token.to_string())
        } else {
            PoolError::UnknownToken(token.to_string())
        }
    }

    fn index_of(&self, token: &str) -> PoolResult<usize> {
        self.state.index_of(token).map_err(|_| self.missing_token(token))
    }

    /// Swaps `amount_in` of `token_in` for `token_out`. With `rho < 1` only
    /// `rho * amount_in` trades; the remainder is split pro rata among the
    /// holders of LP `token_in` as claimable fees.
    pub fn trade(&mut self, token_in: &str, token_out: &str, amount_in: &Dec, fee: &FeePolicy) -> PoolResult<TradeQuote> {
        self.index_of(token_in)?;
        self.index_of(token_out)?;
        let plan = self.state.swap_plan(token_in, token_out, amount_in, fee)?;
        let SwapPlan { i, o, effective, retained, quote } = plan;
        self.state.reserves[i] += &effective;
        self.state.reserves[o] = retained;
        if quote.fee_charged.is_positive() {
            self.distribute_fee(i, &quote.fee_charged);
        }
        Ok(quote)
    }

    fn distribute_fee(&mut self, i: usize, fee: &Dec) {
        let token = self.state.tokens[i].clone();
        let supply = &self.state.weights[i];
        let holders: Vec<(AccountId, Dec)> =
            self.ledger.holders(token.as_str()).map(|(a, b)| (a.clone(), b.clone())).collect();
        let mut remaining = fee.clone();
        let last = holders.len().saturating_sub(1);
        for (k, (account, balance)) in holders.iter().enumerate() {
            // The last holder takes the rounding remainder so the fee is conserved exactly.
            let share = if k == last {
                remaining.clone()
            } else {
                fee.mul_exact(balance)
                    .div_round(supply, precision(), Rounding::Floor)
                    .expect("LP supply is positive")
            };
            remaining -= &share;
            if share.is_positive() {
                self.ledger.credit_fee(account, &token, &share);
            }
        }
    }

    /// Deposits `deposit` (aligned with [`tokens`](Self::tokens); zeros allowed)
    /// and mints `(dr_t / r_t) * w_t` LP token `t` for every deposited token.
    pub fn provide(&mut self, provider: &str, deposit: &[Dec]) -> PoolResult<Vec<Dec>> {
        let minted = self.mint_amounts(deposit)?;
        self.apply_mint(provider, deposit, &minted);
        Ok(minted)
    }

    /// LP that `deposit` would mint, without applying it.
    pub fn mint_amounts(&self, deposit: &[Dec]) -> PoolResult<Vec<Dec>> {
        self.check_amounts(deposit, "deposit")?;
        let prec = precision();
        let mut minted = Vec::with_capacity(deposit.len());
        for (k, dr) in deposit.iter().enumerate() {
            if dr.is_zero() {
                minted.push(Dec::zero());
                continue;
            }
            let m = dr
                .mul_exact(&self.state.weights[k])
                .div_round(&self.state.reserves[k], prec, Rounding::Floor)?;
            positive("minted LP", &m)?;
            minted.push(m);
        }
        Ok(minted)
    }

    pub(crate) fn apply_mint(&mut self, provider: &str, deposit: &[Dec], minted: &[Dec]) {
        let provider = AccountId::from(provider);
        for (k, (dr, m)) in deposit.iter().zip(minted).enumerate() {
            if dr.is_zero() && m.is_zero() {
                continue;
            }
            self.state.reserves[k] += dr;
            self.state.weights[k] += m;
            self.ledger.credit(&provider, &self.state.tokens[k], m);
        }
    }

    /// Redeems `redeem` LP tokens (aligned with [`tokens`](Self::tokens)) for
    /// `r_t * dw_t / w_t` of each token. Redeeming a token's entire supply
    /// removes it from the pool.
    pub fn withdraw(&mut self, account: &str, redeem: &[Dec]) -> PoolResult<Withdrawal> {
        self.check_amounts(redeem, "redemption")?;
        let account_id = AccountId::from(account);
        let prec = precision();
        let n = self.state.len();
        let mut payout = vec![Dec::zero(); n];
        let mut next_r = self.state.reserves.clone();
        let mut next_w = self.state.weights.clone();
        let mut removed = Vec::new();
        for (k, dw) in redeem.iter().enumerate() {
            if dw.is_zero() {
                continue;
            }
            let token = &self.state.tokens[k];
            let held = self.ledger.balance(account, token.as_str());
            if *dw > held {
                return Err(PoolError::InsufficientLp(Box::new(LpShortfall {
                    account: account_id,
                    token: token.clone(),
                    held,
                    requested: dw.clone(),
                })));
            }
            let (r, w) = (&self.state.reserves[k], &self.state.weights[k]);
            if dw == w {
                payout[k] = r.clone();
                removed.push(k);
                continue;
            }
            payout[k] = r.mul_exact(dw).div_round(w, prec, Rounding::Floor)?;
            next_r[k] = r - &payout[k];
            next_w[k] = w - dw;
            above_floor(format!("reserve of {token}"), &next_r[k])?;
            above_floor(format!("weight of {token}"), &next_w[k])?;
        }
        for (token, dw) in self.state.tokens.iter().zip(redeem) {
            if dw.is_positive() {
                self.ledger.debit(&account_id, token, dw);
            }
        }
        self.state.reserves = next_r;
        self.state.weights = next_w;
        let removed_ids: Vec<TokenId> = removed.iter().map(|&k| self.state.tokens[k].clone()).collect();
        for &k in removed.iter().rev() {
            self.state.tokens.remove(k);
            self.state.reserves.remove(k);
            self.state.weights.remove(k);
        }
        self.retired.extend(removed_ids.iter().cloned());
        Ok(Withdrawal { payout, removed: removed_ids })
    }

    /// Pays out and zeroes the account's accumulated fees in `token`.
    pub fn claim_fees(&mut self, account: &str, token: &str) -> Dec {
        self.ledger.take_fee(account, token)
    }

    fn check_amounts(&self, amounts: &[Dec], what: &'static str) -> PoolResult<()> {
        if self.state.is_empty() {
            return Err(PoolError::PoolEmpty);
        }
        if amounts.len() != self.state.len() {
            return Err(PoolError::LengthMismatch { expected: self.state.len(), got: amounts.len() });
        }
        if let Some(neg) = amounts.iter().find(|a| a.is_negative()) {
            return Err(PoolError::Negative { what, value: neg.clone() });
        }
        if !amounts.iter().any(Dec::is_positive) {
            return Err(PoolError::Empty(what));
        }
        Ok(())
    }

    pub(crate) fn set_reserves(&mut self, reserves: Vec<Dec>) {
        self.state.set_reserves(reserves);
    }

    /// Checks positivity and the LP-supply law (column sums equal weights).
    pub fn check_consistency(&self) -> PoolResult<()> {
        let s = &self.state;
        check_unique(&s.tokens)?;
        for (k, t) in s.tokens.iter().enumerate() {
            positive("reserve", &s.reserves[k])?;
            positive("weight", &s.weights[k])?;
            let column = self.ledger.column_sum(t.as_str());
            if column != s.weights[k] {
                return Err(PoolError::Inconsistent(format!(
                    "LP supply of {t} is {column} but its weight is {}",
                    s.weights[k]
                )));
            }
        }
        for (_, _, v) in self.ledger.entries() {
            if v.is_negative() {
                return Err(PoolError::Negative { what: "ledger entry", value: v.clone() });
            }
        }
        if let Some(stray) = self.ledger.lp_tokens().find(|t| s.index_of(t.as_str()).is_err()) {
            return Err(PoolError::UnknownToken(stray.to_string()));
        }
        Ok(())
    }
}

pub(crate) fn check_unique(tokens: &[TokenId]) -> PoolResult<()> {
    let mut seen = BTreeSet::new();
    for t in tokens {
        if !seen.insert(t) {
            return Err(PoolError::DuplicateToken(t.clone()));
        }
    }
    Ok(())
}
