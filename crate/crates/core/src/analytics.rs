//! Portfolio shares, impermanent loss and curve tables.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cpmm::CpmmState;
use crate::demm::{DemmPool, DemmState, FeePolicy};
use crate::error::{PoolError, PoolResult};
use crate::market::{cpmm_equilibrium, demm_equilibrium, PriceVector};
use crate::numerics::{precision, Dec, Rounding};
use crate::types::{AccountId, TokenId};

/// Label used for whole-pool rows.
pub const POOL: &str = "pool";

/// An account's claim on the pool, valued against holding its original deposit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionReport {
    pub account: String,
    pub tokens: Vec<TokenId>,
    /// Tokens the account would receive by redeeming all of its LP.
    pub entitled: Vec<Dec>,
    pub pool_value: Dec,
    pub hold_value: Dec,
    /// `pool_value - hold_value`; negative is a loss.
    pub il_abs: Dec,
    /// `pool_value / hold_value`.
    pub il_rel: Dec,
}

impl PositionReport {
    fn build(account: String, tokens: &[TokenId], entitled: Vec<Dec>, prices: &PriceVector, basis: &[Dec]) -> PoolResult<Self> {
        if basis.len() != tokens.len() {
            return Err(PoolError::LengthMismatch { expected: tokens.len(), got: basis.len() });
        }
        let pool_value = prices.value(tokens, &entitled)?;
        let hold_value = prices.value(tokens, basis)?;
        if !hold_value.is_positive() {
            return Err(PoolError::NonPositive { what: "hold value", value: hold_value });
        }
        let il_rel = pool_value.div_round(&hold_value, precision(), Rounding::HalfEven)?;
        Ok(PositionReport {
            account,
            tokens: tokens.to_vec(),
            il_abs: &pool_value - &hold_value,
            entitled,
            pool_value,
            hold_value,
            il_rel,
        })
    }
}

/// Entitlement `r_t * b_t / w_t` of each LP balance, truncated.
pub fn entitlement(pool: &DemmPool, account: &str) -> PoolResult<Vec<Dec>> {
    if !pool.ledger().has_account(account) {
        return Err(PoolError::UnknownAccount(account.to_string()));
    }
    let prec = precision();
    pool.tokens()
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let b = pool.ledger().balance(account, t.as_str());
            Ok(pool.reserves()[k].mul_exact(&b).div_round(&pool.weights()[k], prec, Rounding::Floor)?)
        })
        .collect()
}

/// Position of `account`; `hold_basis` is its original deposit, aligned with the pool's tokens.
pub fn position(pool: &DemmPool, account: &str, prices: &PriceVector, hold_basis: &[Dec]) -> PoolResult<PositionReport> {
    let entitled = entitlement(pool, account)?;
    PositionReport::build(account.to_string(), pool.tokens(), entitled, prices, hold_basis)
}

/// Position of the whole pool against holding `hold_basis` (usually all deposits).
pub fn pool_position(state: &DemmState, prices: &PriceVector, hold_basis: &[Dec]) -> PoolResult<PositionReport> {
    PositionReport::build(POOL.to_string(), state.tokens(), state.reserves().to_vec(), prices, hold_basis)
}

/// A CSV table of decimal strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Column `name` parsed back into decimals.
    pub fn column(&self, name: &str) -> Option<Vec<Dec>> {
        let k = self.header.iter().position(|h| h == name)?;
        self.rows.iter().map(|r| r[k].parse().ok()).collect()
    }
}

fn cell(x: &Dec) -> String {
    x.round(30, Rounding::HalfEven).to_string()
}

/// `n` points spaced evenly in log scale over `[lo, hi]`, to 30 significant digits.
pub fn log_grid(lo: &Dec, hi: &Dec, n: usize) -> PoolResult<Vec<Dec>> {
    crate::cpmm::positive("grid bound", lo)?;
    crate::cpmm::positive("grid bound", hi)?;
    if n == 0 {
        return Err(PoolError::Empty("price grid"));
    }
    if n == 1 {
        return Ok(vec![lo.clone()]);
    }
    let prec = precision() + 10;
    let (a, b) = (lo.ln_prec(prec)?, hi.ln_prec(prec)?);
    let span = &b - &a;
    let steps = Dec::from((n - 1) as i64);
    (0..n)
        .map(|k| {
            let x = &a + &span.mul_exact(&Dec::from(k as i64)).div_round(&steps, prec, Rounding::HalfEven)?;
            Ok(x.exp_prec(prec)?.round(30, Rounding::HalfEven))
        })
        .collect()
}

/// A curve participant: an account and its original deposit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Participant {
    pub account: AccountId,
    pub basis: Vec<Dec>,
}

/// Relative value of a fixed-weight pool holding only `basis`, with weights
/// equal to the basis value shares at `base`, after prices move to `prices`.
pub fn personal_cpmm_il(tokens: &[TokenId], basis: &[Dec], base: &PriceVector, prices: &PriceVector) -> PoolResult<Dec> {
    let held: Vec<usize> = (0..tokens.len()).filter(|&k| basis[k].is_positive()).collect();
    if held.len() < 2 {
        // A single-token holding never trades, so it tracks holding exactly.
        return Ok(Dec::one());
    }
    let sub_tokens: Vec<TokenId> = held.iter().map(|&k| tokens[k].clone()).collect();
    let sub_basis: Vec<Dec> = held.iter().map(|&k| basis[k].clone()).collect();
    let weights = sub_tokens
        .iter()
        .zip(&sub_basis)
        .map(|(t, b)| Ok(base.get(t.as_str())?.mul_exact(b)))
        .collect::<PoolResult<Vec<_>>>()?;
    let cpmm = CpmmState::new(sub_tokens.clone(), sub_basis.clone(), weights, Dec::one())?;
    let eq = cpmm_equilibrium(&cpmm, prices)?;
    let pool_value = prices.value(&sub_tokens, eq.reserves())?;
    let hold_value = prices.value(&sub_tokens, &sub_basis)?;
    Ok(pool_value.div_round(&hold_value, precision(), Rounding::HalfEven)?)
}

/// Relative impermanent loss/gain as the price of `moving` is multiplied by
/// each grid factor (1 = the `base` prices). Columns: `rel_price`, `pool_il`,
/// then `<account>_il` and `<account>_cpmm_il` per participant.
pub fn il_curve(
    pool: &DemmPool,
    base: &PriceVector,
    moving: &str,
    grid: &[Dec],
    pool_basis: &[Dec],
    participants: &[Participant],
) -> PoolResult<Table> {
    if grid.is_empty() {
        return Err(PoolError::Empty("price grid"));
    }
    let mut header = vec!["rel_price".to_string(), "pool_il".to_string()];
    for p in participants {
        header.push(format!("{}_il", p.account));
        header.push(format!("{}_cpmm_il", p.account));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for x in grid {
        let prices = base.scaled(moving, x)?;
        let state = demm_equilibrium(pool.state(), &prices)?;
        let mut moved = pool.clone();
        moved.set_reserves(state.reserves().to_vec());
        let mut row = vec![cell(x), cell(&pool_position(&state, &prices, pool_basis)?.il_rel)];
        for p in participants {
            row.push(cell(&position(&moved, p.account.as_str(), &prices, &p.basis)?.il_rel));
            row.push(cell(&personal_cpmm_il(pool.tokens(), &p.basis, base, &prices)?));
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Output of swapping each of `volumes` of `token_in` for `token_out`, at the
/// market rate and in each labelled state. Columns: `amount_in`, `market`, labels.
pub fn trade_curve(
    states: &[(String, DemmState)],
    token_in: &str,
    token_out: &str,
    volumes: &[Dec],
    prices: &PriceVector,
) -> PoolResult<Table> {
    let rate = prices.get(token_in)?.div_round(prices.get(token_out)?, precision(), Rounding::HalfEven)?;
    let mut header = vec!["amount_in".to_string(), "market".to_string()];
    header.extend(states.iter().map(|(label, _)| label.clone()));
    let fee = FeePolicy::free();
    let mut rows = Vec::with_capacity(volumes.len());
    for v in volumes {
        let mut row = vec![cell(v), cell(&v.mul_exact(&rate))];
        for (_, st) in states {
            row.push(cell(&st.quote(token_in, token_out, v, &fee)?.amount_out));
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Every account's share of every token. Columns: `account`, `token`,
/// `lp_balance`, `share` (of the LP supply), `entitled`, `value`.
pub fn allocation(pool: &DemmPool, prices: &PriceVector) -> PoolResult<Table> {
    let header = ["account", "token", "lp_balance", "share", "entitled", "value"].map(String::from).to_vec();
    let prec = precision();
    let mut rows = Vec::new();
    for account in pool.ledger().accounts() {
        let entitled = entitlement(pool, account.as_str())?;
        for (k, t) in pool.tokens().iter().enumerate() {
            let b = pool.ledger().balance(account.as_str(), t.as_str());
            if b.is_zero() {
                continue;
            }
            let share = b.div_round(&pool.weights()[k], prec, Rounding::HalfEven)?;
            let value = prices.get(t.as_str())?.mul_exact(&entitled[k]);
            rows.push(vec![account.to_string(), t.to_string(), cell(&b), cell(&share), cell(&entitled[k]), cell(&value)]);
        }
    }
    Ok(Table { header, rows })
}
