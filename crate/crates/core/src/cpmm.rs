//! Weighted constant-product market maker with fixed weights and a single LP
//! token (the Balancer-style baseline).
//!
//! State is `(reserves, lp_supply)`; weights are set at launch and never change.
//! No trading fee is charged.

use serde::{Deserialize, Serialize};

use crate::error::{PoolError, PoolResult};
use crate::invariant;
use crate::numerics::{precision, Dec, Rounding};
use crate::types::TokenId;
use crate::POSITIVITY_FLOOR;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpmmState {
    tokens: Vec<TokenId>,
    reserves: Vec<Dec>,
    weights: Vec<Dec>,
    lp_supply: Dec,
}

/// Amounts moved by a proportional deposit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CpmmDeposit {
    pub deposit: Vec<Dec>,
    pub minted: Dec,
}

/// Amounts moved by a proportional redemption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CpmmRedemption {
    pub payout: Vec<Dec>,
    pub burned: Dec,
}

impl CpmmState {
    /// Launches a pool; the genesis provider receives `initial_lp` LP tokens.
    pub fn new(
        tokens: Vec<TokenId>,
        reserves: Vec<Dec>,
        weights: Vec<Dec>,
        initial_lp: Dec,
    ) -> PoolResult<Self> {
        if tokens.len() < 2 {
            return Err(PoolError::TooFewTokens { min: 2, got: tokens.len() });
        }
        for (len, expected) in [(reserves.len(), tokens.len()), (weights.len(), tokens.len())] {
            if len != expected {
                return Err(PoolError::LengthMismatch { expected, got: len });
            }
        }
        crate::demm::check_unique(&tokens)?;
        for r in &reserves {
            positive("reserve", r)?;
        }
        for w in &weights {
            positive("weight", w)?;
        }
        positive("initial LP supply", &initial_lp)?;
        Ok(CpmmState { tokens, reserves, weights, lp_supply: initial_lp })
    }

    /// Pool with unnamed tokens `0, 1, ...`.
    pub fn with_indices(reserves: Vec<Dec>, weights: Vec<Dec>, initial_lp: Dec) -> PoolResult<Self> {
        let tokens = (0..reserves.len()).map(|i| TokenId::new(i.to_string())).collect();
        Self::new(tokens, reserves, weights, initial_lp)
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

    pub fn lp_supply(&self) -> &Dec {
        &self.lp_supply
    }

    pub fn is_empty(&self) -> bool {
        self.lp_supply.is_zero()
    }

    pub fn index_of(&self, token: &str) -> PoolResult<usize> {
        self.tokens
            .iter()
            .position(|t| t.as_str() == token)
            .ok_or_else(|| PoolError::UnknownToken(token.to_string()))
    }

    pub(crate) fn set_reserves(&mut self, reserves: Vec<Dec>) {
        debug_assert_eq!(reserves.len(), self.reserves.len());
        self.reserves = reserves;
    }

    /// Swaps `amount_in` of token `i` for token `o`; returns the amount paid out.
    pub fn trade(&mut self, i: usize, o: usize, amount_in: &Dec) -> PoolResult<Dec> {
        if self.is_empty() {
            return Err(PoolError::PoolEmpty);
        }
        self.check_index(i)?;
        self.check_index(o)?;
        if i == o {
            return Err(PoolError::SameToken(self.tokens[i].to_string()));
        }
        positive("trade input", amount_in)?;
        let retained = invariant::swap_retained(
            &self.reserves[i],
            &self.reserves[o],
            &self.weights[i],
            &self.weights[o],
            amount_in,
        )?;
        let out = &self.reserves[o] - &retained;
        positive("trade output", &out)?;
        above_floor(format!("reserve of {}", self.tokens[o]), &retained)?;
        self.reserves[i] += amount_in;
        self.reserves[o] = retained;
        Ok(out)
    }

    /// Deposits `alpha * r` and mints `alpha * L` LP tokens.
    pub fn provide(&mut self, alpha: &Dec) -> PoolResult<CpmmDeposit> {
        if self.is_empty() {
            return Err(PoolError::PoolEmpty);
        }
        positive("alpha", alpha)?;
        let prec = precision();
        let deposit: Vec<Dec> =
            self.reserves.iter().map(|r| r.mul_round(alpha, prec, Rounding::Ceiling)).collect();
        let minted = self.lp_supply.mul_round(alpha, prec, Rounding::Floor);
        positive("minted LP", &minted)?;
        for (r, d) in self.reserves.iter_mut().zip(&deposit) {
            *r += d;
        }
        self.lp_supply += &minted;
        Ok(CpmmDeposit { deposit, minted })
    }

    /// Redeems `alpha * L` LP tokens for `alpha * r`. `alpha = 1` empties the pool.
    pub fn withdraw(&mut self, alpha: &Dec) -> PoolResult<CpmmRedemption> {
        if self.is_empty() {
            return Err(PoolError::PoolEmpty);
        }
        if !alpha.is_positive() || *alpha > Dec::one() {
            return Err(PoolError::FractionOutOfRange(alpha.clone()));
        }
        if *alpha == Dec::one() {
            let payout = std::mem::replace(&mut self.reserves, vec![Dec::zero(); self.tokens.len()]);
            let burned = std::mem::take(&mut self.lp_supply);
            return Ok(CpmmRedemption { payout, burned });
        }
        let prec = precision();
        let payout: Vec<Dec> =
            self.reserves.iter().map(|r| r.mul_round(alpha, prec, Rounding::Floor)).collect();
        let burned = self.lp_supply.mul_round(alpha, prec, Rounding::Ceiling);
        let remaining: Vec<Dec> = self.reserves.iter().zip(&payout).map(|(r, p)| r - p).collect();
        for (t, r) in self.tokens.iter().zip(&remaining) {
            above_floor(format!("reserve of {t}"), r)?;
        }
        let supply = &self.lp_supply - &burned;
        above_floor("LP supply".to_string(), &supply)?;
        self.reserves = remaining;
        self.lp_supply = supply;
        Ok(CpmmRedemption { payout, burned })
    }

    /// Price of token `o` in units of token `i`.
    pub fn spot_price(&self, o: usize, i: usize) -> PoolResult<Dec> {
        self.check_index(i)?;
        self.check_index(o)?;
        if i == o {
            return Err(PoolError::SameToken(self.tokens[i].to_string()));
        }
        Ok(invariant::spot_price(
            &self.reserves[i],
            &self.weights[i],
            &self.reserves[o],
            &self.weights[o],
        )?)
    }

    /// `ln` of the invariant value.
    pub fn log_invariant(&self, prec: u32) -> PoolResult<Dec> {
        Ok(invariant::log_invariant(&self.reserves, &self.weights, prec)?)
    }

    fn check_index(&self, idx: usize) -> PoolResult<()> {
        if idx < self.tokens.len() {
            Ok(())
        } else {
            Err(PoolError::UnknownToken(format!("#{idx}")))
        }
    }
}

pub(crate) fn positive(what: &'static str, value: &Dec) -> PoolResult<()> {
    if value.is_positive() {
        Ok(())
    } else {
        Err(PoolError::NonPositive { what, value: value.clone() })
    }
}

pub(crate) fn above_floor(what: String, value: &Dec) -> PoolResult<()> {
    if *value >= Dec::pow10(POSITIVITY_FLOOR) {
        Ok(())
    } else {
        Err(PoolError::BelowFloor { what, value: value.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dec;

    fn pool(r: &[&str], w: &[&str], lp: &str) -> CpmmState {
        CpmmState::with_indices(
            r.iter().map(|s| s.parse().unwrap()).collect(),
            w.iter().map(|s| s.parse().unwrap()).collect(),
            lp.parse().unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn init_validation() {
        let p = pool(&["20", "4"], &["1", "1"], "1");
        assert_eq!(p.lp_supply(), &dec!("1"));
        assert!(pool(&["1", "1", "1"], &["1", "1", "1"], "1").reserves().len() == 3);
        let err = CpmmState::with_indices(vec![dec!("1")], vec![dec!("1")], dec!("1"));
        assert!(matches!(err, Err(PoolError::TooFewTokens { .. })));
        let err = CpmmState::with_indices(vec![dec!("1"), dec!("0")], vec![dec!("1"), dec!("1")], dec!("1"));
        assert!(matches!(err, Err(PoolError::NonPositive { .. })));
        let err = CpmmState::with_indices(vec![dec!("1"), dec!("2")], vec![dec!("1")], dec!("1"));
        assert!(matches!(err, Err(PoolError::LengthMismatch { .. })));
    }

    #[test]
    fn deeper_pool_better_rate() {
        let mut shallow = pool(&["20", "4"], &["1", "1"], "1");
        let out = shallow.trade(0, 1, &dec!("1")).unwrap();
        assert!(out.rel_diff(&dec!("0.19047619047619047619047619047619047619047619047619")) < Dec::pow10(-46));
        let mut deep = pool(&["80", "16"], &["1", "1"], "4");
        let out2 = deep.trade(0, 1, &dec!("1")).unwrap();
        assert!(out2.rel_diff(&dec!("0.19753086419753086419753086419753086419753086419753")) < Dec::pow10(-46));
        assert!(out2 > out);
    }

    #[test]
    fn trade_errors() {
        let mut p = pool(&["20", "4"], &["1", "1"], "1");
        assert!(matches!(p.trade(0, 0, &dec!("1")), Err(PoolError::SameToken(_))));
        assert!(matches!(p.trade(0, 1, &dec!("0")), Err(PoolError::NonPositive { .. })));
        assert!(matches!(p.trade(0, 5, &dec!("1")), Err(PoolError::UnknownToken(_))));
        let tiny = p.trade(0, 1, &Dec::pow10(-40)).unwrap();
        assert!(tiny < Dec::pow10(-39));
    }

    #[test]
    fn provide_and_withdraw() {
        let mut p = pool(&["20", "4"], &["1", "1"], "1");
        let dep = p.provide(&dec!("3")).unwrap();
        assert_eq!(dep.deposit, vec![dec!("60"), dec!("12")]);
        assert_eq!(dep.minted, dec!("3"));
        assert_eq!(p.reserves(), &[dec!("80"), dec!("16")]);
        assert_eq!(p.lp_supply(), &dec!("4"));

        let mut q = pool(&["10", "128"], &["1", "1"], "4");
        let dep = q.provide(&dec!("0.5")).unwrap();
        assert_eq!(q.reserves(), &[dec!("15"), dec!("192")]);
        assert_eq!(q.lp_supply(), &dec!("6"));
        assert_eq!(dep.minted, dec!("2"));

        let mut q = pool(&["10", "128"], &["1", "1"], "4");
        let a = q.clone().withdraw(&dec!("0.25")).unwrap();
        assert_eq!(a.payout, vec![dec!("2.5"), dec!("32")]);
        let b = q.clone().withdraw(&dec!("0.75")).unwrap();
        assert_eq!(b.payout, vec![dec!("7.5"), dec!("96")]);
        let all = q.withdraw(&Dec::one()).unwrap();
        assert_eq!(all.payout, vec![dec!("10"), dec!("128")]);
        assert!(q.is_empty());
        assert!(matches!(q.trade(0, 1, &dec!("1")), Err(PoolError::PoolEmpty)));
    }

    #[test]
    fn withdraw_fraction_bounds() {
        let mut p = pool(&["10", "128"], &["1", "1"], "4");
        assert!(matches!(p.withdraw(&dec!("0")), Err(PoolError::FractionOutOfRange(_))));
        assert!(matches!(p.withdraw(&dec!("1.01")), Err(PoolError::FractionOutOfRange(_))));
    }

    #[test]
    fn spot_prices() {
        let p = pool(&["20", "4"], &["1", "1"], "1");
        assert_eq!(p.spot_price(1, 0).unwrap(), dec!("5"));
        let q = pool(&["10", "128"], &["1", "1"], "4");
        assert_eq!(q.spot_price(0, 1).unwrap(), dec!("12.8"));
        let sym = pool(&["7.5", "7.5"], &["3", "3"], "1");
        assert_eq!(sym.spot_price(0, 1).unwrap(), Dec::one());
        assert!(p.spot_price(1, 1).is_err());
    }
}
