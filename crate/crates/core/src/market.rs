//! External prices and the no-arbitrage state they force on a pool.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cpmm::CpmmState;
use crate::demm::{DemmPool, DemmState, FeePolicy};
use crate::error::{PoolError, PoolResult};
use crate::numerics::{precision, with_precision, Dec, Rounding};
use crate::types::TokenId;

/// Unit prices of tokens in a common numeraire.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<TokenId, Dec>", into = "BTreeMap<TokenId, Dec>")]
pub struct PriceVector {
    prices: BTreeMap<TokenId, Dec>,
}

impl PriceVector {
    pub fn new(prices: BTreeMap<TokenId, Dec>) -> PoolResult<Self> {
        for (token, value) in &prices {
            if !value.is_positive() {
                return Err(PoolError::BadPrice { token: token.clone(), value: value.clone() });
            }
        }
        Ok(PriceVector { prices })
    }

    /// Builds a vector from `(token, price)` string pairs.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, Dec)>) -> PoolResult<Self> {
        Self::new(pairs.into_iter().map(|(t, p)| (TokenId::from(t), p)).collect())
    }

    pub fn get(&self, token: &str) -> PoolResult<&Dec> {
        self.prices.get(token).ok_or_else(|| PoolError::MissingPrice(TokenId::from(token)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TokenId, &Dec)> {
        self.prices.iter()
    }

    /// Copy with `token`'s price multiplied by `factor`.
    pub fn scaled(&self, token: &str, factor: &Dec) -> PoolResult<Self> {
        let mut out = self.clone();
        let p = out
            .prices
            .get_mut(token)
            .ok_or_else(|| PoolError::MissingPrice(TokenId::from(token)))?;
        *p = p.mul_round(factor, precision(), Rounding::HalfEven);
        Self::new(out.prices)
    }

    /// Merges `other` into `self`, overriding shared tokens.
    pub fn update(&mut self, other: &PriceVector) {
        for (t, p) in &other.prices {
            self.prices.insert(t.clone(), p.clone());
        }
    }

    /// Prices aligned with `tokens`.
    pub fn aligned(&self, tokens: &[TokenId]) -> PoolResult<Vec<Dec>> {
        tokens.iter().map(|t| self.get(t.as_str()).cloned()).collect()
    }

    /// Value of `amounts` (aligned with `tokens`).
    pub fn value(&self, tokens: &[TokenId], amounts: &[Dec]) -> PoolResult<Dec> {
        let mut total = Dec::zero();
        for (t, a) in tokens.iter().zip(amounts) {
            total += self.get(t.as_str())?.mul_exact(a);
        }
        Ok(total)
    }
}

impl TryFrom<BTreeMap<TokenId, Dec>> for PriceVector {
    type Error = PoolError;
    fn try_from(prices: BTreeMap<TokenId, Dec>) -> PoolResult<Self> {
        PriceVector::new(prices)
    }
}

impl From<PriceVector> for BTreeMap<TokenId, Dec> {
    fn from(p: PriceVector) -> Self {
        p.prices
    }
}

/// Reserves `r'_t = c * w_t / p_t` that keep `sum w_t ln r_t` fixed.
fn balanced_reserves(reserves: &[Dec], weights: &[Dec], prices: &[Dec]) -> PoolResult<Vec<Dec>> {
    let prec = precision();
    let work = prec + 20;
    let out = with_precision(work, || -> PoolResult<Vec<Dec>> {
        let mut num = Dec::zero();
        let mut total_w = Dec::zero();
        let mut targets = Vec::with_capacity(weights.len());
        for ((r, w), p) in reserves.iter().zip(weights).zip(prices) {
            let target = w.div_round(p, work, Rounding::HalfEven)?;
            let diff = r.ln_prec(work)? - target.ln_prec(work)?;
            num += w.mul_round(&diff, work, Rounding::HalfEven);
            total_w += w;
            targets.push(target);
        }
        let c = num.div_round(&total_w, work, Rounding::HalfEven)?.exp_prec(work)?;
        Ok(targets.iter().map(|t| c.mul_round(t, work, Rounding::HalfEven)).collect())
    })?;
    Ok(out.into_iter().map(|r| r.round(prec, Rounding::HalfEven)).collect())
}

/// The unique state with the same weights and invariant value whose token
/// values `p_t * r_t` are proportional to `w_t`.
pub fn demm_equilibrium(state: &DemmState, prices: &PriceVector) -> PoolResult<DemmState> {
    let p = prices.aligned(state.tokens())?;
    let reserves = balanced_reserves(state.reserves(), state.weights(), &p)?;
    let mut out = state.clone();
    out.set_reserves(reserves);
    Ok(out)
}

/// As [`demm_equilibrium`] for a fixed-weight pool; the LP supply is unchanged.
pub fn cpmm_equilibrium(state: &CpmmState, prices: &PriceVector) -> PoolResult<CpmmState> {
    let p = prices.aligned(state.tokens())?;
    let reserves = balanced_reserves(state.reserves(), state.weights(), &p)?;
    let mut out = state.clone();
    out.set_reserves(reserves);
    Ok(out)
}

/// Lets arbitrageurs move `pool` to [`demm_equilibrium`]; weights and LP
/// balances are untouched. Returns the new reserves.
pub fn arbitrage(pool: &mut DemmPool, prices: &PriceVector) -> PoolResult<Vec<Dec>> {
    let eq = demm_equilibrium(pool.state(), prices)?;
    pool.set_reserves(eq.reserves().to_vec());
    Ok(eq.reserves().to_vec())
}

/// Reaches equilibrium in a two-token pool by a single trade whose size is
/// found by bisection until the spot price matches the external ratio to
/// `1e-30` relative. Independent of the closed form in [`demm_equilibrium`].
pub fn arbitrage_oracle(state: &DemmState, prices: &PriceVector) -> PoolResult<DemmState> {
    if state.len() != 2 {
        return Err(PoolError::NotTwoToken(state.len()));
    }
    let (s, t) = (state.tokens()[0].as_str(), state.tokens()[1].as_str());
    let target = prices.get(t)?.div_round(prices.get(s)?, precision(), Rounding::HalfEven)?;
    let tol = Dec::pow10(-30);
    let spot = state.spot_price(t, s)?;
    if spot.rel_diff(&target) <= tol {
        return Ok(state.clone());
    }
    // Cheap t in the pool is bought with s, which raises its spot price.
    let (tin, tout, rising) = if spot < target { (s, t, true) } else { (t, s, false) };
    let fee = FeePolicy::free();
    let after = |x: &Dec| -> PoolResult<DemmState> {
        let q = state.quote(tin, tout, x, &fee)?;
        let mut next = state.clone();
        let (i, o) = (next.index_of(tin)?, next.index_of(tout)?);
        let mut r = next.reserves().to_vec();
        r[i] += x;
        r[o] -= &q.amount_out;
        next.set_reserves(r);
        Ok(next)
    };
    let overshoots = |st: &DemmState| -> PoolResult<bool> {
        let p = st.spot_price(t, s)?;
        Ok(if rising { p >= target } else { p <= target })
    };

    let mut lo = Dec::zero();
    let mut hi = state.reserve(tin)?.clone();
    while !overshoots(&after(&hi)?)? {
        lo = hi.clone();
        hi = &hi + &hi;
    }
    let half = Dec::from_parts(5, -1);
    loop {
        let mid = (&lo + &hi).mul_round(&half, precision(), Rounding::HalfEven);
        let st = after(&mid)?;
        let p = st.spot_price(t, s)?;
        if p.rel_diff(&target) <= tol || (&hi - &lo) <= mid.mul_round(&Dec::pow10(-45), 10, Rounding::Up) {
            return Ok(st);
        }
        if overshoots(&st)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dec;

    fn state(r: &[&str], w: &[&str]) -> DemmState {
        DemmState::new(
            vec!["s".into(), "t".into()],
            r.iter().map(|x| x.parse().unwrap()).collect(),
            w.iter().map(|x| x.parse().unwrap()).collect(),
        )
        .unwrap()
    }

    fn prices(s: &str, t: &str) -> PriceVector {
        PriceVector::from_pairs([("s", s.parse().unwrap()), ("t", t.parse().unwrap())]).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let eq = demm_equilibrium(&state(&["40", "16"], &["2", "4"]), &prices("64", "5")).unwrap();
        assert_eq!(eq.reserves(), &[dec!("2.5"), dec!("64")]);
        let eq = demm_equilibrium(&state(&["2", "32"], &["0.8", "1"]), &prices("64", "0.009765625")).unwrap();
        assert_eq!(eq.reserves(), &[dec!("0.0625"), dec!("512")]);
        let again = demm_equilibrium(&eq, &prices("64", "0.009765625")).unwrap();
        assert_eq!(again, eq);
    }

    #[test]
    fn missing_and_bad_prices() {
        let p = PriceVector::from_pairs([("s", dec!("1"))]).unwrap();
        assert!(matches!(demm_equilibrium(&state(&["1", "1"], &["1", "1"]), &p), Err(PoolError::MissingPrice(_))));
        assert!(PriceVector::from_pairs([("s", dec!("0"))]).is_err());
    }

    #[test]
    fn oracle_matches_closed_form() {
        let st = state(&["40", "16"], &["1", "2"]);
        let p = prices("64", "5");
        let a = arbitrage_oracle(&st, &p).unwrap();
        let b = demm_equilibrium(&st, &p).unwrap();
        for (x, y) in a.reserves().iter().zip(b.reserves()) {
            assert!(x.approx_eq_rel(y, &Dec::pow10(-25)), "{x} vs {y}");
        }
        let same = arbitrage_oracle(&b, &p).unwrap();
        assert_eq!(same, b);
    }
}
