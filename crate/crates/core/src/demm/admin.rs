//! Governance operations: listing a new token and splitting a pool.

use std::collections::BTreeSet;

use super::{DemmPool, DemmState, LpLedger};
use crate::cpmm::{above_floor, positive};
use crate::error::{PoolError, PoolResult};
use crate::numerics::{precision, Dec, Rounding};
use crate::types::{AccountId, TokenId};

impl DemmPool {
    /// Lists `new_token` by depositing `dr_anchor` of an existing token together
    /// with `new_reserve` of the new one. The depositor asserts both legs have
    /// equal external value. Both LP kinds are minted in the same amount,
    /// `(dr_anchor / r_anchor) * w_anchor`, which also becomes the new weight.
    pub fn add_token(
        &mut self,
        depositor: &str,
        anchor: &str,
        dr_anchor: &Dec,
        new_token: &str,
        new_reserve: &Dec,
    ) -> PoolResult<Dec> {
        let a = self.index_of(anchor)?;
        if self.state.index_of(new_token).is_ok() {
            return Err(PoolError::DuplicateToken(TokenId::from(new_token)));
        }
        positive("anchor deposit", dr_anchor)?;
        positive("new token reserve", new_reserve)?;
        above_floor(format!("reserve of {new_token}"), new_reserve)?;
        let minted = dr_anchor
            .mul_exact(&self.state.weights[a])
            .div_round(&self.state.reserves[a], precision(), Rounding::Floor)?;
        above_floor(format!("weight of {new_token}"), &minted)?;

        let depositor = AccountId::from(depositor);
        let new_id = TokenId::from(new_token);
        let s = &mut self.state;
        s.reserves[a] += dr_anchor;
        s.weights[a] += &minted;
        s.tokens.push(new_id.clone());
        s.reserves.push(new_reserve.clone());
        s.weights.push(minted.clone());
        let anchor_id = s.tokens[a].clone();
        self.ledger.credit(&depositor, &anchor_id, &minted);
        self.ledger.credit(&depositor, &new_id, &minted);
        self.retired.remove(new_token);
        Ok(minted)
    }

    /// Splits the pool into the tokens of `part_a` and the rest. LP balances
    /// move with their token; nothing is minted or burned. Unclaimed fee pots
    /// follow their token too, and pots of retired tokens go with the first child.
    pub fn split(&self, part_a: &[TokenId]) -> PoolResult<(DemmPool, DemmPool)> {
        let mut in_a = BTreeSet::new();
        for t in part_a {
            self.index_of(t.as_str())
                .map_err(|_| PoolError::InvalidPartition(format!("token {t} is not in the pool")))?;
            if !in_a.insert(t.clone()) {
                return Err(PoolError::InvalidPartition(format!("token {t} listed twice")));
            }
        }
        if in_a.is_empty() || in_a.len() == self.state.len() {
            return Err(PoolError::InvalidPartition("both parts must be non-empty".into()));
        }
        let child = |want_a: bool| -> DemmPool {
            let keep = |t: &TokenId| in_a.contains(t) == want_a;
            let idx: Vec<usize> = (0..self.state.len()).filter(|&k| keep(&self.state.tokens[k])).collect();
            let state = DemmState {
                tokens: idx.iter().map(|&k| self.state.tokens[k].clone()).collect(),
                reserves: idx.iter().map(|&k| self.state.reserves[k].clone()).collect(),
                weights: idx.iter().map(|&k| self.state.weights[k].clone()).collect(),
            };
            let live = |t: &TokenId| self.state.index_of(t.as_str()).is_ok();
            let ledger: LpLedger = self
                .ledger
                .restricted(keep, |t| if live(t) { keep(t) } else { want_a });
            let retired = if want_a { self.retired.clone() } else { BTreeSet::new() };
            DemmPool { state, ledger, retired }
        };
        Ok((child(true), child(false)))
    }
}
