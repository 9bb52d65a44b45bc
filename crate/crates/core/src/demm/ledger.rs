//! Token-specific LP balances and per-account fee pots.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::numerics::Dec;
use crate::types::{AccountId, TokenId};

type Book = BTreeMap<AccountId, BTreeMap<TokenId, Dec>>;

/// LP balances per `(account, token)`. For every pooled token the column sum
/// equals that token's weight; zero entries are dropped so equal ledgers
/// serialize identically.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpLedger {
    balances: Book,
    #[serde(default)]
    fee_pots: Book,
}

fn get(book: &Book, account: &str, token: &str) -> Dec {
    book.get(account).and_then(|row| row.get(token)).cloned().unwrap_or_default()
}

fn adjust(book: &mut Book, account: &AccountId, token: &TokenId, delta: &Dec) {
    let row = book.entry(account.clone()).or_default();
    let next = &row.get(token.as_str()).cloned().unwrap_or_default() + delta;
    debug_assert!(!next.is_negative(), "ledger entry for {account}/{token} went negative");
    if next.is_zero() {
        row.remove(token.as_str());
    } else {
        row.insert(token.clone(), next);
    }
    if row.is_empty() {
        book.remove(account.as_str());
    }
}

impl LpLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn balance(&self, account: &str, token: &str) -> Dec {
        get(&self.balances, account, token)
    }

    pub fn fee_pot(&self, account: &str, token: &str) -> Dec {
        get(&self.fee_pots, account, token)
    }

    /// Total LP of `token` held across accounts.
    pub fn column_sum(&self, token: &str) -> Dec {
        self.balances.values().filter_map(|row| row.get(token)).sum()
    }

    /// Accounts holding any LP token or unclaimed fees.
    pub fn accounts(&self) -> impl Iterator<Item = &AccountId> {
        let mut all: Vec<&AccountId> = self.balances.keys().chain(self.fee_pots.keys()).collect();
        all.sort();
        all.dedup();
        all.into_iter()
    }

    pub fn has_account(&self, account: &str) -> bool {
        self.balances.contains_key(account) || self.fee_pots.contains_key(account)
    }

    /// `(account, balance)` for every positive holder of `token`, in account order.
    pub fn holders<'a>(&'a self, token: &'a str) -> impl Iterator<Item = (&'a AccountId, &'a Dec)> + 'a {
        self.balances.iter().filter_map(move |(a, row)| row.get(token).map(|b| (a, b)))
    }

    /// All LP balances of one account.
    pub fn balances_of(&self, account: &str) -> BTreeMap<TokenId, Dec> {
        self.balances.get(account).cloned().unwrap_or_default()
    }

    pub fn fee_pots_of(&self, account: &str) -> BTreeMap<TokenId, Dec> {
        self.fee_pots.get(account).cloned().unwrap_or_default()
    }

    pub(crate) fn credit(&mut self, account: &AccountId, token: &TokenId, amount: &Dec) {
        adjust(&mut self.balances, account, token, amount);
    }

    pub(crate) fn debit(&mut self, account: &AccountId, token: &TokenId, amount: &Dec) {
        adjust(&mut self.balances, account, token, &-amount);
    }

    pub(crate) fn credit_fee(&mut self, account: &AccountId, token: &TokenId, amount: &Dec) {
        adjust(&mut self.fee_pots, account, token, amount);
    }

    /// Returns and zeroes the fee pot; unknown accounts or tokens yield zero.
    pub(crate) fn take_fee(&mut self, account: &str, token: &str) -> Dec {
        let Some(row) = self.fee_pots.get_mut(account) else {
            return Dec::zero();
        };
        let amount = row.remove(token).unwrap_or_default();
        if row.is_empty() {
            self.fee_pots.remove(account);
        }
        amount
    }

    /// Keeps only LP columns accepted by `keep_lp` and fee pots accepted by `keep_fee`.
    pub(crate) fn restricted(
        &self,
        keep_lp: impl Fn(&TokenId) -> bool,
        keep_fee: impl Fn(&TokenId) -> bool,
    ) -> LpLedger {
        fn filter(book: &Book, keep: &dyn Fn(&TokenId) -> bool) -> Book {
            book.iter()
                .filter_map(|(a, row)| {
                    let row: BTreeMap<_, _> =
                        row.iter().filter(|(t, _)| keep(t)).map(|(t, v)| (t.clone(), v.clone())).collect();
                    (!row.is_empty()).then(|| (a.clone(), row))
                })
                .collect()
        }
        LpLedger { balances: filter(&self.balances, &keep_lp), fee_pots: filter(&self.fee_pots, &keep_fee) }
    }

    /// Every entry of both books, for validation of restored snapshots.
    pub(crate) fn entries(&self) -> impl Iterator<Item = (&AccountId, &TokenId, &Dec)> {
        self.balances
            .iter()
            .chain(&self.fee_pots)
            .flat_map(|(a, row)| row.iter().map(move |(t, v)| (a, t, v)))
    }

    pub(crate) fn lp_tokens(&self) -> impl Iterator<Item = &TokenId> {
        self.balances.values().flat_map(|row| row.keys())
    }
}
