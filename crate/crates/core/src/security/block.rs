//! Block-level execution: delayed activation of deposits and time-weighted minting.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::demm::{DemmPool, DemmState};
use crate::error::{PoolError, PoolResult};
use crate::numerics::{geo_mean, precision, with_precision, Dec, Rounding};
use crate::types::{AccountId, TokenId};

/// Block height plus the pool state at the start of every block so far.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockClock {
    height: Option<u64>,
    snapshots: Vec<(u64, DemmState)>,
}

impl BlockClock {
    /// Current height; `None` before the first block starts.
    pub fn height(&self) -> Option<u64> {
        self.height
    }

    pub fn snapshots(&self) -> &[(u64, DemmState)] {
        &self.snapshots
    }

    fn advance(&mut self) -> u64 {
        let h = self.height.map_or(0, |h| h + 1);
        self.height = Some(h);
        h
    }
}

/// Start-of-block `(w_t, r_t)` pairs of the last `k + 1` blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwapWindow {
    k: usize,
    entries: VecDeque<BTreeMap<TokenId, (Dec, Dec)>>,
}

impl TwapWindow {
    pub fn new(k: usize) -> Self {
        TwapWindow { k, entries: VecDeque::with_capacity(k + 1) }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn record(&mut self, state: &DemmState) {
        let row = state
            .tokens()
            .iter()
            .zip(state.weights().iter().zip(state.reserves()))
            .map(|(t, (w, r))| (t.clone(), (w.clone(), r.clone())))
            .collect();
        if self.entries.len() == self.k + 1 {
            self.entries.pop_front();
        }
        self.entries.push_back(row);
    }

    /// Buffered `w_t / r_t` ratios of `token`, oldest first.
    pub fn ratios(&self, token: &str) -> PoolResult<Vec<Dec>> {
        let prec = precision() + 10;
        self.pairs(token).map(|(w, r)| Ok(w.div_round(r, prec, Rounding::HalfEven)?)).collect()
    }

    fn pairs<'a>(&'a self, token: &'a str) -> impl Iterator<Item = &'a (Dec, Dec)> + 'a {
        self.entries.iter().filter_map(move |row| row.get(token))
    }
}

/// LP minted for `deposit` (aligned with the state's tokens) when exponents are
/// set from the time-weighted ratio `G_t` (geometric mean of buffered `w_t / r_t`):
/// `w'_t = (r_t + dr_t) * G_t`, minted `w'_t - w_t`. Rejected unless every
/// deposited coordinate mints a positive amount.
pub fn twap_mint_quote(window: &TwapWindow, state: &DemmState, deposit: &[Dec]) -> PoolResult<Vec<Dec>> {
    if window.is_empty() {
        return Err(PoolError::Empty("time-weighted window"));
    }
    if deposit.len() != state.len() {
        return Err(PoolError::LengthMismatch { expected: state.len(), got: deposit.len() });
    }
    let prec = precision();
    let mut minted = Vec::with_capacity(deposit.len());
    for (k, dr) in deposit.iter().enumerate() {
        if dr.is_negative() {
            return Err(PoolError::Negative { what: "deposit", value: dr.clone() });
        }
        if dr.is_zero() {
            minted.push(Dec::zero());
            continue;
        }
        let token = &state.tokens()[k];
        let (r, w) = (&state.reserves()[k], &state.weights()[k]);
        let steady = window.pairs(token.as_str()).all(|(wj, rj)| wj.mul_exact(r) == w.mul_exact(rj));
        let m = if steady {
            // Unchanged history: exactly the ordinary mint.
            dr.mul_exact(w).div_round(r, prec, Rounding::Floor)?
        } else {
            let ratios = window.ratios(token.as_str())?;
            if ratios.is_empty() {
                return Err(PoolError::Empty("time-weighted window"));
            }
            let g = with_precision(prec + 10, || geo_mean(&ratios))?;
            let target = (r + dr).mul_round(&g, prec, Rounding::Floor);
            &target - w
        };
        if !m.is_positive() {
            return Err(PoolError::MintRejected { token: token.clone(), minted: m });
        }
        minted.push(m);
    }
    if !minted.iter().any(Dec::is_positive) {
        return Err(PoolError::Empty("deposit"));
    }
    Ok(minted)
}

/// A deposit waiting for its activation block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingDeposit {
    pub id: u64,
    pub provider: AccountId,
    pub deposit: BTreeMap<TokenId, Dec>,
    pub submit_height: u64,
    pub activation_height: u64,
}

/// What happened when a deposit entered the pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "result")]
pub enum ActivationResult {
    Minted { minted: BTreeMap<TokenId, Dec> },
    /// The deposit could not be applied and went back to the provider.
    Refunded { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Activation {
    pub pending: PendingDeposit,
    pub height: u64,
    #[serde(flatten)]
    pub result: ActivationResult,
}

/// Result of submitting a delayed deposit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum DelayedProvide {
    Queued(PendingDeposit),
    /// Zero delay: applied on submission exactly like an ordinary deposit.
    Executed(Activation),
}

/// Parameters of a [`BlockEngine`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub delay_min: u64,
    pub delay_max: u64,
    pub twap_k: usize,
    pub seed: u64,
}

/// A pool driven block by block. Pending deposits activate at the start of
/// their block, in submission order, before the block's snapshot is taken.
#[derive(Debug, Clone)]
pub struct BlockEngine {
    pool: DemmPool,
    clock: BlockClock,
    window: TwapWindow,
    pending: VecDeque<PendingDeposit>,
    config: EngineConfig,
    rng: ChaCha8Rng,
    next_id: u64,
}

impl BlockEngine {
    pub fn new(pool: DemmPool, config: EngineConfig) -> Self {
        assert!(config.delay_min <= config.delay_max, "empty delay range");
        BlockEngine {
            pool,
            clock: BlockClock::default(),
            window: TwapWindow::new(config.twap_k),
            pending: VecDeque::new(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            next_id: 0,
        }
    }

    pub fn pool(&self) -> &DemmPool {
        &self.pool
    }

    pub fn pool_mut(&mut self) -> &mut DemmPool {
        &mut self.pool
    }

    pub fn replace_pool(&mut self, pool: DemmPool) {
        self.pool = pool;
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn clock(&self) -> &BlockClock {
        &self.clock
    }

    pub fn window(&self) -> &TwapWindow {
        &self.window
    }

    pub fn pending(&self) -> impl Iterator<Item = &PendingDeposit> {
        self.pending.iter()
    }

    /// Height of the running block, starting the first block if needed.
    pub fn height(&mut self) -> u64 {
        match self.clock.height {
            Some(h) => h,
            None => {
                self.begin_block();
                0
            }
        }
    }

    /// Starts the next block: activates due deposits, then records the snapshot.
    pub fn begin_block(&mut self) -> Vec<Activation> {
        let h = self.clock.advance();
        let mut done = Vec::new();
        let (due, later): (Vec<_>, Vec<_>) = self.pending.drain(..).partition(|p| p.activation_height <= h);
        self.pending = later.into();
        for p in due {
            done.push(self.activate(p, h));
        }
        self.clock.snapshots.push((h, self.pool.state().clone()));
        self.window.record(self.pool.state());
        done
    }

    fn activate(&mut self, pending: PendingDeposit, height: u64) -> Activation {
        let result = match self.apply(&pending) {
            Ok(minted) => ActivationResult::Minted { minted },
            Err(e) => ActivationResult::Refunded { reason: e.to_string() },
        };
        Activation { pending, height, result }
    }

    fn apply(&mut self, pending: &PendingDeposit) -> PoolResult<BTreeMap<TokenId, Dec>> {
        let deposit = self.pool.align(&pending.deposit)?;
        let minted = self.pool.provide(pending.provider.as_str(), &deposit)?;
        Ok(self.pool.tokens().iter().cloned().zip(minted).filter(|(_, m)| m.is_positive()).collect())
    }

    /// Submits a deposit that enters the pool after a delay drawn uniformly
    /// from the configured range of blocks.
    pub fn provide_delayed(&mut self, provider: &str, deposit: BTreeMap<TokenId, Dec>) -> PoolResult<DelayedProvide> {
        // Shape errors surface now; pricing waits for activation.
        let aligned = self.pool.align(&deposit)?;
        if let Some(neg) = aligned.iter().find(|a| a.is_negative()) {
            return Err(PoolError::Negative { what: "deposit", value: neg.clone() });
        }
        if !aligned.iter().any(Dec::is_positive) {
            return Err(PoolError::Empty("deposit"));
        }
        let h = self.height();
        let d = self.rng.gen_range(self.config.delay_min..=self.config.delay_max);
        let pending = PendingDeposit {
            id: self.next_id,
            provider: AccountId::from(provider),
            deposit,
            submit_height: h,
            activation_height: h + d,
        };
        self.next_id += 1;
        if d == 0 {
            let minted = self.apply(&pending)?;
            return Ok(DelayedProvide::Executed(Activation {
                pending,
                height: h,
                result: ActivationResult::Minted { minted },
            }));
        }
        self.pending.push_back(pending.clone());
        Ok(DelayedProvide::Queued(pending))
    }

    /// Deposits with exponents set from the time-weighted window.
    pub fn twap_provide(&mut self, provider: &str, deposit: &[Dec]) -> PoolResult<Vec<Dec>> {
        self.height();
        let minted = twap_mint_quote(&self.window, self.pool.state(), deposit)?;
        self.pool.apply_mint(provider, deposit, &minted);
        Ok(minted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dec;

    fn pool() -> DemmPool {
        DemmPool::new(vec!["s".into(), "t".into()], vec![dec!("4"), dec!("10")], "g").unwrap()
    }

    fn map(t: &str, v: Dec) -> BTreeMap<TokenId, Dec> {
        [(TokenId::from(t), v)].into_iter().collect()
    }

    #[test]
    fn zero_delay_is_plain_provide() {
        let mut e = BlockEngine::new(pool(), EngineConfig::default());
        let out = e.provide_delayed("a", map("t", dec!("5"))).unwrap();
        assert!(matches!(out, DelayedProvide::Executed(_)));
        let mut p = pool();
        p.provide("a", &[dec!("0"), dec!("5")]).unwrap();
        assert_eq!(e.pool(), &p);
    }

    #[test]
    fn fifo_activation() {
        let cfg = EngineConfig { delay_min: 2, delay_max: 2, twap_k: 0, seed: 7 };
        let mut e = BlockEngine::new(pool(), cfg);
        e.begin_block();
        e.provide_delayed("a", map("t", dec!("5"))).unwrap();
        e.provide_delayed("b", map("t", dec!("5"))).unwrap();
        assert!(e.begin_block().is_empty());
        let acts = e.begin_block();
        assert_eq!(acts.iter().map(|a| a.pending.provider.as_str()).collect::<Vec<_>>(), ["a", "b"]);
        assert_eq!(e.pool().ledger().balance("a", "t"), dec!("0.5"));
        assert_eq!(e.pool().ledger().balance("b", "t"), dec!("0.5"));
    }

    #[test]
    fn failed_activation_refunds() {
        let cfg = EngineConfig { delay_min: 1, delay_max: 1, twap_k: 0, seed: 1 };
        let mut e = BlockEngine::new(pool(), cfg);
        e.provide_delayed("a", map("t", dec!("5"))).unwrap();
        e.pool_mut().withdraw("g", &[dec!("0"), dec!("1")]).unwrap();
        let acts = e.begin_block();
        assert!(matches!(acts[0].result, ActivationResult::Refunded { .. }));
    }

    #[test]
    fn twap_rejects_skewed_deposit() {
        let mut e = BlockEngine::new(pool(), EngineConfig { twap_k: 1, ..EngineConfig::default() });
        e.begin_block();
        e.begin_block();
        e.pool_mut().trade("s", "t", &dec!("36"), &Default::default()).unwrap();
        let err = e.twap_provide("m", &[dec!("0"), dec!("1")]).unwrap_err();
        assert_eq!(err, PoolError::MintRejected { token: "t".into(), minted: dec!("-0.8") });
    }

    #[test]
    fn twap_steady_state_matches_plain_mint() {
        let mut e = BlockEngine::new(pool(), EngineConfig { twap_k: 3, ..EngineConfig::default() });
        for _ in 0..5 {
            e.begin_block();
        }
        let dep = [dec!("1.3"), dec!("0.7")];
        let quote = twap_mint_quote(e.window(), e.pool().state(), &dep).unwrap();
        assert_eq!(quote, e.pool().mint_amounts(&dep).unwrap());
        assert_eq!(e.window().len(), 4);
    }
}
