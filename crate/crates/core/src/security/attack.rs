//! Replay of the skew-then-provide flash attack, with and without mitigations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::block::{Activation, ActivationResult, BlockEngine, DelayedProvide, EngineConfig};
use super::Mitigation;
use crate::demm::{DemmPool, DemmState, FeePolicy};
use crate::error::{PoolError, PoolResult};
use crate::market::{arbitrage, PriceVector};
use crate::numerics::{precision, Dec, Rounding};
use crate::types::TokenId;

/// Starting pool, prices and attacker funds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackPlan {
    /// `[s, t]`: the attacker sells `s` to skew the pool and provides `t`.
    pub tokens: [TokenId; 2],
    pub reserves: [Dec; 2],
    /// External prices; also the yardstick for profit.
    pub prices: PriceVector,
    /// Amount of `s` the attacker starts with (e.g. borrowed in a flash loan).
    pub endowment: Dec,
    /// Amount of the bought `t` deposited one-sidedly.
    pub contribution: Dec,
    pub attacker: String,
    pub seed: u64,
}

impl AttackPlan {
    /// Two-token pool `((4, 10), (1, 1))` at prices `s = 5`, `t = 2`; 36 s endowment, 1 t deposit.
    pub fn textbook() -> Self {
        let d = |s: &str| s.parse::<Dec>().expect("literal");
        AttackPlan {
            tokens: [TokenId::from("s"), TokenId::from("t")],
            reserves: [d("4"), d("10")],
            prices: PriceVector::from_pairs([("s", d("5")), ("t", d("2"))]).expect("positive prices"),
            endowment: d("36"),
            contribution: d("1"),
            attacker: "eve".into(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackStep {
    pub label: String,
    pub height: u64,
    /// Pool state after the step.
    pub state: DemmState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum AttackOutcome {
    Completed,
    /// A step failed, so the whole atomic bundle reverted.
    Aborted { step: usize, reason: String },
}

/// What would have happened had the exponents stayed at their starting values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrozenCounterfactual {
    pub swap_back_output: Dec,
    pub holdings: BTreeMap<TokenId, Dec>,
    pub profit: BTreeMap<TokenId, Dec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackReport {
    pub mitigation: Mitigation,
    pub steps: Vec<AttackStep>,
    pub activations: Vec<Activation>,
    pub outcome: AttackOutcome,
    pub holdings: BTreeMap<TokenId, Dec>,
    /// Holdings minus the endowment.
    pub profit: BTreeMap<TokenId, Dec>,
    pub profit_value: Dec,
    pub final_state: DemmState,
    pub counterfactual: FrozenCounterfactual,
}

struct Wallet(BTreeMap<TokenId, Dec>);

impl Wallet {
    fn add(&mut self, t: &TokenId, v: &Dec) {
        *self.0.entry(t.clone()).or_default() += v;
    }

    fn sub(&mut self, t: &TokenId, v: &Dec) {
        *self.0.entry(t.clone()).or_default() -= v;
    }

    fn get(&self, t: &TokenId) -> Dec {
        self.0.get(t).cloned().unwrap_or_default()
    }
}

fn profit_of(holdings: &BTreeMap<TokenId, Dec>, plan: &AttackPlan) -> BTreeMap<TokenId, Dec> {
    let [s, t] = &plan.tokens;
    let mut p = BTreeMap::new();
    p.insert(s.clone(), &holdings.get(s).cloned().unwrap_or_default() - &plan.endowment);
    p.insert(t.clone(), holdings.get(t).cloned().unwrap_or_default());
    p
}

/// Swap `s` in, deposit some of the `t` bought, swap the rest back, redeem.
/// Under a mitigation the deposit goes through the delayed or time-weighted
/// path; a delayed deposit lets an arbitrageur restore the pool before it
/// activates, and the attacker redeems once it has.
pub fn replay_flash_attack(plan: &AttackPlan, mitigation: &Mitigation) -> PoolResult<AttackReport> {
    let [s, t] = &plan.tokens;
    let (sn, tn) = (s.as_str(), t.as_str());
    let eve = plan.attacker.as_str();
    let fee = FeePolicy::free();
    let pool = DemmPool::new(plan.tokens.to_vec(), plan.reserves.to_vec(), "genesis")?;
    let config = match *mitigation {
        Mitigation::None => EngineConfig { seed: plan.seed, ..EngineConfig::default() },
        Mitigation::Delay { min, max } => EngineConfig { delay_min: min, delay_max: max, seed: plan.seed, twap_k: 0 },
        Mitigation::Twap { k } => EngineConfig { twap_k: k, seed: plan.seed, ..EngineConfig::default() },
    };
    let mut engine = BlockEngine::new(pool, config);
    // A quiet block before the attack, then the attack block.
    engine.begin_block();
    engine.begin_block();
    let before = engine.clone();

    let mut wallet = Wallet(BTreeMap::from([(s.clone(), plan.endowment.clone())]));
    let mut steps = Vec::new();
    let mut activations = Vec::new();
    let record = |label: &str, e: &mut BlockEngine, steps: &mut Vec<AttackStep>| {
        let height = e.height();
        steps.push(AttackStep { label: label.into(), height, state: e.pool().state().clone() });
    };

    let mut outcome = AttackOutcome::Completed;
    if plan.endowment.is_positive() {
        let q = engine.pool_mut().trade(sn, tn, &plan.endowment, &fee)?;
        wallet.sub(s, &plan.endowment);
        wallet.add(t, &q.amount_out);
        record("swap s for t", &mut engine, &mut steps);

        let mut dep = vec![Dec::zero(); 2];
        dep[engine.pool().state().index_of(tn)?] = plan.contribution.clone();
        let provided = match *mitigation {
            Mitigation::None => engine.pool_mut().provide(eve, &dep).map(|_| ()),
            Mitigation::Twap { .. } => engine.twap_provide(eve, &dep).map(|_| ()),
            Mitigation::Delay { .. } => {
                let deposit = BTreeMap::from([(t.clone(), plan.contribution.clone())]);
                engine.provide_delayed(eve, deposit).map(|out| {
                    if let DelayedProvide::Executed(a) = out {
                        activations.push(a);
                    }
                })
            }
        };
        match provided {
            Err(e @ (PoolError::MintRejected { .. } | PoolError::BelowFloor { .. } | PoolError::NonPositive { .. })) => {
                outcome = AttackOutcome::Aborted { step: 2, reason: e.to_string() };
            }
            Err(e) => return Err(e),
            Ok(()) => {
                wallet.sub(t, &plan.contribution);
                record("provide t", &mut engine, &mut steps);

                let rest = wallet.get(t);
                if rest.is_positive() {
                    let q = engine.pool_mut().trade(tn, sn, &rest, &fee)?;
                    wallet.sub(t, &rest);
                    wallet.add(s, &q.amount_out);
                    record("swap t for s", &mut engine, &mut steps);
                }

                if engine.pending().next().is_some() {
                    // Arbitrage closes the gap before the deposit is priced in.
                    arbitrage(engine.pool_mut(), &plan.prices)?;
                    record("arbitrage", &mut engine, &mut steps);
                    while engine.pending().next().is_some() {
                        activations.extend(engine.begin_block());
                    }
                }
                for a in &activations {
                    if let ActivationResult::Refunded { .. } = a.result {
                        for (tok, v) in &a.pending.deposit {
                            wallet.add(tok, v);
                        }
                    }
                }

                let lp = engine.pool().ledger().balance(eve, tn);
                if lp.is_positive() {
                    let mut redeem = vec![Dec::zero(); engine.pool().tokens().len()];
                    redeem[engine.pool().state().index_of(tn)?] = lp;
                    let order = engine.pool().tokens().to_vec();
                    let w = engine.pool_mut().withdraw(eve, &redeem)?;
                    for (tok, v) in order.iter().zip(&w.payout) {
                        wallet.add(tok, v);
                    }
                    record("redeem LP t", &mut engine, &mut steps);
                }
            }
        }
    }

    if let AttackOutcome::Aborted { .. } = outcome {
        engine = before;
        wallet = Wallet(BTreeMap::from([(s.clone(), plan.endowment.clone())]));
    }
    let holdings: BTreeMap<TokenId, Dec> = plan.tokens.iter().map(|tok| (tok.clone(), wallet.get(tok))).collect();
    let profit = profit_of(&holdings, plan);
    let amounts: Vec<Dec> = plan.tokens.iter().map(|tok| profit[tok].clone()).collect();
    let profit_value = plan.prices.value(&plan.tokens, &amounts)?;
    Ok(AttackReport {
        mitigation: mitigation.clone(),
        steps,
        activations,
        outcome,
        holdings,
        profit,
        profit_value,
        final_state: engine.pool().state().clone(),
        counterfactual: frozen_counterfactual(plan)?,
    })
}

/// The same four steps with the exponents held at their starting values:
/// deposits change reserves and LP shares but not the invariant's shape.
pub fn frozen_counterfactual(plan: &AttackPlan) -> PoolResult<FrozenCounterfactual> {
    let [s, t] = &plan.tokens;
    let (sn, tn) = (s.as_str(), t.as_str());
    let fee = FeePolicy::free();
    let weights = vec![Dec::one(), Dec::one()];
    let mut state = DemmState::new(plan.tokens.to_vec(), plan.reserves.to_vec(), weights.clone())?;
    let mut holdings = BTreeMap::from([(s.clone(), plan.endowment.clone()), (t.clone(), Dec::zero())]);
    let mut swap_back_output = Dec::zero();
    if plan.endowment.is_positive() {
        let bought = state.quote(sn, tn, &plan.endowment, &fee)?.amount_out;
        let mut r = state.reserves().to_vec();
        r[0] += &plan.endowment;
        r[1] -= &bought;
        // LP share of the deposit, as the dynamic pool would record it.
        let share = plan.contribution.div_round(&(&r[1] + &plan.contribution), precision(), Rounding::Floor)?;
        r[1] += &plan.contribution;
        state = DemmState::new(plan.tokens.to_vec(), r, weights.clone())?;
        let rest = &bought - &plan.contribution;
        swap_back_output = state.quote(tn, sn, &rest, &fee)?.amount_out;
        let t_left = &state.reserves()[1] + &rest;
        let payout = t_left.mul_round(&share, precision(), Rounding::Floor);
        holdings.insert(s.clone(), swap_back_output.clone());
        holdings.insert(t.clone(), payout);
    }
    Ok(FrozenCounterfactual { swap_back_output, profit: profit_of(&holdings, plan), holdings })
}
