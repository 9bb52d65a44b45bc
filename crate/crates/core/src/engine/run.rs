//! Executes scenario scripts block by block.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytics::{self, Participant, PositionReport, Table};
use crate::demm::{DemmPool, DemmState, FeePolicy, TradeQuote};
use crate::market::{arbitrage_oracle, demm_equilibrium, PriceVector};
use crate::numerics::Dec;
use crate::security::{
    Activation, ActivationResult, BlockEngine, DelayedProvide, EngineConfig, Mitigation, PendingDeposit,
};
use crate::types::{AccountId, TokenId};

use super::script::{Amounts, ArbitrageMethod, Event, EventKind, Expect, Report, ScenarioScript, StateCheck};
use super::snapshot::{restore, sha256_hex, snapshot, state_digest};
use super::EngineError;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory that snapshot paths in `init` events are relative to.
    pub base_dir: PathBuf,
    /// Where to write the transcript, final snapshot and report files.
    pub out_dir: Option<PathBuf>,
    /// Overrides the script's seed.
    pub seed: Option<u64>,
}

/// What an event produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outcome {
    Init { tokens: Vec<TokenId> },
    Trade(TradeQuote),
    Minted { minted: Amounts },
    Queued { pending: PendingDeposit },
    Payout { payout: Amounts, removed: Vec<TokenId> },
    Fees { token: TokenId, amount: Dec },
    Prices { prices: PriceVector },
    Arbitrage { reserves: Amounts },
    TokenAdded { token: TokenId, minted: Dec },
    Split { kept: Vec<TokenId>, artifact: String },
    Check { passed: bool, mismatches: Vec<String> },
    State { label: Option<String>, state: DemmState },
    Position(PositionReport),
    Table { file: String, rows: usize },
    Activation(Activation),
    /// The event failed as its expectation demanded.
    ExpectedError { message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub block: usize,
    /// Position in the block; `None` for block-start activations.
    pub index: Option<usize>,
    pub kind: String,
    pub pre_digest: Option<String>,
    pub post_digest: Option<String>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub block: usize,
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunTranscript {
    pub format_version: u32,
    pub name: String,
    pub seed: u64,
    pub mitigation: Mitigation,
    pub events: Vec<EventRecord>,
    /// Failed assertions and expectations.
    pub failures: Vec<Failure>,
    /// Net token flow per account: received minus paid.
    pub flows: BTreeMap<AccountId, Amounts>,
    /// Tokens each account has put into the pool.
    pub deposits: BTreeMap<AccountId, Amounts>,
    pub final_digest: Option<String>,
    pub final_pool: Option<DemmPool>,
    pub final_prices: PriceVector,
    /// Emitted files and their SHA-256.
    pub artifacts: BTreeMap<String, String>,
}

impl RunTranscript {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("transcript serializes");
        s.push('\n');
        s
    }

    /// SHA-256 of the serialized transcript.
    pub fn digest(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub transcript: RunTranscript,
    /// File name and contents of every artifact, transcript included.
    pub files: Vec<(String, String)>,
}

struct Runner<'a> {
    script: &'a ScenarioScript,
    opts: &'a RunOptions,
    config: EngineConfig,
    engine: Option<BlockEngine>,
    prices: PriceVector,
    labels: BTreeMap<String, DemmState>,
    files: Vec<(String, String)>,
    t: RunTranscript,
}

fn add(book: &mut BTreeMap<AccountId, Amounts>, account: &AccountId, token: &TokenId, v: &Dec) {
    let row = book.entry(account.clone()).or_default();
    *row.entry(token.clone()).or_default() += v;
}

fn to_map(tokens: &[TokenId], values: &[Dec]) -> Amounts {
    tokens.iter().cloned().zip(values.iter().cloned()).filter(|(_, v)| !v.is_zero()).collect()
}

fn close(actual: &Dec, expected: &Dec, tol: &Dec) -> bool {
    if tol.is_zero() || expected.is_zero() {
        (actual - expected).abs() <= *tol
    } else {
        actual.rel_diff(expected) <= *tol
    }
}

fn compare(what: &str, actual: &Amounts, expected: &Amounts, tol: &Dec, out: &mut Vec<String>) {
    for (t, e) in expected {
        let a = actual.get(t).cloned().unwrap_or_default();
        if !close(&a, e, tol) {
            out.push(format!("{what} {t}: expected {e}, got {a}"));
        }
    }
}

/// Runs a parsed script. Assertion failures are collected in the transcript;
/// any other failure aborts the run.
pub fn run_scenario(script: &ScenarioScript, opts: &RunOptions) -> Result<RunOutput, EngineError> {
    script.validate()?;
    let seed = opts.seed.unwrap_or(script.seed);
    let config = match script.mitigation {
        Mitigation::None => EngineConfig { seed, ..EngineConfig::default() },
        Mitigation::Delay { min, max } => EngineConfig { delay_min: min, delay_max: max, twap_k: 0, seed },
        Mitigation::Twap { k } => EngineConfig { twap_k: k, seed, ..EngineConfig::default() },
    };
    let mut r = Runner {
        script,
        opts,
        config,
        engine: None,
        prices: PriceVector::default(),
        labels: BTreeMap::new(),
        files: Vec::new(),
        t: RunTranscript {
            format_version: super::FORMAT_VERSION,
            name: script.name.clone(),
            seed,
            mitigation: script.mitigation.clone(),
            events: Vec::new(),
            failures: Vec::new(),
            flows: BTreeMap::new(),
            deposits: BTreeMap::new(),
            final_digest: None,
            final_pool: None,
            final_prices: PriceVector::default(),
            artifacts: BTreeMap::new(),
        },
    };
    for (b, block) in script.blocks.iter().enumerate() {
        if let Some(engine) = r.engine.as_mut() {
            let acts = engine.begin_block();
            for a in acts {
                r.activation(b, a);
            }
        }
        for (i, ev) in block.iter().enumerate() {
            r.event(b, i, ev)?;
        }
    }
    if let Some(engine) = &r.engine {
        let pool = engine.pool().clone();
        r.t.final_digest = Some(state_digest(&pool));
        r.emit("final_state.json", snapshot(&pool));
        r.t.final_pool = Some(pool);
    }
    r.t.final_prices = r.prices.clone();
    let transcript_json = r.t.to_json();
    r.files.push(("transcript.json".into(), transcript_json));
    if let Some(dir) = &opts.out_dir {
        let io = |p: &Path, e| EngineError::Io { path: p.display().to_string(), source: e };
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        for (name, contents) in &r.files {
            let p = dir.join(name);
            fs::write(&p, contents).map_err(|e| io(&p, e))?;
        }
    }
    Ok(RunOutput { transcript: r.t, files: r.files })
}

impl Runner<'_> {
    fn emit(&mut self, name: &str, contents: String) {
        self.t.artifacts.insert(name.to_string(), sha256_hex(contents.as_bytes()));
        self.files.retain(|(n, _)| n != name);
        self.files.push((name.to_string(), contents));
    }

    fn digest(&self) -> Option<String> {
        self.engine.as_ref().map(|e| state_digest(e.pool()))
    }

    fn engine(&mut self) -> Result<&mut BlockEngine, EngineError> {
        self.engine.as_mut().ok_or_else(|| EngineError::Invalid("no pool: the scenario has not run init".into()))
    }

    fn pool(&mut self) -> Result<&mut DemmPool, EngineError> {
        Ok(self.engine()?.pool_mut())
    }

    fn activation(&mut self, block: usize, a: Activation) {
        let p = &a.pending;
        match &a.result {
            ActivationResult::Minted { .. } => {
                for (t, v) in &p.deposit {
                    add(&mut self.t.deposits, &p.provider, t, v);
                }
            }
            ActivationResult::Refunded { .. } => {
                for (t, v) in &p.deposit {
                    add(&mut self.t.flows, &p.provider, t, v);
                }
            }
        }
        let digest = self.digest();
        self.t.events.push(EventRecord {
            block,
            index: None,
            kind: "activation".into(),
            pre_digest: None,
            post_digest: digest,
            outcome: Outcome::Activation(a),
        });
    }

    fn event(&mut self, block: usize, index: usize, ev: &Event) -> Result<(), EngineError> {
        let kind = kind_name(&ev.kind).to_string();
        let pre = self.digest();
        let result = self.apply(&ev.kind);
        let want_error = ev.expect.as_ref().and_then(|e| e.error.as_ref());
        let outcome = match (result, want_error) {
            (Ok(o), None) => o,
            (Err(e), Some(text)) if e.to_string().contains(text.as_str()) => {
                Outcome::ExpectedError { message: e.to_string() }
            }
            (Err(e), _) => {
                return Err(EngineError::Event {
                    block,
                    index,
                    kind,
                    digest: pre.unwrap_or_else(|| "none".into()),
                    source: Box::new(e),
                })
            }
            (Ok(o), Some(text)) => {
                self.t.failures.push(Failure { block, index, message: format!("expected an error containing {text:?}") });
                o
            }
        };
        let mut mismatches = Vec::new();
        if let Outcome::Check { passed: false, mismatches: m } = &outcome {
            mismatches.extend(m.iter().cloned());
        }
        if let Some(exp) = &ev.expect {
            if exp.error.is_none() {
                self.check_expect(exp, &outcome, &mut mismatches);
            }
        }
        for m in mismatches {
            self.t.failures.push(Failure { block, index, message: m });
        }
        let post = self.digest();
        self.t.events.push(EventRecord { block, index: Some(index), kind, pre_digest: pre, post_digest: post, outcome });
        Ok(())
    }

    fn check_expect(&self, exp: &Expect, outcome: &Outcome, out: &mut Vec<String>) {
        let tol = exp.tolerance.clone().unwrap_or_default();
        let single = |what: &str, actual: Option<&Dec>, want: &Option<Dec>, out: &mut Vec<String>| {
            if let Some(w) = want {
                match actual {
                    Some(a) if close(a, w, &tol) => {}
                    Some(a) => out.push(format!("{what}: expected {w}, got {a}")),
                    None => out.push(format!("{what}: event produced no such value")),
                }
            }
        };
        let (amount, fee) = match outcome {
            Outcome::Trade(q) => (Some(&q.amount_out), Some(&q.fee_charged)),
            Outcome::Fees { amount, .. } => (Some(amount), None),
            Outcome::TokenAdded { minted, .. } => (Some(minted), None),
            _ => (None, None),
        };
        single("amount", amount, &exp.amount, out);
        single("fee", fee, &exp.fee, out);
        if let Some(want) = &exp.minted {
            match outcome {
                Outcome::Minted { minted } => compare("minted", minted, want, &tol, out),
                _ => out.push("minted: event minted nothing".into()),
            }
        }
        if let Some(want) = &exp.payout {
            match outcome {
                Outcome::Payout { payout, .. } => compare("payout", payout, want, &tol, out),
                _ => out.push("payout: event paid nothing".into()),
            }
        }
        if let Some(engine) = &self.engine {
            let st = engine.pool().state();
            if let Some(want) = &exp.reserves {
                compare("reserve", &to_map(st.tokens(), st.reserves()), want, &tol, out);
            }
            if let Some(want) = &exp.weights {
                compare("weight", &to_map(st.tokens(), st.weights()), want, &tol, out);
            }
        }
    }

    fn fee(&self, rho: &Option<Dec>) -> Result<FeePolicy, EngineError> {
        Ok(FeePolicy::new(rho.clone().unwrap_or_else(|| self.script.fee_rho.clone()))?)
    }

    fn apply(&mut self, kind: &EventKind) -> Result<Outcome, EngineError> {
        match kind {
            EventKind::Init { tokens, reserves, genesis, from_snapshot } => {
                if self.engine.is_some() {
                    return Err(EngineError::Invalid("pool already initialized".into()));
                }
                let pool = match from_snapshot {
                    Some(path) => {
                        let p = self.opts.base_dir.join(path);
                        let text = fs::read_to_string(&p)
                            .map_err(|e| EngineError::Io { path: p.display().to_string(), source: e })?;
                        restore(&text)?
                    }
                    None => {
                        let g = genesis.as_ref().expect("validated");
                        let pool = DemmPool::new(tokens.clone(), reserves.clone(), g.as_str())?;
                        for (t, v) in tokens.iter().zip(reserves) {
                            add(&mut self.t.deposits, g, t, v);
                            add(&mut self.t.flows, g, t, &-v.clone());
                        }
                        pool
                    }
                };
                let tokens = pool.tokens().to_vec();
                let mut engine = BlockEngine::new(pool, self.config);
                engine.begin_block();
                self.engine = Some(engine);
                Ok(Outcome::Init { tokens })
            }
            EventKind::Trade { account, token_in, token_out, amount, rho } => {
                let fee = self.fee(rho)?;
                let q = self.pool()?.trade(token_in.as_str(), token_out.as_str(), amount, &fee)?;
                add(&mut self.t.flows, account, token_in, &-amount.clone());
                add(&mut self.t.flows, account, token_out, &q.amount_out);
                Ok(Outcome::Trade(q))
            }
            EventKind::Provide { account, amounts } => {
                let pool = self.pool()?;
                let dep = pool.align(amounts)?;
                let minted = pool.provide(account.as_str(), &dep)?;
                let minted = to_map(pool.tokens(), &minted);
                self.debit_deposit(account, amounts);
                Ok(Outcome::Minted { minted })
            }
            EventKind::ProvideDelayed { account, amounts } => {
                let out = self.engine()?.provide_delayed(account.as_str(), amounts.clone())?;
                for (t, v) in amounts {
                    add(&mut self.t.flows, account, t, &-v.clone());
                }
                Ok(match out {
                    DelayedProvide::Queued(pending) => Outcome::Queued { pending },
                    DelayedProvide::Executed(a) => {
                        for (t, v) in amounts {
                            add(&mut self.t.deposits, account, t, v);
                        }
                        match a.result {
                            ActivationResult::Minted { minted } => Outcome::Minted { minted },
                            ActivationResult::Refunded { .. } => unreachable!("immediate deposits fail instead"),
                        }
                    }
                })
            }
            EventKind::TwapProvide { account, amounts } => {
                let engine = self.engine()?;
                let dep = engine.pool().align(amounts)?;
                let minted = engine.twap_provide(account.as_str(), &dep)?;
                let minted = to_map(engine.pool().tokens(), &minted);
                self.debit_deposit(account, amounts);
                Ok(Outcome::Minted { minted })
            }
            EventKind::Withdraw { account, lp, all } => {
                let pool = self.pool()?;
                let tokens = pool.tokens().to_vec();
                let mut lp = lp.clone();
                for t in all {
                    lp.insert(t.clone(), pool.ledger().balance(account.as_str(), t.as_str()));
                }
                let redeem = pool.align(&lp)?;
                let w = pool.withdraw(account.as_str(), &redeem)?;
                let payout = to_map(&tokens, &w.payout);
                for (t, v) in &payout {
                    add(&mut self.t.flows, account, t, v);
                }
                Ok(Outcome::Payout { payout, removed: w.removed })
            }
            EventKind::ClaimFees { account, token } => {
                let amount = self.pool()?.claim_fees(account.as_str(), token.as_str());
                if amount.is_positive() {
                    add(&mut self.t.flows, account, token, &amount);
                }
                Ok(Outcome::Fees { token: token.clone(), amount })
            }
            EventKind::SetPrices { prices } => {
                let update = PriceVector::new(prices.clone())?;
                self.prices.update(&update);
                Ok(Outcome::Prices { prices: self.prices.clone() })
            }
            EventKind::Arbitrage { method } => {
                let prices = self.prices.clone();
                let pool = self.pool()?;
                let eq = match method {
                    ArbitrageMethod::ClosedForm => demm_equilibrium(pool.state(), &prices)?,
                    ArbitrageMethod::Bisection => arbitrage_oracle(pool.state(), &prices)?,
                };
                pool.set_reserves(eq.reserves().to_vec());
                Ok(Outcome::Arbitrage { reserves: to_map(eq.tokens(), eq.reserves()) })
            }
            EventKind::AddToken { account, anchor, anchor_amount, token, reserve, governance_approved } => {
                if !governance_approved {
                    return Err(EngineError::Invalid("add_token requires governance approval".into()));
                }
                let minted =
                    self.pool()?.add_token(account.as_str(), anchor.as_str(), anchor_amount, token.as_str(), reserve)?;
                let legs = Amounts::from([(anchor.clone(), anchor_amount.clone()), (token.clone(), reserve.clone())]);
                self.debit_deposit(account, &legs);
                Ok(Outcome::TokenAdded { token: token.clone(), minted })
            }
            EventKind::SplitPool { keep, governance_approved, artifact } => {
                if !governance_approved {
                    return Err(EngineError::Invalid("split_pool requires governance approval".into()));
                }
                let (kept, other) = self.pool()?.split(keep)?;
                let name = artifact.clone().unwrap_or_else(|| "split_pool.json".into());
                self.emit(&name, snapshot(&other));
                let engine = self.engine()?;
                engine.replace_pool(kept);
                Ok(Outcome::Split { kept: engine.pool().tokens().to_vec(), artifact: name })
            }
            EventKind::AssertState(check) => {
                let mismatches = self.assert_state(check)?;
                Ok(Outcome::Check { passed: mismatches.is_empty(), mismatches })
            }
            EventKind::Report(report) => self.report(report),
        }
    }

    fn debit_deposit(&mut self, account: &AccountId, amounts: &Amounts) {
        for (t, v) in amounts.iter().filter(|(_, v)| v.is_positive()) {
            add(&mut self.t.deposits, account, t, v);
            add(&mut self.t.flows, account, t, &-v.clone());
        }
    }

    fn assert_state(&mut self, c: &StateCheck) -> Result<Vec<String>, EngineError> {
        let tol = &c.tolerance;
        let mut out = Vec::new();
        let engine = self
            .engine
            .as_ref()
            .ok_or_else(|| EngineError::Invalid("no pool: the scenario has not run init".into()))?;
        let pending = engine.pending().count();
        let pool = engine.pool();
        let st = pool.state();
        if let Some(want) = &c.tokens {
            if want.as_slice() != st.tokens() {
                out.push(format!("tokens: expected {want:?}, got {:?}", st.tokens()));
            }
        }
        if let Some(want) = &c.reserves {
            compare("reserve", &to_map(st.tokens(), st.reserves()), want, tol, &mut out);
        }
        if let Some(want) = &c.weights {
            compare("weight", &to_map(st.tokens(), st.weights()), want, tol, &mut out);
        }
        for (what, want, actual) in [
            ("balance", &c.balances, None),
            ("fee pot", &c.fee_pots, Some(false)),
            ("flow", &c.flows, Some(true)),
        ] {
            let Some(want) = want else { continue };
            for (account, row) in want {
                let got = match actual {
                    None => pool.ledger().balances_of(account.as_str()),
                    Some(false) => pool.ledger().fee_pots_of(account.as_str()),
                    Some(true) => self.t.flows.get(account).cloned().unwrap_or_default(),
                };
                compare(&format!("{what} of {account}:"), &got, row, tol, &mut out);
            }
        }
        if let Some(want) = c.pending {
            if want != pending {
                out.push(format!("pending deposits: expected {want}, got {pending}"));
            }
        }
        Ok(out)
    }

    fn basis_of(&self, pool: &DemmPool, account: &AccountId, given: &Option<Amounts>) -> Result<Vec<Dec>, EngineError> {
        let map = match given {
            Some(m) => m.clone(),
            None => self
                .t
                .deposits
                .get(account)
                .cloned()
                .ok_or_else(|| EngineError::Invalid(format!("no recorded deposits for {account}")))?,
        };
        Ok(pool.align(&map)?)
    }

    fn pool_basis(&self, pool: &DemmPool) -> Amounts {
        let mut total = Amounts::new();
        for row in self.t.deposits.values() {
            for (t, v) in row {
                if pool.state().index_of(t.as_str()).is_ok() {
                    *total.entry(t.clone()).or_default() += v;
                }
            }
        }
        total
    }

    fn table(&mut self, file: &str, table: Table) -> Outcome {
        let rows = table.rows.len();
        self.emit(file, table.to_csv_string());
        Outcome::Table { file: file.to_string(), rows }
    }

    fn report(&mut self, report: &Report) -> Result<Outcome, EngineError> {
        let pool = self.pool()?.clone();
        match report {
            Report::State { label } => {
                if let Some(l) = label {
                    self.labels.insert(l.clone(), pool.state().clone());
                }
                Ok(Outcome::State { label: label.clone(), state: pool.state().clone() })
            }
            Report::Position { account, basis } => {
                let basis = self.basis_of(&pool, account, basis)?;
                Ok(Outcome::Position(analytics::position(&pool, account.as_str(), &self.prices, &basis)?))
            }
            Report::PoolPosition { basis } => {
                let map = basis.clone().unwrap_or_else(|| self.pool_basis(&pool));
                let basis = pool.align(&map)?;
                Ok(Outcome::Position(analytics::pool_position(pool.state(), &self.prices, &basis)?))
            }
            Report::IlCurve { moving, lo, hi, points, accounts, file } => {
                let grid = analytics::log_grid(lo, hi, *points)?;
                let participants = accounts
                    .iter()
                    .map(|a| Ok(Participant { account: a.clone(), basis: self.basis_of(&pool, a, &None)? }))
                    .collect::<Result<Vec<_>, EngineError>>()?;
                let pool_basis = pool.align(&self.pool_basis(&pool))?;
                let t = analytics::il_curve(&pool, &self.prices, moving.as_str(), &grid, &pool_basis, &participants)?;
                Ok(self.table(file, t))
            }
            Report::TradeCurve { token_in, token_out, volumes, states, file } => {
                let labelled = states
                    .iter()
                    .map(|l| {
                        let st = if l == "current" { Some(pool.state().clone()) } else { self.labels.get(l).cloned() };
                        st.map(|s| (l.clone(), s)).ok_or_else(|| EngineError::Invalid(format!("no state labelled {l}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let t = analytics::trade_curve(&labelled, token_in.as_str(), token_out.as_str(), volumes, &self.prices)?;
                Ok(self.table(file, t))
            }
            Report::Allocation { file } => {
                let t = analytics::allocation(&pool, &self.prices)?;
                Ok(self.table(file, t))
            }
        }
    }
}

fn kind_name(kind: &EventKind) -> &'static str {
    match kind {
        EventKind::Init { .. } => "init",
        EventKind::Trade { .. } => "trade",
        EventKind::Provide { .. } => "provide",
        EventKind::ProvideDelayed { .. } => "provide_delayed",
        EventKind::TwapProvide { .. } => "twap_provide",
        EventKind::Withdraw { .. } => "withdraw",
        EventKind::ClaimFees { .. } => "claim_fees",
        EventKind::SetPrices { .. } => "set_prices",
        EventKind::Arbitrage { .. } => "arbitrage",
        EventKind::AddToken { .. } => "add_token",
        EventKind::SplitPool { .. } => "split_pool",
        EventKind::AssertState(_) => "assert_state",
        EventKind::Report(_) => "report",
    }
}
