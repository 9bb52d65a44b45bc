//! A fixed-weight constant product pool: trade, join, arbitrage, exit.
//!
//!     cargo run --example cpmm_baseline

use demm::market::{cpmm_equilibrium, PriceVector};
use demm::{dec, CpmmState, Dec};

fn main() -> anyhow::Result<()> {
    let tokens = vec!["s".into(), "t".into()];
    let mut pool = CpmmState::new(tokens, vec![dec!("20"), dec!("4")], vec![Dec::one(); 2], Dec::one())?;

    // Price of one s before anyone else joins.
    let quote = pool.clone().trade(0, 1, &dec!("1"))?;
    println!("alice alone: 1 s buys {} t", quote.display_dp(6));

    let joined = pool.provide(&dec!("3"))?;
    println!("bob deposits {:?} for {} LP", joined.deposit, joined.minted);
    println!("joint pool: 1 s buys {} t", pool.clone().trade(0, 1, &dec!("1"))?.display_dp(6));

    let prices = PriceVector::from_pairs([("s", dec!("64")), ("t", dec!("5"))])?;
    let mut pool = cpmm_equilibrium(&pool, &prices)?;
    println!("after s rallies to $64: reserves {:?}", pool.reserves());

    let alice = pool.withdraw(&dec!("0.25"))?;
    let bob = pool.withdraw(&Dec::one())?;
    println!("alice redeems {:?}, bob redeems {:?}", alice.payout, bob.payout);
    Ok(())
}
