//! One-sided liquidity keeps its exposure: a single-token provider's share
//! follows only that token, so a crash in it is not spread over the pool.
//!
//!     cargo run --example one_sided_risk

use demm::analytics::entitlement;
use demm::market::{arbitrage, PriceVector};
use demm::{dec, Dec, DemmPool};

fn main() -> anyhow::Result<()> {
    let mut pool = DemmPool::new(vec!["s".into(), "t".into()], vec![dec!("40"), dec!("8")], "carol")?;
    pool.provide("dave", &[Dec::zero(), dec!("8")])?;

    let mut prices = PriceVector::from_pairs([("s", dec!("64")), ("t", dec!("5"))])?;
    arbitrage(&mut pool, &prices)?;
    println!("at (64, 5): reserves {:?}, weights {:?}", pool.reserves(), pool.weights());
    println!("dave could redeem {:?}", entitlement(&pool, "dave")?);

    let out = pool.withdraw("carol", &[dec!("0.2"), dec!("1")])?;
    println!("carol takes {:?}; left {:?} / {:?}", out.payout, pool.reserves(), pool.weights());

    // t loses 99.8% of its value.
    prices = prices.scaled("t", &dec!("0.001953125"))?;
    arbitrage(&mut pool, &prices)?;
    println!("t at {}: reserves {:?}", prices.get("t")?, pool.reserves());
    for who in ["carol", "dave"] {
        let e = entitlement(&pool, who)?;
        println!("{who}: entitled {:?}, worth {}", e, prices.value(pool.tokens(), &e)?);
    }
    Ok(())
}
