//! Token-specific LP shares: a two-sided deposit, the equilibrium after a
//! price move and who owns what.
//!
//!     cargo run --example demm_pool

use demm::analytics::{allocation, position};
use demm::market::{arbitrage, PriceVector};
use demm::{dec, DemmPool};

fn main() -> anyhow::Result<()> {
    let mut pool = DemmPool::new(vec!["s".into(), "t".into()], vec![dec!("20"), dec!("4")], "alice")?;
    let minted = pool.provide("bob", &[dec!("20"), dec!("12")])?;
    println!("bob mints LP s {} and LP t {}", minted[0], minted[1]);
    println!("state: reserves {:?}, weights {:?}", pool.reserves(), pool.weights());

    let prices = PriceVector::from_pairs([("s", dec!("64")), ("t", dec!("5"))])?;
    arbitrage(&mut pool, &prices)?;
    println!("after arbitrage at (64, 5): reserves {:?}", pool.reserves());

    for (who, basis) in [("alice", [dec!("20"), dec!("4")]), ("bob", [dec!("20"), dec!("12")])] {
        let r = position(&pool, who, &prices, &basis)?;
        println!("{who}: entitled {:?}, worth {} vs {} held", r.entitled, r.pool_value, r.hold_value);
    }
    print!("{}", allocation(&pool, &prices)?.to_csv_string());
    Ok(())
}
