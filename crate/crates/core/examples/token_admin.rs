//! Listing a new token against an anchor deposit, then splitting the pool.
//!
//!     cargo run --example token_admin

use demm::{dec, Dec, DemmPool, TokenId};

fn main() -> anyhow::Result<()> {
    let mut pool = DemmPool::new(vec!["s".into(), "t".into()], vec![dec!("40"), dec!("8")], "carol")?;
    pool.provide("dave", &[Dec::zero(), dec!("8")])?;

    // 10 s and 5 u are declared to be worth the same.
    let minted = pool.add_token("erin", "s", &dec!("10"), "u", &dec!("5"))?;
    println!("erin mints {minted} LP s and {minted} LP u");
    println!("tokens {:?}: reserves {:?}, weights {:?}", pool.tokens(), pool.reserves(), pool.weights());

    let (left, right) = pool.split(&[TokenId::from("s")])?;
    for (name, p) in [("left", &left), ("right", &right)] {
        println!("{name}: {:?} reserves {:?} weights {:?}", p.tokens(), p.reserves(), p.weights());
        for account in p.ledger().accounts() {
            println!("  {account}: {:?}", p.ledger().balances_of(account.as_str()));
        }
    }
    Ok(())
}
