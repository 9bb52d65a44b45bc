//! Trading fees: only `rho` of the input trades, the rest is split among the
//! holders of the input token's LP and claimed separately.
//!
//!     cargo run --example fees

use demm::{dec, DemmPool, FeePolicy};

fn main() -> anyhow::Result<()> {
    let mut pool = DemmPool::new(vec!["s".into(), "t".into()], vec![dec!("40"), dec!("1")], "carol")?;
    pool.provide("dave", &[dec!("120"), dec!("3")])?;
    let fee = FeePolicy::new(dec!("0.997"))?;

    let q = pool.trade("s", "t", &dec!("36"), &fee)?;
    println!("36 s buys {} t, fee {} s", q.amount_out.display_dp(8), q.fee_charged);
    for who in ["carol", "dave"] {
        println!("{who} pot: {:?}", pool.ledger().fee_pots_of(who));
    }
    let claimed = pool.claim_fees("dave", "s");
    println!("dave claims {claimed} s; pot now {:?}", pool.ledger().fee_pots_of("dave"));
    Ok(())
}
