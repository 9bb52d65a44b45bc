//! Impermanent loss of a pool and its members as one price moves over a
//! log-spaced grid, against each member's own fixed-weight alternative.
//!
//!     cargo run --example impermanent_loss

use demm::analytics::{il_curve, log_grid, pool_position, position, Participant};
use demm::market::{arbitrage, PriceVector};
use demm::{dec, DemmPool};

fn main() -> anyhow::Result<()> {
    let alice = [dec!("20"), dec!("4")];
    let bob = [dec!("20"), dec!("12")];
    let mut pool = DemmPool::new(vec!["s".into(), "t".into()], alice.to_vec(), "alice")?;
    pool.provide("bob", &bob)?;
    let base = PriceVector::from_pairs([("s", dec!("2")), ("t", dec!("10"))])?;

    // s halves against t.
    let moved = base.scaled("s", &dec!("0.5"))?;
    let mut after = pool.clone();
    arbitrage(&mut after, &moved)?;
    for (who, basis) in [("alice", &alice), ("bob", &bob)] {
        let r = position(&after, who, &moved, basis)?;
        println!("{who}: {} vs holding", r.il_abs.display_dp(4));
    }
    let whole = pool_position(after.state(), &moved, &[dec!("40"), dec!("16")])?;
    println!("pool: {} vs holding", whole.il_abs.display_dp(4));

    let members = [
        Participant { account: "alice".into(), basis: alice.to_vec() },
        Participant { account: "bob".into(), basis: bob.to_vec() },
    ];
    let grid = log_grid(&dec!("0.0625"), &dec!("16"), 9)?;
    let table = il_curve(&pool, &base, "t", &grid, &[dec!("40"), dec!("16")], &members)?;
    print!("{}", table.to_csv_string());
    Ok(())
}
