//! A one-sided deposit raises the exponent and improves the rate in both
//! directions. Prints the two trade curves as CSV.
//!
//!     cargo run --example price_impact

use demm::analytics::trade_curve;
use demm::market::PriceVector;
use demm::{dec, Dec, DemmPool};

fn main() -> anyhow::Result<()> {
    let mut pool = DemmPool::new(vec!["s".into(), "t".into()], vec![dec!("40"), dec!("8")], "carol")?;
    let before = pool.state().clone();
    pool.provide("dave", &[Dec::zero(), dec!("8")])?;
    let states = [("before".to_string(), before), ("after".to_string(), pool.state().clone())];
    let prices = PriceVector::from_pairs([("s", dec!("2")), ("t", dec!("10"))])?;

    let volumes: Vec<Dec> = ["1", "2", "4", "8", "16", "32"].iter().map(|v| v.parse().unwrap()).collect();
    println!("# s -> t");
    print!("{}", trade_curve(&states, "s", "t", &volumes, &prices)?.to_csv_string());
    let volumes: Vec<Dec> = ["0.25", "0.5", "1", "2", "4", "8"].iter().map(|v| v.parse().unwrap()).collect();
    println!("# t -> s");
    print!("{}", trade_curve(&states, "t", "s", &volumes, &prices)?.to_csv_string());
    Ok(())
}
