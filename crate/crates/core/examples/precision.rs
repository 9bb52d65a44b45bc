//! The exact decimal type: directed rounding and fractional powers.
//!
//!     cargo run --example precision

use demm::numerics::{geo_mean, pow_with, with_precision};
use demm::{dec, Rounding};

fn main() -> anyhow::Result<()> {
    let (base, exp) = (dec!("0.0625"), dec!("0.8"));
    let lo = pow_with(&base, &exp, 40, Rounding::Floor)?;
    let hi = pow_with(&base, &exp, 40, Rounding::Ceiling)?;
    println!("0.0625^0.8 in [{lo}, {hi}]");

    println!("geo mean of 0.1 and 1 = {}", geo_mean(&[dec!("0.1"), dec!("1")])?);
    let third = with_precision(80, || dec!("1") / dec!("3"));
    println!("1/3 at 80 digits = {third}");
    println!("exact sum 0.1 + 0.2 = {}", dec!("0.1") + dec!("0.2"));
    Ok(())
}
