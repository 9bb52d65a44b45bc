#![allow(dead_code)]

use demm::{Dec, DemmPool, Rounding, TokenId};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const TOKENS: [&str; 4] = ["a", "b", "c", "d"];
pub const ACCOUNTS: [&str; 4] = ["g", "x", "y", "z"];

/// Nine significant digits, magnitude in `[10^lo, 10^hi)`.
pub fn rand_dec(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Dec {
    let m: u64 = rng.gen_range(100_000_000..1_000_000_000);
    let e = rng.gen_range(lo..hi);
    Dec::from_parts(m, e - 8)
}

/// A value in `[10^lo, 1)`.
pub fn rand_frac(rng: &mut ChaCha8Rng, lo: i64) -> Dec {
    rand_dec(rng, lo, 0)
}

pub fn token_ids(n: usize) -> Vec<TokenId> {
    TOKENS[..n].iter().map(|t| TokenId::from(*t)).collect()
}

/// Genesis pool with 2 to 4 tokens followed by a few partial deposits, so
/// that weights are not all one.
pub fn rand_pool(rng: &mut ChaCha8Rng) -> DemmPool {
    let n = rng.gen_range(2..=4);
    let reserves = (0..n).map(|_| rand_dec(rng, -2, 6)).collect();
    let mut pool = DemmPool::new(token_ids(n), reserves, ACCOUNTS[0]).unwrap();
    for _ in 0..rng.gen_range(0..4) {
        let who = ACCOUNTS[rng.gen_range(1..ACCOUNTS.len())];
        let dep = rand_deposit(rng, &pool);
        pool.provide(who, &dep).unwrap();
    }
    pool
}

/// A non-empty subset of tokens, each deposited at 0.1% to 1000% of its reserve.
pub fn rand_deposit(rng: &mut ChaCha8Rng, pool: &DemmPool) -> Vec<Dec> {
    let n = pool.tokens().len();
    let mut dep = vec![Dec::zero(); n];
    let forced = rng.gen_range(0..n);
    for (k, d) in dep.iter_mut().enumerate() {
        if k == forced || rng.gen_bool(0.5) {
            *d = pool.reserves()[k].mul_round(&rand_dec(rng, -3, 1), 30, Rounding::Floor);
        }
    }
    dep
}

/// `sqrt(a)` by Newton's method at `prec + 10` digits.
pub fn sqrt(a: &Dec, prec: u32) -> Dec {
    root(a, 2, prec)
}

/// `a^(1/n)` by Newton's method, independent of the library's ln/exp.
pub fn root(a: &Dec, n: u32, prec: u32) -> Dec {
    let work = prec + 10;
    let nd = Dec::from(n as i64);
    let mut x = Dec::from_parts(1, (a.magnitude() / n as i64).max(0));
    loop {
        let mut pow = Dec::one();
        for _ in 0..n - 1 {
            pow = pow.mul_round(&x, work, Rounding::HalfEven);
        }
        let q = a.div_round(&pow, work, Rounding::HalfEven).unwrap();
        let next = (&x.mul_round(&Dec::from((n - 1) as i64), work, Rounding::HalfEven) + &q)
            .div_round(&nd, work, Rounding::HalfEven)
            .unwrap();
        if next.rel_diff(&x) < Dec::pow10(-(work as i64) + 2) {
            return next.round(prec, Rounding::HalfEven);
        }
        x = next;
    }
}
