//! Frozen values checked against oracles that share no code with the library's
//! ln/exp and swap paths: Newton roots, bisection on the invariant, rationals.

mod common;

use demm::market::{arbitrage_oracle, demm_equilibrium, PriceVector};
use demm::numerics::{geo_mean, pow_d, pow_with};
use demm::{dec, CpmmState, Dec, DemmPool, DemmState, FeePolicy, Rounding, TokenId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{rand_dec, root, sqrt};

fn ids(names: &[&str]) -> Vec<TokenId> {
    names.iter().map(|n| TokenId::from(*n)).collect()
}

fn ratio(a: i64, b: i64) -> Dec {
    Dec::from(a).div_round(&Dec::from(b), 60, Rounding::HalfEven).unwrap()
}

#[test]
fn pow_matches_newton_root() {
    // 0.0625^0.8 = 2^-3.2 = 1 / (8 * 2^(1/5))
    let oracle = Dec::one().div_round(&(&dec!("8") * &root(&dec!("2"), 5, 100)), 100, Rounding::HalfEven).unwrap();
    let got = pow_d(&dec!("0.0625"), &dec!("0.8")).unwrap();
    assert!(got.approx_eq_rel(&oracle, &Dec::pow10(-48)), "{got} vs {oracle}");
    assert!(got.to_string().starts_with("0.10881882041201551739203375218496826237239067804"));
}

#[test]
fn geo_mean_is_sqrt() {
    let got = geo_mean(&[dec!("0.1"), dec!("1")]).unwrap();
    let oracle = sqrt(&dec!("0.1"), 80);
    assert!(got.approx_eq_rel(&oracle, &Dec::pow10(-48)), "{got} vs {oracle}");
}

#[test]
fn rational_exponents() {
    // a^(p/q) against the q-th Newton root of a^p, both directions of rounding.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let a = rand_dec(&mut rng, -3, 3);
        let p: i64 = rng.gen_range(1..7);
        let q: u32 = rng.gen_range(2..6);
        let mut ap = Dec::one();
        for _ in 0..p {
            ap = ap.mul_exact(&a);
        }
        let oracle = root(&ap, q, 70);
        let e = ratio(p, q as i64);
        let lo = pow_with(&a, &e, 50, Rounding::Floor).unwrap();
        let hi = pow_with(&a, &e, 50, Rounding::Ceiling).unwrap();
        assert!(lo <= hi);
        assert!(oracle.approx_eq_rel(&lo, &Dec::pow10(-47)), "{a}^({p}/{q}): {lo} vs {oracle}");
        assert!(oracle.approx_eq_rel(&hi, &Dec::pow10(-47)));
    }
}

/// Largest x with (r_s + dx)^w_s (r_t - x)^w_t >= r_s^w_s r_t^w_t, for integer weights.
fn bisect_output(r_s: &Dec, r_t: &Dec, w_s: u32, w_t: u32, dx: &Dec) -> Dec {
    let powi = |b: &Dec, k: u32| (0..k).fold(Dec::one(), |acc, _| acc.mul_exact(b));
    let k = powi(r_s, w_s).mul_exact(&powi(r_t, w_t));
    let grown = powi(&(r_s + dx), w_s);
    let (mut lo, mut hi) = (Dec::zero(), r_t.clone());
    let half = dec!("0.5");
    for _ in 0..200 {
        let mid = (&lo + &hi).mul_round(&half, 80, Rounding::HalfEven);
        if grown.mul_exact(&powi(&(r_t - &mid), w_t)) >= k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[test]
fn fractional_trade_by_bisection() {
    let state = DemmState::new(ids(&["s", "t"]), vec![dec!("40"), dec!("16")], vec![dec!("1"), dec!("2")]).unwrap();
    let q = state.quote("s", "t", &dec!("4"), &FeePolicy::free()).unwrap();
    let oracle = bisect_output(&dec!("40"), &dec!("16"), 1, 2, &dec!("4"));
    assert!(q.amount_out.approx_eq_rel(&oracle, &Dec::pow10(-45)), "{} vs {oracle}", q.amount_out);
    assert!(q.amount_out <= oracle, "pool must not overpay");
    assert!(q.amount_out.approx_eq_abs(&dec!("0.744598572070522952851585"), &Dec::pow10(-24)));
}

#[test]
fn integer_weight_trades_by_bisection() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..25 {
        let (w_s, w_t) = (rng.gen_range(1..5u32), rng.gen_range(1..5u32));
        let (r_s, r_t) = (rand_dec(&mut rng, 0, 3), rand_dec(&mut rng, 0, 3));
        let dx = r_s.mul_round(&rand_dec(&mut rng, -3, 0), 20, Rounding::Floor);
        let state = DemmState::new(ids(&["s", "t"]), vec![r_s.clone(), r_t.clone()], vec![w_s.into(), w_t.into()]).unwrap();
        let got = state.quote("s", "t", &dx, &FeePolicy::free()).unwrap().amount_out;
        let oracle = bisect_output(&r_s, &r_t, w_s, w_t, &dx);
        assert!(got.approx_eq_rel(&oracle, &Dec::pow10(-40)), "w=({w_s},{w_t}): {got} vs {oracle}");
    }
}

#[test]
fn fee_trade_is_rational() {
    let mut pool = DemmPool::new(ids(&["s", "t"]), vec![dec!("40"), dec!("1")], "lp").unwrap();
    let half = FeePolicy::new(dec!("0.5")).unwrap();
    let q = pool.trade("s", "t", &dec!("36"), &half).unwrap();
    // 1 - 40/58 = 9/29
    assert!(q.amount_out.approx_eq_rel(&ratio(9, 29), &Dec::pow10(-48)));
    assert_eq!(q.fee_charged, dec!("18"));
    let plain = DemmPool::new(ids(&["s", "t"]), vec![dec!("40"), dec!("1")], "lp")
        .unwrap()
        .trade("s", "t", &dec!("18"), &FeePolicy::free())
        .unwrap();
    assert_eq!(plain.amount_out, q.amount_out);
    assert_eq!(pool.claim_fees("lp", "s"), dec!("18"));
}

#[test]
fn constant_product_rationals() {
    let mut alone = CpmmState::new(ids(&["s", "t"]), vec![dec!("20"), dec!("4")], vec![Dec::one(); 2], Dec::one()).unwrap();
    assert!(alone.trade(0, 1, &dec!("1")).unwrap().approx_eq_rel(&ratio(4, 21), &Dec::pow10(-46)));
    let mut deep = CpmmState::new(ids(&["s", "t"]), vec![dec!("80"), dec!("16")], vec![Dec::one(); 2], dec!("4")).unwrap();
    assert!(deep.trade(0, 1, &dec!("1")).unwrap().approx_eq_rel(&ratio(16, 81), &Dec::pow10(-46)));

    let mut eq = CpmmState::new(ids(&["s", "t"]), vec![dec!("10"), dec!("128")], vec![Dec::one(); 2], dec!("4")).unwrap();
    let dep = eq.provide(&dec!("0.5")).unwrap();
    assert_eq!(dep.minted, dec!("2"));
    // Proportions are kept: 15/192 = 10/128.
    assert_eq!(eq.reserves()[0].mul_exact(&dec!("128")), eq.reserves()[1].mul_exact(&dec!("10")));
    assert_eq!(eq.lp_supply(), &dec!("6"));
}

#[test]
fn equilibrium_agrees_with_bisection() {
    let state = DemmState::new(ids(&["s", "t"]), vec![dec!("40"), dec!("16")], vec![dec!("1"), dec!("2")]).unwrap();
    let px = PriceVector::from_pairs([("s", dec!("64")), ("t", dec!("5"))]).unwrap();
    let closed = demm_equilibrium(&state, &px).unwrap();
    let bisected = arbitrage_oracle(&state, &px).unwrap();
    for (a, b) in closed.reserves().iter().zip(bisected.reserves()) {
        assert!(a.approx_eq_rel(b, &Dec::pow10(-25)), "{a} vs {b}");
    }
    // Value shares follow the weights: 64 r_s : 5 r_t = 1 : 2.
    let vs = dec!("64").mul_exact(&closed.reserves()[0]);
    let vt = dec!("5").mul_exact(&closed.reserves()[1]);
    assert!((&vs + &vs).approx_eq_rel(&vt, &Dec::pow10(-45)));
}

#[test]
fn add_token_then_split() {
    let mut pool = DemmPool::new(ids(&["s", "t"]), vec![dec!("40"), dec!("8")], "g").unwrap();
    pool.provide("h", &[Dec::zero(), dec!("8")]).unwrap();
    let minted = pool.add_token("n", "s", &dec!("10"), "u", &dec!("5")).unwrap();
    assert_eq!(minted, dec!("0.25"));
    assert_eq!(pool.reserves(), &[dec!("50"), dec!("16"), dec!("5")]);
    assert_eq!(pool.weights(), &[dec!("1.25"), dec!("2"), dec!("0.25")]);
    let (a, b) = pool.split(&ids(&["s"])).unwrap();
    assert_eq!((a.reserves(), a.weights()), (&[dec!("50")][..], &[dec!("1.25")][..]));
    assert_eq!(b.reserves(), &[dec!("16"), dec!("5")]);
    assert_eq!(b.weights(), &[dec!("2"), dec!("0.25")]);
}
