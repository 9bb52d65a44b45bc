//! Weighted constant-product math shared by the fixed- and dynamic-exponent pools.
//!
//! The invariant `prod r_t^w_t` itself is never materialized; only ratios and
//! logarithms of it are formed.

use crate::numerics::{pow_with, precision, Dec, NumericError, Rounding};

/// Largest integer exponent ratio answered with exact integer powers.
const EXACT_POWER_LIMIT: i64 = 8;

/// Reserve of the output token left in the pool after `eff_in` of the input
/// token enters: `r_out * (r_in / (r_in + eff_in))^(w_in / w_out)`.
///
/// Rounded up at working precision, so the amount paid out is never more than
/// the exact invariant allows.
pub fn swap_retained(
    r_in: &Dec,
    r_out: &Dec,
    w_in: &Dec,
    w_out: &Dec,
    eff_in: &Dec,
) -> Result<Dec, NumericError> {
    let prec = precision();
    let grown = r_in + eff_in;
    if w_in == w_out {
        return r_out.mul_exact(r_in).div_round(&grown, prec, Rounding::Ceiling);
    }
    if let Some(k) = integer_ratio(w_in, w_out) {
        let mut num = r_out.clone();
        let mut den = Dec::one();
        for _ in 0..k {
            num = num.mul_exact(r_in);
            den = den.mul_exact(&grown);
        }
        return num.div_round(&den, prec, Rounding::Ceiling);
    }
    let guard = prec + 15;
    // ratio < 1, so a larger ratio or a smaller exponent can only enlarge the result.
    let ratio = r_in.div_round(&grown, guard, Rounding::Ceiling)?;
    let exponent = w_in.div_round(w_out, guard, Rounding::Floor)?;
    let factor = pow_with(&ratio, &exponent, prec + 10, Rounding::Ceiling)?;
    Ok(r_out.mul_round(&factor, prec, Rounding::Ceiling))
}

fn integer_ratio(num: &Dec, den: &Dec) -> Option<i64> {
    let q = num.div_round(den, 30, Rounding::Down).ok()?;
    let k = q.to_i64()?;
    (2..=EXACT_POWER_LIMIT).contains(&k).then_some(k).filter(|_| den.mul_exact(&q) == *num)
}

/// Marginal price of token `o` in units of token `i`: `(r_i / w_i) / (r_o / w_o)`.
pub fn spot_price(r_i: &Dec, w_i: &Dec, r_o: &Dec, w_o: &Dec) -> Result<Dec, NumericError> {
    r_i.mul_exact(w_o).div_round(&w_i.mul_exact(r_o), precision(), Rounding::HalfEven)
}

/// `ln(prod r_t^w_t) = sum w_t ln r_t`, rounded to `prec` digits.
pub fn log_invariant(reserves: &[Dec], weights: &[Dec], prec: u32) -> Result<Dec, NumericError> {
    let inner = prec + 10;
    let mut total = Dec::zero();
    for (r, w) in reserves.iter().zip(weights) {
        total += w.mul_round(&r.ln_prec(inner)?, inner, Rounding::HalfEven);
    }
    Ok(total.round(prec, Rounding::HalfEven))
}
