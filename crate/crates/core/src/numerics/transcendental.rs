//! Logarithm, exponential and fractional powers.
//!
//! Kernels run on fixed-point integers `N` standing for `N / 10^g`. Results are
//! computed with guard digits and rounded once at the end.

use std::cell::RefCell;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use super::{num_digits, pow10, precision, round_parts, Dec, NumericError, Rounding};

/// Halvings applied before the exp Taylor series.
const EXP_HALVINGS: u32 = 20;

thread_local! {
    static LN10: RefCell<HashMap<u32, BigInt>> = RefCell::new(HashMap::new());
}

fn div_nearest(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_mod_floor(b);
    if (&r * 2u32) >= b.abs() {
        q + 1
    } else {
        q
    }
}

/// `exp(x / 10^g) * 10^g` for `|x / 10^g|` up to a few units.
fn exp_fixed(x: &BigInt, g: u32) -> BigInt {
    let extra = 12;
    let g2 = g + extra;
    let scale = pow10(g2);
    let reduced = (x * pow10(extra)) >> EXP_HALVINGS;

    let mut sum = scale.clone();
    let mut term = scale.clone();
    let mut n = 1u32;
    loop {
        term = (&term * &reduced) / (&scale * n);
        if term.is_zero() {
            break;
        }
        sum += &term;
        n += 1;
    }
    for _ in 0..EXP_HALVINGS {
        sum = (&sum * &sum) / &scale;
    }
    div_nearest(&sum, &pow10(extra))
}

/// Initial guess for `ln(y / 10^g)` from hardware floats, as fixed point at `g`.
fn ln_guess(y: &BigInt, g: u32) -> BigInt {
    let lead = if g > 17 { y / pow10(g - 17) } else { y * pow10(17 - g) };
    let yf = lead.to_f64().unwrap_or(1e17) / 1e17;
    let guess = (yf.ln() * 1e17).round() as i64;
    if g > 17 {
        BigInt::from(guess) * pow10(g - 17)
    } else {
        BigInt::from(guess) / pow10(17 - g)
    }
}

/// `ln(y / 10^g) * 10^g` for `y / 10^g` in `[1, 10]`, by Halley iteration on exp.
fn ln_fixed(y: &BigInt, g: u32) -> BigInt {
    let extra = 8;
    let g2 = g + extra;
    let scale = pow10(g2);
    let y2 = y * pow10(extra);
    let mut z = ln_guess(&y2, g2);
    let stop = &scale / pow10(g2 / 3 + 1);
    for _ in 0..12 {
        let e = exp_fixed(&z, g2);
        let delta = ((&y2 - &e) * 2u32 * &scale) / (&y2 + &e);
        z += &delta;
        if delta.abs() <= stop {
            let e = exp_fixed(&z, g2);
            z += ((&y2 - &e) * 2u32 * &scale) / (&y2 + &e);
            break;
        }
    }
    div_nearest(&z, &pow10(extra))
}

fn ln10_fixed(g: u32) -> BigInt {
    LN10.with(|cache| {
        if let Some(v) = cache.borrow().get(&g) {
            return v.clone();
        }
        let v = ln_fixed(&(pow10(g) * 10u32), g);
        cache.borrow_mut().insert(g, v.clone());
        v
    })
}

/// `x` as fixed point at `g` digits, truncated toward zero.
fn to_fixed(x: &Dec, g: u32) -> BigInt {
    let shift = x.exponent() + g as i64;
    if shift >= 0 {
        x.mantissa() * pow10(shift as u32)
    } else {
        x.mantissa() / pow10((-shift) as u32)
    }
}

/// Natural logarithm rounded half-even to `prec` significant digits.
pub(crate) fn ln_dec(x: &Dec, prec: u32) -> Result<Dec, NumericError> {
    if !x.is_positive() {
        return Err(NumericError::Domain { op: "ln", detail: format!("{x} <= 0") });
    }
    if *x == Dec::one() {
        return Ok(Dec::zero());
    }
    let decade = x.magnitude();
    // Near 1 the result is tiny; widen the fixed-point grid by the cancellation depth.
    let near_one = {
        let dist = (x - &Dec::one()).abs();
        if dist < Dec::pow10(-1) {
            (-dist.magnitude()) as u32
        } else {
            0
        }
    };
    let decade_digits = num_digits(&BigInt::from(decade));
    let g = prec + 12 + decade_digits + near_one;
    // y = x / 10^decade lies in [1, 10).
    let y = to_fixed(&Dec::from_parts(x.mantissa().clone(), x.exponent() - decade), g);
    let mut fixed = ln_fixed(&y, g);
    if decade != 0 {
        fixed += ln10_fixed(g) * decade;
    }
    Ok(round_parts(fixed, -(g as i64), prec, Rounding::HalfEven, false))
}

/// `e^x` rounded half-even to `prec` significant digits.
pub(crate) fn exp_dec(x: &Dec, prec: u32) -> Result<Dec, NumericError> {
    if x.is_zero() {
        return Ok(Dec::one());
    }
    let int_digits = (x.magnitude() + 1).max(0) as u32;
    if int_digits > 17 {
        return Err(NumericError::Overflow("exp"));
    }
    let g = prec + 12 + int_digits;
    let xf = to_fixed(x, g);
    let ln10 = ln10_fixed(g);
    let k = div_nearest(&xf, &ln10);
    let rem = &xf - &k * &ln10;
    let k = k.to_i64().ok_or(NumericError::Overflow("exp"))?;
    let mant = exp_fixed(&rem, g);
    Ok(round_parts(mant, k - g as i64, prec, Rounding::HalfEven, false))
}

/// `base^exponent` at the working precision, rounded half-even.
///
/// Relative error stays below `10^-(P-10)` at precision `P`; exponents 0 and 1
/// and a unit base are answered exactly.
pub fn pow_d(base: &Dec, exponent: &Dec) -> Result<Dec, NumericError> {
    pow_with(base, exponent, precision(), Rounding::HalfEven)
}

/// `base^exponent` rounded to `prec` digits. Directed modes return a bound on
/// the correct side of the true value.
pub fn pow_with(base: &Dec, exponent: &Dec, prec: u32, mode: Rounding) -> Result<Dec, NumericError> {
    if !base.is_positive() {
        return Err(NumericError::Domain { op: "pow", detail: format!("base {base} <= 0") });
    }
    if exponent.is_zero() || *base == Dec::one() {
        return Ok(Dec::one());
    }
    if *exponent == Dec::one() {
        return Ok(base.round(prec, mode));
    }
    let exp_digits = (exponent.magnitude() + 1).max(0) as u32;
    let base_digits = num_digits(&BigInt::from(base.magnitude()));
    let inner = prec + 20 + exp_digits + base_digits;
    let log = ln_dec(base, inner)?;
    let t = exponent.mul_round(&log, inner, Rounding::HalfEven);
    let approx = exp_dec(&t, prec + 6)?;
    Ok(finish_directed(approx, prec, mode))
}

/// Rounds a positive approximation accurate to about `10^-(prec+4)` relative,
/// nudging directed modes past the error band so the bound holds.
fn finish_directed(approx: Dec, prec: u32, mode: Rounding) -> Dec {
    let margin = approx.mul_round(&Dec::pow10(-(prec as i64) - 3), prec + 6, Rounding::Up);
    match mode {
        Rounding::HalfEven => approx.round(prec, Rounding::HalfEven),
        Rounding::Down | Rounding::Floor => (&approx - &margin).round(prec, Rounding::Floor),
        Rounding::Up | Rounding::Ceiling => (&approx + &margin).round(prec, Rounding::Ceiling),
    }
}

/// Geometric mean `(x_1 * ... * x_n)^(1/n)` via the mean of logarithms.
pub fn geo_mean(values: &[Dec]) -> Result<Dec, NumericError> {
    let prec = precision();
    let first = values.first().ok_or_else(|| NumericError::Domain {
        op: "geo_mean",
        detail: "empty input".into(),
    })?;
    if let Some(bad) = values.iter().find(|v| !v.is_positive()) {
        return Err(NumericError::Domain { op: "geo_mean", detail: format!("entry {bad} <= 0") });
    }
    if values.iter().all(|v| v == first) {
        return Ok(first.round(prec, Rounding::HalfEven));
    }
    let widest = values.iter().map(|v| num_digits(&BigInt::from(v.magnitude()))).max().unwrap_or(1);
    let inner = prec + 20 + widest;
    let mut total = Dec::zero();
    for v in values {
        total += ln_dec(v, inner)?;
    }
    let mean = total.div_round(&Dec::from(values.len()), inner, Rounding::HalfEven)?;
    exp_dec(&mean, prec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::with_precision;

    fn d(s: &str) -> Dec {
        s.parse().unwrap()
    }

    fn close(a: &Dec, b: &Dec, digits: i64) -> bool {
        a.rel_diff(b) <= Dec::pow10(-digits)
    }

    // Frozen with an independent 100-digit evaluation.
    const LN2: &str = "0.69314718055994530941723212145817656807550013436025525412068000949339362196969471560586332699641868754";
    const LN10: &str = "2.3025850929940456840179914546843642076011014886287729760333279009675726096773524802359972050895982983";
    const E: &str = "2.7182818284590452353602874713526624977572470936999595749669676277240766303535475945713821785251664274";

    #[test]
    fn ln_constants() {
        assert!(close(&d("2").ln().unwrap(), &d(LN2), 49));
        assert!(close(&d("10").ln().unwrap(), &d(LN10), 49));
        assert!(close(&d("0.5").ln().unwrap(), &-d(LN2), 49));
        assert_eq!(Dec::one().ln().unwrap(), Dec::zero());
    }

    #[test]
    fn exp_constants() {
        assert!(close(&Dec::one().exp().unwrap(), &d(E), 49));
        assert!(close(&d(LN10).exp().unwrap(), &d("10"), 48));
        let tiny = (-Dec::from(230)).exp().unwrap();
        assert_eq!(tiny.magnitude(), -100);
    }

    #[test]
    fn ln_near_one_keeps_relative_precision() {
        let x = &Dec::one() + &Dec::pow10(-40);
        let l = x.ln().unwrap();
        // ln(1 + h) = h - h^2/2 + ...
        let expect = &Dec::pow10(-40) - &Dec::pow10(-80).div_round(&d("2"), 60, Rounding::HalfEven).unwrap();
        assert!(close(&l, &expect, 48), "{l}");
    }

    #[test]
    fn ln_rejects_non_positive() {
        assert!(Dec::zero().ln().is_err());
        assert!(d("-3").ln().is_err());
    }

    #[test]
    fn pow_short_circuits() {
        assert_eq!(pow_d(&d("4"), &d("0.5")).unwrap(), d("2"));
        assert_eq!(pow_d(&d("1.6"), &d("1")).unwrap(), d("1.6"));
        assert_eq!(pow_d(&d("123.456"), &Dec::zero()).unwrap(), Dec::one());
        assert_eq!(pow_d(&Dec::one(), &d("17.25")).unwrap(), Dec::one());
        assert!(pow_d(&Dec::zero(), &d("2")).is_err());
        assert!(pow_d(&d("-2"), &d("2")).is_err());
    }

    #[test]
    fn directed_pow_brackets() {
        let b = d("0.909090909090909090909090909090909090909090909090909");
        let e = d("0.5");
        let lo = pow_with(&b, &e, 50, Rounding::Floor).unwrap();
        let hi = pow_with(&b, &e, 50, Rounding::Ceiling).unwrap();
        assert!(lo < hi);
        // lo^2 <= b <= hi^2 exactly
        assert!(lo.mul_exact(&lo) <= b);
        assert!(hi.mul_exact(&hi) >= b);
    }

    #[test]
    fn geo_mean_basics() {
        assert_eq!(geo_mean(&[d("7.25")]).unwrap(), d("7.25"));
        assert_eq!(geo_mean(&[d("0.1"), d("0.1")]).unwrap(), d("0.1"));
        assert!(geo_mean(&[]).is_err());
        assert!(geo_mean(&[d("1"), Dec::zero()]).is_err());
        let g = geo_mean(&[d("2"), d("8")]).unwrap();
        assert_eq!(g, d("4"));
    }

    #[test]
    fn higher_working_precision() {
        with_precision(90, || {
            let l = d("2").ln().unwrap();
            assert!(close(&l, &d(LN2), 89));
        });
    }
}
