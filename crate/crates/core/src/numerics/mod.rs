//! Arbitrary-precision decimal arithmetic.
//!
//! [`Dec`] stores `mantissa * 10^exponent` with an unbounded integer mantissa.
//! Addition and subtraction are exact. Multiplication and division round to
//! the thread's working precision (significant digits, 50 by default) unless
//! one of the explicit `*_round` / `*_exact` variants is used.

mod transcendental;

use std::cell::{Cell, RefCell};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use transcendental::{geo_mean, pow_d, pow_with};

/// Working precision used when none is configured.
pub const DEFAULT_PRECISION: u32 = 50;

thread_local! {
    static PRECISION: Cell<u32> = const { Cell::new(DEFAULT_PRECISION) };
    static POW10: RefCell<Vec<BigUint>> = RefCell::new(vec![BigUint::one()]);
}

/// Current working precision in significant digits.
pub fn precision() -> u32 {
    PRECISION.with(Cell::get)
}

/// Runs `f` with the working precision temporarily set to `digits`.
pub fn with_precision<R>(digits: u32, f: impl FnOnce() -> R) -> R {
    assert!(digits >= 10, "working precision below 10 digits is not supported");
    let prev = PRECISION.with(|p| p.replace(digits));
    struct Restore(u32);
    impl Drop for Restore {
        fn drop(&mut self) {
            PRECISION.with(|p| p.set(self.0));
        }
    }
    let _restore = Restore(prev);
    f()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericError {
    #[error("{op}: argument out of domain ({detail})")]
    Domain { op: &'static str, detail: String },
    #[error("{0}: result magnitude not representable")]
    Overflow(&'static str),
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid decimal literal {0:?}")]
    Parse(String),
}

/// Rounding direction applied when a result has more digits than requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rounding {
    /// Round to nearest, ties to even.
    HalfEven,
    /// Toward zero.
    Down,
    /// Away from zero.
    Up,
    /// Toward negative infinity.
    Floor,
    /// Toward positive infinity.
    Ceiling,
}

pub(crate) fn pow10_uint(n: u32) -> BigUint {
    POW10.with(|cache| {
        let mut cache = cache.borrow_mut();
        while cache.len() <= n as usize {
            let next = cache.last().unwrap() * 10u32;
            cache.push(next);
        }
        cache[n as usize].clone()
    })
}

pub(crate) fn pow10(n: u32) -> BigInt {
    BigInt::from(pow10_uint(n))
}

/// Number of decimal digits of `|n|` (zero has one digit).
pub(crate) fn num_digits(n: &BigInt) -> u32 {
    let mag = n.magnitude();
    if mag.is_zero() {
        return 1;
    }
    let bits = mag.bits();
    let est = (((bits - 1) as f64) * std::f64::consts::LOG10_2).floor() as u32 + 1;
    if *mag >= pow10_uint(est) {
        est + 1
    } else {
        est
    }
}

/// Exact decimal number `mantissa * 10^exponent`, kept in normalized form
/// (no trailing zeros in the mantissa, zero stored as `0 * 10^0`).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dec {
    mant: BigInt,
    exp: i64,
}

impl Dec {
    pub fn zero() -> Self {
        Dec { mant: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        Dec { mant: BigInt::one(), exp: 0 }
    }

    /// `mantissa * 10^exponent`.
    pub fn from_parts(mantissa: impl Into<BigInt>, exponent: i64) -> Self {
        Self::normalized(mantissa.into(), exponent)
    }

    /// `10^exponent`.
    pub fn pow10(exponent: i64) -> Self {
        Dec { mant: BigInt::one(), exp: exponent }
    }

    fn normalized(mut mant: BigInt, mut exp: i64) -> Self {
        if mant.is_zero() {
            return Self::zero();
        }
        let ten = BigInt::from(10u32);
        loop {
            let (q, r) = mant.div_rem(&ten);
            if !r.is_zero() {
                break;
            }
            mant = q;
            exp += 1;
        }
        Dec { mant, exp }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.mant.sign() == Sign::Plus
    }

    pub fn is_negative(&self) -> bool {
        self.mant.sign() == Sign::Minus
    }

    pub fn abs(&self) -> Self {
        Dec { mant: self.mant.abs(), exp: self.exp }
    }

    /// Number of significant digits in the normalized mantissa.
    pub fn digits(&self) -> u32 {
        num_digits(&self.mant)
    }

    /// Decimal exponent of the leading digit: `floor(log10(|x|))` for x ≠ 0.
    pub fn magnitude(&self) -> i64 {
        if self.is_zero() {
            return 0;
        }
        self.exp + self.digits() as i64 - 1
    }

    /// True when the value is an integer.
    pub fn is_integer(&self) -> bool {
        self.exp >= 0
    }

    pub fn to_i64(&self) -> Option<i64> {
        if !self.is_integer() || self.exp > 18 {
            return None;
        }
        (&self.mant * pow10(self.exp as u32)).to_i64()
    }

    /// Nearest `f64`, for diagnostics and initial guesses only.
    pub fn to_f64(&self) -> f64 {
        format!("{}e{}", self.mant, self.exp).parse().unwrap_or(f64::NAN)
    }

    fn aligned(&self, other: &Dec) -> (BigInt, BigInt, i64) {
        let exp = self.exp.min(other.exp);
        let a = &self.mant * pow10((self.exp - exp) as u32);
        let b = &other.mant * pow10((other.exp - exp) as u32);
        (a, b, exp)
    }

    /// Exact product.
    pub fn mul_exact(&self, other: &Dec) -> Dec {
        Self::normalized(&self.mant * &other.mant, self.exp + other.exp)
    }

    /// Product rounded to `prec` significant digits.
    pub fn mul_round(&self, other: &Dec, prec: u32, mode: Rounding) -> Dec {
        round_parts(&self.mant * &other.mant, self.exp + other.exp, prec, mode, false)
    }

    /// Quotient rounded to `prec` significant digits.
    pub fn div_round(&self, other: &Dec, prec: u32, mode: Rounding) -> Result<Dec, NumericError> {
        if other.is_zero() {
            return Err(NumericError::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(Dec::zero());
        }
        let da = num_digits(&self.mant) as i64;
        let db = num_digits(&other.mant) as i64;
        let shift = (prec as i64 + 2 + db - da).max(0);
        let num = &self.mant * pow10(shift as u32);
        let (q, r) = num.div_rem(&other.mant);
        Ok(round_parts(q, self.exp - other.exp - shift, prec, mode, !r.is_zero()))
    }

    /// Quotient at working precision, or `None` for a zero divisor.
    pub fn checked_div(&self, other: &Dec) -> Option<Dec> {
        self.div_round(other, precision(), Rounding::HalfEven).ok()
    }

    /// Rounds to `prec` significant digits.
    pub fn round(&self, prec: u32, mode: Rounding) -> Dec {
        round_parts(self.mant.clone(), self.exp, prec, mode, false)
    }

    /// Rounds to `places` digits after the decimal point.
    pub fn round_dp(&self, places: u32, mode: Rounding) -> Dec {
        round_at(self.mant.clone(), self.exp, -(places as i64), mode, false)
    }

    /// Absolute difference divided by the larger magnitude (0 when both are zero).
    pub fn rel_diff(&self, other: &Dec) -> Dec {
        let diff = (self - other).abs();
        if diff.is_zero() {
            return Dec::zero();
        }
        let scale = std::cmp::max(self.abs(), other.abs());
        diff.div_round(&scale, 20, Rounding::Up).expect("nonzero scale")
    }

    /// `|self - other| <= tol * max(|self|, |other|)`.
    pub fn approx_eq_rel(&self, other: &Dec, tol: &Dec) -> bool {
        self.rel_diff(other) <= *tol
    }

    /// `|self - other| <= tol`.
    pub fn approx_eq_abs(&self, other: &Dec, tol: &Dec) -> bool {
        (self - other).abs() <= *tol
    }

    /// Natural logarithm at working precision.
    pub fn ln(&self) -> Result<Dec, NumericError> {
        transcendental::ln_dec(self, precision())
    }

    /// Natural logarithm rounded to `prec` digits.
    pub fn ln_prec(&self, prec: u32) -> Result<Dec, NumericError> {
        transcendental::ln_dec(self, prec)
    }

    /// `e^self` at working precision.
    pub fn exp(&self) -> Result<Dec, NumericError> {
        transcendental::exp_dec(self, precision())
    }

    pub fn exp_prec(&self, prec: u32) -> Result<Dec, NumericError> {
        transcendental::exp_dec(self, prec)
    }

    /// Short human-readable form with at most `places` decimals.
    pub fn display_dp(&self, places: u32) -> String {
        self.round_dp(places, Rounding::HalfEven).to_string()
    }
}

/// Rounds `mant * 10^exp` to `prec` significant digits. `sticky` marks that the
/// true value carries a nonzero tail beyond `mant` (same sign as `mant`).
pub(crate) fn round_parts(mant: BigInt, exp: i64, prec: u32, mode: Rounding, sticky: bool) -> Dec {
    if mant.is_zero() {
        return Dec::zero();
    }
    let leading = exp + num_digits(&mant) as i64 - 1;
    round_at(mant, exp, leading - prec as i64 + 1, mode, sticky)
}

/// Rounds `mant * 10^exp` onto the grid of multiples of `10^target`.
fn round_at(mant: BigInt, exp: i64, target: i64, mode: Rounding, sticky: bool) -> Dec {
    if mant.is_zero() {
        return Dec::zero();
    }
    let negative = mant.is_negative();
    let (q, inexact, half_cmp) = if exp >= target {
        if !sticky {
            return Dec::normalized(mant, exp);
        }
        // Exact on the grid apart from a tail strictly below half a unit.
        let q = mant.magnitude() * pow10_uint((exp - target) as u32);
        (q, true, Ordering::Less)
    } else {
        let drop = (target - exp) as u64;
        let digits = num_digits(&mant) as u64;
        if drop > digits + 1 {
            // Everything sits far below the grid.
            (BigUint::zero(), true, Ordering::Less)
        } else {
            let unit = pow10_uint(drop as u32);
            let (q, r) = mant.magnitude().div_rem(&unit);
            let half_cmp = match (&r * 2u32).cmp(&unit) {
                Ordering::Equal if sticky => Ordering::Greater,
                other => other,
            };
            (q, sticky || !r.is_zero(), half_cmp)
        }
    };
    let bump = match mode {
        Rounding::Down => false,
        Rounding::Up => inexact,
        Rounding::Floor => negative && inexact,
        Rounding::Ceiling => !negative && inexact,
        Rounding::HalfEven => match half_cmp {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => q.is_odd(),
        },
    };
    let q = if bump { q + 1u32 } else { q };
    let signed = BigInt::from_biguint(if negative { Sign::Minus } else { Sign::Plus }, q);
    Dec::normalized(signed, target)
}

impl Default for Dec {
    fn default() -> Self {
        Dec::zero()
    }
}

impl Ord for Dec {
    fn cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.mant.sign(), other.mant.sign());
        if sa != sb {
            return sa.cmp(&sb);
        }
        if self.exp == other.exp {
            return self.mant.cmp(&other.mant);
        }
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add<&Dec> for &Dec {
    type Output = Dec;
    fn add(self, rhs: &Dec) -> Dec {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.clone();
        }
        let (a, b, exp) = self.aligned(rhs);
        Dec::normalized(a + b, exp)
    }
}

impl Sub<&Dec> for &Dec {
    type Output = Dec;
    fn sub(self, rhs: &Dec) -> Dec {
        if rhs.is_zero() {
            return self.clone();
        }
        let (a, b, exp) = self.aligned(rhs);
        Dec::normalized(a - b, exp)
    }
}

impl Mul<&Dec> for &Dec {
    type Output = Dec;
    fn mul(self, rhs: &Dec) -> Dec {
        self.mul_round(rhs, precision(), Rounding::HalfEven)
    }
}

impl Div<&Dec> for &Dec {
    type Output = Dec;
    /// Panics on a zero divisor, like integer division.
    fn div(self, rhs: &Dec) -> Dec {
        self.div_round(rhs, precision(), Rounding::HalfEven).expect("division by zero")
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr<Dec> for Dec {
            type Output = Dec;
            fn $method(self, rhs: Dec) -> Dec {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Dec> for Dec {
            type Output = Dec;
            fn $method(self, rhs: &Dec) -> Dec {
                (&self).$method(rhs)
            }
        }
        impl $tr<Dec> for &Dec {
            type Output = Dec;
            fn $method(self, rhs: Dec) -> Dec {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl AddAssign<&Dec> for Dec {
    fn add_assign(&mut self, rhs: &Dec) {
        *self = &*self + rhs;
    }
}

impl AddAssign<Dec> for Dec {
    fn add_assign(&mut self, rhs: Dec) {
        *self = &*self + &rhs;
    }
}

impl SubAssign<&Dec> for Dec {
    fn sub_assign(&mut self, rhs: &Dec) {
        *self = &*self - rhs;
    }
}

impl SubAssign<Dec> for Dec {
    fn sub_assign(&mut self, rhs: Dec) {
        *self = &*self - &rhs;
    }
}

impl Neg for Dec {
    type Output = Dec;
    fn neg(self) -> Dec {
        Dec { mant: -self.mant, exp: self.exp }
    }
}

impl Neg for &Dec {
    type Output = Dec;
    fn neg(self) -> Dec {
        Dec { mant: -&self.mant, exp: self.exp }
    }
}

impl std::iter::Sum for Dec {
    fn sum<I: Iterator<Item = Dec>>(iter: I) -> Dec {
        iter.fold(Dec::zero(), |acc, x| acc + x)
    }
}

impl<'a> std::iter::Sum<&'a Dec> for Dec {
    fn sum<I: Iterator<Item = &'a Dec>>(iter: I) -> Dec {
        iter.fold(Dec::zero(), |acc, x| acc + x)
    }
}

macro_rules! from_int {
    ($($t:ty),*) => {$(
        impl From<$t> for Dec {
            fn from(v: $t) -> Self {
                Dec::normalized(BigInt::from(v), 0)
            }
        }
    )*};
}

from_int!(i32, i64, u32, u64, usize, i128, u128);

impl FromStr for Dec {
    type Err = NumericError;

    /// Accepts `[+-]digits[.digits]` (or `.digits`); exponent notation is rejected.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || NumericError::Parse(s.to_string());
        let (negative, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if body.ends_with('.') && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let digits = format!("{int_part}{frac_part}");
        let mag: BigInt = digits.parse().map_err(|_| err())?;
        let mant = if negative { -mag } else { mag };
        Ok(Dec::normalized(mant, -(frac_part.len() as i64)))
    }
}

impl fmt::Display for Dec {
    /// Canonical plain notation: no exponent, no trailing zeros, `-` only when negative.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = self.mant.magnitude().to_string();
        let sign = if self.is_negative() { "-" } else { "" };
        let body = if self.exp >= 0 {
            let mut s = digits;
            s.extend(std::iter::repeat_n('0', self.exp as usize));
            s
        } else {
            let frac = (-self.exp) as usize;
            if digits.len() > frac {
                let (i, fr) = digits.split_at(digits.len() - frac);
                format!("{i}.{fr}")
            } else {
                format!("0.{}{}", "0".repeat(frac - digits.len()), digits)
            }
        };
        f.pad(&format!("{sign}{body}"))
    }
}

impl fmt::Debug for Dec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dec({self})")
    }
}

impl Serialize for Dec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Dec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a decimal literal, panicking on malformed input. Intended for
/// constants in examples and tests.
#[macro_export]
macro_rules! dec {
    ($s:literal) => {
        <$crate::Dec as ::std::str::FromStr>::from_str(&$s.to_string())
            .expect("valid decimal literal")
    };
}
