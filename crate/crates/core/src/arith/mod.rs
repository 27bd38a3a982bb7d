//! Exact scalar arithmetic: rationals, extended naturals, scaled p-adic
//! numbers with explicit precision, and density sequences with liminf
//! estimates. Every dimension value in the workspace flows through these
//! types; floating point never appears outside of rendering helpers.

mod density;
mod extnat;
mod padic;

pub use density::{
    liminf_estimate, ratio_bound_persists, ratio_floor_persists, DensityLevel, DensitySequence,
    HdimEstimate,
};
pub use extnat::ExtNat;
pub use padic::{Precision, ScaledPAdic, Valuation};

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational, kept gcd-reduced with positive denominator
/// by construction.
pub type Rational = num_rational::BigRational;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("cannot parse rational from {0:?}")]
    Parse(String),
    #[error("prime base must be >= 2, got {0}")]
    BadPrime(u64),
    #[error("operands use different primes ({0} vs {1})")]
    MixedPrimes(u64, u64),
    #[error("precision exhausted at p = {p}: cancellation reaches the known {digits} digit(s)")]
    PrecisionExhausted { p: u64, digits: u64 },
    #[error("shift gap of {gap} digits exceeds the materialization budget of {budget}")]
    ShiftGapTooLarge { gap: String, budget: u64 },
    #[error("density level {i}: denominator does not strictly increase")]
    DenominatorNotIncreasing { i: u64 },
    #[error("density level {i}: numerator exceeds denominator")]
    NumeratorTooLarge { i: u64 },
    #[error("density levels out of order at index {i}")]
    LevelsOutOfOrder { i: u64 },
    #[error("no density levels at or beyond tail start {0}")]
    EmptyTail(u64),
    #[error("estimate value {0} is outside [0, 1]")]
    EstimateOutOfRange(String),
}

/// `num/den` as a reduced rational. Panics on `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Integer as a rational.
pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Ratio of two naturals. Panics on `den == 0`.
pub fn rat_nat(num: &BigUint, den: &BigUint) -> Rational {
    Rational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

/// Parses `"n"`, `"n/d"`, with optional leading `-`.
pub fn parse_rational(s: &str) -> Result<Rational, ArithError> {
    let bad = || ArithError::Parse(s.to_string());
    let t = s.trim();
    match t.split_once('/') {
        None => t.parse::<BigInt>().map(Rational::from_integer).map_err(|_| bad()),
        Some((n, d)) => {
            let n = n.trim().parse::<BigInt>().map_err(|_| bad())?;
            let d = d.trim().parse::<BigInt>().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
    }
}

/// Largest integer `<= r`.
pub fn floor_rational(r: &Rational) -> BigInt {
    r.floor().to_integer()
}

/// Smallest integer `>= r`.
pub fn ceil_rational(r: &Rational) -> BigInt {
    r.ceil().to_integer()
}

/// Renders `r` with exactly `digits` decimal places, truncated toward zero.
/// Truncation (rather than rounding) keeps the rendering exact-prefix stable:
/// extending `digits` never changes earlier characters.
pub fn decimal_string(r: &Rational, digits: usize) -> String {
    let sign = if r.is_negative() { "-" } else { "" };
    let num = r.numer().abs().to_biguint().expect("abs");
    let den = r.denom().to_biguint().expect("positive denominator");
    let int = &num / &den;
    let mut rem = &num % &den;
    let mut frac = String::with_capacity(digits);
    let ten = BigUint::from(10u32);
    for _ in 0..digits {
        rem *= &ten;
        let d = &rem / &den;
        rem %= &den;
        frac.push(char::from(b'0' + d.to_u8().expect("single digit")));
    }
    if digits == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// p-adic valuation of a nonzero big integer by repeated division.
pub fn vp_int(p: u64, n: &BigInt) -> Option<BigUint> {
    if n.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut v = BigUint::zero();
    let mut m = n.abs();
    loop {
        let (q, r) = num_integer::Integer::div_rem(&m, &p);
        if !r.is_zero() {
            return Some(v);
        }
        m = q;
        v += 1u32;
    }
}

/// Deterministic trial-division primality check; every prime entering a
/// filtration or oracle is small enough for this to be instant.
pub fn is_prime_u64(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p % 2 == 0 {
        return p == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_reduce() {
        assert_eq!(parse_rational("2/5").unwrap(), rat(2, 5));
        assert_eq!(parse_rational("-6/4").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational("7").unwrap(), rat_int(7));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn reduced_with_positive_denominator() {
        let r = Rational::new(BigInt::from(4), BigInt::from(-6));
        assert_eq!(r.numer(), &BigInt::from(-2));
        assert_eq!(r.denom(), &BigInt::from(3));
    }

    #[test]
    fn ceil_floor() {
        // The gap-exponent evaluation 9 - 24/5 - 1 = 16/5 must ceil to 4.
        let x = rat_int(9) - rat(24, 5) - rat_int(1);
        assert_eq!(x, rat(16, 5));
        assert_eq!(ceil_rational(&x), BigInt::from(4));
        assert_eq!(floor_rational(&x), BigInt::from(3));
        assert_eq!(ceil_rational(&rat_int(4)), BigInt::from(4));
        assert_eq!(ceil_rational(&rat(-7, 2)), BigInt::from(-3));
        assert_eq!(floor_rational(&rat(-7, 2)), BigInt::from(-4));
    }

    #[test]
    fn twenty_digit_rendering_truncates() {
        assert_eq!(decimal_string(&rat(5, 12), 20), "0.41666666666666666666");
        assert_eq!(decimal_string(&rat(1, 2), 4), "0.5000");
        assert_eq!(decimal_string(&rat(-1, 3), 5), "-0.33333");
        assert_eq!(decimal_string(&rat_int(3), 0), "3");
    }

    #[test]
    fn integer_valuation() {
        assert_eq!(vp_int(2, &BigInt::from(12)), Some(BigUint::from(2u32)));
        assert_eq!(vp_int(3, &BigInt::from(-81)), Some(BigUint::from(4u32)));
        assert_eq!(vp_int(5, &BigInt::from(7)), Some(BigUint::zero()));
        assert_eq!(vp_int(3, &BigInt::zero()), None);
    }

    #[test]
    fn primality_probe() {
        assert!(is_prime_u64(2));
        assert!(is_prime_u64(3));
        assert!(is_prime_u64(97));
        assert!(!is_prime_u64(1));
        assert!(!is_prime_u64(91));
    }
}
