//! Scaled p-adic numbers `u * p^s` with the unit kept coprime to `p` and the
//! exponent held symbolically. Differences of values whose exponents agree
//! cost only unit arithmetic, which keeps valuations of astronomically
//! shifted inputs (exponents themselves of big-integer size) readable in
//! constant work.

use super::{is_prime_u64, vp_int, ArithError, ExtNat};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

/// How much of a value is known: everything, or its residue modulo
/// `p^digits` (absolute precision).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Precision {
    Exact,
    Digits(u64),
}

impl Precision {
    fn meet(self, other: Precision) -> Precision {
        match (self, other) {
            (Precision::Exact, q) => q,
            (q, Precision::Exact) => q,
            (Precision::Digits(a), Precision::Digits(b)) => Precision::Digits(a.min(b)),
        }
    }
}

/// Result of reading off a valuation. A finite-precision value congruent to
/// zero modulo everything it knows can only certify a lower bound; callers
/// widen the precision and retry when `AtLeast` does not settle their
/// comparison.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Valuation {
    Known(ExtNat),
    AtLeast(u64),
}

impl Valuation {
    pub fn known(&self) -> Option<&ExtNat> {
        match self {
            Valuation::Known(v) => Some(v),
            Valuation::AtLeast(_) => None,
        }
    }

    /// Decides `valuation >= bound` if the stored information suffices.
    pub fn resolve_ge(&self, bound: &BigUint) -> Option<bool> {
        match self {
            Valuation::Known(v) => Some(*v >= ExtNat::Fin(bound.clone())),
            Valuation::AtLeast(k) => {
                if BigUint::from(*k) >= *bound {
                    Some(true)
                } else {
                    None
                }
            }
        }
    }
}

/// Widest exponent gap (in base-p digits) that a subtraction is willing to
/// bridge by materializing `p^gap`-aligned units.
pub const SHIFT_GAP_BUDGET: u64 = 1 << 20;

/// `unit * p^shift` at a stated precision. Nonzero values keep `unit`
/// coprime to `p` (and, at finite precision, canonically reduced); the zero
/// representative has `unit = 0`, `shift = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaledPAdic {
    p: u64,
    unit: BigInt,
    shift: BigUint,
    precision: Precision,
}

impl ScaledPAdic {
    /// Normalizing constructor for exact values: factors all powers of `p`
    /// out of `unit` into the shift.
    pub fn new(p: u64, unit: BigInt, shift: BigUint) -> Result<Self, ArithError> {
        Self::with_precision(p, unit, shift, Precision::Exact)
    }

    /// Normalizing constructor at a stated precision. A finite-precision
    /// value whose representative vanishes modulo `p^digits` normalizes to
    /// the zero-at-precision element.
    pub fn with_precision(
        p: u64,
        unit: BigInt,
        shift: BigUint,
        precision: Precision,
    ) -> Result<Self, ArithError> {
        if !is_prime_u64(p) {
            return Err(ArithError::BadPrime(p));
        }
        let mut value = ScaledPAdic { p, unit, shift, precision };
        value.normalize();
        Ok(value)
    }

    /// Exact integer, normalized.
    pub fn exact_integer(p: u64, n: impl Into<BigInt>) -> Result<Self, ArithError> {
        Self::new(p, n.into(), BigUint::zero())
    }

    /// An integer known only modulo `p^digits`.
    pub fn reduced_integer(p: u64, n: impl Into<BigInt>, digits: u64) -> Result<Self, ArithError> {
        Self::with_precision(p, n.into(), BigUint::zero(), Precision::Digits(digits))
    }

    pub fn zero(p: u64) -> Result<Self, ArithError> {
        Self::exact_integer(p, 0)
    }

    pub fn one(p: u64) -> Result<Self, ArithError> {
        Self::exact_integer(p, 1)
    }

    /// `p^shift` as an exact value.
    pub fn p_power(p: u64, shift: BigUint) -> Result<Self, ArithError> {
        Self::new(p, BigInt::from(1), shift)
    }

    fn extract_unit_valuation(&mut self) {
        if self.unit.is_zero() {
            return;
        }
        if let Some(v) = vp_int(self.p, &self.unit) {
            if !v.is_zero() {
                let d = BigInt::from(self.p).pow(v.to_u32().expect("unit valuation fits u32"));
                self.unit = &self.unit / d;
                self.shift += v;
            }
        }
    }

    fn normalize(&mut self) {
        self.extract_unit_valuation();
        match self.precision {
            Precision::Exact => {
                if self.unit.is_zero() {
                    self.shift = BigUint::zero();
                }
            }
            Precision::Digits(k) => {
                let k_big = BigUint::from(k);
                if self.unit.is_zero() || self.shift >= k_big {
                    self.unit = BigInt::zero();
                    self.shift = BigUint::zero();
                    return;
                }
                // Canonical representative: unit reduced to the least
                // nonnegative residue modulo the digits still known past the
                // shift. Coprimality to p survives reduction modulo p^m, m >= 1.
                let m = (&k_big - &self.shift).to_u32().expect("digit span fits u32");
                let modulus = BigInt::from(self.p).pow(m);
                self.unit = self.unit.mod_floor(&modulus);
            }
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn unit(&self) -> &BigInt {
        &self.unit
    }

    pub fn shift(&self) -> &BigUint {
        &self.shift
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// True for exact zero and for zero-at-precision.
    pub fn is_zero_repr(&self) -> bool {
        self.unit.is_zero()
    }

    /// `shift + vp(unit)`; +∞ for exact zero; a lower-bound marker for a
    /// finite-precision value that vanishes modulo everything it knows.
    pub fn vp(&self) -> Valuation {
        if self.unit.is_zero() {
            match self.precision {
                Precision::Exact => Valuation::Known(ExtNat::Inf),
                Precision::Digits(k) => Valuation::AtLeast(k),
            }
        } else {
            Valuation::Known(ExtNat::Fin(self.shift.clone()))
        }
    }

    /// Multiplies by `p^e`. Absolute precision translates along with the
    /// shift: a value known modulo `p^k` times `p^e` is known modulo `p^{k+e}`.
    pub fn shifted(&self, e: &BigUint) -> Self {
        let mut out = self.clone();
        if let Precision::Digits(k) = out.precision {
            let total = BigUint::from(k) + e;
            out.precision = Precision::Digits(total.to_u64().unwrap_or(u64::MAX));
        }
        if !out.unit.is_zero() {
            out.shift += e;
        }
        out.normalize();
        out
    }

    /// Exact difference `self - other`, renormalized to scaled-unit form.
    /// The result's precision is the meet of the operands'. Cancellation
    /// between two *resolved* (nonzero-representative) values that reaches
    /// the known digits of a finite-precision result destroys all valuation
    /// information and is reported as an error; differences that merely
    /// carry an operand's existing zero-at-precision forward are not.
    pub fn sub_valued(&self, other: &Self) -> Result<Self, ArithError> {
        if self.p != other.p {
            return Err(ArithError::MixedPrimes(self.p, other.p));
        }
        let precision = self.precision.meet(other.precision);
        if self.unit.is_zero() || other.unit.is_zero() {
            let (unit, shift) = if self.unit.is_zero() {
                (-other.unit.clone(), other.shift.clone())
            } else {
                (self.unit.clone(), self.shift.clone())
            };
            let mut out = ScaledPAdic { p: self.p, unit, shift, precision };
            out.normalize();
            return Ok(out);
        }
        let smin = self.shift.clone().min(other.shift.clone());
        let d1 = &self.shift - &smin;
        let d2 = &other.shift - &smin;
        let gap = d1.clone().max(d2.clone());
        if gap > BigUint::from(SHIFT_GAP_BUDGET) {
            return Err(ArithError::ShiftGapTooLarge {
                gap: gap.to_string(),
                budget: SHIFT_GAP_BUDGET,
            });
        }
        let p = BigInt::from(self.p);
        let lift = |u: &BigInt, d: &BigUint| -> BigInt {
            if d.is_zero() {
                u.clone()
            } else {
                u * p.pow(d.to_u32().expect("gap within budget"))
            }
        };
        let diff = lift(&self.unit, &d1) - lift(&other.unit, &d2);
        let mut out = ScaledPAdic { p: self.p, unit: diff, shift: smin, precision };
        out.normalize();
        if out.unit.is_zero() {
            match precision {
                Precision::Exact => Ok(out), // exact zero: genuine equality
                Precision::Digits(k) => Err(ArithError::PrecisionExhausted { p: self.p, digits: k }),
            }
        } else {
            Ok(out)
        }
    }

    /// Product; units stay coprime to `p`, shifts add. Absolute precision of
    /// the product: min over cross terms, saturating at `u64::MAX` digits.
    pub fn mul(&self, other: &Self) -> Result<Self, ArithError> {
        if self.p != other.p {
            return Err(ArithError::MixedPrimes(self.p, other.p));
        }
        let cross = |k: u64, s: &BigUint| -> Precision {
            let total = BigUint::from(k) + s;
            Precision::Digits(total.to_u64().unwrap_or(u64::MAX))
        };
        let precision = match (self.precision, other.precision) {
            (Precision::Exact, Precision::Exact) => Precision::Exact,
            (Precision::Digits(k), Precision::Exact) => cross(k, &other.shift),
            (Precision::Exact, Precision::Digits(k)) => cross(k, &self.shift),
            (Precision::Digits(a), Precision::Digits(b)) => {
                cross(a, &other.shift).meet(cross(b, &self.shift))
            }
        };
        let mut out = if self.unit.is_zero() || other.unit.is_zero() {
            ScaledPAdic { p: self.p, unit: BigInt::zero(), shift: BigUint::zero(), precision }
        } else {
            ScaledPAdic {
                p: self.p,
                unit: &self.unit * &other.unit,
                shift: &self.shift + &other.shift,
                precision,
            }
        };
        out.normalize();
        Ok(out)
    }

    /// Additive inverse.
    pub fn neg(&self) -> Self {
        let mut out = ScaledPAdic {
            p: self.p,
            unit: -self.unit.clone(),
            shift: self.shift.clone(),
            precision: self.precision,
        };
        out.normalize();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn sp(p: u64, n: i64) -> ScaledPAdic {
        ScaledPAdic::exact_integer(p, n).unwrap()
    }

    fn fin(n: u64) -> Valuation {
        Valuation::Known(ExtNat::from(n))
    }

    #[test]
    fn constructor_normalizes() {
        let x = sp(2, 12);
        assert_eq!(x.unit(), &BigInt::from(3));
        assert_eq!(x.shift(), &BigUint::from(2u32));
        assert_eq!(x.vp(), fin(2));
    }

    #[test]
    fn valuation_of_zero_is_infinite() {
        assert_eq!(sp(3, 0).vp(), Valuation::Known(ExtNat::Inf));
    }

    #[test]
    fn valuation_at_finite_precision_is_a_lower_bound() {
        let z = ScaledPAdic::reduced_integer(3, 0, 5).unwrap();
        assert_eq!(z.vp(), Valuation::AtLeast(5));
        assert_eq!(z.vp().resolve_ge(&BigUint::from(4u32)), Some(true));
        assert_eq!(z.vp().resolve_ge(&BigUint::from(6u32)), None);
        // 81 normalizes to 3^4, visible within 5 known digits.
        let x = ScaledPAdic::reduced_integer(3, 81, 5).unwrap();
        assert_eq!(x.vp(), fin(4));
        // 243 = 3^5 vanishes modulo 3^5.
        let y = ScaledPAdic::reduced_integer(3, 243, 5).unwrap();
        assert_eq!(y.vp(), Valuation::AtLeast(5));
    }

    #[test]
    fn finite_precision_units_are_canonical() {
        // -1 mod 3^4 and 80 mod 3^4 are the same stored value.
        let a = ScaledPAdic::reduced_integer(3, -1, 4).unwrap();
        let b = ScaledPAdic::reduced_integer(3, 80, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.unit(), &BigInt::from(80));
    }

    // Independent oracle: valuation of a difference of plain big integers,
    // by explicit subtraction and trial division.
    fn oracle_vp_of_difference(p: u64, x: &BigInt, y: &BigInt) -> Option<BigUint> {
        vp_int(p, &(x - y))
    }

    #[test]
    fn subtraction_matches_big_integer_oracle() {
        // Frozen spot value: v_3(1*3^5 - 82*3^5) = 5 + v_3(-81) = 9.
        let a = BigUint::from(5u32);
        let x = ScaledPAdic::exact_integer(3, 1).unwrap().shifted(&a);
        let y = ScaledPAdic::exact_integer(3, 82).unwrap().shifted(&a);
        let d = x.sub_valued(&y).unwrap();
        assert_eq!(d.vp(), fin(9));
        let pa = BigInt::from(3).pow(5);
        assert_eq!(
            oracle_vp_of_difference(3, &pa.clone(), &(BigInt::from(82) * &pa)),
            Some(BigUint::from(9u32))
        );

        // Sweep: i, l < 10^4, exponent a <= 20, across primes. Deterministic
        // pseudorandom samples; the oracle recomputes each value from plain
        // integers.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for p in [2u64, 3, 5] {
            for _ in 0..200 {
                let i = (next() % 10_000) as i64;
                let l = (next() % 10_000) as i64;
                let a = next() % 21;
                let xa = ScaledPAdic::exact_integer(p, i).unwrap().shifted(&BigUint::from(a));
                let ya = ScaledPAdic::exact_integer(p, l).unwrap().shifted(&BigUint::from(a));
                let got = xa.sub_valued(&ya).unwrap().vp();
                let pa = BigInt::from(p).pow(a as u32);
                let want =
                    oracle_vp_of_difference(p, &(BigInt::from(i) * &pa), &(BigInt::from(l) * &pa));
                match want {
                    None => assert_eq!(got, Valuation::Known(ExtNat::Inf)),
                    Some(v) => assert_eq!(got, Valuation::Known(ExtNat::Fin(v))),
                }
            }
        }
    }

    #[test]
    fn subtraction_with_symbolic_exponents_stays_cheap() {
        // Exponents near 3^82 never materialize: equal shifts subtract units.
        let giant = BigUint::from(3u32).pow(82);
        let x = ScaledPAdic::new(3, BigInt::from(5), giant.clone()).unwrap();
        let y = ScaledPAdic::new(3, BigInt::from(2), giant.clone()).unwrap();
        let d = x.sub_valued(&y).unwrap();
        assert_eq!(d.vp(), Valuation::Known(ExtNat::Fin(giant + BigUint::one())));
    }

    #[test]
    fn oversized_shift_gap_is_refused() {
        let x = ScaledPAdic::p_power(3, BigUint::from(3u32).pow(82)).unwrap();
        let y = ScaledPAdic::one(3).unwrap();
        match x.sub_valued(&y) {
            Err(ArithError::ShiftGapTooLarge { .. }) => {}
            other => panic!("expected shift-gap refusal, got {other:?}"),
        }
    }

    #[test]
    fn cancellation_beyond_precision_signals() {
        let x = ScaledPAdic::reduced_integer(3, 5, 4).unwrap();
        let y = ScaledPAdic::reduced_integer(3, 5 + 81, 4).unwrap();
        match x.sub_valued(&y) {
            Err(ArithError::PrecisionExhausted { p: 3, digits: 4 }) => {}
            other => panic!("expected precision exhaustion, got {other:?}"),
        }
        // The same difference at exact precision is a genuine -81.
        let xe = sp(3, 5);
        let ye = sp(3, 86);
        assert_eq!(xe.sub_valued(&ye).unwrap().vp(), fin(4));
    }

    #[test]
    fn exact_cancellation_is_zero_not_an_error() {
        let x = sp(3, 86);
        let d = x.sub_valued(&x).unwrap();
        assert!(d.is_zero_repr());
        assert_eq!(d.vp(), Valuation::Known(ExtNat::Inf));
    }

    #[test]
    fn shifting_translates_absolute_precision() {
        // 1 + O(3^2) times 3^5 is 3^5 + O(3^7): valuation 5 is known exactly.
        let lam = ScaledPAdic::reduced_integer(3, 1, 2).unwrap();
        let shifted = lam.shifted(&BigUint::from(5u32));
        assert_eq!(shifted.precision(), Precision::Digits(7));
        assert_eq!(shifted.vp(), fin(5));
        // A zero-at-precision marker deepens the same way.
        let z = ScaledPAdic::reduced_integer(3, 0, 2).unwrap();
        assert_eq!(z.shifted(&BigUint::from(5u32)).vp(), Valuation::AtLeast(7));
    }

    #[test]
    fn subtracting_an_unresolved_zero_carries_the_marker() {
        let z = ScaledPAdic::reduced_integer(3, 0, 4).unwrap();
        let x = sp(3, 7);
        let d = x.sub_valued(&z).unwrap();
        assert_eq!(d.vp(), fin(0));
        let d2 = z.sub_valued(&z).unwrap();
        assert_eq!(d2.vp(), Valuation::AtLeast(4));
    }

    #[test]
    fn products_add_shifts_and_keep_units_coprime() {
        let x = sp(3, 6); // 2 * 3
        let y = sp(3, 15); // 5 * 3
        let z = x.mul(&y).unwrap();
        assert_eq!(z.unit(), &BigInt::from(10));
        assert_eq!(z.shift(), &BigUint::from(2u32));
        assert_eq!(sp(3, 7).mul(&sp(3, 0)).unwrap().vp(), Valuation::Known(ExtNat::Inf));
    }

    #[test]
    fn mixed_primes_are_rejected() {
        assert!(matches!(sp(2, 1).sub_valued(&sp(3, 1)), Err(ArithError::MixedPrimes(2, 3))));
        assert!(matches!(ScaledPAdic::exact_integer(4, 1), Err(ArithError::BadPrime(4))));
    }
}
