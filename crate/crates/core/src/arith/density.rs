//! Density sequences `(i, num_i, den_i)` standing for
//! `log_p|H G_i : G_i| / log_p|G : G_i|`, and finite-window liminf
//! estimates over them. The quotient convention is `0/0 = 1` (the trivial
//! index in the trivial quotient); `num <= den` rules out `y/0` for `y > 0`.

use super::{rat_nat, ArithError, Rational};
use num_bigint::BigUint;
use num_traits::{One, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityLevel {
    pub i: u64,
    pub num: BigUint,
    pub den: BigUint,
}

impl DensityLevel {
    pub fn new(i: u64, num: impl Into<BigUint>, den: impl Into<BigUint>) -> Self {
        DensityLevel { i, num: num.into(), den: den.into() }
    }

    /// `num/den` with the `0/0 = 1` convention.
    pub fn ratio(&self) -> Rational {
        if self.den.is_zero() {
            Rational::one()
        } else {
            rat_nat(&self.num, &self.den)
        }
    }
}

/// Ordered window of density values along a filtration. Denominators grow
/// strictly (the filtration is strictly descending); numerators never exceed
/// denominators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensitySequence {
    p: u64,
    levels: Vec<DensityLevel>,
}

impl DensitySequence {
    pub fn new(p: u64, levels: Vec<DensityLevel>) -> Result<Self, ArithError> {
        for w in levels.windows(2) {
            if w[1].i <= w[0].i {
                return Err(ArithError::LevelsOutOfOrder { i: w[1].i });
            }
            if w[1].den <= w[0].den {
                return Err(ArithError::DenominatorNotIncreasing { i: w[1].i });
            }
        }
        for l in &levels {
            if l.num > l.den {
                return Err(ArithError::NumeratorTooLarge { i: l.i });
            }
        }
        Ok(DensitySequence { p, levels })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn levels(&self) -> &[DensityLevel] {
        &self.levels
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn last(&self) -> Option<&DensityLevel> {
        self.levels.last()
    }

    /// Levels with `i >= tail_start`.
    pub fn tail(&self, tail_start: u64) -> impl Iterator<Item = &DensityLevel> {
        self.levels.iter().filter(move |l| l.i >= tail_start)
    }
}

/// Finite-window stand-in for a liminf. `window_min` is a certified upper
/// bound for the liminf restricted to the window; `exact` is only ever set
/// from a recognized closed form, never extrapolation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HdimEstimate {
    pub window_min: Rational,
    pub tail_start: u64,
    pub exact: Option<Rational>,
    pub certificate: Option<String>,
}

impl HdimEstimate {
    pub fn new(
        window_min: Rational,
        tail_start: u64,
        exact: Option<Rational>,
        certificate: Option<String>,
    ) -> Result<Self, ArithError> {
        for v in std::iter::once(&window_min).chain(exact.iter()) {
            if *v < Rational::zero() || *v > Rational::one() {
                return Err(ArithError::EstimateOutOfRange(v.to_string()));
            }
        }
        Ok(HdimEstimate { window_min, tail_start, exact, certificate })
    }

    /// Distance between the window value and the certified exact value.
    pub fn exact_gap(&self) -> Option<Rational> {
        self.exact.as_ref().map(|e| {
            let d = &self.window_min - e;
            if d < Rational::zero() {
                -d
            } else {
                d
            }
        })
    }
}

/// Minimum ratio over the tail `i >= tail_start`. When every tail ratio is
/// the same rational (at least two of them), that constant is certified as
/// the exact limit of the window pattern.
pub fn liminf_estimate(
    seq: &DensitySequence,
    tail_start: u64,
) -> Result<HdimEstimate, ArithError> {
    let mut min: Option<Rational> = None;
    let mut constant = true;
    let mut count = 0usize;
    let mut first: Option<Rational> = None;
    for level in seq.tail(tail_start) {
        let r = level.ratio();
        count += 1;
        match &first {
            None => first = Some(r.clone()),
            Some(f) => {
                if *f != r {
                    constant = false;
                }
            }
        }
        min = Some(match min {
            None => r,
            Some(m) => m.min(r),
        });
    }
    let window_min = min.ok_or(ArithError::EmptyTail(tail_start))?;
    let (exact, certificate) = if constant && count >= 2 {
        (Some(window_min.clone()), Some("constant-ratio-tail".to_string()))
    } else {
        (None, None)
    };
    HdimEstimate::new(window_min, tail_start, exact, certificate)
}

/// Executable form of the step inequality: if `x/y >= eta - 1/y` then
/// `(x+z)/(y+z) >= eta - 1/(y+z)`. Returns the truth of the implication;
/// it holds for every `eta <= 1` and `y > 0`, which property tests fuzz.
pub fn ratio_floor_persists(x: &BigUint, y: &BigUint, z: &BigUint, eta: &Rational) -> bool {
    assert!(!y.is_zero(), "step inequality needs y > 0");
    let one = Rational::one();
    let lhs = rat_nat(x, y) >= eta - &one / rat_nat(y, &BigUint::one());
    if !lhs {
        return true;
    }
    let yz = y + z;
    rat_nat(&(x + z), &yz) >= eta - &one / rat_nat(&yz, &BigUint::one())
}

/// Executable form of the strict step inequality: if `x/y >= eta` then
/// `(x+z)/(y+z) >= eta`. Holds for every `eta <= 1`, `y > 0`.
pub fn ratio_bound_persists(x: &BigUint, y: &BigUint, z: &BigUint, eta: &Rational) -> bool {
    assert!(!y.is_zero(), "step inequality needs y > 0");
    if rat_nat(x, y) < *eta {
        return true;
    }
    rat_nat(&(x + z), &(y + z)) >= *eta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, rat_int};

    fn seq(p: u64, triples: &[(u64, u64, u64)]) -> DensitySequence {
        DensitySequence::new(
            p,
            triples.iter().map(|&(i, n, d)| DensityLevel::new(i, n, d)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_over_zero_is_one() {
        let s = seq(3, &[(0, 0, 0), (1, 1, 2)]);
        assert_eq!(s.levels()[0].ratio(), rat_int(1));
        assert_eq!(s.levels()[1].ratio(), rat(1, 2));
    }

    #[test]
    fn invariants_reject_bad_sequences() {
        let dup = DensitySequence::new(
            2,
            vec![DensityLevel::new(1, 1u32, 2u32), DensityLevel::new(1, 1u32, 3u32)],
        );
        assert!(matches!(dup, Err(ArithError::LevelsOutOfOrder { i: 1 })));
        let flat = DensitySequence::new(
            2,
            vec![DensityLevel::new(1, 1u32, 2u32), DensityLevel::new(2, 1u32, 2u32)],
        );
        assert!(matches!(flat, Err(ArithError::DenominatorNotIncreasing { i: 2 })));
        let big = DensitySequence::new(2, vec![DensityLevel::new(1, 3u32, 2u32)]);
        assert!(matches!(big, Err(ArithError::NumeratorTooLarge { i: 1 })));
    }

    #[test]
    fn liminf_takes_tail_minimum() {
        let s = seq(3, &[(1, 1, 2), (2, 1, 4), (3, 2, 6), (4, 3, 8)]);
        let e = liminf_estimate(&s, 2).unwrap();
        assert_eq!(e.window_min, rat(1, 4));
        assert_eq!(e.exact, None);
        let all = liminf_estimate(&s, 0).unwrap();
        assert_eq!(all.window_min, rat(1, 4));
        assert!(matches!(liminf_estimate(&s, 9), Err(ArithError::EmptyTail(9))));
    }

    #[test]
    fn constant_tail_is_certified() {
        let s = seq(3, &[(0, 0, 0), (1, 1, 2), (2, 2, 4), (3, 3, 6)]);
        let e = liminf_estimate(&s, 1).unwrap();
        assert_eq!(e.window_min, rat(1, 2));
        assert_eq!(e.exact, Some(rat(1, 2)));
        assert_eq!(e.certificate.as_deref(), Some("constant-ratio-tail"));
        assert_eq!(e.exact_gap(), Some(rat_int(0)));
        // A single tail point is not a recognized pattern.
        let single = liminf_estimate(&s, 3).unwrap();
        assert_eq!(single.exact, None);
    }

    #[test]
    fn estimates_stay_in_unit_interval() {
        assert!(HdimEstimate::new(rat(3, 2), 1, None, None).is_err());
        assert!(HdimEstimate::new(rat(1, 2), 1, Some(rat(-1, 2)), None).is_err());
    }

    #[test]
    fn step_inequalities_on_spot_values() {
        let b = |n: u64| BigUint::from(n);
        let eta = rat(1, 2);
        assert!(ratio_floor_persists(&b(1), &b(3), &b(5), &eta));
        assert!(ratio_bound_persists(&b(2), &b(4), &b(7), &eta));
        // Vacuous cases (hypothesis false) also hold.
        assert!(ratio_bound_persists(&b(0), &b(4), &b(7), &eta));
    }
}
