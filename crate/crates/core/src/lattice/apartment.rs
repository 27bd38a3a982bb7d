//! Spectra of exponent-pair filtrations with periodic slope limits.
//!
//! For a filtration with exponent pairs `(a_i, b_i)` write
//! `x_i = a_i / (a_i + b_i)`.  When the `x_i` converge along each residue
//! class mod `m` the possible subgroup densities are controlled by three
//! numbers:
//!
//! ```text
//! xi   = min( liminf x_i, liminf (1 - x_i) )
//! eta  = max( liminf x_i, liminf (1 - x_i) )
//! zeta = liminf max{ x_i, 1 - x_i }
//! ```
//!
//! and the attainable density set is `{0, xi, eta, zeta, 1}`.  The triple is
//! constrained: either `xi <= eta <= 1 - zeta <= 1/2` or
//! `xi <= 1 - zeta = 1 - eta <= 1/2`.  `apartment_realize` inverts this:
//! given an admissible triple it produces a filtration window whose class
//! limits certify the triple, rejecting inadmissible triples with the first
//! inequality that fails.

use crate::arith::{rat, Rational};
use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::{FiltrationEntry, LatticeError, LatticeFiltration};
use crate::arith::ScaledPAdic;

/// Periodic limit data: class `i mod m` has `x_i -> class_limits[i mod m]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApartmentPattern {
    class_limits: Vec<Rational>,
}

impl ApartmentPattern {
    pub fn new(class_limits: Vec<Rational>) -> Result<Self, LatticeError> {
        if class_limits.is_empty() {
            return Err(LatticeError::BadSpectrumInput("no residue classes".into()));
        }
        for l in &class_limits {
            if *l < Rational::zero() || *l > Rational::one() {
                return Err(LatticeError::BadSpectrumInput(format!(
                    "class limit {l} outside [0, 1]"
                )));
            }
        }
        Ok(ApartmentPattern { class_limits })
    }

    pub fn modulus(&self) -> u64 {
        self.class_limits.len() as u64
    }

    pub fn class_limits(&self) -> &[Rational] {
        &self.class_limits
    }

    pub fn limit(&self, i: u64) -> &Rational {
        &self.class_limits[(i % self.modulus()) as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApartmentSpectrum {
    pub xi: Rational,
    pub eta: Rational,
    pub zeta: Rational,
    /// `{0, xi, eta, zeta, 1}`, sorted with duplicates removed.
    pub points: Vec<Rational>,
    /// True when computed from certified class limits; false for raw
    /// finite-window slopes.
    pub exact: bool,
}

impl ApartmentSpectrum {
    fn assemble(xi: Rational, eta: Rational, zeta: Rational, exact: bool) -> Self {
        let mut points = vec![
            Rational::zero(),
            xi.clone(),
            eta.clone(),
            zeta.clone(),
            Rational::one(),
        ];
        points.sort();
        points.dedup();
        ApartmentSpectrum { xi, eta, zeta, points, exact }
    }

    /// Which arm of the constraint the triple satisfies: 1 for
    /// `xi <= eta <= 1 - zeta <= 1/2`, 2 for `xi <= 1 - zeta = 1 - eta <= 1/2`,
    /// `None` if neither (impossible for spectra computed here).
    pub fn restriction_case(&self) -> Option<u8> {
        let half = rat(1, 2);
        let co_zeta = Rational::one() - &self.zeta;
        if self.xi <= self.eta && self.eta <= co_zeta && co_zeta <= half {
            Some(1)
        } else if self.zeta == self.eta && self.xi <= co_zeta && co_zeta <= half {
            Some(2)
        } else {
            None
        }
    }
}

fn spectrum_of_slopes(slopes: &[Rational], exact: bool) -> Result<ApartmentSpectrum, LatticeError> {
    if slopes.is_empty() {
        return Err(LatticeError::BadSpectrumInput("no slopes".into()));
    }
    let one = Rational::one();
    let mut low_x = slopes[0].clone();
    let mut low_co = &one - &slopes[0];
    let mut zeta = slopes[0].clone().max(&one - &slopes[0]);
    for s in &slopes[1..] {
        let co = &one - s;
        low_x = low_x.min(s.clone());
        low_co = low_co.min(co.clone());
        zeta = zeta.min(s.clone().max(co));
    }
    let xi = low_x.clone().min(low_co.clone());
    let eta = low_x.max(low_co);
    Ok(ApartmentSpectrum::assemble(xi, eta, zeta, exact))
}

/// Spectrum from certified class limits.
pub fn apartment_spectrum(pattern: &ApartmentPattern) -> Result<ApartmentSpectrum, LatticeError> {
    for l in pattern.class_limits() {
        if *l < Rational::zero() || *l > Rational::one() {
            return Err(LatticeError::BadSpectrumInput(format!("limit {l} outside [0, 1]")));
        }
    }
    spectrum_of_slopes(pattern.class_limits(), true)
}

/// Window stand-in for the spectrum: the same three quantities computed from
/// the finite slopes `a_i / (a_i + b_i)` with minima in place of liminfs.
/// Pairs with `a + b = 0` (the full-group level) are skipped.
pub fn apartment_spectrum_window(
    pairs: &[(BigUint, BigUint)],
) -> Result<ApartmentSpectrum, LatticeError> {
    let slopes: Vec<Rational> = pairs
        .iter()
        .filter(|(a, b)| !(a.is_zero() && b.is_zero()))
        .map(|(a, b)| crate::arith::rat_nat(a, &(a + b)))
        .collect();
    if slopes.is_empty() {
        return Err(LatticeError::BadSpectrumInput(
            "window has no level with a + b > 0".into(),
        ));
    }
    spectrum_of_slopes(&slopes, false)
}

fn ceil_div(a: &BigUint, b: &BigUint) -> BigUint {
    (a + b - BigUint::one()) / b
}

/// Build a filtration window whose class limits realize the triple
/// `(xi, eta, zeta)`, together with the certifying pattern.
///
/// Level `i`'s target slope is hit exactly when it is interior; targets 0
/// and 1 are approached within `1/i`.  The chain always descends strictly
/// and both exponents diverge.
pub fn apartment_realize(
    p: u64,
    xi: &Rational,
    eta: &Rational,
    zeta: &Rational,
    window_len: u64,
) -> Result<(LatticeFiltration, ApartmentPattern), LatticeError> {
    let reject = |reason: String| LatticeError::NotRealizable {
        xi: xi.to_string(),
        eta: eta.to_string(),
        zeta: zeta.to_string(),
        reason,
    };
    for (name, v) in [("xi", xi), ("eta", eta), ("zeta", zeta)] {
        if *v < Rational::zero() || *v > Rational::one() {
            return Err(reject(format!("{name} = {v} is outside [0, 1]")));
        }
    }
    if window_len == 0 {
        return Err(LatticeError::EmptyWindow);
    }
    let one = Rational::one();
    let half = rat(1, 2);
    let co_zeta = &one - zeta;

    // First arm: xi <= eta <= 1 - zeta <= 1/2, classes (zeta, xi, 1 - eta).
    // Second arm: zeta = eta, xi <= 1 - zeta <= 1/2, classes (1 - zeta, xi).
    let targets: Vec<Rational> = if *xi <= *eta && *eta <= co_zeta && co_zeta <= half {
        vec![zeta.clone(), xi.clone(), &one - eta]
    } else if *zeta == *eta && *xi <= co_zeta && co_zeta <= half {
        vec![&one - zeta, xi.clone()]
    } else {
        // name the first inequality of the first arm that fails, then say
        // why the second arm is also out
        let arm1 = if *xi > *eta {
            format!("xi <= eta fails ({xi} > {eta})")
        } else if *eta > co_zeta {
            format!("eta <= 1 - zeta fails ({eta} > {co_zeta})")
        } else {
            format!("1 - zeta <= 1/2 fails ({co_zeta} > 1/2)")
        };
        let arm2 = if *zeta != *eta {
            format!("zeta != eta ({zeta} vs {eta})")
        } else if *xi > co_zeta {
            format!("xi <= 1 - zeta fails ({xi} > {co_zeta})")
        } else {
            format!("1 - zeta <= 1/2 fails ({co_zeta} > 1/2)")
        };
        return Err(reject(format!("{arm1}; and {arm2}")));
    };
    let pattern = ApartmentPattern::new(targets)?;

    let zero = ScaledPAdic::zero(p)?;
    let one_n = BigUint::one();
    let mut entries = vec![FiltrationEntry {
        a: BigUint::zero(),
        b: BigUint::zero(),
        z: zero.clone(),
    }];
    let mut ap = BigUint::zero();
    let mut bp = BigUint::zero();
    for i in 1..=window_len {
        let t = pattern.limit(i);
        let sum_prev = &ap + &bp;
        // scale floor: forces strict descent and drives the 0/1 classes to
        // their limits at rate 1/i
        let s0 = BigUint::from(i) * (&sum_prev + 2u32);
        let (a_i, b_i) = if t.is_zero() {
            let a = &ap + &one_n;
            let s = s0.max(&a + &bp + &one_n);
            (a.clone(), s - a)
        } else if t.is_one() {
            let b = &bp + &one_n;
            let s = s0.max(&ap + &b + &one_n);
            (s - &b, b)
        } else {
            let c = t.numer().to_biguint().expect("target in [0,1]");
            let d = t.denom().to_biguint().expect("positive denominator");
            let dc = &d - &c;
            let smin = s0
                .max(ceil_div(&(&ap * &d), &c))
                .max(ceil_div(&(&bp * &d), &dc));
            let s = ceil_div(&smin, &d) * &d;
            let a = &c * &s / &d;
            (a.clone(), s - a)
        };
        entries.push(FiltrationEntry { a: a_i.clone(), b: b_i.clone(), z: zero.clone() });
        ap = a_i;
        bp = b_i;
    }
    let filtration = LatticeFiltration::new(p, entries)?;
    Ok((filtration, pattern))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat_int;

    fn pattern(limits: &[Rational]) -> ApartmentPattern {
        ApartmentPattern::new(limits.to_vec()).unwrap()
    }

    #[test]
    fn frozen_three_class_spectrum() {
        // limits (1/5, 3/4, 3/4): xi = 1/5, eta = 1/4, zeta = 3/4 and the
        // attainable set is {0, 1/5, 1/4, 3/4, 1}.
        let s = apartment_spectrum(&pattern(&[rat(1, 5), rat(3, 4), rat(3, 4)])).unwrap();
        assert_eq!(s.xi, rat(1, 5));
        assert_eq!(s.eta, rat(1, 4));
        assert_eq!(s.zeta, rat(3, 4));
        assert_eq!(s.points, vec![rat_int(0), rat(1, 5), rat(1, 4), rat(3, 4), rat_int(1)]);
        assert!(s.exact);
        assert_eq!(s.restriction_case(), Some(1));
    }

    #[test]
    fn alternating_zero_one_collapses_to_endpoints() {
        let s = apartment_spectrum(&pattern(&[rat_int(0), rat_int(1)])).unwrap();
        assert_eq!(s.points, vec![rat_int(0), rat_int(1)]);
        assert_eq!((s.xi, s.eta, s.zeta), (rat_int(0), rat_int(0), rat_int(1)));
    }

    #[test]
    fn every_pattern_satisfies_the_restriction() {
        // deterministic sweep over small rational limit tuples
        let vals = [rat_int(0), rat(1, 5), rat(1, 3), rat(1, 2), rat(2, 3), rat(9, 10), rat_int(1)];
        for a in &vals {
            for b in &vals {
                for c in &vals {
                    let s =
                        apartment_spectrum(&pattern(&[a.clone(), b.clone(), c.clone()])).unwrap();
                    assert!(
                        s.restriction_case().is_some(),
                        "triple ({}, {}, {}) broke the restriction",
                        s.xi,
                        s.eta,
                        s.zeta
                    );
                }
            }
        }
    }

    #[test]
    fn realize_first_arm_round_trips() {
        let (f, pat) = apartment_realize(3, &rat(1, 5), &rat(1, 4), &rat(3, 4), 12).unwrap();
        assert!(f.validate().is_ok());
        let s = apartment_spectrum(&pat).unwrap();
        assert_eq!((s.xi, s.eta, s.zeta), (rat(1, 5), rat(1, 4), rat(3, 4)));
        // all three targets are interior, so every window slope is exact and
        // the finite-window spectrum already agrees
        let pairs: Vec<_> = f.entries().iter().map(|e| (e.a.clone(), e.b.clone())).collect();
        let w = apartment_spectrum_window(&pairs).unwrap();
        assert_eq!((w.xi, w.eta, w.zeta), (rat(1, 5), rat(1, 4), rat(3, 4)));
        assert!(!w.exact);
    }

    #[test]
    fn realize_second_arm_round_trips() {
        // zeta = eta = 3/4 forces the two-class arm
        let (f, pat) = apartment_realize(3, &rat(1, 5), &rat(3, 4), &rat(3, 4), 10).unwrap();
        assert_eq!(pat.modulus(), 2);
        let s = apartment_spectrum(&pat).unwrap();
        assert_eq!(s.restriction_case(), Some(2));
        assert_eq!((s.xi, s.eta, s.zeta), (rat(1, 5), rat(3, 4), rat(3, 4)));
        assert!(f.validate().is_ok());
    }

    #[test]
    fn realize_extreme_limits_converges_at_rate_one_over_i() {
        let (f, pat) = apartment_realize(2, &rat_int(0), &rat_int(0), &rat_int(1), 9).unwrap();
        // classes are (1, 0, 1): slope -> 1 on even residues, -> 0 on class 1
        for (idx, e) in f.entries().iter().enumerate().skip(1) {
            let i = idx as u64;
            let t = pat.limit(i);
            let x = crate::arith::rat_nat(&e.a, &(&e.a + &e.b));
            let err = if x >= *t { x - t } else { t - x };
            assert!(err <= rat(1, i as i64), "slope off target at level {i}");
        }
        let s = apartment_spectrum(&pat).unwrap();
        assert_eq!((s.xi, s.eta, s.zeta), (rat_int(0), rat_int(0), rat_int(1)));
    }

    #[test]
    fn rejection_names_the_failing_inequality() {
        let err = apartment_realize(3, &rat(1, 3), &rat(1, 2), &rat(3, 4), 6).unwrap_err();
        match err {
            LatticeError::NotRealizable { reason, .. } => {
                assert!(reason.contains("eta <= 1 - zeta fails"), "reason was: {reason}");
                assert!(reason.contains("zeta != eta"), "reason was: {reason}");
            }
            other => panic!("expected NotRealizable, got {other:?}"),
        }
        // zeta below 1/2 cannot be a liminf of max{x, 1-x}
        let err = apartment_realize(3, &rat_int(0), &rat_int(0), &rat(1, 3), 6).unwrap_err();
        match err {
            LatticeError::NotRealizable { reason, .. } => {
                assert!(reason.contains("1 - zeta <= 1/2 fails"), "reason was: {reason}");
            }
            other => panic!("expected NotRealizable, got {other:?}"),
        }
    }

    #[test]
    fn window_spectrum_with_unreached_limits_stays_conservative() {
        // xi = 0 comes from a class whose slope only decays like 1/i, so the
        // window minimum is positive but small
        let (f, _pat) = apartment_realize(3, &rat_int(0), &rat(1, 4), &rat(3, 4), 12).unwrap();
        let pairs: Vec<_> = f.entries().iter().map(|e| (e.a.clone(), e.b.clone())).collect();
        let w = apartment_spectrum_window(&pairs).unwrap();
        assert!(w.xi > rat_int(0));
        assert!(w.xi <= rat(1, 10));
        assert!(!w.exact);
    }
}
