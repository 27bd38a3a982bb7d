//! Filtrations whose cyclic-subgroup density is a prescribed rational.
//!
//! The exponent schedule is `a_i = p^i`, `b_i = p^{i+1}` with off-diagonal
//! part `z_i = i p^{a_i}`.  Along it, the subgroup generated by `(1, lambda)`
//! has level ratios
//!
//! ```text
//! r_i = (p^{i+1} - v_p(i - lambda)) / (p^i (p + 1)),
//! ```
//!
//! and a target `nu` in `[1/(p+1), (p-1)/(p+1)]` is realized by the limit of
//! the recursion `lambda_0 = 1`, `lambda_{j+1} = lambda_j + p^{g(lambda_j)}`
//! where `g(m) = ceil(p^{m+1} - p^m (p+1) nu - 1)` is the gap exponent.  The
//! ratios dip toward `nu` exactly at the anchor levels `i = lambda_j` and
//! stay above it everywhere else.
//!
//! Anchors explode in size almost immediately (the second gap is typically
//! `p^(p^80)`-flavored), so `lambda` is never materialized: the window keeps
//! the finitely many reachable anchors and resolves `v_p(i - lambda)` through
//! the largest stored anchor below `i`, which is exact whenever
//! `i - lambda_j < p^(g(lambda_j))`.

use crate::arith::{ceil_rational, vp_int, DensityLevel, DensitySequence, Rational, ScaledPAdic};
use num_bigint::{BigInt, BigUint};
use num_traits::{CheckedSub, One, ToPrimitive, Zero};

use super::{FiltrationEntry, LatticeError, LatticeFiltration};

/// Largest `m` for which the gap exponent `g(m)` is evaluated exactly
/// (evaluation materializes `p^{m+1}`).
const EXPONENT_EVAL_CAP: u64 = 1 << 20;

/// Largest gap exponent the anchor recursion will step across (stepping
/// materializes `p^{g}` as an integer).
const POWER_DIGIT_BUDGET: u64 = 1 << 20;

/// How far past the last anchor a window may reach.
const WINDOW_MARGIN: u64 = 1 << 16;

/// Hard cap on materialized window levels: level `i` stores integers around
/// `p^{i+1}`, so windows are kept to a few thousand levels.
const WINDOW_LEVEL_CAP: u64 = 8191;

/// Safety valve on the anchor recursion; gaps grow doubly exponentially, so
/// real runs stop after a handful of anchors.
const MAX_ANCHORS: usize = 64;

/// One resolvable point of the limit `lambda`: its position and the exponent
/// of the gap to the next anchor (`None` once evaluation is out of budget).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Anchor {
    pub lambda: BigUint,
    pub gap_exponent: Option<BigUint>,
}

/// `g(m) = ceil(p^{m+1} - p^m (p+1) nu - 1)`, or `None` when `m` is past the
/// evaluation cap.
pub fn gap_exponent(p: u64, nu: &Rational, m: &BigUint) -> Option<BigUint> {
    // defined for anchor positions m >= 1; evaluation materializes p^{m+1}
    if m.is_zero() || *m > BigUint::from(EXPONENT_EVAL_CAP) {
        return None;
    }
    let pm = BigInt::from(p).pow(m.to_u32().expect("below evaluation cap"));
    let term = Rational::from_integer(&pm * p)
        - Rational::from_integer(pm * (p + 1)) * nu
        - Rational::one();
    let f = ceil_rational(&term);
    assert!(f.sign() == num_bigint::Sign::Plus, "gap exponent must be positive");
    Some(f.to_biguint().expect("positive"))
}

/// Window view of the prescribed-density construction for one `(p, nu)`.
#[derive(Debug, Clone)]
pub struct PrescribedDensity {
    p: u64,
    nu: Rational,
    anchors: Vec<Anchor>,
    window_end: u64,
}

impl PrescribedDensity {
    pub fn new(p: u64, nu: Rational, window_end: Option<u64>) -> Result<Self, LatticeError> {
        ScaledPAdic::zero(p)?; // validates the prime
        let lo = Rational::new(BigInt::one(), BigInt::from(p + 1));
        let hi = Rational::new(BigInt::from(p - 1), BigInt::from(p + 1));
        if nu < lo || nu > hi {
            return Err(LatticeError::NuOutOfRange {
                nu: nu.to_string(),
                lo: lo.to_string(),
                hi: hi.to_string(),
                p,
            });
        }

        let mut anchors: Vec<Anchor> = Vec::new();
        let mut lam = BigUint::one();
        for _ in 0..MAX_ANCHORS {
            let g = gap_exponent(p, &nu, &lam);
            if let (Some(prev), Some(cur)) = (
                anchors.last().and_then(|a| a.gap_exponent.as_ref()),
                g.as_ref(),
            ) {
                assert!(cur > prev, "gap exponents grow along the anchor chain");
            }
            anchors.push(Anchor { lambda: lam.clone(), gap_exponent: g.clone() });
            match g {
                None => break,
                Some(gv) => {
                    if gv > BigUint::from(POWER_DIGIT_BUDGET) {
                        break;
                    }
                    lam += BigUint::from(p).pow(gv.to_u32().expect("within digit budget"));
                }
            }
        }
        let last = anchors.last().expect("at least the base anchor").lambda.clone();

        let window_end = match window_end {
            None => last.to_u64().map_or(500, |l| l.min(500)),
            Some(w) => {
                if w == 0 {
                    return Err(LatticeError::EmptyWindow);
                }
                if BigUint::from(w) > &last + BigUint::from(WINDOW_MARGIN) {
                    return Err(LatticeError::WindowBeyondAnchors {
                        end: w,
                        anchor: last.to_string(),
                        margin: WINDOW_MARGIN,
                    });
                }
                w
            }
        };
        if window_end >= WINDOW_LEVEL_CAP {
            return Err(LatticeError::ExponentTooLarge {
                exp: window_end.to_string(),
                budget: WINDOW_LEVEL_CAP,
            });
        }
        Ok(PrescribedDensity { p, nu, anchors, window_end })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn nu(&self) -> &Rational {
        &self.nu
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    pub fn window_end(&self) -> u64 {
        self.window_end
    }

    pub fn last_anchor(&self) -> &BigUint {
        &self.anchors.last().expect("nonempty").lambda
    }

    pub fn is_anchor(&self, i: u64) -> bool {
        let i = BigUint::from(i);
        self.anchors.iter().any(|a| a.lambda == i)
    }

    /// `v_p(i - lambda)` for a window level, resolved through the anchors.
    pub fn valuation_at(&self, i: u64) -> Result<BigUint, LatticeError> {
        let i_big = BigUint::from(i);
        if let Some(a) = self.anchors.iter().find(|a| a.lambda == i_big) {
            return a.gap_exponent.clone().ok_or(LatticeError::AnchorUnresolved {
                lambda: a.lambda.to_string(),
            });
        }
        let below = self
            .anchors
            .iter()
            .filter(|a| a.lambda < i_big)
            .max_by(|x, y| x.lambda.cmp(&y.lambda))
            .ok_or(LatticeError::EmptyWindow)?;
        let Some(g) = below.gap_exponent.as_ref() else {
            return Err(LatticeError::AnchorUnresolved { lambda: below.lambda.to_string() });
        };
        let diff = &i_big - &below.lambda;
        // correctness of the shortcut needs i - lambda_j < p^g; when p^g
        // cannot even be materialized it certainly exceeds any u64 level
        if let Some(g_small) = g.to_u32().filter(|g| *g <= 64) {
            if diff >= BigUint::from(self.p).pow(g_small) {
                return Err(LatticeError::WindowBeyondAnchors {
                    end: i,
                    anchor: below.lambda.to_string(),
                    margin: WINDOW_MARGIN,
                });
            }
        }
        Ok(vp_int(self.p, &BigInt::from(diff)).expect("difference is nonzero"))
    }

    /// Level data `(i, num_i, den_i)` for `i = 0 ..= window_end`, with
    /// `num_i = max(p^i, p^{i+1} - v_p(i - lambda))` and `den_i = p^i (p+1)`.
    pub fn density(&self) -> Result<DensitySequence, LatticeError> {
        let mut levels = vec![DensityLevel::new(0, 0u32, 0u32)];
        let p = BigUint::from(self.p);
        for i in 1..=self.window_end {
            let pi = p.pow(i as u32);
            let den = &pi * (self.p + 1);
            let v = self.valuation_at(i)?;
            let dropped = (&pi * self.p)
                .checked_sub(&v)
                .expect("valuation stays below p^(i+1)");
            let num = dropped.max(pi);
            levels.push(DensityLevel::new(i, num, den));
        }
        Ok(DensitySequence::new(self.p, levels)?)
    }

    /// Materialize the underlying filtration out to `window_end` levels:
    /// `(a_i, b_i, z_i) = (p^i, p^{i+1}, i p^{p^i})` with the off-diagonal
    /// part held as a symbolic power, never expanded.
    pub fn to_filtration(&self, window_end: u64) -> Result<LatticeFiltration, LatticeError> {
        if window_end >= WINDOW_LEVEL_CAP {
            return Err(LatticeError::ExponentTooLarge {
                exp: window_end.to_string(),
                budget: WINDOW_LEVEL_CAP,
            });
        }
        let p = BigUint::from(self.p);
        let mut entries = vec![FiltrationEntry {
            a: BigUint::zero(),
            b: BigUint::zero(),
            z: ScaledPAdic::zero(self.p)?,
        }];
        for i in 1..=window_end {
            let a = p.pow(i as u32);
            let b = p.pow(i as u32 + 1);
            let z = ScaledPAdic::new(self.p, BigInt::from(i), a.clone())?;
            entries.push(FiltrationEntry { a, b, z });
        }
        LatticeFiltration::new(self.p, entries)
    }
}
