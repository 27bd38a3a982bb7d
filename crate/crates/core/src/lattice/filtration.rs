//! Filtrations of Z_p^2 by the lattices `G_i = <(p^{a_i}, z_i), (0, p^{b_i})>`.
//!
//! A window of such triples describes a descending chain of open subgroups
//! exactly when the exponent pair grows from `(0, 0)`, grows without bound in
//! both coordinates, and consecutive off-diagonal parts are compatible:
//! `v_p(z_i - p^{a_i - a_{i-1}} z_{i-1}) >= b_{i-1}`.  `validate` checks the
//! window witness of each of these and reports the first failure.

use crate::arith::{ArithError, ScaledPAdic, Valuation};
use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::fmt;

use super::LatticeError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiltrationEntry {
    pub a: BigUint,
    pub b: BigUint,
    pub z: ScaledPAdic,
}

impl FiltrationEntry {
    /// Index exponent of `G_i` in `Z_p^2`: `log_p |Z_p^2 : G_i| = a_i + b_i`.
    pub fn index_exponent(&self) -> BigUint {
        &self.a + &self.b
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FiltrationViolation {
    /// The first entry must be `(0, 0, 0)` so the chain starts at the full group.
    StartNotFull,
    /// `a` or `b` decreased going into level `i`.
    NotMonotone { coord: char, i: u64 },
    /// `a_i + b_i` failed to increase strictly at level `i` (the chain stalls).
    NotDescending { i: u64 },
    /// The named coordinate never left 0 on the window, so the window cannot
    /// witness divergence (the chain would have non-trivial intersection).
    NoDivergenceWitness { coord: char },
    /// `v_p(z_i - p^{a_i - a_{i-1}} z_{i-1}) >= b_{i-1}` failed at level `i`:
    /// `G_i` is not contained in `G_{i-1}`.
    Incompatible { i: u64 },
    /// `z_i` carries a different prime than the filtration.
    PrimeMismatch { i: u64 },
    /// The compatibility valuation at level `i` could not be resolved at the
    /// stored precision of `z`.
    Unresolved { i: u64 },
}

impl fmt::Display for FiltrationViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiltrationViolation::StartNotFull => write!(f, "entry 0 must be (0, 0, 0)"),
            FiltrationViolation::NotMonotone { coord, i } => {
                write!(f, "{coord} decreases at level {i}")
            }
            FiltrationViolation::NotDescending { i } => {
                write!(f, "a + b does not increase at level {i}")
            }
            FiltrationViolation::NoDivergenceWitness { coord } => {
                write!(f, "{coord} must diverge, but stays 0 on the whole window")
            }
            FiltrationViolation::Incompatible { i } => {
                write!(f, "v_p(z_{i} - p^(a_{i} - a_prev) z_prev) < b_prev")
            }
            FiltrationViolation::PrimeMismatch { i } => {
                write!(f, "z at level {i} uses a different prime")
            }
            FiltrationViolation::Unresolved { i } => {
                write!(f, "compatibility at level {i} unresolved at stored precision")
            }
        }
    }
}

/// A finite window `G_0 > G_1 > ...` of open subgroups of Z_p^2, each stored
/// as the exponent pair `(a_i, b_i)` plus the off-diagonal entry `z_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeFiltration {
    p: u64,
    entries: Vec<FiltrationEntry>,
}

/// Serialized shape: all integers as decimal strings so windows with
/// exponents like 3^82 survive the round trip.
#[derive(Serialize, Deserialize)]
struct EntryRepr {
    i: u64,
    a: String,
    b: String,
    z: ZRepr,
}

#[derive(Serialize, Deserialize)]
struct ZRepr {
    unit: String,
    shift: String,
}

#[derive(Serialize, Deserialize)]
struct FiltrationRepr {
    p: u64,
    entries: Vec<EntryRepr>,
}

impl LatticeFiltration {
    pub fn new(p: u64, entries: Vec<FiltrationEntry>) -> Result<Self, LatticeError> {
        let f = LatticeFiltration { p, entries };
        f.validate()?;
        Ok(f)
    }

    /// The congruence filtration `G_i = p^i Z_p^2`, i.e. `a_i = b_i = i`, `z_i = 0`.
    pub fn p_power(p: u64, window: u64) -> Result<Self, LatticeError> {
        let zero = ScaledPAdic::zero(p)?;
        let entries = (0..=window)
            .map(|i| FiltrationEntry {
                a: BigUint::from(i),
                b: BigUint::from(i),
                z: zero.clone(),
            })
            .collect();
        LatticeFiltration::new(p, entries)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn entries(&self) -> &[FiltrationEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Check the window against all chain conditions; first failure wins.
    pub fn validate(&self) -> Result<(), LatticeError> {
        let v = |viol| Err(LatticeError::Invalid(viol));
        let Some(first) = self.entries.first() else {
            return v(FiltrationViolation::StartNotFull);
        };
        if !first.a.is_zero() || !first.b.is_zero() || !first.z.is_zero_repr() {
            return v(FiltrationViolation::StartNotFull);
        }
        for (idx, e) in self.entries.iter().enumerate() {
            if e.z.p() != self.p {
                return v(FiltrationViolation::PrimeMismatch { i: idx as u64 });
            }
        }
        for idx in 1..self.entries.len() {
            let i = idx as u64;
            let (prev, cur) = (&self.entries[idx - 1], &self.entries[idx]);
            if cur.a < prev.a {
                return v(FiltrationViolation::NotMonotone { coord: 'a', i });
            }
            if cur.b < prev.b {
                return v(FiltrationViolation::NotMonotone { coord: 'b', i });
            }
            if cur.index_exponent() <= prev.index_exponent() {
                return v(FiltrationViolation::NotDescending { i });
            }
        }
        if self.entries.len() > 1 {
            let last = self.entries.last().unwrap();
            if last.a.is_zero() {
                return v(FiltrationViolation::NoDivergenceWitness { coord: 'a' });
            }
            if last.b.is_zero() {
                return v(FiltrationViolation::NoDivergenceWitness { coord: 'b' });
            }
        }
        for idx in 1..self.entries.len() {
            let i = idx as u64;
            let (prev, cur) = (&self.entries[idx - 1], &self.entries[idx]);
            // v_p(z_i - p^{a_i - a_{i-1}} z_{i-1}) >= b_{i-1}
            let shifted_prev = prev.z.shifted(&(&cur.a - &prev.a));
            let val = match cur.z.sub_valued(&shifted_prev) {
                Ok(diff) => diff.vp(),
                Err(ArithError::PrecisionExhausted { digits, .. }) => Valuation::AtLeast(digits),
                Err(e) => return Err(e.into()),
            };
            match val.resolve_ge(&prev.b) {
                Some(true) => {}
                Some(false) => return v(FiltrationViolation::Incompatible { i }),
                None => return v(FiltrationViolation::Unresolved { i }),
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let repr = FiltrationRepr {
            p: self.p,
            entries: self
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| EntryRepr {
                    i: i as u64,
                    a: e.a.to_string(),
                    b: e.b.to_string(),
                    z: ZRepr {
                        unit: e.z.unit().to_string(),
                        shift: e.z.shift().to_string(),
                    },
                })
                .collect(),
        };
        serde_json::to_value(repr).expect("filtration repr serializes")
    }

    /// Parse the decimal-string shape produced by `to_json` and validate it.
    /// Interchange carries exact integers only; finite-precision entries are
    /// an in-memory refinement and never serialized.
    pub fn from_json(value: &serde_json::Value) -> Result<Self, LatticeError> {
        let repr: FiltrationRepr = serde_json::from_value(value.clone())
            .map_err(|e| LatticeError::BadSerialization(e.to_string()))?;
        let parse_nat = |s: &str, what: &str| -> Result<BigUint, LatticeError> {
            s.parse::<BigUint>()
                .map_err(|_| LatticeError::BadSerialization(format!("{what} is not a natural number: {s:?}")))
        };
        let mut entries = Vec::with_capacity(repr.entries.len());
        for (idx, e) in repr.entries.iter().enumerate() {
            if e.i != idx as u64 {
                return Err(LatticeError::BadSerialization(format!(
                    "entry {idx} is labeled i = {}",
                    e.i
                )));
            }
            let unit = e
                .z
                .unit
                .parse::<num_bigint::BigInt>()
                .map_err(|_| LatticeError::BadSerialization(format!("z.unit is not an integer: {:?}", e.z.unit)))?;
            let shift = parse_nat(&e.z.shift, "z.shift")?;
            entries.push(FiltrationEntry {
                a: parse_nat(&e.a, "a")?,
                b: parse_nat(&e.b, "b")?,
                z: ScaledPAdic::new(repr.p, unit, shift)?,
            });
        }
        LatticeFiltration::new(repr.p, entries)
    }
}

/// Test convenience: entry with small exponents and an exact integer
/// off-diagonal part.
#[cfg(test)]
pub(crate) fn entry_small(p: u64, a: u64, b: u64, z: i64) -> FiltrationEntry {
    FiltrationEntry {
        a: BigUint::from(a),
        b: BigUint::from(b),
        z: ScaledPAdic::exact_integer(p, z).unwrap(),
    }
}
