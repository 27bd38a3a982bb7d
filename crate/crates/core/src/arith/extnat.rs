//! Naturals extended by +∞, the codomain of p-adic valuations. Addition is
//! absorbing in the infinite element; the order places +∞ above every
//! finite value.

use num_bigint::BigUint;
use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExtNat {
    Fin(BigUint),
    Inf,
}

impl ExtNat {
    pub fn zero() -> Self {
        ExtNat::Fin(BigUint::default())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtNat::Inf)
    }

    pub fn as_finite(&self) -> Option<&BigUint> {
        match self {
            ExtNat::Fin(n) => Some(n),
            ExtNat::Inf => None,
        }
    }
}

impl From<u64> for ExtNat {
    fn from(n: u64) -> Self {
        ExtNat::Fin(BigUint::from(n))
    }
}

impl From<BigUint> for ExtNat {
    fn from(n: BigUint) -> Self {
        ExtNat::Fin(n)
    }
}

impl PartialOrd for ExtNat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtNat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtNat::Inf, ExtNat::Inf) => Ordering::Equal,
            (ExtNat::Inf, ExtNat::Fin(_)) => Ordering::Greater,
            (ExtNat::Fin(_), ExtNat::Inf) => Ordering::Less,
            (ExtNat::Fin(a), ExtNat::Fin(b)) => a.cmp(b),
        }
    }
}

impl Add for ExtNat {
    type Output = ExtNat;
    fn add(self, rhs: ExtNat) -> ExtNat {
        match (self, rhs) {
            (ExtNat::Fin(a), ExtNat::Fin(b)) => ExtNat::Fin(a + b),
            _ => ExtNat::Inf,
        }
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Fin(n) => write!(f, "{n}"),
            ExtNat::Inf => write!(f, "inf"),
        }
    }
}
