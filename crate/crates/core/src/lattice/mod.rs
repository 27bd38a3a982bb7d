//! Filtrations of Z_p^2 by lattice triples `(a_i, b_i, z_i)` standing for
//! the open subgroups `G_i = <(p^{a_i}, z_i), (0, p^{b_i})>`, together with
//! the exact density formulas for procyclic subgroups, apartment spectra,
//! the prescribed-density construction, and lattice index computations in
//! Z_p^d (used to lift filtrations along surjections Z_p^n -> Z_p^2).

mod apartment;
mod cyclic;
mod filtration;
mod lift;
mod prescribed;
mod subgroup;

pub use apartment::{
    apartment_realize, apartment_spectrum, apartment_spectrum_window, ApartmentPattern,
    ApartmentSpectrum,
};
pub use cyclic::{hdim_cyclic, CyclicDensity, CyclicTarget};
pub use filtration::{FiltrationEntry, FiltrationViolation, LatticeFiltration};
pub use lift::{lift_filtration, LiftLevel, LiftedFiltration, Schedule};
pub use prescribed::{Anchor, PrescribedDensity};
pub use subgroup::{lattice_index, LatticeSubgroup};

use crate::arith::ArithError;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("filtration invalid: {0}")]
    Invalid(FiltrationViolation),
    #[error("level {i}: valuation unresolved at precision; widen z precision past {needed}")]
    PrecisionInsufficient { i: u64, needed: String },
    #[error("second-coordinate target needs p | mu (v_p(mu) >= 1)")]
    MuNotDivisible,
    #[error("density target {nu} outside [{lo}, {hi}] for p = {p}")]
    NuOutOfRange { nu: String, lo: String, hi: String, p: u64 },
    #[error("window end {end} exceeds the last anchor {anchor} plus the safety margin {margin}")]
    WindowBeyondAnchors { end: u64, anchor: String, margin: u64 },
    #[error("window is empty")]
    EmptyWindow,
    #[error("anchor unresolved: the gap exponent at {lambda} exceeds the evaluation budget")]
    AnchorUnresolved { lambda: String },
    #[error("triple ({xi}, {eta}, {zeta}) not realizable: {reason}")]
    NotRealizable { xi: String, eta: String, zeta: String, reason: String },
    #[error("spectrum input invalid: {0}")]
    BadSpectrumInput(String),
    #[error("ambient dimensions differ ({0} vs {1})")]
    DimMismatch(usize, usize),
    #[error("primes differ ({0} vs {1})")]
    PrimeMismatch(u64, u64),
    #[error("level subgroup does not have finite index (rank {rank} < dim {dim})")]
    LevelNotFiniteIndex { rank: usize, dim: usize },
    #[error("generator has wrong length {got}, ambient dim is {dim}")]
    BadGenerator { got: usize, dim: usize },
    #[error("map is not surjective over Z_p (divisor valuations {0:?})")]
    NotSurjectiveAtP(Vec<u64>),
    #[error("map must have exactly 2 rows and rank 2, got rank {0}")]
    BadMapRank(usize),
    #[error("kernel schedule at level {i}: {reason}")]
    ScheduleViolation { i: u64, reason: String },
    #[error("exponent {exp} exceeds the materialization budget {budget} (base-p digits)")]
    ExponentTooLarge { exp: String, budget: u64 },
    #[error("lift image mismatch at level {i}")]
    ImageMismatch { i: u64 },
    #[error("serialized filtration malformed: {0}")]
    BadSerialization(String),
}
