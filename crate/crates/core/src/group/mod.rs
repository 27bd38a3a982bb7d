//! Finite p-group engines.
//!
//! This module complements the lattice machinery with non-abelian finite
//! truncations: local coefficient rings, concrete group families (cyclic,
//! coordinate products, unitriangular/Heisenberg, SL_n congruence kernels,
//! cyclotomic semidirect products, direct products), breadth-first subgroup
//! closure with explicit budgets, and the standard descending series
//! (p-power, lower p-series, Frattini, dimension subgroup, principal
//! congruence) with exact `log_p` index data at a chosen truncation depth.
//!
//! Series terms are computed two ways where possible — family-specific
//! closed forms, and the generic verbal recursion over a full enumeration —
//! and the two paths are cross-checked in tests. Densities extracted from
//! these chains are only meaningful up to the stability horizon of the
//! truncation; see [`stability_horizon`].

mod closure;
mod oracle;
mod ring;
mod series;

pub use closure::{
    center, closure, closure_from, commutator_set, coset_reps, power_set, Enumerated,
    DEFAULT_BUDGET,
};
pub use oracle::{Element, Family, GroupOracle};
pub use ring::{FinLocalRing, RingKind};
pub use series::{
    cyclic_order_mod_level, powerful_uniform_check, series_terms, series_terms_generic,
    series_terms_to_saturation, spot_check_normal, stability_horizon, PowerfulReport, SeriesChain,
    SeriesKind, SeriesSpec,
    StructuralSet, SubgroupHandle,
};

use crate::arith::ArithError;
use thiserror::Error;

/// Errors from group construction, closure, and series computations.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error(transparent)]
    Arith(#[from] ArithError),

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("depth and modulus exponents must be at least 1")]
    ZeroDepth,

    #[error("p^k = {p}^{k} exceeds the 63-bit coordinate range")]
    ModulusTooLarge { p: u64, k: u32 },

    #[error("element has {got} coordinates, this family uses {need}")]
    BadElement { got: usize, need: usize },

    #[error("matrix is outside the congruence kernel (determinant or reduction mismatch)")]
    NotInKernel,

    #[error("matrix dimension {0} is not supported (only n = 2 and n = 3)")]
    BadMatrixDimension(usize),

    #[error("the coefficient ring kind does not fit this family")]
    BadRingKind,

    #[error("the semidirect truncation depth k = {k} must be at least m = {m}")]
    DepthBelowRamification { k: u32, m: u32 },

    #[error("not a unit")]
    NotAUnit,

    #[error("budget of {budget} exceeded while {context}")]
    BudgetExceeded { budget: u64, context: &'static str },

    #[error("no closed-form series of this kind for the family; enumeration exceeded the budget")]
    NoStructuralSeries,

    #[error("series kind describes an externally supplied chain, not a computable recursion")]
    ChainKindNotComputable,

    #[error("this operation requires a matrix (congruence) family")]
    NotMatrixFamily,

    #[error("element order is not a p-power below p^{0}: truncation artifact")]
    OrderNotPPower(u64),

    #[error("series did not saturate within {0} terms")]
    HorizonUnresolved(u64),

    #[error("this check requires an odd prime, got p = {0}")]
    OddPrimeOnly(u64),
}
