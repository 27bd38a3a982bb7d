//! Density estimation over filtration chains, and the constructive side of
//! the dimension-spectrum results: evaluating `log_p|HG_i : G_i| /
//! log_p|G : G_i|` windows for subgroup handles, comparing filtration
//! series pairwise through join excesses, checking the lower-p-series
//! bound and the induced-filtration product rule, building subgroups with
//! prescribed density inside coordinate-product towers, and sampling
//! densities from a certified interval.
//!
//! All comparisons are exact rational arithmetic; tolerances appear only
//! where a finite window stands in for a limit, and every such window
//! carries its cutoff explicitly.

mod chain;
mod compare;
mod density;
mod tower;

pub use chain::{
    chain_build, chain_build_seeded, interval_sample, ChainLevel, ChainState,
    IntervalSampleReport, StepCase, TieBreak,
};
pub use compare::{
    compare_series, lowerp_bound_check, multiplicativity_check, pfd_equality_experiment,
    ComparisonLevel, LowerPBoundReport, MultLevel, MultiplicativityReport, PfdKind, PfdReport,
    SeriesComparison,
};
pub use density::{density, induced_density, join_log, ProperLimitCertificate};
pub use tower::{CoordinateTower, GradedTower, SubTower};

use crate::arith::ArithError;
use crate::group::GroupError;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum EstimatorError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("level {index}: no structural join, enumeration, or cyclic fast path applies")]
    UnresolvableLevel { index: u64 },
    #[error("join of subgroups not computable within the element budget")]
    JoinNotComputable,
    #[error("tower cut sequence must be strictly increasing at level {level}")]
    TowerNotIncreasing { level: u64 },
    #[error("tower depth {depth} exhausted before the ratio fell below the target")]
    TowerDepthExhausted { depth: u64 },
    #[error("target {0} is outside the admissible range")]
    TargetOutOfRange(String),
    #[error("seed data does not fit the tower at level {level}")]
    BadSeed { level: u64 },
    #[error("pairing table must be monotone; violated at position {position}")]
    BadPairing { position: usize },
    #[error("horizon too short: {usable} usable level(s), need at least {need}")]
    HorizonTooShort { usable: u64, need: u64 },
    #[error("proper-limit certificate required but missing")]
    MissingCertificate,
    #[error("subgroup support must select distinct tower coordinates")]
    BadSupport,
}
