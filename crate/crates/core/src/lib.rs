//! Exact p-adic and pro-p machinery for Hausdorff dimension experiments:
//! scaled p-adics with certified valuations, lattice filtrations and their
//! lifts, finite p-group engines with verbal series, and density/liminf
//! estimators over descending chains.
pub mod arith;
pub mod estimator;
pub mod group;
pub mod lattice;
pub use arith::*;
pub use estimator::*;
pub use group::*;
pub use lattice::*;
