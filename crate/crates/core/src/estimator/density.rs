//! Exact density numerators `log_p|H G_i : G_i|` along a computed series
//! chain, resolved per level through the cheapest applicable route:
//!
//! 1. a structural join, when both the subgroup and the term carry
//!    closed-form shapes that combine;
//! 2. the cyclic fast path, when the subgroup has at most one generator —
//!    the coset order of the generator modulo the term;
//! 3. enumeration, closing the term's elements together with the
//!    subgroup's generators (or the subgroup's elements with the term's
//!    generators) under the element budget.
//!
//! Levels where the filtration repeats are dropped — density data is
//! insensitive to repeated terms, and the sequence type demands strictly
//! increasing denominators. Level 0 (the whole group) is dropped for the
//! same reason.

use std::collections::HashSet;

use super::EstimatorError;
use crate::arith::{DensityLevel, DensitySequence, HdimEstimate, Rational};
use crate::group::{
    closure, closure_from, cyclic_order_mod_level, Element, Enumerated, GroupOracle, SeriesChain,
    SubgroupHandle,
};
use num_traits::{One, Zero};

/// Whether a subgroup of `p^log` elements fits in the enumeration budget.
fn enumerable(p: u64, log: u64, budget: u64) -> bool {
    log < 64
        && (p as u128)
            .checked_pow(log as u32)
            .map_or(false, |v| v <= budget as u128)
}

fn as_enumerated(handle: &SubgroupHandle) -> Enumerated {
    Enumerated {
        set: handle.elements().expect("caller checked the enumeration").clone(),
        log_order: handle.log_order(),
        essential_generators: handle.generators().to_vec(),
    }
}

/// `log_p` of the join `<A ∪ B>` of two resolvable subgroups.
///
/// Tries the structural join first, then enumerates whichever side already
/// has elements or fits the budget, extending by the other side's
/// generators. The join of a chain term with anything is again a subgroup
/// whenever one side is normal, which is the caller's precondition.
pub fn join_log(
    oracle: &GroupOracle,
    a: &mut SubgroupHandle,
    b: &mut SubgroupHandle,
    budget: u64,
) -> Result<u64, EstimatorError> {
    if let (Some(sa), Some(sb)) = (a.shape(), b.shape()) {
        if let Some(j) = sa.join(sb) {
            return Ok(j.log_order(oracle)?);
        }
    }
    // enumerate the smaller side as the base
    let (base, other) = if a.log_order() <= b.log_order() { (a, b) } else { (b, a) };
    for (x, y) in [(&*base, &*other), (&*other, &*base)] {
        if x.elements().is_some() {
            let en = closure_from(oracle, &as_enumerated(x), y.generators(), budget)?;
            return Ok(en.log_order);
        }
    }
    if enumerable(oracle.p(), base.log_order(), budget) {
        base.ensure_elements(oracle, budget)?;
        let en = closure_from(oracle, &as_enumerated(base), other.generators(), budget)?;
        return Ok(en.log_order);
    }
    Err(EstimatorError::JoinNotComputable)
}

/// The density sequence of `H` along a chain: levels `(i, num_i, den_i)`
/// with `num_i = log_p|H G_i : G_i|` and `den_i = log_p|G : G_i|`, one
/// entry per level where the chain strictly descends.
pub fn density(
    oracle: &GroupOracle,
    h: &SubgroupHandle,
    chain: &mut SeriesChain,
    budget: u64,
) -> Result<DensitySequence, EstimatorError> {
    let ambient = chain.ambient_log_order;
    let mut levels: Vec<DensityLevel> = Vec::new();
    let mut last_den: Option<u64> = None;
    let mut last_num = 0u64;
    for idx in 0..chain.terms.len() {
        let den = ambient - chain.terms[idx].log_order();
        if last_den.map_or(den == 0, |d| den <= d) {
            continue;
        }
        let num = level_num(oracle, h, &mut chain.terms[idx], idx as u64, budget)?;
        assert!(
            num >= last_num,
            "density numerator must be monotone along the filtration"
        );
        last_num = num;
        last_den = Some(den);
        levels.push(DensityLevel::new(idx as u64, num, den));
    }
    Ok(DensitySequence::new(oracle.p(), levels)?)
}

fn level_num(
    oracle: &GroupOracle,
    h: &SubgroupHandle,
    term: &mut SubgroupHandle,
    index: u64,
    budget: u64,
) -> Result<u64, EstimatorError> {
    if h.log_order() == 0 {
        return Ok(0);
    }
    if let (Some(hs), Some(ts)) = (h.shape(), term.shape()) {
        if let Some(join) = hs.join(ts) {
            return Ok(join.log_order(oracle)? - term.log_order());
        }
    }
    if h.generators().len() == 1 {
        return Ok(cyclic_order_mod_level(oracle, &h.generators()[0], term)?);
    }
    if term.elements().is_some() || enumerable(oracle.p(), term.log_order(), budget) {
        term.ensure_elements(oracle, budget)?;
        let en = closure_from(oracle, &as_enumerated(term), h.generators(), budget)?;
        return Ok(en.log_order - term.log_order());
    }
    if h.elements().is_some() {
        let en = closure_from(oracle, &as_enumerated(h), term.generators(), budget)?;
        return Ok(en.log_order - term.log_order());
    }
    Err(EstimatorError::UnresolvableLevel { index })
}

fn log_p_of(p: u64, n: usize) -> u64 {
    let mut n = n as u64;
    let mut e = 0;
    while n % p == 0 {
        n /= p;
        e += 1;
    }
    assert_eq!(n, 1, "intersection order must be a p-power");
    e
}

/// The density sequence of `B ≤ H` along the filtration induced on `H`:
/// levels `(i, log_p|B H_i : H_i|, log_p|H : H_i|)` for `H_i = H ∩ G_i`,
/// again restricted to levels where the induced filtration strictly
/// descends.
pub fn induced_density(
    oracle: &GroupOracle,
    h: &mut SubgroupHandle,
    b: &SubgroupHandle,
    chain: &mut SeriesChain,
    budget: u64,
) -> Result<DensitySequence, EstimatorError> {
    let h_log = h.log_order();
    let h_set: HashSet<Element> = h.ensure_elements(oracle, budget)?.clone();
    for g in b.generators() {
        assert!(h_set.contains(g), "induced density needs B inside H");
    }
    let mut levels: Vec<DensityLevel> = Vec::new();
    let mut last_den: Option<u64> = None;
    for idx in 0..chain.terms.len() {
        let term = &chain.terms[idx];
        let mut inter: Vec<&Element> = Vec::new();
        for g in &h_set {
            if term.contains(oracle, g)? {
                inter.push(g);
            }
        }
        let inter_log = log_p_of(oracle.p(), inter.len());
        let den = h_log - inter_log;
        if last_den.map_or(den == 0, |d| den <= d) {
            continue;
        }
        last_den = Some(den);
        let joint = closure(
            oracle,
            inter.into_iter().chain(b.generators()),
            budget,
        )?;
        levels.push(DensityLevel::new(idx as u64, joint.log_order - inter_log, den));
    }
    Ok(DensitySequence::new(oracle.p(), levels)?)
}

/// A certified proper limit: a density value together with the closed form
/// that justifies treating the window limit as exact. Window convergence
/// alone never constructs one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProperLimitCertificate {
    pub value: Rational,
    pub tag: String,
}

impl ProperLimitCertificate {
    pub fn closed_form(
        value: Rational,
        tag: impl Into<String>,
    ) -> Result<Self, EstimatorError> {
        if value < Rational::zero() || value > Rational::one() {
            return Err(EstimatorError::TargetOutOfRange(value.to_string()));
        }
        Ok(ProperLimitCertificate { value, tag: tag.into() })
    }

    /// Adopts a window estimate only when it already carries an exact value
    /// with a recognized certificate.
    pub fn from_estimate(est: &HdimEstimate) -> Option<Self> {
        match (&est.exact, &est.certificate) {
            (Some(v), Some(c)) => {
                Some(ProperLimitCertificate { value: v.clone(), tag: c.clone() })
            }
            _ => None,
        }
    }
}
