//! Breadth-first subgroup closure with explicit element budgets.
//!
//! Closures proceed by incremental generator acceptance: a candidate that
//! already lies in the closure so far is dropped, so the breadth-first
//! frontier only ever multiplies by generators that genuinely enlarge the
//! subgroup — at most `log_p` of the final order many. Verbal subgroup
//! computations (power sets and commutator sets over full enumerations)
//! live here too; commutator sets shrink their input ranges to central
//! coset representatives, which is exact: `[xz, yw] = [x, y]` whenever `z`
//! and `w` are central, so the computed set of commutators is unchanged.

use std::collections::{HashSet, VecDeque};

use super::oracle::{Element, GroupOracle};
use super::GroupError;

/// Default element budget for enumerations: `2^22`.
pub const DEFAULT_BUDGET: u64 = 1 << 22;

/// A fully enumerated subgroup.
#[derive(Debug, Clone)]
pub struct Enumerated {
    pub set: HashSet<Element>,
    /// log_p of the order.
    pub log_order: u64,
    /// The input generators that strictly enlarged the closure, in
    /// acceptance order; they generate the subgroup.
    pub essential_generators: Vec<Element>,
}

fn log_p_order(p: u64, n: usize) -> u64 {
    let mut n = n as u64;
    let mut e = 0;
    while n % p == 0 {
        n /= p;
        e += 1;
    }
    assert_eq!(n, 1, "subgroup order must be a p-power");
    e
}

fn extend_closure(
    oracle: &GroupOracle,
    set: &mut HashSet<Element>,
    accepted: &mut Vec<Element>,
    g: Element,
    budget: u64,
) -> Result<(), GroupError> {
    if set.contains(&g) {
        return Ok(());
    }
    accepted.push(g.clone());
    // Existing elements have been expanded along every previously accepted
    // generator, but not along g: seed the frontier with their g-edges.
    let mut queue: VecDeque<Element> =
        set.iter().map(|y| oracle.multiply(y, &g)).collect();
    queue.push_back(g);
    while let Some(x) = queue.pop_front() {
        if set.contains(&x) {
            continue;
        }
        if set.len() as u64 >= budget {
            return Err(GroupError::BudgetExceeded { budget, context: "subgroup closure" });
        }
        for s in accepted.iter() {
            queue.push_back(oracle.multiply(&x, s));
        }
        set.insert(x);
    }
    Ok(())
}

/// Closure of a generator collection into a full subgroup enumeration.
pub fn closure<'a, I>(oracle: &GroupOracle, gens: I, budget: u64) -> Result<Enumerated, GroupError>
where
    I: IntoIterator<Item = &'a Element>,
{
    let mut set = HashSet::new();
    set.insert(oracle.identity());
    let mut accepted = Vec::new();
    for g in gens {
        extend_closure(oracle, &mut set, &mut accepted, g.clone(), budget)?;
    }
    let log_order = log_p_order(oracle.p(), set.len());
    Ok(Enumerated { set, log_order, essential_generators: accepted })
}

/// Closure of an already enumerated subgroup together with extra
/// generators.
pub fn closure_from<'a, I>(
    oracle: &GroupOracle,
    base: &Enumerated,
    extra: I,
    budget: u64,
) -> Result<Enumerated, GroupError>
where
    I: IntoIterator<Item = &'a Element>,
{
    let mut set = base.set.clone();
    let mut accepted = base.essential_generators.clone();
    for g in extra {
        extend_closure(oracle, &mut set, &mut accepted, g.clone(), budget)?;
    }
    let log_order = log_p_order(oracle.p(), set.len());
    Ok(Enumerated { set, log_order, essential_generators: accepted })
}

/// Elements of `set` commuting with every listed generator. When the
/// generators generate the ambient group this is the center intersected
/// with `set`.
pub fn center<'a, I>(oracle: &GroupOracle, set: I, group_gens: &[Element]) -> Vec<Element>
where
    I: IntoIterator<Item = &'a Element>,
{
    set.into_iter()
        .filter(|x| {
            group_gens
                .iter()
                .all(|s| oracle.multiply(x, s) == oracle.multiply(s, x))
        })
        .cloned()
        .collect()
}

/// One representative per coset of the central subgroup listed in
/// `central` (which must contain the identity and be closed under the
/// group operation within `set`).
pub fn coset_reps(
    oracle: &GroupOracle,
    set: &HashSet<Element>,
    central: &[Element],
) -> Vec<Element> {
    let mut seen: HashSet<Element> = HashSet::with_capacity(set.len());
    let mut reps = Vec::new();
    for x in set {
        if seen.contains(x) {
            continue;
        }
        reps.push(x.clone());
        for z in central {
            seen.insert(oracle.multiply(x, z));
        }
    }
    reps
}

/// `{ x^(p^e) : x in xs }`.
pub fn power_set<'a, I>(
    oracle: &GroupOracle,
    xs: I,
    e: u32,
) -> Result<HashSet<Element>, GroupError>
where
    I: IntoIterator<Item = &'a Element>,
{
    let p = oracle.p();
    let exp = p
        .checked_pow(e)
        .ok_or(GroupError::ModulusTooLarge { p, k: e })?;
    Ok(xs.into_iter().map(|x| oracle.pow(x, exp)).collect())
}

/// `{ [x, y] : x in xs, y in ys }` with inverse caching. Callers should
/// pass central coset representatives; the resulting set is identical to
/// the one over the full ranges.
pub fn commutator_set(
    oracle: &GroupOracle,
    xs: &[Element],
    ys: &[Element],
    pair_budget: u64,
) -> Result<HashSet<Element>, GroupError> {
    let pairs = xs.len() as u64 * ys.len() as u64;
    if pairs > pair_budget {
        return Err(GroupError::BudgetExceeded {
            budget: pair_budget,
            context: "commutator pairs",
        });
    }
    let inv_ys: Vec<Element> = ys.iter().map(|y| oracle.inverse(y)).collect();
    let mut out = HashSet::new();
    for x in xs {
        let inv_x = oracle.inverse(x);
        for (y, inv_y) in ys.iter().zip(&inv_ys) {
            let a = oracle.multiply(&inv_x, inv_y);
            let b = oracle.multiply(&a, x);
            out.insert(oracle.multiply(&b, y));
        }
    }
    Ok(out)
}
