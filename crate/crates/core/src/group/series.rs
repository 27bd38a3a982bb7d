//! Descending series of finite p-group truncations with exact index data.
//!
//! Four verbal series are computable: iterated p-power subgroups, the lower
//! p-series, the iterated Frattini series, and the dimension subgroup
//! series, alongside the principal congruence filtration of matrix
//! families. Terms are produced along two independent paths:
//!
//! * **structural** — per-family closed forms (coordinate boxes, congruence
//!   levels, uniformizer-power floors), cheap at any truncation depth;
//! * **generic** — the verbal recursion evaluated over a full enumeration
//!   of the group, with power sets and commutator sets taken over every
//!   element of the previous term (never just its generators).
//!
//! The generic path shrinks commutator ranges to central coset
//! representatives, which leaves the computed set of commutators unchanged,
//! and memoizes repeated power/commutator sets by the term order (terms of
//! one descending chain with equal order are equal). Exceeding the element
//! budget truncates a chain with an explicit marker rather than silently
//! degrading.

use std::collections::HashSet;
use std::rc::Rc;

use super::closure::{center, closure, commutator_set, coset_reps, power_set, Enumerated};
use super::oracle::{Element, Family, GroupOracle};
use super::GroupError;

/// Which descending series a chain holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeriesKind {
    /// `G, <G^p>, <G^{p^2}>, ...` — each term generated by the `p^i`-th
    /// powers of the whole group.
    PPower,
    /// `P_1 = G`, `P_i = P_{i-1}^p [P_{i-1}, G]`.
    LowerP,
    /// `Phi_0 = G`, `Phi_i = Phi_{i-1}^p [Phi_{i-1}, Phi_{i-1}]`.
    Frattini,
    /// `D_1 = G`, `D_i = D_{ceil(i/p)}^p prod_{j+l=i} [D_j, D_l]`.
    DimensionSubgroup,
    /// `G_i = ker(SL_n(R) -> SL_n(R/pi^i))` for matrix families.
    PrincipalCongruence,
    /// Externally supplied chain of subgroups; not computable here.
    ExplicitChain,
    /// Chain built from lattice filtration triples; not computable here.
    LatticeTriples,
    /// Chain lifted through a quotient map; not computable here.
    Lifted,
}

/// A series request: which series, how many terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeriesSpec {
    pub kind: SeriesKind,
    pub depth: u64,
}

impl SeriesSpec {
    pub fn new(kind: SeriesKind, depth: u64) -> Result<Self, GroupError> {
        if depth == 0 {
            return Err(GroupError::ZeroDepth);
        }
        Ok(SeriesSpec { kind, depth })
    }
}

/// Family-interpreted closed-form description of a subgroup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StructuralSet {
    Full,
    Trivial,
    /// Cyclic family: elements divisible by `p^e`.
    CyclicPow(u32),
    /// Heisenberg coordinates with valuation floors; requires `z <= x + y`
    /// so the set is a subgroup.
    Box { x: u32, y: u32, z: u32 },
    /// Matrix congruence kernel at level `i >= 1`.
    Congruence(u32),
    /// Semidirect family: torus coordinates divisible by `p^t`, ring part
    /// of uniformizer valuation at least `a`.
    SemidirectTerm { t: u32, a: u32 },
    Product(Box<StructuralSet>, Box<StructuralSet>),
}

fn vp_capped(p: u64, c: u64, cap: u64) -> u64 {
    if c == 0 {
        return cap;
    }
    let mut v = 0;
    let mut c = c;
    while c % p == 0 && v < cap {
        c /= p;
        v += 1;
    }
    v
}

impl StructuralSet {
    pub fn log_order(&self, oracle: &GroupOracle) -> Result<u64, GroupError> {
        match (self, oracle.family()) {
            (StructuralSet::Full, _) => Ok(oracle.log_order()),
            (StructuralSet::Trivial, _) => Ok(0),
            (StructuralSet::CyclicPow(e), Family::Cyclic { k, .. }) => {
                Ok(*k as u64 - (*e as u64).min(*k as u64))
            }
            (StructuralSet::Box { x, y, z }, Family::Unitriangular { k, .. }) => {
                let k = *k as u64;
                Ok((k - (*x as u64).min(k)) + (k - (*y as u64).min(k)) + (k - (*z as u64).min(k)))
            }
            (StructuralSet::Congruence(i), Family::SlCongruence { ring, n }) => {
                let k = ring.k() as u64;
                let lvl = (*i as u64).max(1).min(k);
                Ok((n * n - 1) as u64 * (k - lvl))
            }
            (StructuralSet::SemidirectTerm { t, a }, Family::CyclotomicSemidirect { d, ring }) => {
                let k = ring.k() as u64;
                let cap = ring.val_cap();
                Ok(*d as u64 * (k - (*t as u64).min(k)) + (cap - (*a as u64).min(cap)))
            }
            (StructuralSet::Product(sa, sb), Family::Product(oa, ob)) => {
                Ok(sa.log_order(oa)? + sb.log_order(ob)?)
            }
            _ => Err(GroupError::BadRingKind),
        }
    }

    pub fn contains(&self, oracle: &GroupOracle, g: &Element) -> Result<bool, GroupError> {
        if g.coords().len() != oracle.width() {
            return Err(GroupError::BadElement { got: g.coords().len(), need: oracle.width() });
        }
        match (self, oracle.family()) {
            (StructuralSet::Full, _) => Ok(true),
            (StructuralSet::Trivial, _) => Ok(oracle.is_identity(g)),
            (StructuralSet::CyclicPow(e), Family::Cyclic { p, k }) => {
                let floor = (*e as u64).min(*k as u64);
                Ok(vp_capped(*p, g.coords()[0], *k as u64) >= floor)
            }
            (StructuralSet::Box { x, y, z }, Family::Unitriangular { p, k }) => {
                let k = *k as u64;
                let c = g.coords();
                Ok(vp_capped(*p, c[0], k) >= (*x as u64).min(k)
                    && vp_capped(*p, c[1], k) >= (*y as u64).min(k)
                    && vp_capped(*p, c[2], k) >= (*z as u64).min(k))
            }
            (StructuralSet::Congruence(i), Family::SlCongruence { ring, .. }) => {
                let lvl = (*i as u64).max(1).min(ring.k() as u64);
                Ok(oracle.congruence_level(g)? >= lvl)
            }
            (StructuralSet::SemidirectTerm { t, a }, Family::CyclotomicSemidirect { d, ring }) => {
                let k = ring.k() as u64;
                let tfloor = (*t as u64).min(k);
                for c in &g.coords()[..*d] {
                    if vp_capped(ring.p(), *c, k) < tfloor {
                        return Ok(false);
                    }
                }
                let afloor = (*a as u64).min(ring.val_cap());
                let aval = ring.valuation(&g.coords()[*d..]).unwrap_or(ring.val_cap());
                Ok(aval >= afloor)
            }
            (StructuralSet::Product(sa, sb), Family::Product(oa, ob)) => {
                let (gl, gr) = g.coords().split_at(oa.width());
                let l = Element::from_reduced(gl.to_vec());
                let r = Element::from_reduced(gr.to_vec());
                Ok(sa.contains(oa, &l)? && sb.contains(ob, &r)?)
            }
            _ => Err(GroupError::BadRingKind),
        }
    }

    /// A small generating set realizing this shape inside the family.
    pub fn generators(&self, oracle: &GroupOracle) -> Result<Vec<Element>, GroupError> {
        match (self, oracle.family()) {
            (StructuralSet::Full, _) => Ok(oracle.generators()),
            (StructuralSet::Trivial, _) => Ok(Vec::new()),
            (StructuralSet::CyclicPow(e), Family::Cyclic { p, k }) => {
                if *e as u64 >= *k as u64 {
                    return Ok(Vec::new());
                }
                let coord = p.pow(*e);
                Ok(vec![oracle.element_from_coords(vec![coord])?])
            }
            (StructuralSet::Box { x, y, z }, Family::Unitriangular { p, k }) => {
                let mut gens = Vec::new();
                for (pos, e) in [(0usize, *x), (1, *y), (2, *z)] {
                    if (e as u64) < *k as u64 {
                        let mut coords = vec![0u64; 3];
                        coords[pos] = p.pow(e);
                        gens.push(oracle.element_from_coords(coords)?);
                    }
                }
                Ok(gens)
            }
            (StructuralSet::Congruence(i), Family::SlCongruence { ring, n }) => {
                let lvl = (*i).max(1).min(ring.k());
                Ok(oracle.sl_level_generators(ring, *n, lvl))
            }
            (StructuralSet::SemidirectTerm { t, a }, Family::CyclotomicSemidirect { d, ring }) => {
                let mut gens = Vec::new();
                if (*t as u64) < ring.k() as u64 {
                    for j in 0..*d {
                        let mut torus = vec![0u64; *d];
                        torus[j] = ring.p().pow(*t);
                        gens.push(oracle.semidirect(&torus, &ring.zero())?);
                    }
                }
                // pi^(a+r) for r < phi additively span the valuation floor
                for r in 0..ring.width() as u64 {
                    let e = *a as u64 + r;
                    if e < ring.val_cap() {
                        gens.push(
                            oracle.semidirect(&vec![0u64; *d], &ring.uniformizer_pow(e))?,
                        );
                    }
                }
                Ok(gens)
            }
            (StructuralSet::Product(sa, sb), Family::Product(oa, ob)) => {
                let mut gens = Vec::new();
                let idl = oa.identity();
                let idr = ob.identity();
                for g in sa.generators(oa)? {
                    let mut coords = g.into_coords();
                    coords.extend(idr.coords());
                    gens.push(Element::from_reduced(coords));
                }
                for g in sb.generators(ob)? {
                    let mut coords = idl.coords().to_vec();
                    coords.extend(g.into_coords());
                    gens.push(Element::from_reduced(coords));
                }
                Ok(gens)
            }
            _ => Err(GroupError::BadRingKind),
        }
    }

    /// Join of two shapes of the same kind, where the closed form of the
    /// generated subgroup is again a shape: coordinatewise minima.
    pub fn join(&self, other: &StructuralSet) -> Option<StructuralSet> {
        use StructuralSet::*;
        match (self, other) {
            (Full, _) | (_, Full) => Some(Full),
            (Trivial, s) | (s, Trivial) => Some(s.clone()),
            (CyclicPow(a), CyclicPow(b)) => Some(CyclicPow(*a.min(b))),
            (Box { x, y, z }, Box { x: x2, y: y2, z: z2 }) => {
                Some(Box { x: *x.min(x2), y: *y.min(y2), z: *z.min(z2) })
            }
            (Congruence(a), Congruence(b)) => Some(Congruence(*a.min(b))),
            (SemidirectTerm { t, a }, SemidirectTerm { t: t2, a: a2 }) => {
                Some(SemidirectTerm { t: *t.min(t2), a: *a.min(a2) })
            }
            (Product(la, ra), Product(lb, rb)) => Some(Product(
                std::boxed::Box::new(la.join(lb)?),
                std::boxed::Box::new(ra.join(rb)?),
            )),
            _ => None,
        }
    }
}

/// A subgroup known by generators plus, optionally, a full enumeration
/// and/or a structural closed form. When both an enumeration and a shape
/// are present they describe the same subgroup.
#[derive(Debug, Clone)]
pub struct SubgroupHandle {
    generators: Vec<Element>,
    log_order: u64,
    shape: Option<StructuralSet>,
    elements: Option<HashSet<Element>>,
}

impl SubgroupHandle {
    pub fn from_enumerated(en: Enumerated) -> Self {
        SubgroupHandle {
            generators: en.essential_generators,
            log_order: en.log_order,
            shape: None,
            elements: Some(en.set),
        }
    }

    pub fn structural(oracle: &GroupOracle, shape: StructuralSet) -> Result<Self, GroupError> {
        Ok(SubgroupHandle {
            generators: shape.generators(oracle)?,
            log_order: shape.log_order(oracle)?,
            shape: Some(shape),
            elements: None,
        })
    }

    pub fn full(oracle: &GroupOracle) -> Self {
        SubgroupHandle::structural(oracle, StructuralSet::Full)
            .expect("the full shape fits every family")
    }

    pub fn trivial(oracle: &GroupOracle) -> Self {
        SubgroupHandle::structural(oracle, StructuralSet::Trivial)
            .expect("the trivial shape fits every family")
    }

    pub fn generators(&self) -> &[Element] {
        &self.generators
    }

    pub fn log_order(&self) -> u64 {
        self.log_order
    }

    pub fn shape(&self) -> Option<&StructuralSet> {
        self.shape.as_ref()
    }

    pub fn elements(&self) -> Option<&HashSet<Element>> {
        self.elements.as_ref()
    }

    pub fn is_trivial(&self) -> bool {
        self.log_order == 0
    }

    /// Exact membership: enumerated set if present, structural predicate
    /// otherwise.
    pub fn contains(&self, oracle: &GroupOracle, g: &Element) -> Result<bool, GroupError> {
        if let Some(set) = &self.elements {
            let hit = set.contains(g);
            if let Some(shape) = &self.shape {
                debug_assert_eq!(shape.contains(oracle, g)?, hit, "shape vs enumeration");
            }
            return Ok(hit);
        }
        match &self.shape {
            Some(shape) => shape.contains(oracle, g),
            None => unreachable!("handle carries a shape or an enumeration"),
        }
    }

    /// Enumerate on demand; the closure of the stored generators must
    /// reproduce the recorded order, which cross-checks structural shapes.
    pub fn ensure_elements(
        &mut self,
        oracle: &GroupOracle,
        budget: u64,
    ) -> Result<&HashSet<Element>, GroupError> {
        if self.elements.is_none() {
            let en = closure(oracle, &self.generators, budget)?;
            assert_eq!(
                en.log_order, self.log_order,
                "generator closure disagrees with the recorded subgroup order"
            );
            if let Some(shape) = &self.shape {
                debug_assert!(
                    en.set.iter().take(64).all(|g| shape.contains(oracle, g).unwrap_or(false)),
                    "enumeration escapes the structural shape"
                );
            }
            self.elements = Some(en.set);
        }
        Ok(self.elements.as_ref().expect("just ensured"))
    }
}

/// A computed descending chain `terms[0] = G, terms[1], ...`, positionally
/// indexed.
#[derive(Debug, Clone)]
pub struct SeriesChain {
    pub kind: SeriesKind,
    pub ambient_log_order: u64,
    pub terms: Vec<SubgroupHandle>,
    /// First index that was *not* computed because a budget ran out.
    pub truncated_at: Option<u64>,
}

impl SeriesChain {
    /// `log_p |G : terms[i]|`.
    pub fn log_index(&self, i: u64) -> Option<u64> {
        self.terms.get(i as usize).map(|t| self.ambient_log_order - t.log_order())
    }

    /// Last computed index.
    pub fn last_index(&self) -> u64 {
        self.terms.len() as u64 - 1
    }

    /// Index of the first trivial term, if the chain descended that far.
    pub fn saturation_index(&self) -> Option<u64> {
        self.terms.iter().position(|t| t.is_trivial()).map(|i| i as u64)
    }
}

fn ceil_log_p(p: u64, i: u64) -> u32 {
    // smallest e >= 0 with p^e >= i
    let mut e = 0;
    let mut pe: u64 = 1;
    while pe < i {
        pe = pe.saturating_mul(p);
        e += 1;
    }
    e
}

fn dimension_box_exponents(p: u64, i: u64) -> (u32, u32) {
    // alpha = ceil(log_p i); beta = min { s : 2 p^s >= i }
    let alpha = ceil_log_p(p, i);
    let mut beta = 0;
    let mut pe: u64 = 1;
    while 2 * pe < i {
        pe = pe.saturating_mul(p);
        beta += 1;
    }
    (alpha, beta)
}

/// Closed-form term of the series at index `i`, when the family has one.
fn structural_term(oracle: &GroupOracle, kind: SeriesKind, i: u64) -> Option<StructuralSet> {
    use SeriesKind::*;
    if i == 0 {
        return Some(StructuralSet::Full);
    }
    match (oracle.family(), kind) {
        (Family::Cyclic { .. }, PPower) | (Family::Cyclic { .. }, Frattini) => {
            Some(StructuralSet::CyclicPow(i.min(u32::MAX as u64) as u32))
        }
        (Family::Cyclic { .. }, LowerP) => {
            Some(StructuralSet::CyclicPow((i - 1).min(u32::MAX as u64) as u32))
        }
        (Family::Cyclic { p, .. }, DimensionSubgroup) => {
            Some(StructuralSet::CyclicPow(ceil_log_p(*p, i)))
        }
        (Family::Coordinates { .. }, PPower) | (Family::Coordinates { .. }, Frattini) => {
            Some(StructuralSet::Trivial)
        }
        (Family::Coordinates { .. }, LowerP) | (Family::Coordinates { .. }, DimensionSubgroup) => {
            Some(if i == 1 { StructuralSet::Full } else { StructuralSet::Trivial })
        }
        // Heisenberg closed forms hold for odd p only: at p = 2 the square
        // of a generic element already reaches the commutator line.
        (Family::Unitriangular { p, .. }, _) if *p == 2 => None,
        (Family::Unitriangular { .. }, PPower) => {
            let e = i.min(u32::MAX as u64) as u32;
            Some(StructuralSet::Box { x: e, y: e, z: e })
        }
        (Family::Unitriangular { .. }, Frattini) => {
            let e = i.min(u32::MAX as u64) as u32;
            Some(StructuralSet::Box { x: e, y: e, z: e - 1 })
        }
        (Family::Unitriangular { .. }, LowerP) => {
            let e = (i - 1).min(u32::MAX as u64) as u32;
            Some(StructuralSet::Box { x: e, y: e, z: e.saturating_sub(1) })
        }
        (Family::Unitriangular { p, .. }, DimensionSubgroup) => {
            let (alpha, beta) = dimension_box_exponents(*p, i);
            Some(StructuralSet::Box { x: alpha, y: alpha, z: beta })
        }
        (Family::SlCongruence { .. }, LowerP) | (Family::SlCongruence { .. }, PrincipalCongruence) => {
            Some(StructuralSet::Congruence(i.min(u32::MAX as u64) as u32))
        }
        (Family::CyclotomicSemidirect { .. }, LowerP) => {
            let e = (i - 1).min(u32::MAX as u64) as u32;
            Some(StructuralSet::SemidirectTerm { t: e, a: e })
        }
        (Family::Product(oa, ob), kind) => {
            let sa = structural_term(oa, kind, i)?;
            let sb = structural_term(ob, kind, i)?;
            Some(StructuralSet::Product(Box::new(sa), Box::new(sb)))
        }
        _ => None,
    }
}

enum Limit {
    Depth(u64),
    Saturation(u64),
}

fn structural_chain(
    oracle: &GroupOracle,
    kind: SeriesKind,
    limit: &Limit,
) -> Result<Option<SeriesChain>, GroupError> {
    let mut terms = Vec::new();
    let mut i = 0u64;
    loop {
        let Some(shape) = structural_term(oracle, kind, i) else {
            return Ok(None);
        };
        let handle = SubgroupHandle::structural(oracle, shape)?;
        let trivial = handle.is_trivial();
        terms.push(handle);
        match limit {
            Limit::Depth(d) => {
                if i == *d {
                    break;
                }
            }
            Limit::Saturation(cap) => {
                if trivial {
                    break;
                }
                if i == *cap {
                    return Err(GroupError::HorizonUnresolved(*cap));
                }
            }
        }
        i += 1;
    }
    Ok(Some(SeriesChain {
        kind,
        ambient_log_order: oracle.log_order(),
        terms,
        truncated_at: None,
    }))
}

/// Memoizing engine for the generic verbal recursion over one chain. All
/// memo keys are term orders, which identify terms uniquely inside a single
/// descending chain.
struct GenericEngine<'a> {
    oracle: &'a GroupOracle,
    budget: u64,
    pair_budget: u64,
    central: Vec<Element>,
    reps_memo: Vec<(u64, Rc<Vec<Element>>)>,
    comm_memo: Vec<((u64, u64), Rc<HashSet<Element>>)>,
    pow_memo: Vec<(u64, Rc<HashSet<Element>>)>,
}

impl<'a> GenericEngine<'a> {
    fn new(oracle: &'a GroupOracle, full: &Enumerated, budget: u64) -> Self {
        let central = center(oracle, &full.set, &oracle.generators());
        GenericEngine {
            oracle,
            budget,
            pair_budget: budget.saturating_mul(16),
            central,
            reps_memo: Vec::new(),
            comm_memo: Vec::new(),
            pow_memo: Vec::new(),
        }
    }

    fn reps(&mut self, term: &Enumerated) -> Rc<Vec<Element>> {
        if let Some((_, r)) = self.reps_memo.iter().find(|(l, _)| *l == term.log_order) {
            return Rc::clone(r);
        }
        let central_in: Vec<Element> = self
            .central
            .iter()
            .filter(|z| term.set.contains(*z))
            .cloned()
            .collect();
        let reps = Rc::new(coset_reps(self.oracle, &term.set, &central_in));
        self.reps_memo.push((term.log_order, Rc::clone(&reps)));
        reps
    }

    fn commutators(
        &mut self,
        a: &Enumerated,
        b: &Enumerated,
    ) -> Result<Rc<HashSet<Element>>, GroupError> {
        let key = (a.log_order.max(b.log_order), a.log_order.min(b.log_order));
        if let Some((_, c)) = self.comm_memo.iter().find(|(k, _)| *k == key) {
            return Ok(Rc::clone(c));
        }
        let ra = self.reps(a);
        let rb = self.reps(b);
        let set = Rc::new(commutator_set(self.oracle, &ra, &rb, self.pair_budget)?);
        self.comm_memo.push((key, Rc::clone(&set)));
        Ok(set)
    }

    fn pth_powers(&mut self, term: &Enumerated) -> Result<Rc<HashSet<Element>>, GroupError> {
        if let Some((_, s)) = self.pow_memo.iter().find(|(l, _)| *l == term.log_order) {
            return Ok(Rc::clone(s));
        }
        let set = Rc::new(power_set(self.oracle, &term.set, 1)?);
        self.pow_memo.push((term.log_order, Rc::clone(&set)));
        Ok(set)
    }

    fn close_generated(
        &self,
        parts: &[&HashSet<Element>],
    ) -> Result<Enumerated, GroupError> {
        closure(
            self.oracle,
            parts.iter().flat_map(|s| s.iter()),
            self.budget,
        )
    }
}

fn generic_chain(
    oracle: &GroupOracle,
    kind: SeriesKind,
    limit: &Limit,
    budget: u64,
) -> Result<SeriesChain, GroupError> {
    let full = closure(oracle, &oracle.generators(), budget).map_err(|e| match e {
        GroupError::BudgetExceeded { .. } => GroupError::NoStructuralSeries,
        other => other,
    })?;
    assert_eq!(full.log_order, oracle.log_order(), "generators fill the truncation");
    let mut engine = GenericEngine::new(oracle, &full, budget);
    let full = Rc::new(full);

    // terms[i] as enumerations; index 0 is G itself
    let mut computed: Vec<Rc<Enumerated>> = vec![Rc::clone(&full)];
    let mut truncated_at = None;
    let mut i = 1u64;
    loop {
        match limit {
            Limit::Depth(d) => {
                if i > *d {
                    break;
                }
            }
            Limit::Saturation(cap) => {
                if computed.last().expect("nonempty").log_order == 0 {
                    break;
                }
                if i > *cap {
                    return Err(GroupError::HorizonUnresolved(*cap));
                }
            }
        }
        // Once the chain reaches the trivial subgroup it stays there.
        if computed.last().expect("nonempty").log_order == 0 {
            computed.push(Rc::clone(computed.last().expect("nonempty")));
            i += 1;
            continue;
        }
        // first term of the lower-p and dimension series is G itself
        if i == 1 && matches!(kind, SeriesKind::LowerP | SeriesKind::DimensionSubgroup) {
            computed.push(Rc::clone(&full));
            i += 1;
            continue;
        }
        let next = compute_generic_term(&mut engine, kind, &computed, &full, i);
        match next {
            Ok(en) => computed.push(Rc::new(en)),
            Err(GroupError::BudgetExceeded { .. }) => {
                truncated_at = Some(i);
                break;
            }
            Err(e) => return Err(e),
        }
        i += 1;
    }

    let terms = computed
        .into_iter()
        .map(|rc| {
            let en = Rc::try_unwrap(rc).unwrap_or_else(|rc| (*rc).clone());
            SubgroupHandle::from_enumerated(en)
        })
        .collect();
    Ok(SeriesChain {
        kind,
        ambient_log_order: oracle.log_order(),
        terms,
        truncated_at,
    })
}

fn compute_generic_term(
    engine: &mut GenericEngine,
    kind: SeriesKind,
    computed: &[Rc<Enumerated>],
    full: &Rc<Enumerated>,
    i: u64,
) -> Result<Enumerated, GroupError> {
    match kind {
        SeriesKind::PPower => {
            // powers of the whole group, recomputed fresh at each level:
            // the p^i-th powers need not equal the p-th powers of term i-1
            let p = engine.oracle.p();
            let exp_e: u32 = i.try_into().map_err(|_| GroupError::ModulusTooLarge { p, k: 0 })?;
            let powers = power_set(engine.oracle, &full.set, exp_e)?;
            engine.close_generated(&[&powers])
        }
        SeriesKind::LowerP => {
            let prev = &computed[i as usize - 1];
            let powers = engine.pth_powers(prev)?;
            let comms = engine.commutators(prev, full)?;
            engine.close_generated(&[powers.as_ref(), comms.as_ref()])
        }
        SeriesKind::Frattini => {
            let prev = &computed[i as usize - 1];
            let powers = engine.pth_powers(prev)?;
            let comms = engine.commutators(prev, prev)?;
            engine.close_generated(&[powers.as_ref(), comms.as_ref()])
        }
        SeriesKind::DimensionSubgroup => {
            let p = engine.oracle.p();
            let src = i.div_ceil(p);
            let powers = engine.pth_powers(&computed[src as usize])?;
            let mut parts: Vec<Rc<HashSet<Element>>> = vec![powers];
            for j in 1..i {
                let l = i - j;
                if j > l {
                    break;
                }
                let comms =
                    engine.commutators(&computed[j as usize], &computed[l as usize])?;
                parts.push(comms);
            }
            let borrowed: Vec<&HashSet<Element>> = parts.iter().map(|r| r.as_ref()).collect();
            engine.close_generated(&borrowed)
        }
        _ => unreachable!("verbal kinds only"),
    }
}

fn compute_chain(
    oracle: &GroupOracle,
    kind: SeriesKind,
    limit: Limit,
    budget: u64,
) -> Result<SeriesChain, GroupError> {
    match kind {
        SeriesKind::ExplicitChain | SeriesKind::LatticeTriples | SeriesKind::Lifted => {
            Err(GroupError::ChainKindNotComputable)
        }
        SeriesKind::PrincipalCongruence => match structural_chain(oracle, kind, &limit)? {
            Some(chain) => Ok(chain),
            None => Err(GroupError::NotMatrixFamily),
        },
        _ => match structural_chain(oracle, kind, &limit)? {
            Some(chain) => Ok(chain),
            None => generic_chain(oracle, kind, &limit, budget),
        },
    }
}

/// Terms `0..=spec.depth` of the series. Structural closed forms are used
/// when the family has them; otherwise the verbal recursion runs over a
/// full enumeration within `budget` elements (commutator pair ranges get
/// `16 * budget`). A budget overrun truncates the chain and records where.
pub fn series_terms(
    oracle: &GroupOracle,
    spec: &SeriesSpec,
    budget: u64,
) -> Result<SeriesChain, GroupError> {
    if spec.depth == 0 {
        return Err(GroupError::ZeroDepth);
    }
    compute_chain(oracle, spec.kind, Limit::Depth(spec.depth), budget)
}

/// Same terms as [`series_terms`], but forced through the verbal
/// recursion even when the family has a structural closed form. Useful
/// as an independent cross-check of the closed forms on small groups.
pub fn series_terms_generic(
    oracle: &GroupOracle,
    spec: &SeriesSpec,
    budget: u64,
) -> Result<SeriesChain, GroupError> {
    if spec.depth == 0 {
        return Err(GroupError::ZeroDepth);
    }
    generic_chain(oracle, spec.kind, &Limit::Depth(spec.depth), budget)
}

/// Extend the series until its first trivial term (at most `cap` terms).
pub fn series_terms_to_saturation(
    oracle: &GroupOracle,
    kind: SeriesKind,
    budget: u64,
    cap: u64,
) -> Result<SeriesChain, GroupError> {
    compute_chain(oracle, kind, Limit::Saturation(cap), budget)
}

/// Largest index at which `log_p |G : term_i|` agrees between two
/// truncation depths of the same family. Density data extracted from a
/// truncated chain is only meaningful up to this horizon.
pub fn stability_horizon(
    kind: SeriesKind,
    shallow: &GroupOracle,
    deep: &GroupOracle,
    budget: u64,
) -> Result<u64, GroupError> {
    const CAP: u64 = 8192;
    let cs = series_terms_to_saturation(shallow, kind, budget, CAP)?;
    let cd = series_terms_to_saturation(deep, kind, budget, CAP)?;
    if cs.truncated_at.is_some() || cd.truncated_at.is_some() {
        return Err(GroupError::HorizonUnresolved(CAP));
    }
    // past saturation the index is constant at log |G|
    let den = |c: &SeriesChain, i: u64| c.log_index(i).unwrap_or(c.ambient_log_order);
    let scan_to = cs.last_index().max(cd.last_index()) + 1;
    let mut horizon = 0;
    for i in 0..=scan_to {
        if den(&cs, i) == den(&cd, i) {
            horizon = i;
        } else {
            return Ok(i - 1);
        }
    }
    // saturated indexes of distinct depths differ, so a disagreement must
    // appear within the scanned range
    debug_assert!(den(&cs, scan_to) != den(&cd, scan_to));
    Ok(horizon)
}

/// log_p of the order of `g` modulo a series term: the least `e` with
/// `g^(p^e)` inside the term. The guard trips only on truncation-artifact
/// inputs whose coset order fails to be a p-power within the group bound.
pub fn cyclic_order_mod_level(
    oracle: &GroupOracle,
    g: &Element,
    term: &SubgroupHandle,
) -> Result<u64, GroupError> {
    let mut h = g.clone();
    let mut e = 0u64;
    while !term.contains(oracle, &h)? {
        if e > oracle.log_order() {
            return Err(GroupError::OrderNotPPower(e));
        }
        h = oracle.pth_power(&h);
        e += 1;
    }
    Ok(e)
}

/// Result of the powerful/uniform diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerfulReport {
    /// `[H, H]` lands inside the subgroup generated by p-th powers.
    pub powerful: bool,
    /// For each checked index `i`: does `D_{p i} = (D_i)^p` hold?
    pub dim_power_law: Vec<(u64, bool)>,
}

/// Check `[H, H] <= H^p` (odd p) and, given a dimension-subgroup chain,
/// the power law `D_{p i} = D_i^p` for every index where both sides were
/// computed.
pub fn powerful_uniform_check(
    oracle: &GroupOracle,
    subgroup: &mut SubgroupHandle,
    dchain: Option<&mut SeriesChain>,
    budget: u64,
) -> Result<PowerfulReport, GroupError> {
    if oracle.p() == 2 {
        return Err(GroupError::OddPrimeOnly(2));
    }
    subgroup.ensure_elements(oracle, budget)?;
    let set = subgroup.elements().expect("just ensured").clone();
    let gens = subgroup.generators().to_vec();
    let central_in = center(oracle, &set, &gens);
    let reps = coset_reps(oracle, &set, &central_in);
    let comms = commutator_set(oracle, &reps, &reps, budget.saturating_mul(16))?;
    let powers = power_set(oracle, &set, 1)?;
    let power_subgroup = closure(oracle, powers.iter(), budget)?;
    let powerful = comms.iter().all(|c| power_subgroup.set.contains(c));

    let mut dim_power_law = Vec::new();
    if let Some(chain) = dchain {
        let p = oracle.p();
        let last = chain.last_index();
        for i in 1..=last {
            let Some(pi) = i.checked_mul(p).filter(|&pi| pi <= last) else {
                break;
            };
            let base = chain.terms[i as usize].ensure_elements(oracle, budget)?.clone();
            let powered = power_set(oracle, &base, 1)?;
            let powered = closure(oracle, powered.iter(), budget)?;
            let target = chain.terms[pi as usize].ensure_elements(oracle, budget)?;
            dim_power_law.push((i, powered.set == *target));
        }
    }
    Ok(PowerfulReport { powerful, dim_power_law })
}

/// Conjugate the term's generators by pseudorandom words and test
/// membership: a cheap non-normality detector for computed series terms.
pub fn spot_check_normal(
    oracle: &GroupOracle,
    term: &SubgroupHandle,
    seed: u64,
    samples: usize,
) -> Result<bool, GroupError> {
    for s in 0..samples {
        let g = oracle.sample_word(seed.wrapping_add(s as u64).wrapping_mul(0x9e37) | 1, 8);
        let gi = oracle.inverse(&g);
        for t in term.generators() {
            let conj = oracle.multiply(&oracle.multiply(&gi, t), &g);
            if !term.contains(oracle, &conj)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{FinLocalRing, DEFAULT_BUDGET};

    fn chain(oracle: &GroupOracle, kind: SeriesKind, depth: u64) -> SeriesChain {
        series_terms(oracle, &SeriesSpec::new(kind, depth).unwrap(), DEFAULT_BUDGET).unwrap()
    }

    fn force_generic(oracle: &GroupOracle, kind: SeriesKind, depth: u64) -> SeriesChain {
        generic_chain(oracle, kind, &Limit::Depth(depth), DEFAULT_BUDGET).unwrap()
    }

    fn assert_same_terms(a: &SeriesChain, b: &SeriesChain, oracle: &GroupOracle) {
        assert_eq!(a.terms.len(), b.terms.len());
        for (i, (ta, tb)) in a.terms.iter().zip(&b.terms).enumerate() {
            assert_eq!(ta.log_order(), tb.log_order(), "term {i} order");
            // cross-check membership of each side's generators in the other
            for g in ta.generators() {
                assert!(tb.contains(oracle, g).unwrap(), "term {i} membership");
            }
            for g in tb.generators() {
                assert!(ta.contains(oracle, g).unwrap(), "term {i} membership");
            }
        }
    }

    #[test]
    fn abelian_series_all_reduce_to_power_subgroups() {
        let g = GroupOracle::cyclic(3, 4).unwrap();
        for kind in [
            SeriesKind::PPower,
            SeriesKind::LowerP,
            SeriesKind::Frattini,
            SeriesKind::DimensionSubgroup,
        ] {
            let structural = chain(&g, kind, 6);
            let generic = force_generic(&g, kind, 6);
            assert_same_terms(&structural, &generic, &g);
        }
        // indices: for the p-power and Frattini series each step drops one
        let c = chain(&g, SeriesKind::PPower, 6);
        for i in 0..=4 {
            assert_eq!(c.log_index(i), Some(i.min(4)));
        }
    }

    #[test]
    fn heisenberg_structural_forms_match_generic_recursion() {
        let g = GroupOracle::unitriangular(3, 2).unwrap();
        for kind in [
            SeriesKind::PPower,
            SeriesKind::LowerP,
            SeriesKind::Frattini,
            SeriesKind::DimensionSubgroup,
        ] {
            let structural = chain(&g, kind, 8);
            let generic = force_generic(&g, kind, 8);
            assert_same_terms(&structural, &generic, &g);
        }
    }

    #[test]
    fn heisenberg_dimension_series_small_terms() {
        // D_2 = box(1,1,0), D_3 = box(1,1,1), D_4 = box(2,2,1)
        let g = GroupOracle::unitriangular(3, 3).unwrap();
        let c = chain(&g, SeriesKind::DimensionSubgroup, 4);
        let expect = [
            StructuralSet::Full,
            StructuralSet::Box { x: 0, y: 0, z: 0 },
            StructuralSet::Box { x: 1, y: 1, z: 0 },
            StructuralSet::Box { x: 1, y: 1, z: 1 },
            StructuralSet::Box { x: 2, y: 2, z: 1 },
        ];
        for (i, shape) in expect.iter().enumerate() {
            assert_eq!(
                c.terms[i].log_order(),
                shape.log_order(&g).unwrap(),
                "term {i}"
            );
        }
    }

    #[test]
    fn heisenberg_at_two_falls_back_to_generic() {
        // squares of the mod-4 Heisenberg group already cover the center:
        // the box closed forms are invalid at p = 2
        let g = GroupOracle::unitriangular(2, 2).unwrap();
        let c = chain(&g, SeriesKind::PPower, 2);
        assert!(c.terms[1].shape().is_none(), "generic path must be used");
        let z = g.uni(0, 0, 1).unwrap();
        assert!(c.terms[1].contains(&g, &z).unwrap());
        assert_eq!(c.log_index(1), Some(2));
    }

    #[test]
    fn lower_p_series_of_heisenberg_matches_box_form() {
        let g = GroupOracle::unitriangular(3, 3).unwrap();
        let c = chain(&g, SeriesKind::LowerP, 6);
        // P_i = (p^{i-1}, p^{i-1}, p^{i-2}) box, each exponent capped at k = 3,
        // so log|G : P_i| = 0, 0, 2, 5, 8, 9, 9
        let expect = [0, 0, 2, 5, 8, 9, 9];
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(c.log_index(i as u64), Some(*e), "index {i}");
        }
    }

    #[test]
    fn cyclotomic_lower_p_closed_form_matches_generic() {
        let g = GroupOracle::cyclotomic_semidirect(3, 1, 2, 1).unwrap();
        let structural = chain(&g, SeriesKind::LowerP, 6);
        let generic = force_generic(&g, SeriesKind::LowerP, 6);
        assert_same_terms(&structural, &generic, &g);
        // log|G : P_2| = d + 1
        assert_eq!(structural.log_index(2), Some(2));
    }

    #[test]
    fn sl_congruence_lower_p_matches_generic_at_shallow_depth() {
        for ring in [
            FinLocalRing::integers_mod(2, 2).unwrap(),
            FinLocalRing::poly_mod(2, 2).unwrap(),
            FinLocalRing::integers_mod(3, 2).unwrap(),
        ] {
            let g = GroupOracle::sl_congruence(ring, 3).unwrap();
            let structural = chain(&g, SeriesKind::LowerP, 3);
            let generic = force_generic(&g, SeriesKind::LowerP, 3);
            assert_same_terms(&structural, &generic, &g);
        }
    }

    #[test]
    fn ppower_steps_refine_lower_p_series() {
        // P_i contains G^{p^{i-1}} and the p-power terms sit inside both
        // the Frattini and the dimension terms at matching indices
        let g = GroupOracle::unitriangular(3, 2).unwrap();
        let pp = force_generic(&g, SeriesKind::PPower, 4);
        let lp = force_generic(&g, SeriesKind::LowerP, 5);
        let fr = force_generic(&g, SeriesKind::Frattini, 4);
        for i in 1..=4u64 {
            let lp_term = &lp.terms[i as usize];
            let pp_prev = &pp.terms[i as usize - 1];
            for gen in pp_prev.generators() {
                assert!(lp_term.contains(&g, gen).unwrap(), "G^(p^(i-1)) inside P_{i}");
            }
            let fr_term = &fr.terms[i as usize];
            let pp_term = &pp.terms[i as usize];
            for gen in pp_term.generators() {
                assert!(fr_term.contains(&g, gen).unwrap(), "powers inside Frattini");
            }
        }
        let dim = force_generic(&g, SeriesKind::DimensionSubgroup, 9);
        for i in 1..=2u64 {
            let pp_term = &pp.terms[i as usize];
            let dim_term = &dim.terms[3usize.pow(i as u32)];
            for gen in pp_term.generators() {
                assert!(dim_term.contains(&g, gen).unwrap(), "powers inside D_(p^i)");
            }
        }
    }

    #[test]
    fn stability_horizon_of_abelian_ppower_is_the_depth() {
        let shallow = GroupOracle::cyclic(3, 4).unwrap();
        let deep = GroupOracle::cyclic(3, 5).unwrap();
        assert_eq!(
            stability_horizon(SeriesKind::PPower, &shallow, &deep, DEFAULT_BUDGET).unwrap(),
            4
        );
    }

    #[test]
    fn stability_horizon_of_cyclotomic_lower_p() {
        let k3 = GroupOracle::cyclotomic_semidirect(3, 1, 3, 1).unwrap();
        let k4 = GroupOracle::cyclotomic_semidirect(3, 1, 4, 1).unwrap();
        let k5 = GroupOracle::cyclotomic_semidirect(3, 1, 5, 1).unwrap();
        assert_eq!(
            stability_horizon(SeriesKind::LowerP, &k3, &k4, DEFAULT_BUDGET).unwrap(),
            4
        );
        assert_eq!(
            stability_horizon(SeriesKind::LowerP, &k4, &k5, DEFAULT_BUDGET).unwrap(),
            5
        );
    }

    #[test]
    fn stability_horizon_of_heisenberg_series() {
        let k3 = GroupOracle::unitriangular(3, 3).unwrap();
        let k4 = GroupOracle::unitriangular(3, 4).unwrap();
        // dimension terms agree until the first exponent exceeds depth 3
        assert_eq!(
            stability_horizon(SeriesKind::DimensionSubgroup, &k3, &k4, DEFAULT_BUDGET).unwrap(),
            27
        );
        assert_eq!(
            stability_horizon(SeriesKind::Frattini, &k3, &k4, DEFAULT_BUDGET).unwrap(),
            3
        );
        assert_eq!(
            stability_horizon(SeriesKind::PPower, &k3, &k4, DEFAULT_BUDGET).unwrap(),
            3
        );
    }

    #[test]
    fn congruence_chain_of_sl_product_steps_by_sixteen() {
        let left = GroupOracle::sl_congruence(FinLocalRing::poly_mod(2, 6).unwrap(), 3).unwrap();
        let right =
            GroupOracle::sl_congruence(FinLocalRing::integers_mod(2, 6).unwrap(), 3).unwrap();
        let g = GroupOracle::product(left, right).unwrap();
        let c = chain(&g, SeriesKind::PrincipalCongruence, 6);
        for i in 1..6u64 {
            let step = c.log_index(i + 1).unwrap() - c.log_index(i).unwrap();
            assert_eq!(step, 16, "log of each congruence step");
        }
        assert_eq!(
            stability_horizon(
                SeriesKind::PrincipalCongruence,
                &g,
                &{
                    let l =
                        GroupOracle::sl_congruence(FinLocalRing::poly_mod(2, 7).unwrap(), 3)
                            .unwrap();
                    let r =
                        GroupOracle::sl_congruence(FinLocalRing::integers_mod(2, 7).unwrap(), 3)
                            .unwrap();
                    GroupOracle::product(l, r).unwrap()
                },
                DEFAULT_BUDGET
            )
            .unwrap(),
            6
        );
    }

    #[test]
    fn principal_congruence_requires_matrix_families() {
        let g = GroupOracle::unitriangular(3, 2).unwrap();
        let err = series_terms(
            &g,
            &SeriesSpec::new(SeriesKind::PrincipalCongruence, 3).unwrap(),
            DEFAULT_BUDGET,
        )
        .unwrap_err();
        assert_eq!(err, GroupError::NotMatrixFamily);
        let err = series_terms(
            &g,
            &SeriesSpec::new(SeriesKind::ExplicitChain, 3).unwrap(),
            DEFAULT_BUDGET,
        )
        .unwrap_err();
        assert_eq!(err, GroupError::ChainKindNotComputable);
    }

    #[test]
    fn budget_overrun_truncates_with_marker() {
        // tiny budget: the mod-4 Heisenberg group itself does not fit
        let g = GroupOracle::unitriangular(2, 3).unwrap();
        let err = series_terms(
            &g,
            &SeriesSpec::new(SeriesKind::LowerP, 4).unwrap(),
            16,
        )
        .unwrap_err();
        assert_eq!(err, GroupError::NoStructuralSeries);
        // enough to enumerate G but the pair budget still rules: use a
        // budget that lets term 1 finish and watch deeper terms truncate
        let g = GroupOracle::unitriangular(2, 2).unwrap();
        let c = series_terms(&g, &SeriesSpec::new(SeriesKind::LowerP, 5).unwrap(), 64).unwrap();
        assert!(c.truncated_at.is_none());
        assert_eq!(c.terms.len(), 6);
    }

    #[test]
    fn cyclic_order_mod_congruence_levels() {
        // g in the first congruence kernel but not the second has order
        // p^{i-1} modulo the i-th kernel
        for p in [2u64, 3] {
            let k = 9;
            let ring = FinLocalRing::integers_mod(p, k).unwrap();
            let g = GroupOracle::sl_congruence(ring.clone(), 3).unwrap();
            // I + p E_12: regular first power at p = 2 as well
            let mut coords = g.identity().into_coords();
            coords[1] = p;
            let x = g.element_from_coords(coords).unwrap();
            assert_eq!(g.congruence_level(&x).unwrap(), 1);
            for i in 2..=k as u64 {
                let term =
                    SubgroupHandle::structural(&g, StructuralSet::Congruence(i as u32)).unwrap();
                assert_eq!(
                    cyclic_order_mod_level(&g, &x, &term).unwrap(),
                    i - 1,
                    "p = {p}, level {i}"
                );
            }
        }
    }

    #[test]
    fn cyclic_order_in_truncated_poly_ring_is_logarithmic() {
        // over F_p[t]/(t^k) every unipotent element has order at most
        // p^{ceil(log_p k)}
        let p = 2u64;
        let k = 12u32;
        let ring = FinLocalRing::poly_mod(p, k).unwrap();
        let g = GroupOracle::sl_congruence(ring, 3).unwrap();
        let trivial = SubgroupHandle::trivial(&g);
        let bound = (k as f64).log2().ceil() as u64;
        for gen in g.generators() {
            let e = cyclic_order_mod_level(&g, &gen, &trivial).unwrap();
            assert!(e <= bound, "order exponent {e} exceeds {bound}");
        }
    }

    #[test]
    fn powerful_checks_separate_abelian_from_heisenberg() {
        let a = GroupOracle::cyclic(3, 3).unwrap();
        let mut h = SubgroupHandle::full(&a);
        let report = powerful_uniform_check(&a, &mut h, None, DEFAULT_BUDGET).unwrap();
        assert!(report.powerful);

        let g = GroupOracle::unitriangular(3, 3).unwrap();
        let mut h = SubgroupHandle::full(&g);
        let mut dchain = chain(&g, SeriesKind::DimensionSubgroup, 12);
        let report =
            powerful_uniform_check(&g, &mut h, Some(&mut dchain), DEFAULT_BUDGET).unwrap();
        assert!(!report.powerful, "the commutator line escapes the cube subgroup");
        assert!(!report.dim_power_law.is_empty());
        for (i, ok) in &report.dim_power_law {
            assert!(ok, "D_(p i) = D_i^p at i = {i}");
        }

        let two = GroupOracle::unitriangular(2, 2).unwrap();
        let mut h = SubgroupHandle::full(&two);
        assert_eq!(
            powerful_uniform_check(&two, &mut h, None, DEFAULT_BUDGET).unwrap_err(),
            GroupError::OddPrimeOnly(2)
        );
    }

    #[test]
    fn series_terms_pass_normality_spot_checks() {
        let g = GroupOracle::unitriangular(3, 2).unwrap();
        for kind in [SeriesKind::LowerP, SeriesKind::Frattini, SeriesKind::DimensionSubgroup] {
            let c = chain(&g, kind, 5);
            for term in &c.terms {
                assert!(spot_check_normal(&g, term, 7, 12).unwrap());
            }
        }
        let g = GroupOracle::cyclotomic_semidirect(3, 1, 3, 2).unwrap();
        let c = chain(&g, SeriesKind::LowerP, 5);
        for term in &c.terms {
            assert!(spot_check_normal(&g, term, 11, 12).unwrap());
        }
    }

    #[test]
    fn structural_join_takes_coordinate_minima() {
        let a = StructuralSet::Box { x: 2, y: 1, z: 1 };
        let b = StructuralSet::Box { x: 1, y: 3, z: 2 };
        assert_eq!(a.join(&b), Some(StructuralSet::Box { x: 1, y: 1, z: 1 }));
        assert_eq!(a.join(&StructuralSet::Full), Some(StructuralSet::Full));
        assert_eq!(
            StructuralSet::Congruence(3).join(&StructuralSet::Congruence(5)),
            Some(StructuralSet::Congruence(3))
        );
        assert_eq!(a.join(&StructuralSet::Congruence(1)), None);
    }

    #[test]
    fn handle_enumeration_validates_structural_orders() {
        let g = GroupOracle::cyclotomic_semidirect(3, 1, 2, 1).unwrap();
        let c = chain(&g, SeriesKind::LowerP, 4);
        for (i, term) in c.terms.iter().enumerate() {
            let mut term = term.clone();
            let set = term.ensure_elements(&g, DEFAULT_BUDGET).unwrap();
            assert_eq!(set.len() as u64, 3u64.pow(term.log_order() as u32), "term {i}");
        }
    }
}
