//! Concrete finite p-group families behind a single multiplication oracle.
//!
//! Elements are flat `u64` coordinate vectors, eagerly reduced, so equality
//! and hashing read the canonical form directly. The layouts:
//!
//! * `Cyclic` — one coordinate mod `p^k`.
//! * `Coordinates` — `len` coordinates mod `p`, elementary abelian.
//! * `Unitriangular` — `(a, b, c)` mod `p^k` for the Heisenberg matrix
//!   `I + a E12 + b E23 + c E13`.
//! * `SlCongruence` — row-major `n x n` matrices over a local ring, the
//!   kernel of reduction mod the maximal ideal inside `SL_n`.
//! * `CyclotomicSemidirect` — `d` torus coordinates mod `p^k` followed by
//!   the cyclotomic ring coordinates; the first torus generator acts on the
//!   ring part as multiplication by `zeta`, the others act trivially.
//! * `Product` — concatenation of two factor layouts.

use super::ring::{FinLocalRing, RingKind};
use super::GroupError;

/// A group element: canonical reduced coordinates, hashable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element(Vec<u64>);

impl Element {
    pub fn coords(&self) -> &[u64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<u64> {
        self.0
    }

    /// Wrap coordinates that are already in canonical reduced form.
    pub(crate) fn from_reduced(coords: Vec<u64>) -> Element {
        Element(coords)
    }
}

/// Which finite p-group family an oracle multiplies in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    /// `Z/p^k`, written multiplicatively.
    Cyclic { p: u64, k: u32 },
    /// `(Z/p)^len` with coordinatewise addition.
    Coordinates { p: u64, len: usize },
    /// Upper unitriangular 3x3 matrices over `Z/p^k` (Heisenberg).
    Unitriangular { p: u64, k: u32 },
    /// Congruence kernel `SL_n^1` over `Z/p^k` or `F_p[t]/(t^k)`.
    SlCongruence { ring: FinLocalRing, n: usize },
    /// `(Z/p^k)^d` acting on the cyclotomic ring by `zeta`-multiplication
    /// through the first torus coordinate.
    CyclotomicSemidirect { d: usize, ring: FinLocalRing },
    /// Direct product with concatenated coordinates.
    Product(Box<GroupOracle>, Box<GroupOracle>),
}

/// Multiplication oracle for one family instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupOracle {
    family: Family,
    p: u64,
    width: usize,
    log_order: u64,
    /// Cyclic-family and torus coordinate modulus `p^k` where applicable.
    modulus: u64,
    /// Semidirect only: `zeta^j` for `j` mod `p^m`, as ring elements.
    zeta_pows: Vec<Vec<u64>>,
}

fn p_pow_checked(p: u64, k: u32) -> Result<u64, GroupError> {
    let mut acc: u64 = 1;
    for _ in 0..k {
        acc = acc
            .checked_mul(p)
            .filter(|&m| m < (1 << 63))
            .ok_or(GroupError::ModulusTooLarge { p, k })?;
    }
    Ok(acc)
}

impl GroupOracle {
    pub fn cyclic(p: u64, k: u32) -> Result<Self, GroupError> {
        let ring = FinLocalRing::integers_mod(p, k)?; // validates p, k
        let modulus = p_pow_checked(p, k)?;
        drop(ring);
        Ok(GroupOracle {
            family: Family::Cyclic { p, k },
            p,
            width: 1,
            log_order: k as u64,
            modulus,
            zeta_pows: Vec::new(),
        })
    }

    pub fn coordinates(p: u64, len: usize) -> Result<Self, GroupError> {
        FinLocalRing::integers_mod(p, 1)?;
        if len == 0 {
            return Err(GroupError::ZeroDepth);
        }
        Ok(GroupOracle {
            family: Family::Coordinates { p, len },
            p,
            width: len,
            log_order: len as u64,
            modulus: p,
            zeta_pows: Vec::new(),
        })
    }

    pub fn unitriangular(p: u64, k: u32) -> Result<Self, GroupError> {
        FinLocalRing::integers_mod(p, k)?;
        let modulus = p_pow_checked(p, k)?;
        Ok(GroupOracle {
            family: Family::Unitriangular { p, k },
            p,
            width: 3,
            log_order: 3 * k as u64,
            modulus,
            zeta_pows: Vec::new(),
        })
    }

    pub fn sl_congruence(ring: FinLocalRing, n: usize) -> Result<Self, GroupError> {
        if !matches!(ring.kind(), RingKind::IntegersMod | RingKind::PolyMod) {
            return Err(GroupError::BadRingKind);
        }
        if n != 2 && n != 3 {
            return Err(GroupError::BadMatrixDimension(n));
        }
        let p = ring.p();
        let k = ring.k();
        let width = n * n * ring.width();
        let log_order = (n * n - 1) as u64 * (k as u64 - 1);
        Ok(GroupOracle {
            family: Family::SlCongruence { ring, n },
            p,
            width,
            log_order,
            modulus: 0,
            zeta_pows: Vec::new(),
        })
    }

    pub fn cyclotomic_semidirect(p: u64, m: u32, k: u32, d: usize) -> Result<Self, GroupError> {
        if k < m {
            return Err(GroupError::DepthBelowRamification { k, m });
        }
        if d == 0 {
            return Err(GroupError::ZeroDepth);
        }
        let ring = FinLocalRing::cyclotomic_mod(p, m, k)?;
        let modulus = p_pow_checked(p, k)?;
        let pm = p.pow(m) as usize;
        // table of zeta^j, zeta = 1 + pi
        let mut zeta = ring.zero();
        zeta[0] = 1;
        if ring.width() > 1 {
            zeta[1] = 1;
        } else {
            // phi = 1 only for p = 2, m = 1: zeta = -1
            zeta[0] = modulus - 1;
        }
        let mut zeta_pows = Vec::with_capacity(pm);
        let mut acc = ring.one();
        for _ in 0..pm {
            zeta_pows.push(acc.clone());
            acc = ring.mul(&acc, &zeta);
        }
        debug_assert_eq!(acc, ring.one(), "zeta^(p^m) = 1");
        let phi = ring.width() as u64;
        let log_order = d as u64 * k as u64 + k as u64 * phi;
        let width = d + ring.width();
        Ok(GroupOracle {
            family: Family::CyclotomicSemidirect { d, ring },
            p,
            width,
            log_order,
            modulus,
            zeta_pows,
        })
    }

    pub fn product(left: GroupOracle, right: GroupOracle) -> Result<Self, GroupError> {
        if left.p != right.p {
            return Err(GroupError::BadRingKind);
        }
        let p = left.p;
        let width = left.width + right.width;
        let log_order = left.log_order + right.log_order;
        Ok(GroupOracle {
            family: Family::Product(Box::new(left), Box::new(right)),
            p,
            width,
            log_order,
            modulus: 0,
            zeta_pows: Vec::new(),
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// log_p of the truncated group order.
    pub fn log_order(&self) -> u64 {
        self.log_order
    }

    /// Truncation depth parameter of the family (`k`), where meaningful.
    pub fn depth(&self) -> u32 {
        match &self.family {
            Family::Cyclic { k, .. } | Family::Unitriangular { k, .. } => *k,
            Family::Coordinates { .. } => 1,
            Family::SlCongruence { ring, .. } | Family::CyclotomicSemidirect { ring, .. } => {
                ring.k()
            }
            Family::Product(a, b) => a.depth().max(b.depth()),
        }
    }

    pub fn identity(&self) -> Element {
        match &self.family {
            Family::SlCongruence { ring, n } => {
                let mut coords = vec![0; self.width];
                for i in 0..*n {
                    let entry = ring.one();
                    let off = (i * n + i) * ring.width();
                    coords[off..off + ring.width()].copy_from_slice(&entry);
                }
                Element(coords)
            }
            Family::Product(a, b) => {
                let mut coords = a.identity().into_coords();
                coords.extend(b.identity().into_coords());
                Element(coords)
            }
            _ => Element(vec![0; self.width]),
        }
    }

    fn check_len(&self, g: &Element) -> Result<(), GroupError> {
        if g.0.len() != self.width {
            return Err(GroupError::BadElement { got: g.0.len(), need: self.width });
        }
        Ok(())
    }

    /// Build an element from raw coordinates, reducing them and validating
    /// family constraints (determinant and congruence for matrix families).
    pub fn element_from_coords(&self, coords: Vec<u64>) -> Result<Element, GroupError> {
        if coords.len() != self.width {
            return Err(GroupError::BadElement { got: coords.len(), need: self.width });
        }
        match &self.family {
            Family::Cyclic { .. } | Family::Unitriangular { .. } => {
                Ok(Element(coords.into_iter().map(|c| c % self.modulus).collect()))
            }
            Family::Coordinates { p, .. } => {
                Ok(Element(coords.into_iter().map(|c| c % p).collect()))
            }
            Family::CyclotomicSemidirect { d, ring } => {
                let mut out = Vec::with_capacity(self.width);
                for (i, c) in coords.into_iter().enumerate() {
                    if i < *d {
                        out.push(c % self.modulus);
                    } else {
                        // ring coordinates share the modulus p^k
                        out.push(c % self.modulus);
                    }
                }
                let _ = ring;
                Ok(Element(out))
            }
            Family::SlCongruence { ring, n } => {
                let coord_mod = match ring.kind() {
                    RingKind::PolyMod => ring.p(),
                    _ => p_pow_checked(ring.p(), ring.k())?,
                };
                let g = Element(coords.into_iter().map(|c| c % coord_mod).collect());
                // kernel membership: v(g - I) >= 1 entrywise
                if self.matrix_congruence_level(&g, ring, *n) < 1 {
                    return Err(GroupError::NotInKernel);
                }
                if !self.det_is_one(&g, ring, *n) {
                    return Err(GroupError::NotInKernel);
                }
                Ok(g)
            }
            Family::Product(a, b) => {
                let (lc, rc) = coords.split_at(a.width);
                let l = a.element_from_coords(lc.to_vec())?;
                let r = b.element_from_coords(rc.to_vec())?;
                let mut out = l.into_coords();
                out.extend(r.into_coords());
                Ok(Element(out))
            }
        }
    }

    /// Heisenberg element `I + a E12 + b E23 + c E13`.
    pub fn uni(&self, a: u64, b: u64, c: u64) -> Result<Element, GroupError> {
        match &self.family {
            Family::Unitriangular { .. } => {
                Ok(Element(vec![a % self.modulus, b % self.modulus, c % self.modulus]))
            }
            _ => Err(GroupError::NotMatrixFamily),
        }
    }

    /// Semidirect element from torus and ring parts.
    pub fn semidirect(&self, t: &[u64], a: &[u64]) -> Result<Element, GroupError> {
        match &self.family {
            Family::CyclotomicSemidirect { d, ring } => {
                if t.len() != *d || a.len() != ring.width() {
                    return Err(GroupError::BadElement {
                        got: t.len() + a.len(),
                        need: self.width,
                    });
                }
                let mut coords: Vec<u64> = t.iter().map(|c| c % self.modulus).collect();
                coords.extend(a.iter().map(|c| c % self.modulus));
                Ok(Element(coords))
            }
            _ => Err(GroupError::BadRingKind),
        }
    }

    /// Pair of factor elements as a product element.
    pub fn pair(&self, l: &Element, r: &Element) -> Result<Element, GroupError> {
        match &self.family {
            Family::Product(a, b) => {
                a.check_len(l)?;
                b.check_len(r)?;
                let mut coords = l.0.clone();
                coords.extend_from_slice(&r.0);
                Ok(Element(coords))
            }
            _ => Err(GroupError::BadRingKind),
        }
    }

    /// Matrix element from row-major ring-element entries.
    pub fn sl_from_entries(&self, entries: &[Vec<u64>]) -> Result<Element, GroupError> {
        match &self.family {
            Family::SlCongruence { ring, n } => {
                if entries.len() != n * n || entries.iter().any(|e| e.len() != ring.width()) {
                    return Err(GroupError::BadElement {
                        got: entries.iter().map(Vec::len).sum(),
                        need: self.width,
                    });
                }
                let coords: Vec<u64> = entries.iter().flatten().copied().collect();
                self.element_from_coords(coords)
            }
            _ => Err(GroupError::NotMatrixFamily),
        }
    }

    pub fn multiply(&self, x: &Element, y: &Element) -> Element {
        debug_assert_eq!(x.0.len(), self.width);
        debug_assert_eq!(y.0.len(), self.width);
        match &self.family {
            Family::Cyclic { .. } => {
                Element(vec![addm(x.0[0], y.0[0], self.modulus)])
            }
            Family::Coordinates { p, .. } => Element(
                x.0.iter().zip(&y.0).map(|(&a, &b)| addm(a, b, *p)).collect(),
            ),
            Family::Unitriangular { .. } => {
                let m = self.modulus;
                let (a, b, c) = (x.0[0], x.0[1], x.0[2]);
                let (a2, b2, c2) = (y.0[0], y.0[1], y.0[2]);
                let cross = mulm(a, b2, m);
                Element(vec![addm(a, a2, m), addm(b, b2, m), addm(addm(c, c2, m), cross, m)])
            }
            Family::SlCongruence { ring, n } => self.mat_mul(x, y, ring, *n),
            Family::CyclotomicSemidirect { d, ring } => {
                let m = self.modulus;
                let mut coords = Vec::with_capacity(self.width);
                for i in 0..*d {
                    coords.push(addm(x.0[i], y.0[i], m));
                }
                // a * zeta^{t'_0} + a'
                let pm = self.zeta_pows.len() as u64;
                let twist = &self.zeta_pows[(y.0[0] % pm) as usize];
                let w = ring.width();
                let mut twisted = vec![0; w];
                ring.mul_into(&x.0[*d..], twist, &mut twisted);
                let mut apart = vec![0; w];
                ring.add_into(&twisted, &y.0[*d..], &mut apart);
                coords.extend(apart);
                Element(coords)
            }
            Family::Product(a, b) => {
                let (xl, xr) = x.0.split_at(a.width);
                let (yl, yr) = y.0.split_at(a.width);
                let l = a.multiply(&Element(xl.to_vec()), &Element(yl.to_vec()));
                let r = b.multiply(&Element(xr.to_vec()), &Element(yr.to_vec()));
                let mut coords = l.0;
                coords.extend(r.0);
                Element(coords)
            }
        }
    }

    pub fn inverse(&self, x: &Element) -> Element {
        debug_assert_eq!(x.0.len(), self.width);
        match &self.family {
            Family::Cyclic { .. } => Element(vec![negm(x.0[0], self.modulus)]),
            Family::Coordinates { p, .. } => {
                Element(x.0.iter().map(|&a| negm(a, *p)).collect())
            }
            Family::Unitriangular { .. } => {
                let m = self.modulus;
                let (a, b, c) = (x.0[0], x.0[1], x.0[2]);
                // (a, b, c)^{-1} = (-a, -b, ab - c)
                Element(vec![negm(a, m), negm(b, m), addm(mulm(a, b, m), negm(c, m), m)])
            }
            Family::SlCongruence { ring, n } => self.mat_inverse(x, ring, *n),
            Family::CyclotomicSemidirect { d, ring } => {
                let m = self.modulus;
                let mut coords: Vec<u64> = x.0[..*d].iter().map(|&c| negm(c, m)).collect();
                // (t, a)^{-1} = (-t, -a zeta^{-t_0})
                let pm = self.zeta_pows.len() as u64;
                let inv_twist = &self.zeta_pows[((pm - x.0[0] % pm) % pm) as usize];
                let w = ring.width();
                let mut twisted = vec![0; w];
                ring.mul_into(&x.0[*d..], inv_twist, &mut twisted);
                let mut apart = vec![0; w];
                ring.neg_into(&twisted, &mut apart);
                coords.extend(apart);
                Element(coords)
            }
            Family::Product(a, b) => {
                let (xl, xr) = x.0.split_at(a.width);
                let l = a.inverse(&Element(xl.to_vec()));
                let r = b.inverse(&Element(xr.to_vec()));
                let mut coords = l.0;
                coords.extend(r.0);
                Element(coords)
            }
        }
    }

    /// `[x, y] = x^{-1} y^{-1} x y`.
    pub fn commutator(&self, x: &Element, y: &Element) -> Element {
        let xi = self.inverse(x);
        let yi = self.inverse(y);
        self.multiply(&self.multiply(&self.multiply(&xi, &yi), x), y)
    }

    pub fn pow(&self, x: &Element, mut e: u64) -> Element {
        let mut base = x.clone();
        let mut acc = self.identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.multiply(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.multiply(&base, &base);
            }
        }
        acc
    }

    pub fn pth_power(&self, x: &Element) -> Element {
        self.pow(x, self.p)
    }

    pub fn is_identity(&self, x: &Element) -> bool {
        *x == self.identity()
    }

    /// Standard topological generating set of the truncation.
    pub fn generators(&self) -> Vec<Element> {
        match &self.family {
            Family::Cyclic { .. } => vec![Element(vec![1])],
            Family::Coordinates { len, .. } => (0..*len)
                .map(|i| {
                    let mut v = vec![0; *len];
                    v[i] = 1;
                    Element(v)
                })
                .collect(),
            Family::Unitriangular { .. } => {
                vec![Element(vec![1, 0, 0]), Element(vec![0, 1, 0])]
            }
            Family::SlCongruence { ring, n } => self.sl_level_generators(ring, *n, 1),
            Family::CyclotomicSemidirect { d, ring } => {
                let mut gens = Vec::new();
                for i in 0..*d {
                    let mut v = vec![0; self.width];
                    v[i] = 1;
                    gens.push(Element(v));
                }
                for r in 0..ring.width() {
                    let mut v = vec![0; self.width];
                    v[d + r] = 1;
                    gens.push(Element(v));
                }
                gens
            }
            Family::Product(a, b) => {
                let mut gens = Vec::new();
                for g in a.generators() {
                    let mut coords = g.0;
                    coords.extend(b.identity().0);
                    gens.push(Element(coords));
                }
                for g in b.generators() {
                    let mut coords = a.identity().0;
                    coords.extend(g.0);
                    gens.push(Element(coords));
                }
                gens
            }
        }
    }

    /// Generators of the level-`i` congruence kernel of a matrix family:
    /// for every depth `j >= i`, elementary off-diagonal `I + pi^j E_{rs}`
    /// together with diagonal units `diag(..., u, u^{-1}, ...)` for
    /// `u = 1 + pi^j`. The depth-`j` leading terms form a basis of the
    /// trace-zero matrices in the j-th graded quotient, so the set generates
    /// the kernel over any residue characteristic; one depth alone does not
    /// suffice when p = 2 kills the descent of squares (e.g. F_2[t]/t^k,
    /// where (I + tA)^2 = I + t^2 A^2 and A^2 is scalar for 2x2 A).
    pub(crate) fn sl_level_generators(
        &self,
        ring: &FinLocalRing,
        n: usize,
        level: u32,
    ) -> Vec<Element> {
        let w = ring.width();
        let mut gens = Vec::new();
        for depth in level as u64..ring.val_cap() {
            let pi_j = ring.uniformizer_pow(depth);
            for r in 0..n {
                for s in 0..n {
                    if r == s {
                        continue;
                    }
                    let mut coords = self.identity().0;
                    let off = (r * n + s) * w;
                    coords[off..off + w].copy_from_slice(&pi_j);
                    gens.push(Element(coords));
                }
            }
            let mut unit = ring.one();
            let mut tmp = vec![0; w];
            ring.add_into(&unit.clone(), &pi_j, &mut tmp);
            unit.copy_from_slice(&tmp);
            let unit_inv = ring.invert_unit(&unit).expect("1 + pi^j is a unit");
            for r in 0..n - 1 {
                let mut coords = self.identity().0;
                let off_a = (r * n + r) * w;
                let off_b = ((r + 1) * n + (r + 1)) * w;
                coords[off_a..off_a + w].copy_from_slice(&unit);
                coords[off_b..off_b + w].copy_from_slice(&unit_inv);
                gens.push(Element(coords));
            }
        }
        gens
    }

    fn mat_mul(&self, x: &Element, y: &Element, ring: &FinLocalRing, n: usize) -> Element {
        let w = ring.width();
        let mut out = vec![0; self.width];
        let mut prod = vec![0; w];
        let mut acc = vec![0; w];
        for r in 0..n {
            for s in 0..n {
                acc.iter_mut().for_each(|c| *c = 0);
                for t in 0..n {
                    let xa = &x.0[(r * n + t) * w..(r * n + t + 1) * w];
                    let yb = &y.0[(t * n + s) * w..(t * n + s + 1) * w];
                    ring.mul_into(xa, yb, &mut prod);
                    let mut sum = vec![0; w];
                    ring.add_into(&acc, &prod, &mut sum);
                    acc.copy_from_slice(&sum);
                }
                out[(r * n + s) * w..(r * n + s + 1) * w].copy_from_slice(&acc);
            }
        }
        Element(out)
    }

    /// Inverse of a congruence-kernel matrix via the terminating Neumann
    /// series in `N = g - I`, whose entries all have positive valuation.
    fn mat_inverse(&self, x: &Element, ring: &FinLocalRing, n: usize) -> Element {
        let w = ring.width();
        let id = self.identity();
        let mut nmat = vec![0; self.width];
        for i in 0..n * n {
            ring.sub_into(&x.0[i * w..(i + 1) * w], &id.0[i * w..(i + 1) * w], &mut nmat[i * w..(i + 1) * w]);
        }
        let nmat = Element(nmat);
        let mut acc = id.clone();
        let mut term = id.clone();
        let mut sign_neg = true;
        for _ in 0..4 * ring.val_cap() {
            term = self.mat_mul(&term, &nmat, ring, n);
            if term.0.iter().all(|&c| c == 0) {
                break;
            }
            // acc += (-1)^j term
            let mut next = acc.0.clone();
            for i in 0..n * n {
                let mut adjusted = vec![0; w];
                if sign_neg {
                    ring.sub_into(&acc.0[i * w..(i + 1) * w], &term.0[i * w..(i + 1) * w], &mut adjusted);
                } else {
                    ring.add_into(&acc.0[i * w..(i + 1) * w], &term.0[i * w..(i + 1) * w], &mut adjusted);
                }
                next[i * w..(i + 1) * w].copy_from_slice(&adjusted);
            }
            acc = Element(next);
            sign_neg = !sign_neg;
        }
        debug_assert!(self.is_identity(&self.mat_mul(x, &acc, ring, n)), "Neumann inverse");
        acc
    }

    fn det_is_one(&self, g: &Element, ring: &FinLocalRing, n: usize) -> bool {
        let w = ring.width();
        let entry = |r: usize, s: usize| &g.0[(r * n + s) * w..(r * n + s + 1) * w];
        let det = match n {
            2 => {
                let mut ad = vec![0; w];
                let mut bc = vec![0; w];
                ring.mul_into(entry(0, 0), entry(1, 1), &mut ad);
                ring.mul_into(entry(0, 1), entry(1, 0), &mut bc);
                let mut det = vec![0; w];
                ring.sub_into(&ad, &bc, &mut det);
                det
            }
            3 => {
                // Leibniz over the six permutations of {0, 1, 2}
                let perms: [([usize; 3], bool); 6] = [
                    ([0, 1, 2], false),
                    ([1, 2, 0], false),
                    ([2, 0, 1], false),
                    ([0, 2, 1], true),
                    ([1, 0, 2], true),
                    ([2, 1, 0], true),
                ];
                let mut det = vec![0; w];
                let mut prod = vec![0; w];
                let mut tmp = vec![0; w];
                for (sigma, odd) in perms {
                    prod.copy_from_slice(&ring.one());
                    for r in 0..3 {
                        ring.mul_into(&prod.clone(), entry(r, sigma[r]), &mut tmp);
                        prod.copy_from_slice(&tmp);
                    }
                    if odd {
                        ring.sub_into(&det.clone(), &prod, &mut tmp);
                    } else {
                        ring.add_into(&det.clone(), &prod, &mut tmp);
                    }
                    det.copy_from_slice(&tmp);
                }
                det
            }
            _ => unreachable!("dimension validated at construction"),
        };
        det == ring.one()
    }

    fn matrix_congruence_level(&self, g: &Element, ring: &FinLocalRing, n: usize) -> u64 {
        let w = ring.width();
        let id = self.identity();
        let mut level = ring.k() as u64;
        let mut diff = vec![0; w];
        for i in 0..n * n {
            ring.sub_into(&g.0[i * w..(i + 1) * w], &id.0[i * w..(i + 1) * w], &mut diff);
            if let Some(v) = ring.valuation(&diff) {
                // entry valuations are pi-adic; congruence levels count
                // powers of p resp. t, which coincide for these ring kinds
                level = level.min(v);
            }
        }
        level.min(ring.k() as u64)
    }

    /// Largest `i <= k` with `g = 1` mod the `i`-th congruence ideal;
    /// the identity reports `k` itself. Matrix families and products of
    /// matrix families only.
    pub fn congruence_level(&self, g: &Element) -> Result<u64, GroupError> {
        self.check_len(g)?;
        match &self.family {
            Family::SlCongruence { ring, n } => Ok(self.matrix_congruence_level(g, ring, *n)),
            Family::Product(a, b) => {
                let (gl, gr) = g.0.split_at(a.width);
                let la = a.congruence_level(&Element(gl.to_vec()))?;
                let lb = b.congruence_level(&Element(gr.to_vec()))?;
                Ok(la.min(lb))
            }
            _ => Err(GroupError::NotMatrixFamily),
        }
    }

    /// Deterministic pseudorandom word in the generators; used for
    /// normality spot checks and sampling-based tests.
    pub fn sample_word(&self, seed: u64, length: usize) -> Element {
        let gens = self.generators();
        let mut state = seed | 1;
        let mut g = self.identity();
        for _ in 0..length {
            let r = xorshift(&mut state) as usize % gens.len();
            let e = (xorshift(&mut state) % self.p.pow(self.depth().min(4))).max(1);
            g = self.multiply(&g, &self.pow(&gens[r], e));
        }
        g
    }
}

fn xorshift(state: &mut u64) -> u64 {
    let mut x = *state;
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    *state = x;
    x
}

fn addm(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 + b as u128) % m as u128) as u64
}

fn mulm(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn negm(a: u64, m: u64) -> u64 {
    if a == 0 {
        0
    } else {
        m - a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group_laws_spot_check(oracle: &GroupOracle, seeds: &[u64]) {
        let e = oracle.identity();
        for &s in seeds {
            let x = oracle.sample_word(s, 6);
            let y = oracle.sample_word(s.wrapping_mul(7) + 3, 6);
            let z = oracle.sample_word(s.wrapping_mul(13) + 5, 6);
            assert_eq!(oracle.multiply(&x, &e), x);
            assert_eq!(oracle.multiply(&e, &x), x);
            assert_eq!(oracle.multiply(&x, &oracle.inverse(&x)), e);
            assert_eq!(oracle.multiply(&oracle.inverse(&x), &x), e);
            let xy_z = oracle.multiply(&oracle.multiply(&x, &y), &z);
            let x_yz = oracle.multiply(&x, &oracle.multiply(&y, &z));
            assert_eq!(xy_z, x_yz);
        }
    }

    #[test]
    fn all_families_satisfy_group_laws() {
        let seeds = [2, 9, 17, 101];
        group_laws_spot_check(&GroupOracle::cyclic(3, 4).unwrap(), &seeds);
        group_laws_spot_check(&GroupOracle::coordinates(5, 3).unwrap(), &seeds);
        group_laws_spot_check(&GroupOracle::unitriangular(3, 3).unwrap(), &seeds);
        group_laws_spot_check(&GroupOracle::unitriangular(2, 4).unwrap(), &seeds);
        let r = FinLocalRing::integers_mod(2, 4).unwrap();
        group_laws_spot_check(&GroupOracle::sl_congruence(r, 3).unwrap(), &seeds);
        let r = FinLocalRing::poly_mod(2, 5).unwrap();
        group_laws_spot_check(&GroupOracle::sl_congruence(r, 3).unwrap(), &seeds);
        let r = FinLocalRing::poly_mod(3, 4).unwrap();
        group_laws_spot_check(&GroupOracle::sl_congruence(r, 2).unwrap(), &seeds);
        group_laws_spot_check(&GroupOracle::cyclotomic_semidirect(3, 1, 3, 2).unwrap(), &seeds);
        group_laws_spot_check(&GroupOracle::cyclotomic_semidirect(2, 2, 3, 1).unwrap(), &seeds);
        let l = GroupOracle::unitriangular(3, 2).unwrap();
        let r = GroupOracle::cyclic(3, 3).unwrap();
        group_laws_spot_check(&GroupOracle::product(l, r).unwrap(), &seeds);
    }

    #[test]
    fn heisenberg_commutator_and_power_forms() {
        let g = GroupOracle::unitriangular(3, 3).unwrap();
        let x = g.uni(1, 0, 0).unwrap();
        let y = g.uni(0, 1, 0).unwrap();
        let z = g.uni(0, 0, 1).unwrap();
        assert_eq!(g.commutator(&x, &y), z);
        assert_eq!(g.commutator(&y, &x), g.inverse(&z));
        // (a, b, c)^n = (na, nb, nc + C(n,2) ab)
        let w = g.uni(1, 1, 0).unwrap();
        let p = 3u64;
        let choose2 = p * (p - 1) / 2;
        assert_eq!(g.pow(&w, p), g.uni(p, p, choose2).unwrap());
        // first-coordinate generators have full coordinate order p^k
        assert_eq!(g.pow(&x, 27), g.identity());
        assert_ne!(g.pow(&x, 9), g.identity());
    }

    #[test]
    fn semidirect_conjugation_multiplies_by_zeta() {
        let g = GroupOracle::cyclotomic_semidirect(3, 1, 4, 2).unwrap();
        let Family::CyclotomicSemidirect { d: _, ring } = g.family().clone() else {
            unreachable!()
        };
        let s0 = g.semidirect(&[1, 0], &ring.zero()).unwrap();
        let s1 = g.semidirect(&[0, 1], &ring.zero()).unwrap();
        for e in 0..ring.val_cap() {
            let a = g.semidirect(&[0; 2], &ring.uniformizer_pow(e)).unwrap();
            // a^{s_0} = s_0^{-1} a s_0 carries the ring part to a * zeta
            let conj = g.multiply(&g.multiply(&g.inverse(&s0), &a), &s0);
            let mut zeta = ring.zero();
            zeta[0] = 1;
            zeta[1] = 1;
            let twisted = ring.mul(&ring.uniformizer_pow(e), &zeta);
            let expect = g.semidirect(&[0; 2], &twisted).unwrap();
            assert_eq!(conj, expect);
            // the other torus generator acts trivially
            let conj1 = g.multiply(&g.multiply(&g.inverse(&s1), &a), &s1);
            assert_eq!(conj1, a);
        }
    }

    #[test]
    fn congruence_levels_match_examples() {
        let p = 3u64;
        let ring = FinLocalRing::integers_mod(p, 3).unwrap();
        let g = GroupOracle::sl_congruence(ring.clone(), 3).unwrap();
        assert_eq!(g.congruence_level(&g.identity()).unwrap(), 3);
        // 1 + p E_12 sits at level exactly 1
        let mut coords = g.identity().into_coords();
        coords[1] = p; // entry (0, 1), ring width 1
        let x = g.element_from_coords(coords).unwrap();
        assert_eq!(g.congruence_level(&x).unwrap(), 1);
        // powering multiplies the level by at least p in characteristic p,
        // up to the truncation depth k = 9
        let ring = FinLocalRing::poly_mod(p, 9).unwrap();
        let g = GroupOracle::sl_congruence(ring, 3).unwrap();
        for gen in g.generators() {
            let lvl = g.congruence_level(&gen).unwrap();
            let powered = g.pth_power(&gen);
            assert!(g.congruence_level(&powered).unwrap() >= (p * lvl).min(9));
        }
    }

    #[test]
    fn sl_element_validation_rejects_outsiders() {
        let ring = FinLocalRing::integers_mod(2, 3).unwrap();
        let g = GroupOracle::sl_congruence(ring, 2).unwrap();
        // determinant (1+2)(1) - 0 = 3 != 1
        let bad = g.sl_from_entries(&[vec![3], vec![0], vec![0], vec![1]]);
        assert_eq!(bad, Err(GroupError::NotInKernel));
        // determinant 1 but not congruent to the identity mod 2
        let bad = g.sl_from_entries(&[vec![0], vec![7], vec![1], vec![0]]);
        assert_eq!(bad, Err(GroupError::NotInKernel));
        // diag(3, 3^{-1}) = diag(3, 3) mod 8: determinant 9 = 1 mod 8
        let good = g.sl_from_entries(&[vec![3], vec![0], vec![0], vec![3]]);
        assert!(good.is_ok());
    }

    #[test]
    fn product_components_multiply_independently() {
        let l = GroupOracle::cyclic(2, 3).unwrap();
        let r = GroupOracle::unitriangular(2, 2).unwrap();
        let g = GroupOracle::product(l.clone(), r.clone()).unwrap();
        let a = g
            .pair(&l.element_from_coords(vec![3]).unwrap(), &r.uni(1, 1, 0).unwrap())
            .unwrap();
        let b = g
            .pair(&l.element_from_coords(vec![6]).unwrap(), &r.uni(0, 1, 1).unwrap())
            .unwrap();
        let ab = g.multiply(&a, &b);
        assert_eq!(ab.coords()[0], 1); // 3 + 6 mod 8
        let rr = r.multiply(&r.uni(1, 1, 0).unwrap(), &r.uni(0, 1, 1).unwrap());
        assert_eq!(&ab.coords()[1..], rr.coords());
        assert_eq!(g.log_order(), l.log_order() + r.log_order());
    }

    #[test]
    fn constructor_guards() {
        assert_eq!(
            GroupOracle::cyclotomic_semidirect(3, 2, 1, 1).unwrap_err(),
            GroupError::DepthBelowRamification { k: 1, m: 2 }
        );
        assert!(matches!(
            GroupOracle::cyclic(6, 2).unwrap_err(),
            GroupError::NotPrime(6)
        ));
        let ring = FinLocalRing::cyclotomic_mod(3, 1, 2).unwrap();
        assert_eq!(
            GroupOracle::sl_congruence(ring, 3).unwrap_err(),
            GroupError::BadRingKind
        );
        let ring = FinLocalRing::integers_mod(2, 2).unwrap();
        assert_eq!(
            GroupOracle::sl_congruence(ring, 4).unwrap_err(),
            GroupError::BadMatrixDimension(4)
        );
    }
}
