//! Coordinate-product towers: countably based abelian test beds where
//! density arithmetic is plain linear algebra.
//!
//! A [`CoordinateTower`] models `G = prod_{n < width} Z/p` filtered by
//! `G_i = {x : x_n = 0 for n < m(i)}`, so `log_p|G : G_i| = m(i)` and the
//! density numerator of a subgroup is the rank of its generators projected
//! to the first `m(i)` coordinates. A [`SubTower`] restricts to a
//! sub-product and carries the induced filtration. A [`GradedTower`]
//! replaces the coordinates by `Z/p^{h_n}` under the p-power filtration,
//! where numerators come from exact column-capped Hermite forms.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::EstimatorError;
use crate::arith::is_prime_u64;
use crate::group::GroupError;

/// `prod Z/p` filtered by vanishing of the first `m(i)` coordinates;
/// level 0 is the whole group (`m(0) = 0`) and `m` increases strictly.
#[derive(Debug, Clone)]
pub struct CoordinateTower {
    p: u64,
    m: Vec<u64>,
}

impl CoordinateTower {
    /// `m` lists the cuts for levels `1..=depth`.
    pub fn new(p: u64, m: Vec<u64>) -> Result<Self, EstimatorError> {
        if !is_prime_u64(p) {
            return Err(EstimatorError::Group(GroupError::NotPrime(p)));
        }
        if m.is_empty() {
            return Err(EstimatorError::TowerNotIncreasing { level: 1 });
        }
        let mut prev = 0u64; // m(0) = 0
        for (idx, &cut) in m.iter().enumerate() {
            if cut <= prev {
                return Err(EstimatorError::TowerNotIncreasing { level: idx as u64 + 1 });
            }
            prev = cut;
        }
        Ok(CoordinateTower { p, m })
    }

    /// The tower with `m(i) = i`.
    pub fn uniform(p: u64, depth: u64) -> Result<Self, EstimatorError> {
        CoordinateTower::new(p, (1..=depth).collect())
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Number of proper levels; valid level indices are `1..=depth`.
    pub fn depth(&self) -> u64 {
        self.m.len() as u64
    }

    /// `m(i) = log_p|G : G_i|`; `m(0) = 0`.
    pub fn m(&self, i: u64) -> u64 {
        if i == 0 {
            0
        } else {
            self.m[i as usize - 1]
        }
    }

    /// Total coordinate count of the deepest quotient.
    pub fn width(&self) -> u64 {
        *self.m.last().expect("towers have at least one level")
    }
}

/// A sub-product subgroup `H = prod_{c in support} Z/p` of a tower,
/// with the induced filtration `H cap G_i` re-indexed to the levels where
/// it strictly descends.
#[derive(Debug, Clone)]
pub struct SubTower {
    support: Vec<u64>,
    induced: CoordinateTower,
    /// For each induced level, the ambient level it came from.
    ambient_levels: Vec<u64>,
}

impl SubTower {
    /// `support` lists the coordinates of the sub-product, strictly
    /// increasing. Ambient levels that add no support coordinate collapse
    /// away (the induced filtration repeats there).
    pub fn new(tower: &CoordinateTower, support: Vec<u64>) -> Result<Self, EstimatorError> {
        if support.windows(2).any(|w| w[1] <= w[0])
            || support.iter().any(|&c| c >= tower.width())
            || support.is_empty()
        {
            return Err(EstimatorError::BadSupport);
        }
        let mut m_h = Vec::new();
        let mut ambient_levels = Vec::new();
        let mut prev = 0u64;
        for i in 1..=tower.depth() {
            let cut = tower.m(i);
            let below = support.partition_point(|&c| c < cut) as u64;
            if below > prev {
                m_h.push(below);
                ambient_levels.push(i);
                prev = below;
            }
        }
        let induced = CoordinateTower::new(tower.p(), m_h)?;
        Ok(SubTower { support, induced, ambient_levels })
    }

    pub fn support(&self) -> &[u64] {
        &self.support
    }

    pub fn induced(&self) -> &CoordinateTower {
        &self.induced
    }

    /// Ambient level corresponding to induced level `i >= 1`.
    pub fn ambient_level(&self, i: u64) -> u64 {
        self.ambient_levels[i as usize - 1]
    }

    /// Rewrites a vector over the induced coordinates to ambient width.
    pub fn embed(&self, v: &[u64], ambient_width: u64) -> Vec<u64> {
        let mut out = vec![0; ambient_width as usize];
        for (j, &val) in v.iter().enumerate() {
            out[self.support[j] as usize] = val;
        }
        out
    }
}

/// Row-echelon accumulator over `F_p`: rows keep pairwise distinct leading
/// columns, so the rank of the projection to the first `cut` columns is the
/// number of leading columns below `cut`.
#[derive(Debug, Clone)]
pub(crate) struct Echelon {
    p: u64,
    width: usize,
    rows: Vec<Vec<u64>>,
    leads: Vec<usize>,
}

fn inv_mod(a: u64, p: u64) -> u64 {
    // Fermat inverse; p prime and a != 0 mod p.
    let mut acc = 1u128;
    let mut base = a as u128 % p as u128;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p as u128;
        }
        base = base * base % p as u128;
        e >>= 1;
    }
    acc as u64
}

impl Echelon {
    pub(crate) fn new(p: u64, width: usize) -> Self {
        Echelon { p, width, rows: Vec::new(), leads: Vec::new() }
    }

    /// Reduces `v` against the rows; inserts the residue if nonzero.
    /// Returns whether the rank grew.
    pub(crate) fn insert(&mut self, v: &[u64]) -> bool {
        assert_eq!(v.len(), self.width, "vector width mismatch");
        let p = self.p;
        let mut v: Vec<u64> = v.iter().map(|&x| x % p).collect();
        for (row, &lead) in self.rows.iter().zip(&self.leads) {
            let c = v[lead];
            if c != 0 {
                let scale = c * inv_mod(row[lead], p) % p;
                for (vi, ri) in v.iter_mut().zip(row) {
                    *vi = (*vi + (p - scale * ri % p) % p) % p;
                }
            }
        }
        match v.iter().position(|&x| x != 0) {
            None => false,
            Some(lead) => {
                self.rows.push(v);
                self.leads.push(lead);
                true
            }
        }
    }

    /// Whether `col` is already a leading column.
    pub(crate) fn has_lead(&self, col: usize) -> bool {
        self.leads.contains(&col)
    }

    /// Rank of the projection to the first `cut` columns.
    #[cfg(test)]
    pub(crate) fn rank(&self) -> u64 {
        self.rows.len() as u64
    }

    pub(crate) fn rank_at(&self, cut: u64) -> u64 {
        self.leads.iter().filter(|&&l| (l as u64) < cut).count() as u64
    }
}

/// `prod_n Z/p^{h_n}` under the p-power filtration
/// `G_i = G^{p^i} = prod_n p^i Z/p^{h_n}`.
#[derive(Debug, Clone)]
pub struct GradedTower {
    p: u64,
    heights: Vec<u32>,
}

impl GradedTower {
    pub fn new(p: u64, heights: Vec<u32>) -> Result<Self, EstimatorError> {
        if !is_prime_u64(p) {
            return Err(EstimatorError::Group(GroupError::NotPrime(p)));
        }
        if heights.is_empty() || heights.contains(&0) {
            return Err(EstimatorError::BadSupport);
        }
        Ok(GradedTower { p, heights })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn heights(&self) -> &[u32] {
        &self.heights
    }

    /// `log_p|G : G^{p^i}| = sum_n min(i, h_n)`.
    pub fn ppower_den(&self, i: u64) -> u64 {
        self.heights.iter().map(|&h| i.min(h as u64)).sum()
    }

    /// `log_p|H G_i : G_i|` for `H` generated by `gens` (entries taken
    /// modulo `p^{h_n}`): the subgroup of `prod_n Z/p^{min(i, h_n)}`
    /// generated by the images, measured through the integer lattice
    /// `L = rowspan(gens) + diag(p^{c_n}) Z^N`, whose index in `Z^N` is
    /// the product of triangular pivots after column-wise Euclidean row
    /// reduction; the subgroup order is `prod(p^{c_n}) / [Z^N : L]`.
    pub fn ppower_num(&self, i: u64, gens: &[Vec<u64>]) -> u64 {
        let caps: Vec<u32> = self.heights.iter().map(|&h| h.min(i as u32)).collect();
        let n = caps.len();
        for g in gens {
            assert_eq!(g.len(), n, "generator width mismatch");
        }
        let p = BigInt::from(self.p);
        let moduli: Vec<BigInt> = caps.iter().map(|&c| p.pow(c)).collect();
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(gens.len() + n);
        for g in gens {
            rows.push(g.iter().zip(&moduli).map(|(&x, md)| BigInt::from(x) % md).collect());
        }
        for (j, md) in moduli.iter().enumerate() {
            let mut r = vec![BigInt::zero(); n];
            r[j] = md.clone();
            rows.push(r);
        }
        let mut index = BigInt::one();
        for col in 0..n {
            loop {
                let nonzero: Vec<usize> =
                    (0..rows.len()).filter(|&r| !rows[r][col].is_zero()).collect();
                // the untouched diagonal row keeps every column populated
                // until its pivot is extracted
                let &pick = nonzero
                    .iter()
                    .min_by_key(|&&r| rows[r][col].abs())
                    .expect("column cannot vanish before pivot extraction");
                if nonzero.len() == 1 {
                    index *= rows[pick][col].abs();
                    rows.swap_remove(pick);
                    break;
                }
                for &r in nonzero.iter().filter(|&&r| r != pick) {
                    let q = &rows[r][col] / &rows[pick][col];
                    if q.is_zero() {
                        continue;
                    }
                    let scaled: Vec<BigInt> = rows[pick].iter().map(|x| x * &q).collect();
                    for (x, s) in rows[r].iter_mut().zip(&scaled) {
                        *x -= s;
                    }
                }
            }
        }
        debug_assert!(rows.iter().all(|r| r.iter().all(|x| x.is_zero())));
        let full: BigInt = moduli.iter().product();
        let (order, rem) = full.div_rem(&index);
        assert!(rem.is_zero(), "lattice index must divide the ambient order");
        // log_p of the subgroup order
        let mut log = 0u64;
        let mut o = order;
        while o > BigInt::one() {
            let (q, r) = o.div_rem(&p);
            assert!(r.is_zero(), "subgroup order must be a p-power");
            o = q;
            log += 1;
        }
        log
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tower_validation_rejects_flat_cuts() {
        assert!(CoordinateTower::new(3, vec![1, 2, 2]).is_err());
        assert!(CoordinateTower::new(3, vec![0]).is_err());
        assert!(CoordinateTower::new(4, vec![1, 2]).is_err());
        let t = CoordinateTower::new(3, vec![2, 5, 6]).unwrap();
        assert_eq!(t.m(0), 0);
        assert_eq!(t.m(2), 5);
        assert_eq!(t.width(), 6);
    }

    #[test]
    fn echelon_rank_tracks_projections() {
        let mut e = Echelon::new(5, 4);
        assert!(e.insert(&[1, 2, 0, 0]));
        assert!(e.insert(&[0, 0, 3, 1]));
        // dependent on the first row
        assert!(!e.insert(&[2, 4, 0, 0]));
        assert_eq!(e.rank(), 2);
        assert_eq!(e.rank_at(1), 1);
        assert_eq!(e.rank_at(2), 1);
        assert_eq!(e.rank_at(3), 2);
        // a fresh non-lead coordinate is always independent
        assert!(!e.has_lead(1));
        assert!(e.insert(&[0, 1, 0, 0]));
        assert_eq!(e.rank_at(2), 2);
    }

    #[test]
    fn subtower_collapses_levels_without_new_support() {
        let t = CoordinateTower::new(2, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let s = SubTower::new(&t, vec![1, 3, 5]).unwrap();
        // support coordinates appear at ambient cuts 2, 4, 6
        assert_eq!(s.induced().depth(), 3);
        assert_eq!(s.induced().m(1), 1);
        assert_eq!(s.induced().m(3), 3);
        assert_eq!(s.ambient_level(1), 2);
        assert_eq!(s.ambient_level(3), 6);
        assert_eq!(s.embed(&[1, 0, 1], t.width()), vec![0, 1, 0, 0, 0, 1]);
    }

    #[test]
    fn graded_tower_measures_cyclic_subgroups_exactly() {
        // G = Z/p x Z/p^2 x Z/p^3
        let g = GradedTower::new(3, vec![1, 2, 3]).unwrap();
        assert_eq!(g.ppower_den(1), 3);
        assert_eq!(g.ppower_den(2), 5);
        assert_eq!(g.ppower_den(9), 6);
        // diagonal generator has order p^min(i, 3) mod G^{p^i}
        let diag = vec![vec![1, 1, 1]];
        for i in 0..=4u64 {
            assert_eq!(g.ppower_num(i, &diag), i.min(3));
        }
        // a p-divisible generator drops one level
        let deep = vec![vec![0, 3, 3]];
        assert_eq!(g.ppower_num(1, &deep), 0);
        assert_eq!(g.ppower_num(2, &deep), 1);
        assert_eq!(g.ppower_num(3, &deep), 2);
        // two generators combine: full second and third coordinates
        let pair = vec![vec![0, 1, 0], vec![0, 0, 1]];
        assert_eq!(g.ppower_num(2, &pair), 4);
        let full: Vec<Vec<u64>> = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        assert_eq!(g.ppower_num(5, &full), 6);
    }

    #[test]
    fn procyclic_lines_have_vanishing_density_on_tall_towers() {
        // d generators contribute at most d·i to the p-power numerator at
        // level i, while the denominator grows like the full coordinate
        // profile — so lines are density-null on towers of unbounded rank
        let heights: Vec<u32> = (1..=12).collect();
        let g = GradedTower::new(3, heights).unwrap();
        let diag = vec![vec![1; 12]];
        let skew: Vec<Vec<u64>> = vec![(1..=12u64).collect(), vec![1; 12]];
        for i in 1..=12u64 {
            let den = g.ppower_den(i);
            assert_eq!(den, (1..=12u64).map(|h| i.min(h)).sum::<u64>());
            assert!(g.ppower_num(i, &diag) <= i);
            assert!(g.ppower_num(i, &skew) <= 2 * i);
            // the one-line ratio i/den is eventually below any fixed bound
            if i == 12 {
                assert_eq!(den, 78);
                assert_eq!(g.ppower_num(i, &diag), 12);
            }
        }
    }
}
