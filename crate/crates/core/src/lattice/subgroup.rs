//! Sublattices of Z_p^d with canonical integer bases.
//!
//! A [`LatticeSubgroup`] is the Z_p-span of finitely many integer vectors,
//! stored as the column Hermite form of the generators. Index data is read
//! off a Smith-style diagonalization: the total p-valuation of the nonzero
//! diagonal is invariant under unimodular reduction, so `log_p |Z_p^d : L|`
//! for a full-rank `L` is that total, and `log_p |H + L : L|` drops out as
//! a difference of two totals.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{CheckedSub, One, Signed, ToPrimitive, Zero};

use super::LatticeError;
use crate::arith::{is_prime_u64, vp_int, ArithError};

/// Budget for materializing `p^e` scale factors, in base-p digits.
pub(crate) const SCALE_DIGIT_BUDGET: u64 = 1 << 20;

/// `p^e` as an integer, refusing exponents past the digit budget.
pub(crate) fn p_pow(p: u64, e: &BigUint) -> Result<BigInt, LatticeError> {
    let small = e
        .to_u64()
        .filter(|small| *small <= SCALE_DIGIT_BUDGET)
        .ok_or_else(|| LatticeError::ExponentTooLarge {
            exp: e.to_string(),
            budget: SCALE_DIGIT_BUDGET,
        })?;
    Ok(BigInt::from(BigUint::from(p).pow(small as u32)))
}

fn is_zero_col(col: &[BigInt]) -> bool {
    col.iter().all(Zero::is_zero)
}

fn abs_lt(x: &BigInt, y: &BigInt) -> bool {
    x.magnitude() < y.magnitude()
}

/// `col_j -= q * col_s`, column-major.
fn col_sub_mul(cols: &mut [Vec<BigInt>], j: usize, s: usize, q: &BigInt) {
    let src = cols[s].clone();
    for (dst, x) in cols[j].iter_mut().zip(&src) {
        *dst -= q * x;
    }
}

/// Column Hermite form of the span of `cols`: independent echelon columns
/// with strictly increasing pivot rows, positive pivots, and the entries to
/// the left of each pivot reduced into `[0, pivot)`. Canonical, so equal
/// integer spans produce identical bases.
fn col_hnf(mut cols: Vec<Vec<BigInt>>, dim: usize) -> Vec<Vec<BigInt>> {
    cols.retain(|col| !is_zero_col(col));
    let mut next = 0usize;
    for r in 0..dim {
        if next == cols.len() {
            break;
        }
        loop {
            let pick = (next..cols.len())
                .filter(|&j| !cols[j][r].is_zero())
                .reduce(|best, j| if abs_lt(&cols[j][r], &cols[best][r]) { j } else { best });
            let Some(jp) = pick else { break };
            cols.swap(next, jp);
            if cols[next][r].is_negative() {
                for x in &mut cols[next] {
                    *x = -&*x;
                }
            }
            let mut cleared = true;
            for j in next + 1..cols.len() {
                if cols[j][r].is_zero() {
                    continue;
                }
                let q = cols[j][r].div_floor(&cols[next][r]);
                col_sub_mul(&mut cols, j, next, &q);
                if !cols[j][r].is_zero() {
                    cleared = false;
                }
            }
            if cleared {
                // Earlier pivots sit in higher rows, so reducing the current
                // row leaves their already-reduced pivot rows untouched.
                for j in 0..next {
                    if !cols[j][r].is_zero() {
                        let q = cols[j][r].div_floor(&cols[next][r]);
                        col_sub_mul(&mut cols, j, next, &q);
                    }
                }
                next += 1;
                break;
            }
        }
    }
    debug_assert!(cols[next..].iter().all(|col| is_zero_col(col)));
    cols.truncate(next);
    cols
}

fn identity(n: usize) -> Vec<Vec<BigInt>> {
    (0..n)
        .map(|r| {
            let mut row = vec![BigInt::zero(); n];
            row[r] = BigInt::one();
            row
        })
        .collect()
}

fn swap_cols(m: &mut [Vec<BigInt>], a: usize, b: usize) {
    for row in m {
        row.swap(a, b);
    }
}

fn negate_row(m: &mut [Vec<BigInt>], i: usize) {
    for x in &mut m[i] {
        *x = -&*x;
    }
}

/// `row_i -= q * row_s`, row-major.
fn row_sub_mul(m: &mut [Vec<BigInt>], i: usize, s: usize, q: &BigInt) {
    let src = m[s].clone();
    for (dst, x) in m[i].iter_mut().zip(&src) {
        *dst -= q * x;
    }
}

/// `col_j -= q * col_s`, row-major.
fn col_sub_mul_rows(m: &mut [Vec<BigInt>], j: usize, s: usize, q: &BigInt) {
    for row in m {
        let sub = q * &row[s];
        row[j] -= sub;
    }
}

/// Diagonalization by unimodular row and column operations: returns
/// `(u, d, v)` with `u * a * v = d`, `u` and `v` unimodular and `d` diagonal
/// with positive entries followed by zeros. The divisors are not forced into
/// divisibility order; callers only consume their valuations, products, and
/// the transform columns, all of which the plain form already determines.
pub(crate) fn snf_with_transforms(
    a: &[Vec<BigInt>],
) -> (Vec<Vec<BigInt>>, Vec<Vec<BigInt>>, Vec<Vec<BigInt>>) {
    let rows = a.len();
    let ncols = if rows == 0 { 0 } else { a[0].len() };
    let mut d: Vec<Vec<BigInt>> = a.to_vec();
    let mut u = identity(rows);
    let mut v = identity(ncols);
    let mut t = 0usize;
    'outer: while t < rows.min(ncols) {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..ncols {
                    if d[i][j].is_zero() {
                        continue;
                    }
                    if best.map_or(true, |(bi, bj)| abs_lt(&d[i][j], &d[bi][bj])) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else { break 'outer };
            d.swap(t, bi);
            u.swap(t, bi);
            swap_cols(&mut d, t, bj);
            swap_cols(&mut v, t, bj);
            if d[t][t].is_negative() {
                negate_row(&mut d, t);
                negate_row(&mut u, t);
            }
            let mut clean = true;
            for i in t + 1..rows {
                if d[i][t].is_zero() {
                    continue;
                }
                let q = d[i][t].div_floor(&d[t][t]);
                row_sub_mul(&mut d, i, t, &q);
                row_sub_mul(&mut u, i, t, &q);
                if !d[i][t].is_zero() {
                    clean = false;
                }
            }
            for j in t + 1..ncols {
                if d[t][j].is_zero() {
                    continue;
                }
                let q = d[t][j].div_floor(&d[t][t]);
                col_sub_mul_rows(&mut d, j, t, &q);
                col_sub_mul_rows(&mut v, j, t, &q);
                if !d[t][j].is_zero() {
                    clean = false;
                }
            }
            // A nonzero remainder is strictly smaller than the pivot, so the
            // retry terminates.
            if clean {
                t += 1;
                break;
            }
        }
    }
    (u, d, v)
}

/// Total p-valuation of the elementary divisors of the matrix with the given
/// columns.
fn divisor_valuation_sum(p: u64, cols: &[Vec<BigInt>], dim: usize) -> BigUint {
    let rows: Vec<Vec<BigInt>> = (0..dim)
        .map(|r| cols.iter().map(|col| col[r].clone()).collect())
        .collect();
    let (_, d, _) = snf_with_transforms(&rows);
    let mut total = BigUint::zero();
    for t in 0..dim.min(cols.len()) {
        if d[t][t].is_zero() {
            break;
        }
        total += vp_int(p, &d[t][t]).expect("nonzero diagonal entry has a valuation");
    }
    total
}

/// The Z_p-span of finitely many integer vectors inside Z_p^dim.
///
/// The basis is the column Hermite form of the generators, canonical for the
/// integer span. Equality of Z_p-spans is coarser than basis equality (an
/// integer basis cannot absorb p-adic units: `<3>` and `<1>` agree inside
/// Z_2), so comparisons go through [`Self::eq_p`], which consults only
/// p-valuation data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeSubgroup {
    p: u64,
    dim: usize,
    basis: Vec<Vec<BigInt>>,
    torsion_logidx: BigUint,
}

impl LatticeSubgroup {
    /// Span of the given column vectors, each of length `dim`.
    pub fn from_columns(p: u64, dim: usize, gens: &[Vec<BigInt>]) -> Result<Self, LatticeError> {
        if !is_prime_u64(p) {
            return Err(ArithError::BadPrime(p).into());
        }
        for gen in gens {
            if gen.len() != dim {
                return Err(LatticeError::BadGenerator { got: gen.len(), dim });
            }
        }
        let basis = col_hnf(gens.to_vec(), dim);
        let torsion_logidx = divisor_valuation_sum(p, &basis, dim);
        Ok(LatticeSubgroup { p, dim, basis, torsion_logidx })
    }

    /// The full lattice Z_p^dim.
    pub fn full(p: u64, dim: usize) -> Result<Self, LatticeError> {
        let cols: Vec<Vec<BigInt>> = (0..dim)
            .map(|r| {
                let mut col = vec![BigInt::zero(); dim];
                col[r] = BigInt::one();
                col
            })
            .collect();
        Self::from_columns(p, dim, &cols)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Canonical basis columns.
    pub fn basis(&self) -> &[Vec<BigInt>] {
        &self.basis
    }

    /// Total p-valuation of the elementary divisors; at full rank this is
    /// `log_p |Z_p^dim : self|`.
    pub fn torsion_logidx(&self) -> &BigUint {
        &self.torsion_logidx
    }

    pub fn is_full_rank(&self) -> bool {
        self.basis.len() == self.dim
    }

    /// `log_p |Z_p^dim : self|`, defined only at full rank.
    pub fn index_exponent(&self) -> Option<&BigUint> {
        self.is_full_rank().then_some(&self.torsion_logidx)
    }

    fn check_compatible(&self, other: &Self) -> Result<(), LatticeError> {
        if self.p != other.p {
            return Err(LatticeError::PrimeMismatch(self.p, other.p));
        }
        if self.dim != other.dim {
            return Err(LatticeError::DimMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    /// Lattice sum `self + other`.
    pub fn sum(&self, other: &Self) -> Result<Self, LatticeError> {
        self.check_compatible(other)?;
        let mut cols = self.basis.clone();
        cols.extend(other.basis.iter().cloned());
        Self::from_columns(self.p, self.dim, &cols)
    }

    /// Whether `v` lies in the Z_p-span: adjoining it must change neither
    /// the rank nor the divisor valuations.
    pub fn contains(&self, v: &[BigInt]) -> Result<bool, LatticeError> {
        if v.len() != self.dim {
            return Err(LatticeError::BadGenerator { got: v.len(), dim: self.dim });
        }
        let mut cols = self.basis.clone();
        cols.push(v.to_vec());
        let joined = Self::from_columns(self.p, self.dim, &cols)?;
        Ok(joined.rank() == self.rank() && joined.torsion_logidx == self.torsion_logidx)
    }

    /// Equality of Z_p-spans.
    pub fn eq_p(&self, other: &Self) -> Result<bool, LatticeError> {
        self.check_compatible(other)?;
        if self.rank() != other.rank() || self.torsion_logidx != other.torsion_logidx {
            return Ok(false);
        }
        // Equal-rank sublattices with equal divisor data coincide at p as
        // soon as either contains the other.
        let joined = self.sum(other)?;
        Ok(joined.rank() == self.rank() && joined.torsion_logidx == self.torsion_logidx)
    }

    /// Image under the integer matrix with the given rows, each of length
    /// `dim`; lands in Z_p^{rows.len()}.
    pub fn image(&self, rows: &[Vec<BigInt>]) -> Result<Self, LatticeError> {
        for row in rows {
            if row.len() != self.dim {
                return Err(LatticeError::BadGenerator { got: row.len(), dim: self.dim });
            }
        }
        let cols: Vec<Vec<BigInt>> = self
            .basis
            .iter()
            .map(|col| {
                rows.iter()
                    .map(|row| row.iter().zip(col).map(|(r, c)| r * c).sum())
                    .collect()
            })
            .collect();
        Self::from_columns(self.p, rows.len(), &cols)
    }

    /// The scaled lattice `p^e * self`.
    pub fn scaled(&self, e: &BigUint) -> Result<Self, LatticeError> {
        let factor = p_pow(self.p, e)?;
        let cols: Vec<Vec<BigInt>> = self
            .basis
            .iter()
            .map(|col| col.iter().map(|x| x * &factor).collect())
            .collect();
        Self::from_columns(self.p, self.dim, &cols)
    }
}

/// `(log_p |H + L : L|, log_p |Z_p^dim : L|)` for a finite-index level `L`.
/// The second component is the density denominator the level contributes.
pub fn lattice_index(
    h: &LatticeSubgroup,
    level: &LatticeSubgroup,
) -> Result<(BigUint, BigUint), LatticeError> {
    h.check_compatible(level)?;
    if !level.is_full_rank() {
        return Err(LatticeError::LevelNotFiniteIndex { rank: level.rank(), dim: level.dim() });
    }
    let joined = level.sum(h)?;
    // L sits inside H + L at equal rank, so the index is the drop in
    // divisor valuation.
    let num = level
        .torsion_logidx()
        .checked_sub(joined.torsion_logidx())
        .expect("adjoining generators cannot raise the index");
    Ok((num, level.torsion_logidx().clone()))
}
