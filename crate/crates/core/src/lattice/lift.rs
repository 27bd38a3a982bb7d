//! Lifting a filtration of Z_p^2 to Z_p^n along an integer surjection.
//!
//! For a rank-2 integer map `phi: Z_p^n -> Z_p^2` whose elementary divisors
//! are prime to p, a diagonalization `u . phi . v = d` yields an integer
//! section (after clearing the unit divisors through `D0 = lcm(d_1, d_2)`)
//! and a saturated kernel basis `K`. Each target level
//! `G_i = <(p^{a_i}, z_i), (0, p^{b_i})>` lifts to
//! `S_i = section(G_i) + p^{h(i)} K`, with the schedule `h` deciding how
//! fast the kernel is cut down: the kernel's share of the level index is
//! `(n-2) h(i)` out of `(n-2) h(i) + a_i + b_i`, so any schedule growing
//! slower than the target index drives the kernel's density to zero. All
//! lattices are handled `D0`-scaled, which leaves every p-valuation intact
//! because `D0` is a p-adic unit.
//!
//! On a finite window the vanishing-share requirement is witnessed the same
//! way the filtration validator witnesses divergence: for a nontrivial
//! kernel the cut exponents must be non-decreasing and must grow across the
//! window, and the kernel share must decline across it.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use super::filtration::FiltrationEntry;
use super::subgroup::{lattice_index, p_pow, snf_with_transforms, LatticeSubgroup};
use super::{LatticeError, LatticeFiltration};
use crate::arith::{rat_nat, vp_int, DensityLevel, DensitySequence, Precision, ScaledPAdic};

/// How deep the kernel is cut at each lifted level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schedule {
    /// `h(i) = floor(sqrt(a_i + b_i))`: unbounded growth while the kernel
    /// share `(n-2) h / ((n-2) h + a_i + b_i)` still vanishes.
    SqrtDen,
    /// Explicit cut exponents, one per target level `i >= 1`.
    Custom(Vec<BigUint>),
}

/// One lifted level `S_i <= Z_p^n`, stored `D0`-scaled.
#[derive(Debug, Clone)]
pub struct LiftLevel {
    /// Index into the target filtration.
    pub i: u64,
    /// Kernel cut exponent `h(i)`.
    pub h: BigUint,
    /// `D0 . S_i` inside Z_p^n.
    pub subgroup: LatticeSubgroup,
    /// `D0 . G_i` for the target level, verified equal to the image of
    /// `subgroup` under the map.
    pub image: LatticeSubgroup,
    /// `log_p |K S_i : S_i|` for the kernel `K`.
    pub kernel_num: BigUint,
    /// `log_p |Z_p^n : S_i|`.
    pub den: BigUint,
}

/// A filtration of Z_p^n mapping level-by-level onto a target filtration of
/// Z_p^2.
#[derive(Debug, Clone)]
pub struct LiftedFiltration {
    p: u64,
    dim: usize,
    map_rows: Vec<Vec<BigInt>>,
    section_scale: BigInt,
    kernel: LatticeSubgroup,
    levels: Vec<LiftLevel>,
}

impl LiftedFiltration {
    pub fn p(&self) -> u64 {
        self.p
    }

    /// Ambient dimension n.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The two rows of the defining map.
    pub fn map(&self) -> &[Vec<BigInt>] {
        &self.map_rows
    }

    /// Saturated kernel of the map, unscaled.
    pub fn kernel(&self) -> &LatticeSubgroup {
        &self.kernel
    }

    /// The unit divisor lcm `D0` cleared out of the integer section.
    pub fn section_scale(&self) -> &BigInt {
        &self.section_scale
    }

    pub fn levels(&self) -> &[LiftLevel] {
        &self.levels
    }

    /// Density sequence of the kernel under the lifted filtration.
    pub fn kernel_density(&self) -> DensitySequence {
        let levels = self
            .levels
            .iter()
            .map(|lvl| DensityLevel::new(lvl.i, lvl.kernel_num.clone(), lvl.den.clone()))
            .collect();
        DensitySequence::new(self.p, levels).expect("lift levels form a valid density sequence")
    }

    /// Density sequence, under the lifted filtration, of the subgroup
    /// spanned by the given column vectors in Z_p^n.
    pub fn subgroup_density(&self, gens: &[Vec<BigInt>]) -> Result<DensitySequence, LatticeError> {
        let scaled: Vec<Vec<BigInt>> = gens
            .iter()
            .map(|gen| gen.iter().map(|x| x * &self.section_scale).collect())
            .collect();
        let h = LatticeSubgroup::from_columns(self.p, self.dim, &scaled)?;
        let mut levels = Vec::with_capacity(self.levels.len());
        for lvl in &self.levels {
            let (num, den) = lattice_index(&h, &lvl.subgroup)?;
            levels.push(DensityLevel::new(lvl.i, num, den));
        }
        Ok(DensitySequence::new(self.p, levels)?)
    }

    /// Density sequence of the image of the spanned subgroup, measured
    /// against the target filtration.
    pub fn image_density(&self, gens: &[Vec<BigInt>]) -> Result<DensitySequence, LatticeError> {
        let mapped: Vec<Vec<BigInt>> = gens
            .iter()
            .map(|gen| {
                if gen.len() != self.dim {
                    return Err(LatticeError::BadGenerator { got: gen.len(), dim: self.dim });
                }
                Ok(self
                    .map_rows
                    .iter()
                    .map(|row| {
                        row.iter().zip(gen).map(|(c, x)| c * x).sum::<BigInt>()
                            * &self.section_scale
                    })
                    .collect())
            })
            .collect::<Result<_, _>>()?;
        let h = LatticeSubgroup::from_columns(self.p, 2, &mapped)?;
        let mut levels = Vec::with_capacity(self.levels.len());
        for lvl in &self.levels {
            let (num, den) = lattice_index(&h, &lvl.image)?;
            levels.push(DensityLevel::new(lvl.i, num, den));
        }
        Ok(DensitySequence::new(self.p, levels)?)
    }
}

/// `a . b` for row-major integer matrices.
fn mat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let inner = b.len();
    let out = if inner == 0 { 0 } else { b[0].len() };
    a.iter()
        .map(|row| (0..out).map(|j| (0..inner).map(|k| &row[k] * &b[k][j]).sum()).collect())
        .collect()
}

/// `a . x` for a row-major matrix and a column vector.
fn mat_vec(a: &[Vec<BigInt>], x: &[BigInt]) -> Vec<BigInt> {
    a.iter().map(|row| row.iter().zip(x).map(|(c, v)| c * v).sum()).collect()
}

/// Integer representative of `z` modulo `p^b`; the level lattice only
/// depends on this residue.
fn z_residue(
    p: u64,
    z: &ScaledPAdic,
    b: &BigUint,
    pb: &BigInt,
    i: u64,
) -> Result<BigInt, LatticeError> {
    match z.precision() {
        Precision::Exact => {}
        Precision::Digits(k) if BigUint::from(k) >= *b => {}
        Precision::Digits(_) => {
            return Err(LatticeError::PrecisionInsufficient { i, needed: b.to_string() })
        }
    }
    if z.unit().is_zero() || z.shift() >= b {
        return Ok(BigInt::zero());
    }
    let ps = p_pow(p, z.shift())?;
    Ok((z.unit() * ps).mod_floor(pb))
}

/// Window witnesses for `h` when the kernel is nontrivial: cut exponents
/// non-decreasing and growing across the window, and the kernel share of
/// the index declining across the window. The share may jitter locally (a
/// floored square root bumps it on every jump), so the endpoints certify
/// the trend, the same way the filtration validator witnesses divergence.
fn validate_schedule(
    n: usize,
    entries: &[FiltrationEntry],
    hs: &[BigUint],
) -> Result<(), LatticeError> {
    let corank = BigUint::from(n as u64 - 2);
    let share = |w: usize| {
        let kernel_log = &corank * &hs[w];
        let den = &kernel_log + entries[w + 1].index_exponent();
        rat_nat(&kernel_log, &den)
    };
    for w in 1..hs.len() {
        if hs[w] < hs[w - 1] {
            return Err(LatticeError::ScheduleViolation {
                i: (w + 1) as u64,
                reason: "cut exponents must be non-decreasing".into(),
            });
        }
    }
    let m = hs.len();
    if m >= 2 {
        if hs[m - 1] <= hs[0] {
            return Err(LatticeError::ScheduleViolation {
                i: m as u64,
                reason: "cut exponents must grow across the window".into(),
            });
        }
        if share(m - 1) >= share(0) {
            return Err(LatticeError::ScheduleViolation {
                i: m as u64,
                reason: "kernel share of the index must decline across the window".into(),
            });
        }
    }
    Ok(())
}

/// Lift `target` along the rank-2 integer map with the given rows. The
/// image condition `phi(S_i) = G_i` is re-verified per level on the
/// constructed lattices rather than assumed from the construction.
pub fn lift_filtration(
    map_rows: &[Vec<BigInt>],
    target: &LatticeFiltration,
    schedule: &Schedule,
) -> Result<LiftedFiltration, LatticeError> {
    let p = target.p();
    if map_rows.len() != 2 {
        return Err(LatticeError::BadMapRank(map_rows.len()));
    }
    let n = map_rows[0].len();
    if map_rows[1].len() != n {
        return Err(LatticeError::BadGenerator { got: map_rows[1].len(), dim: n });
    }
    if target.len() < 2 {
        return Err(LatticeError::EmptyWindow);
    }

    let (u, d, v) = snf_with_transforms(map_rows);
    let rank = (0..2.min(n)).take_while(|&t| !d[t][t].is_zero()).count();
    if rank != 2 {
        return Err(LatticeError::BadMapRank(rank));
    }
    let val1 = vp_int(p, &d[0][0]).expect("nonzero divisor");
    let val2 = vp_int(p, &d[1][1]).expect("nonzero divisor");
    if !val1.is_zero() || !val2.is_zero() {
        return Err(LatticeError::NotSurjectiveAtP(vec![
            val1.to_u64().unwrap_or(u64::MAX),
            val2.to_u64().unwrap_or(u64::MAX),
        ]));
    }
    let d0 = d[0][0].lcm(&d[1][1]);

    // n x 2 integer section with map . section = D0 . identity
    let mut e_mat = vec![vec![BigInt::zero(); 2]; n];
    e_mat[0][0] = &d0 / &d[0][0];
    e_mat[1][1] = &d0 / &d[1][1];
    let section = mat_mul(&v, &mat_mul(&e_mat, &u));

    // The trailing n - 2 columns of v span the kernel saturated: they are a
    // direct summand killed by the map exactly, not just modulo p-powers.
    let kernel_cols: Vec<Vec<BigInt>> =
        (2..n).map(|j| (0..n).map(|r| v[r][j].clone()).collect()).collect();
    let kernel = LatticeSubgroup::from_columns(p, n, &kernel_cols)?;
    let kernel_scaled_cols: Vec<Vec<BigInt>> =
        kernel.basis().iter().map(|col| col.iter().map(|x| x * &d0).collect()).collect();
    let kernel_scaled = LatticeSubgroup::from_columns(p, n, &kernel_scaled_cols)?;

    let entries = target.entries();
    let window = entries.len() - 1;
    let hs: Vec<BigUint> = match schedule {
        Schedule::SqrtDen => entries[1..].iter().map(|e| e.index_exponent().sqrt()).collect(),
        Schedule::Custom(hs) => {
            if hs.len() != window {
                return Err(LatticeError::ScheduleViolation {
                    i: window as u64,
                    reason: format!(
                        "schedule supplies {} level(s), the window has {}",
                        hs.len(),
                        window
                    ),
                });
            }
            hs.clone()
        }
    };
    // A trivial kernel puts nothing on the schedule: its density is zero at
    // every level no matter how the cuts move.
    if n > 2 {
        validate_schedule(n, entries, &hs)?;
    }

    let mut levels = Vec::with_capacity(window);
    for (w, entry) in entries[1..].iter().enumerate() {
        let i = (w + 1) as u64;
        let h = &hs[w];
        let pa = p_pow(p, &entry.a)?;
        let pb = p_pow(p, &entry.b)?;
        let z = z_residue(p, &entry.z, &entry.b, &pb, i)?;

        let mut cols = vec![
            mat_vec(&section, &[pa.clone(), z.clone()]),
            mat_vec(&section, &[BigInt::zero(), pb.clone()]),
        ];
        if kernel.rank() > 0 {
            let cut = p_pow(p, h)? * &d0;
            cols.extend(
                kernel.basis().iter().map(|col| col.iter().map(|x| x * &cut).collect::<Vec<_>>()),
            );
        }
        let subgroup = LatticeSubgroup::from_columns(p, n, &cols)?;

        let expected = LatticeSubgroup::from_columns(
            p,
            2,
            &[vec![&d0 * &pa, &d0 * &z], vec![BigInt::zero(), &d0 * &pb]],
        )?;
        if !subgroup.image(map_rows)?.eq_p(&expected)? {
            return Err(LatticeError::ImageMismatch { i });
        }

        let (kernel_num, den) = lattice_index(&kernel_scaled, &subgroup)?;
        levels.push(LiftLevel { i, h: h.clone(), subgroup, image: expected, kernel_num, den });
    }

    Ok(LiftedFiltration {
        p,
        dim: n,
        map_rows: map_rows.to_vec(),
        section_scale: d0,
        kernel,
        levels,
    })
}
