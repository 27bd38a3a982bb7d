//! Finite local coefficient rings with exact uniformizer valuations.
//!
//! Three kinds are supported, each with a fixed flat coordinate layout so
//! that group elements built over them hash canonically:
//!
//! * `Z/p^k` — one coordinate, reduced mod `p^k`; uniformizer `p`.
//! * `F_p[t]/(t^k)` — `k` coordinates mod `p` (coefficient of `t^j` at
//!   index `j`); uniformizer `t`.
//! * `Z_p[zeta_{p^m}] / p^k` — `phi(p^m)` coordinates mod `p^k` in the
//!   power basis of `pi = zeta - 1`; uniformizer `pi`, and `pi^{phi} O`
//!   equals `p O`, so `v_pi(sum lambda_j pi^j) = min_j (phi * v_p(lambda_j) + j)`
//!   exactly (the candidate valuations are pairwise distinct).
//!
//! Every operation reduces eagerly; a coordinate slice is always the
//! canonical representative of its residue class.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::arith::is_prime_u64;

use super::GroupError;

/// Which local ring a `FinLocalRing` models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingKind {
    /// `Z/p^k`.
    IntegersMod,
    /// `F_p[t]/(t^k)`.
    PolyMod,
    /// `Z_p[zeta_{p^m}]/p^k` in the `pi = zeta - 1` power basis.
    CyclotomicMod { m: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum KindData {
    IntegersMod,
    PolyMod,
    /// `reduction[j]` holds `c_j` of the minimal polynomial
    /// `f(y) = y^phi + c_{phi-1} y^{phi-1} + ... + c_1 y + c_0` of `pi`,
    /// reduced mod `p^k`, so `pi^phi = -(c_{phi-1} pi^{phi-1} + ... + c_0)`.
    CyclotomicMod { m: u32, reduction: Vec<u64> },
}

/// A finite local ring with eager canonical reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinLocalRing {
    p: u64,
    k: u32,
    /// Modulus of a single coordinate: `p^k`, except `p` for `PolyMod`.
    modulus: u64,
    width: usize,
    kind: KindData,
}

fn checked_p_pow(p: u64, k: u32) -> Result<u64, GroupError> {
    let mut acc: u64 = 1;
    for _ in 0..k {
        acc = acc
            .checked_mul(p)
            .filter(|&m| m < (1 << 63))
            .ok_or(GroupError::ModulusTooLarge { p, k })?;
    }
    Ok(acc)
}

fn check_params(p: u64, k: u32) -> Result<(), GroupError> {
    if !is_prime_u64(p) {
        return Err(GroupError::NotPrime(p));
    }
    if k == 0 {
        return Err(GroupError::ZeroDepth);
    }
    Ok(())
}

/// Coefficients of `Phi_{p^m}(1 + y)` as big integers: the minimal
/// polynomial of `pi` over `Z_p`, monic of degree `phi(p^m)`, Eisenstein at
/// `p` with constant term `p`.
fn pi_minimal_polynomial(p: u64, m: u32) -> Vec<BigUint> {
    let q = BigUint::from(p).pow(m - 1);
    let q = q.to_usize().expect("p^(m-1) fits a usize for supported sizes");
    let phi = (p as usize - 1) * q;
    // Phi_{p^m}(x) = sum_{j=0}^{p-1} x^{j q}; substitute x = 1 + y and
    // accumulate binomial rows of (1 + y)^{j q}.
    let mut f = vec![BigUint::zero(); phi + 1];
    for j in 0..p as usize {
        let n = j * q;
        let mut c = BigUint::one();
        for r in 0..=n {
            f[r] += &c;
            // next binomial C(n, r+1) = C(n, r) * (n - r) / (r + 1)
            if r < n {
                c = c * BigUint::from(n - r) / BigUint::from(r + 1);
            }
        }
    }
    f
}

impl FinLocalRing {
    pub fn integers_mod(p: u64, k: u32) -> Result<Self, GroupError> {
        check_params(p, k)?;
        let modulus = checked_p_pow(p, k)?;
        Ok(FinLocalRing { p, k, modulus, width: 1, kind: KindData::IntegersMod })
    }

    pub fn poly_mod(p: u64, k: u32) -> Result<Self, GroupError> {
        check_params(p, k)?;
        Ok(FinLocalRing { p, k, modulus: p, width: k as usize, kind: KindData::PolyMod })
    }

    pub fn cyclotomic_mod(p: u64, m: u32, k: u32) -> Result<Self, GroupError> {
        check_params(p, k)?;
        if m == 0 {
            return Err(GroupError::ZeroDepth);
        }
        let modulus = checked_p_pow(p, k)?;
        let f = pi_minimal_polynomial(p, m);
        let phi = f.len() - 1;
        if phi > 512 {
            return Err(GroupError::ModulusTooLarge { p, k: m });
        }
        let big_mod = BigUint::from(modulus);
        let reduction: Vec<u64> = f[..phi]
            .iter()
            .map(|c| (c % &big_mod).to_u64().expect("reduced coefficient fits u64"))
            .collect();
        debug_assert!(f[phi].is_one(), "minimal polynomial of pi is monic");
        Ok(FinLocalRing {
            p,
            k,
            modulus,
            width: phi,
            kind: KindData::CyclotomicMod { m, reduction },
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn kind(&self) -> RingKind {
        match &self.kind {
            KindData::IntegersMod => RingKind::IntegersMod,
            KindData::PolyMod => RingKind::PolyMod,
            KindData::CyclotomicMod { m, .. } => RingKind::CyclotomicMod { m: *m },
        }
    }

    /// Number of `u64` coordinates of one element.
    pub fn width(&self) -> usize {
        self.width
    }

    /// `phi(p^m)` ramification degree; 1 for the unramified kinds.
    pub fn ramification(&self) -> u64 {
        match &self.kind {
            KindData::CyclotomicMod { .. } => self.width as u64,
            _ => 1,
        }
    }

    /// Largest finite uniformizer valuation plus one: elements of valuation
    /// `>= val_cap()` are zero.
    pub fn val_cap(&self) -> u64 {
        match &self.kind {
            KindData::IntegersMod => self.k as u64,
            KindData::PolyMod => self.k as u64,
            KindData::CyclotomicMod { .. } => self.k as u64 * self.width as u64,
        }
    }

    /// log_p of the additive group order.
    pub fn log_order(&self) -> u64 {
        match &self.kind {
            KindData::IntegersMod => self.k as u64,
            KindData::PolyMod => self.k as u64,
            KindData::CyclotomicMod { .. } => self.k as u64 * self.width as u64,
        }
    }

    pub fn zero(&self) -> Vec<u64> {
        vec![0; self.width]
    }

    pub fn one(&self) -> Vec<u64> {
        let mut v = vec![0; self.width];
        v[0] = 1;
        v
    }

    /// The uniformizer (`p`, `t`, or `pi`) raised to `e`, as an element.
    pub fn uniformizer_pow(&self, e: u64) -> Vec<u64> {
        let mut v = vec![0; self.width];
        if e >= self.val_cap() {
            return v;
        }
        match &self.kind {
            KindData::IntegersMod => {
                v[0] = self.p.pow(e as u32) % self.modulus;
            }
            KindData::PolyMod => {
                v[e as usize] = 1;
            }
            KindData::CyclotomicMod { .. } => {
                // pi^e = p^(e / phi) * pi^(e mod phi)
                let phi = self.width as u64;
                let scalar = self.p.pow((e / phi) as u32) % self.modulus;
                v[(e % phi) as usize] = scalar;
            }
        }
        v
    }

    pub fn is_zero(&self, a: &[u64]) -> bool {
        a.iter().all(|&c| c == 0)
    }

    fn mod_coord(&self, c: u128) -> u64 {
        (c % self.modulus as u128) as u64
    }

    pub fn add_into(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        for i in 0..self.width {
            out[i] = self.mod_coord(a[i] as u128 + b[i] as u128);
        }
    }

    pub fn neg_into(&self, a: &[u64], out: &mut [u64]) {
        for i in 0..self.width {
            out[i] = if a[i] == 0 { 0 } else { self.modulus - a[i] };
        }
    }

    pub fn sub_into(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        for i in 0..self.width {
            out[i] = self.mod_coord(a[i] as u128 + (self.modulus - b[i]) as u128);
        }
    }

    pub fn scalar_mul_into(&self, s: u64, a: &[u64], out: &mut [u64]) {
        let s = s % self.modulus;
        for i in 0..self.width {
            out[i] = self.mod_coord(s as u128 * a[i] as u128);
        }
    }

    pub fn mul_into(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        match &self.kind {
            KindData::IntegersMod => {
                out[0] = self.mod_coord(a[0] as u128 * b[0] as u128);
            }
            KindData::PolyMod => {
                // truncated product: coefficients past t^{k-1} vanish
                for i in 0..self.width {
                    let mut acc: u128 = 0;
                    for j in 0..=i {
                        acc += a[j] as u128 * b[i - j] as u128;
                    }
                    out[i] = self.mod_coord(acc);
                }
            }
            KindData::CyclotomicMod { reduction, .. } => {
                let phi = self.width;
                let mut wide = vec![0u64; 2 * phi - 1];
                for i in 0..phi {
                    if a[i] == 0 {
                        continue;
                    }
                    for j in 0..phi {
                        wide[i + j] =
                            self.mod_coord(wide[i + j] as u128 + a[i] as u128 * b[j] as u128);
                    }
                }
                // fold down with pi^phi = -(c_{phi-1} pi^{phi-1} + ... + c_0)
                for d in (phi..2 * phi - 1).rev() {
                    let top = wide[d];
                    if top == 0 {
                        continue;
                    }
                    wide[d] = 0;
                    for (j, c) in reduction.iter().enumerate() {
                        if *c == 0 {
                            continue;
                        }
                        let sub = self.mod_coord(top as u128 * *c as u128);
                        wide[d - phi + j] =
                            self.mod_coord(wide[d - phi + j] as u128 + (self.modulus - sub) as u128);
                    }
                }
                out.copy_from_slice(&wide[..phi]);
            }
        }
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let mut out = vec![0; self.width];
        self.mul_into(a, b, &mut out);
        out
    }

    pub fn pow(&self, a: &[u64], mut e: u64) -> Vec<u64> {
        let mut base = a.to_vec();
        let mut acc = self.one();
        let mut tmp = vec![0; self.width];
        while e > 0 {
            if e & 1 == 1 {
                self.mul_into(&acc, &base, &mut tmp);
                acc.copy_from_slice(&tmp);
            }
            e >>= 1;
            if e > 0 {
                self.mul_into(&base.clone(), &base, &mut tmp);
                base.copy_from_slice(&tmp);
            }
        }
        acc
    }

    fn coord_val(&self, c: u64) -> Option<u64> {
        if c == 0 {
            return None;
        }
        let mut v = 0;
        let mut c = c;
        while c % self.p == 0 {
            c /= self.p;
            v += 1;
        }
        Some(v)
    }

    /// Uniformizer valuation; `None` for the zero element.
    pub fn valuation(&self, a: &[u64]) -> Option<u64> {
        match &self.kind {
            KindData::IntegersMod => self.coord_val(a[0]),
            KindData::PolyMod => a.iter().position(|&c| c != 0).map(|i| i as u64),
            KindData::CyclotomicMod { .. } => {
                let phi = self.width as u64;
                a.iter()
                    .enumerate()
                    .filter_map(|(i, &c)| self.coord_val(c).map(|v| phi * v + i as u64))
                    .min()
            }
        }
    }

    pub fn is_unit(&self, a: &[u64]) -> bool {
        self.valuation(a) == Some(0)
    }

    /// Inverse of a unit. For the local kinds this peels off the unit
    /// constant coordinate and sums the finite geometric series of the
    /// remaining topologically nilpotent part.
    pub fn invert_unit(&self, a: &[u64]) -> Result<Vec<u64>, GroupError> {
        if !self.is_unit(a) {
            return Err(GroupError::NotAUnit);
        }
        let c0_inv = mod_inverse(a[0], self.modulus);
        match &self.kind {
            KindData::IntegersMod => Ok(vec![c0_inv]),
            _ => {
                // a = c0 (1 + w) with w = a/c0 - 1 of positive valuation:
                // a^{-1} = c0^{-1} (1 - w + w^2 - ...), a finite sum here.
                let mut scaled = vec![0; self.width];
                self.scalar_mul_into(c0_inv, a, &mut scaled);
                let mut w = scaled.clone();
                w[0] = self.mod_coord(w[0] as u128 + (self.modulus - 1) as u128);
                let mut acc = self.one();
                let mut term = self.one();
                let mut tmp = vec![0; self.width];
                loop {
                    self.mul_into(&term, &w, &mut tmp);
                    term.copy_from_slice(&tmp);
                    if self.is_zero(&term) {
                        break;
                    }
                    self.neg_into(&term.clone(), &mut tmp);
                    term.copy_from_slice(&tmp);
                    self.add_into(&acc.clone(), &term, &mut tmp);
                    acc.copy_from_slice(&tmp);
                }
                let mut out = vec![0; self.width];
                self.scalar_mul_into(c0_inv, &acc, &mut out);
                Ok(out)
            }
        }
    }
}

/// Inverse of `a` mod `m` for `gcd(a, m) = 1`, by extended Euclid.
fn mod_inverse(a: u64, m: u64) -> u64 {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    debug_assert_eq!(r0, 1, "inverse of a non-unit");
    (s0.rem_euclid(m as i128)) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_mod_valuations_and_inverse() {
        let r = FinLocalRing::integers_mod(3, 4).unwrap();
        assert_eq!(r.width(), 1);
        assert_eq!(r.val_cap(), 4);
        assert_eq!(r.valuation(&[18]), Some(2));
        assert_eq!(r.valuation(&[0]), None);
        let inv = r.invert_unit(&[5]).unwrap();
        assert_eq!(r.mul(&[5], &inv), r.one());
        assert_eq!(r.invert_unit(&[6]), Err(GroupError::NotAUnit));
    }

    #[test]
    fn poly_mod_truncates_and_freshman_dream_squares() {
        let r = FinLocalRing::poly_mod(2, 5).unwrap();
        // (1 + t)^2 = 1 + t^2 in characteristic 2
        let u = vec![1, 1, 0, 0, 0];
        assert_eq!(r.pow(&u, 2), vec![1, 0, 1, 0, 0]);
        // t^3 * t^3 = t^6 = 0 after truncation at t^5
        let t3 = r.uniformizer_pow(3);
        assert!(r.is_zero(&r.mul(&t3, &t3)));
        assert_eq!(r.valuation(&t3), Some(3));
        let inv = r.invert_unit(&u).unwrap();
        assert_eq!(r.mul(&u, &inv), r.one());
    }

    #[test]
    fn cyclotomic_minimal_polynomial_is_eisenstein() {
        for (p, m) in [(3u64, 1u32), (2, 2), (3, 2), (5, 1)] {
            let f = pi_minimal_polynomial(p, m);
            let phi = f.len() - 1;
            assert_eq!(phi as u64, (p - 1) * p.pow(m - 1));
            assert!(f[phi].is_one());
            assert_eq!(f[0], BigUint::from(p));
            for c in &f[..phi] {
                assert!((c % BigUint::from(p)).is_zero(), "Eisenstein at p");
            }
        }
    }

    #[test]
    fn cyclotomic_valuation_grading() {
        let r = FinLocalRing::cyclotomic_mod(3, 1, 4).unwrap();
        assert_eq!(r.width(), 2);
        assert_eq!(r.val_cap(), 8);
        // v(p^j pi^i) = j*phi + i, all distinct across the coordinate grid
        let mut seen = std::collections::HashSet::new();
        for e in 0..r.val_cap() {
            let x = r.uniformizer_pow(e);
            assert_eq!(r.valuation(&x), Some(e));
            assert!(seen.insert(e));
        }
        // multiplying by p shifts the valuation by exactly phi
        let p_elt = r.uniformizer_pow(2);
        assert_eq!(r.valuation(&p_elt), Some(2));
        for e in 0..6 {
            let x = r.uniformizer_pow(e);
            assert_eq!(r.valuation(&r.mul(&p_elt, &x)), Some(e + 2));
        }
    }

    #[test]
    fn cyclotomic_zeta_has_multiplicative_order_p_to_m() {
        for (p, m, k) in [(3u64, 1u32, 3u32), (2, 2, 3), (3, 2, 2)] {
            let r = FinLocalRing::cyclotomic_mod(p, m, k).unwrap();
            let mut zeta = r.zero();
            zeta[0] = 1;
            if r.width() > 1 {
                zeta[1] = 1; // zeta = 1 + pi
            }
            let ord = p.pow(m);
            assert_eq!(r.pow(&zeta, ord), r.one());
            assert_ne!(r.pow(&zeta, ord / p), r.one());
            let inv = r.invert_unit(&zeta).unwrap();
            assert_eq!(r.mul(&zeta, &inv), r.one());
        }
    }

    #[test]
    fn cyclotomic_multiplication_is_valuation_additive() {
        let r = FinLocalRing::cyclotomic_mod(3, 1, 3).unwrap();
        // spot-check v(xy) = v(x) + v(y) below the cap on mixed elements
        let x = vec![3, 1]; // 3 + pi, valuation 1
        let y = vec![0, 3]; // 3 pi, valuation 3
        assert_eq!(r.valuation(&x), Some(1));
        assert_eq!(r.valuation(&y), Some(3));
        assert_eq!(r.valuation(&r.mul(&x, &y)), Some(4));
        let z = vec![1, 2]; // unit
        assert_eq!(r.valuation(&r.mul(&y, &z)), Some(3));
    }
}
