//! Arithmetic in GF(p^n).
//!
//! Elements are packed as integers: the coefficient vector `(c_0, ..., c_{n-1})`
//! of the residue polynomial maps to `c_0 + c_1 p + ... + c_{n-1} p^{n-1}`.
//! So index 0 is zero, index 1 is one, and for `n = 1` the index is the residue
//! mod `p`.
//!
//! A [`FieldCtx`] is fully tabulated at construction (log/antilog, negation,
//! inverse, trace and character tables, plus dense addition and multiplication
//! tables for small fields) and is immutable afterwards.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest field built by [`FieldCtx::new`].
pub const DEFAULT_SIZE_CAP: usize = 1 << 20;

const MUL_TABLE_LIMIT: usize = 4096;
const ADD_TABLE_LIMIT: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("characteristic {0} is not prime")]
    NotPrime(u64),
    #[error("extension degree {0} is out of range")]
    DegreeOutOfRange(u32),
    #[error("field of size {p}^{n} exceeds the size cap of {cap} elements")]
    FieldTooLarge { p: u64, n: u32, cap: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("modulus {0:?} is not a monic polynomial of the requested degree")]
    MalformedModulus(Vec<u32>),
    #[error("modulus {modulus:?} is reducible (divisible by {factor:?})")]
    ReducibleModulus { modulus: Vec<u32>, factor: Vec<u32> },
    #[error("GF({q}) has no proper subfield of size {size}")]
    NoSubfield { q: usize, size: usize },
    #[error("table self-check failed: {0}")]
    TableCheck(String),
}

/// A field element, stored as its packed coefficient index in `[0, q)`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FqElem(pub u32);

impl FqElem {
    pub const ZERO: FqElem = FqElem(0);
    pub const ONE: FqElem = FqElem(1);

    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FqElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Everything needed to rebuild a field with identical element indexing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDescriptor {
    pub p: u32,
    pub n: u32,
    pub q: usize,
    /// Monic modulus, constant term first (length `n + 1`).
    pub modulus: Vec<u32>,
}

/// A realized finite field GF(p^n).
pub struct FieldCtx {
    p: u32,
    n: u32,
    q: usize,
    modulus: Vec<u32>,
    /// `exp[i] = g^i` for `i in 0..q-1`.
    exp: Vec<u32>,
    /// `log[a]` for `a != 0`; `log[0]` is unused.
    log: Vec<u32>,
    neg: Vec<u32>,
    inv: Vec<u32>,
    trace: Vec<u32>,
    chars: Vec<Complex64>,
    mul_table: Option<Vec<u16>>,
    add_table: Option<Vec<u16>>,
    generator: FqElem,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldCtx")
            .field("p", &self.p)
            .field("n", &self.n)
            .field("q", &self.q)
            .field("modulus", &self.modulus)
            .finish()
    }
}

pub fn is_prime(m: u64) -> bool {
    if m < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= m {
        if m.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= m {
        if m.is_multiple_of(d) {
            out.push(d);
            while m.is_multiple_of(d) {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

// Dense polynomials over F_p, constant term first.

fn poly_trim(a: &mut Vec<u32>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

/// Remainder of `a` modulo the monic polynomial `m`.
fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let deg_m = m.len() - 1;
    let mut r: Vec<u64> = a.iter().map(|&c| c as u64).collect();
    let p64 = p as u64;
    while r.len() > deg_m {
        let lead = r[r.len() - 1] % p64;
        let shift = r.len() - 1 - deg_m;
        if lead != 0 {
            for (i, &c) in m.iter().enumerate() {
                let sub = lead * c as u64 % p64;
                r[shift + i] = (r[shift + i] + p64 - sub) % p64;
            }
        }
        r.pop();
    }
    let mut out: Vec<u32> = r.into_iter().map(|c| (c % p64) as u32).collect();
    poly_trim(&mut out);
    out
}

fn poly_mulmod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let p64 = p as u64;
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p64;
        }
    }
    let prod: Vec<u32> = prod.into_iter().map(|c| c as u32).collect();
    poly_rem(&prod, m, p)
}

fn unpack(idx: usize, p: u32, n: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(n as usize);
    let mut rest = idx;
    for _ in 0..n {
        out.push((rest % p as usize) as u32);
        rest /= p as usize;
    }
    poly_trim(&mut out);
    out
}

fn pack(coeffs: &[u32], p: u32) -> usize {
    coeffs.iter().rev().fold(0usize, |acc, &c| acc * p as usize + c as usize)
}

/// Returns a nontrivial monic factor of `modulus` of degree at most half its
/// degree, or `None` if the modulus is irreducible.
fn find_factor(modulus: &[u32], p: u32) -> Option<Vec<u32>> {
    let n = modulus.len() - 1;
    for deg in 1..=n / 2 {
        let count = (p as usize).pow(deg as u32);
        for low in 0..count {
            let mut cand = unpack(low, p, deg as u32);
            cand.resize(deg, 0);
            cand.push(1);
            if poly_rem(modulus, &cand, p).is_empty() {
                return Some(cand);
            }
        }
    }
    None
}

/// Lexicographically least monic irreducible of degree `n`, comparing
/// coefficients from the constant term upward.
fn least_irreducible(p: u32, n: u32) -> Vec<u32> {
    let total = (p as usize).pow(n);
    for rank in 0..total {
        // c_0 is the most significant digit of the rank.
        let mut cand = vec![0u32; n as usize + 1];
        let mut rest = rank;
        for i in (0..n as usize).rev() {
            cand[i] = (rest % p as usize) as u32;
            rest /= p as usize;
        }
        cand[n as usize] = 1;
        if n > 1 && cand[0] == 0 {
            continue;
        }
        if find_factor(&cand, p).is_none() {
            return cand;
        }
    }
    unreachable!("an irreducible polynomial of every degree exists over F_p")
}

impl FieldCtx {
    /// Builds GF(p^n) with the default size cap.
    pub fn new(p: u64, n: u32) -> Result<Self, GfError> {
        Self::with_cap(p, n, DEFAULT_SIZE_CAP)
    }

    pub fn with_cap(p: u64, n: u32, cap: usize) -> Result<Self, GfError> {
        if !is_prime(p) {
            return Err(GfError::NotPrime(p));
        }
        if n == 0 || n > 64 {
            return Err(GfError::DegreeOutOfRange(n));
        }
        let q = Self::checked_size(p, n, cap)?;
        let p = p as u32;
        let modulus = least_irreducible(p, n);
        Self::build(p, n, q, modulus)
    }

    /// Builds a field over an explicitly supplied modulus. Only the
    /// irreducibility self-check relies on this; the normal entry point is
    /// [`FieldCtx::new`].
    #[doc(hidden)]
    pub fn with_modulus(p: u64, modulus: Vec<u32>) -> Result<Self, GfError> {
        if !is_prime(p) {
            return Err(GfError::NotPrime(p));
        }
        if modulus.len() < 2 || modulus.last() != Some(&1) || modulus.iter().any(|&c| c as u64 >= p) {
            return Err(GfError::MalformedModulus(modulus));
        }
        let n = (modulus.len() - 1) as u32;
        let q = Self::checked_size(p, n, DEFAULT_SIZE_CAP)?;
        if let Some(factor) = find_factor(&modulus, p as u32) {
            return Err(GfError::ReducibleModulus { modulus, factor });
        }
        Self::build(p as u32, n, q, modulus)
    }

    fn checked_size(p: u64, n: u32, cap: usize) -> Result<usize, GfError> {
        let too_large = GfError::FieldTooLarge { p, n, cap };
        let q = p.checked_pow(n).ok_or(too_large.clone())?;
        if q > cap as u64 || q > u32::MAX as u64 {
            return Err(too_large);
        }
        Ok(q as usize)
    }

    fn build(p: u32, n: u32, q: usize, modulus: Vec<u32>) -> Result<Self, GfError> {
        let polymul =
            |a: usize, b: usize| -> usize { pack(&poly_mulmod(&unpack(a, p, n), &unpack(b, p, n), &modulus, p), p) };
        let polypow = |a: usize, mut e: u64| -> usize {
            let mut base = a;
            let mut acc = 1usize;
            while e > 0 {
                if e & 1 == 1 {
                    acc = polymul(acc, base);
                }
                base = polymul(base, base);
                e >>= 1;
            }
            acc
        };

        let order = (q - 1) as u64;
        let factors = prime_factors(order);
        let generator = (1..q)
            .find(|&a| factors.iter().all(|&r| polypow(a, order / r) != 1))
            .ok_or_else(|| GfError::TableCheck("no element of full multiplicative order".into()))?;

        let mut exp = Vec::with_capacity(q - 1);
        let mut log = vec![u32::MAX; q];
        let mut x = 1usize;
        for i in 0..q - 1 {
            if log[x] != u32::MAX {
                return Err(GfError::TableCheck(format!("powers of {generator} repeat at step {i}")));
            }
            log[x] = i as u32;
            exp.push(x as u32);
            x = polymul(x, generator);
        }
        log[0] = 0;

        let neg: Vec<u32> = (0..q)
            .map(|a| {
                let c: Vec<u32> = unpack(a, p, n).into_iter().map(|c| (p - c) % p).collect();
                pack(&c, p) as u32
            })
            .collect();
        let inv: Vec<u32> =
            (0..q).map(|a| if a == 0 { 0 } else { exp[(order as usize - log[a] as usize) % (q - 1)] }).collect();

        // Tr(a) = a + a^p + ... + a^{p^{n-1}}, summed coefficient-wise.
        let mut trace = vec![0u32; q];
        for a in 1..q {
            let mut sum = vec![0u64; n as usize];
            let mut frob = 1u64;
            for _ in 0..n {
                let e = (log[a] as u64 * frob) % order;
                for (i, c) in unpack(exp[e as usize] as usize, p, n).into_iter().enumerate() {
                    sum[i] += c as u64;
                }
                frob = frob * p as u64 % order.max(1);
            }
            if sum.iter().skip(1).any(|&c| c % p as u64 != 0) {
                return Err(GfError::TableCheck(format!("trace of {a} is not in the prime field")));
            }
            trace[a] = (sum[0] % p as u64) as u32;
        }

        let chars: Vec<Complex64> = (0..p)
            .map(|k| match k {
                0 => Complex64::new(1.0, 0.0),
                _ if 2 * k == p => Complex64::new(-1.0, 0.0),
                _ => Complex64::from_polar(1.0, 2.0 * PI * k as f64 / p as f64),
            })
            .collect();

        let mut field = FieldCtx {
            p,
            n,
            q,
            modulus,
            exp,
            log,
            neg,
            inv,
            trace,
            chars,
            mul_table: None,
            add_table: None,
            generator: FqElem(generator as u32),
        };
        if q <= MUL_TABLE_LIMIT {
            let mut table = vec![0u16; q * q];
            for a in 0..q {
                for b in 0..q {
                    table[a * q + b] = field.mul_via_log(FqElem(a as u32), FqElem(b as u32)).0 as u16;
                }
            }
            field.mul_table = Some(table);
        }
        if n > 1 && q <= ADD_TABLE_LIMIT {
            let mut table = vec![0u16; q * q];
            for a in 0..q {
                for b in 0..q {
                    table[a * q + b] = field.add_digits(FqElem(a as u32), FqElem(b as u32)).0 as u16;
                }
            }
            field.add_table = Some(table);
        }
        field.check_trace()?;
        Ok(field)
    }

    /// Trace must be F_p-linear in the coefficient basis and hit every residue.
    fn check_trace(&self) -> Result<(), GfError> {
        let p = self.p as usize;
        let basis: Vec<u32> = (0..self.n).map(|i| self.trace[p.pow(i)]).collect();
        let mut seen = vec![false; p];
        for a in 0..self.q {
            let coeffs = unpack(a, self.p, self.n);
            let lin = coeffs.iter().zip(&basis).map(|(&c, &t)| c as usize * t as usize).sum::<usize>() % p;
            if lin != self.trace[a] as usize {
                return Err(GfError::TableCheck(format!("trace is not linear at {a}")));
            }
            seen[self.trace[a] as usize] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(GfError::TableCheck("trace is not surjective".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }

    /// Monic modulus, constant term first.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor { p: self.p, n: self.n, q: self.q, modulus: self.modulus.clone() }
    }

    pub fn elements(&self) -> impl Iterator<Item = FqElem> + '_ {
        (0..self.q as u32).map(FqElem)
    }

    pub fn units(&self) -> impl Iterator<Item = FqElem> + '_ {
        (1..self.q as u32).map(FqElem)
    }

    /// Element with the given coefficient vector (constant term first).
    pub fn from_coeffs(&self, coeffs: &[u32]) -> FqElem {
        debug_assert!(coeffs.len() <= self.n as usize && coeffs.iter().all(|&c| c < self.p));
        FqElem(pack(coeffs, self.p) as u32)
    }

    pub fn coeffs(&self, a: FqElem) -> Vec<u32> {
        let mut c = unpack(a.idx(), self.p, self.n);
        c.resize(self.n as usize, 0);
        c
    }

    /// The element represented by the integer `k`, reduced mod `p`.
    pub fn from_int(&self, k: i64) -> FqElem {
        FqElem(k.rem_euclid(self.p as i64) as u32)
    }

    fn add_digits(&self, a: FqElem, b: FqElem) -> FqElem {
        if self.p == 2 {
            return FqElem(a.0 ^ b.0);
        }
        let p = self.p;
        let (mut x, mut y) = (a.0, b.0);
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..self.n {
            out += ((x % p + y % p) % p) * place;
            x /= p;
            y /= p;
            place = place.wrapping_mul(p);
        }
        FqElem(out)
    }

    #[inline]
    pub fn add(&self, a: FqElem, b: FqElem) -> FqElem {
        if self.n == 1 {
            let s = a.0 + b.0;
            return FqElem(if s >= self.p { s - self.p } else { s });
        }
        match &self.add_table {
            Some(t) => FqElem(t[a.idx() * self.q + b.idx()] as u32),
            None => self.add_digits(a, b),
        }
    }

    #[inline]
    pub fn neg(&self, a: FqElem) -> FqElem {
        FqElem(self.neg[a.idx()])
    }

    #[inline]
    pub fn sub(&self, a: FqElem, b: FqElem) -> FqElem {
        self.add(a, self.neg(b))
    }

    fn mul_via_log(&self, a: FqElem, b: FqElem) -> FqElem {
        if a.is_zero() || b.is_zero() {
            return FqElem::ZERO;
        }
        let s = self.log[a.idx()] as usize + self.log[b.idx()] as usize;
        FqElem(self.exp[s % (self.q - 1)])
    }

    #[inline]
    pub fn mul(&self, a: FqElem, b: FqElem) -> FqElem {
        match &self.mul_table {
            Some(t) => FqElem(t[a.idx() * self.q + b.idx()] as u32),
            None => self.mul_via_log(a, b),
        }
    }

    pub fn inv(&self, a: FqElem) -> Result<FqElem, GfError> {
        if a.is_zero() {
            return Err(GfError::DivisionByZero);
        }
        Ok(FqElem(self.inv[a.idx()]))
    }

    pub fn pow(&self, a: FqElem, e: u64) -> FqElem {
        if e == 0 {
            return FqElem::ONE;
        }
        if a.is_zero() {
            return FqElem::ZERO;
        }
        let order = (self.q - 1) as u64;
        let l = (self.log[a.idx()] as u64 * (e % order)) % order;
        FqElem(self.exp[l as usize])
    }

    /// Absolute trace to F_p, as an integer in `[0, p)`.
    #[inline]
    pub fn trace(&self, a: FqElem) -> u32 {
        self.trace[a.idx()]
    }

    /// The canonical additive character `exp(2 pi i Tr(a) / p)`.
    #[inline]
    pub fn chi(&self, a: FqElem) -> Complex64 {
        self.chars[self.trace[a.idx()] as usize]
    }

    /// Least-index element of multiplicative order `q - 1`.
    pub fn multiplicative_generator(&self) -> FqElem {
        self.generator
    }

    /// Multiplicative order of a nonzero element.
    pub fn order(&self, a: FqElem) -> Result<u64, GfError> {
        if a.is_zero() {
            return Err(GfError::DivisionByZero);
        }
        let m = (self.q - 1) as u64;
        let l = self.log[a.idx()] as u64;
        Ok(m / num_integer::gcd(m, l))
    }

    /// Elements of the unique subfield with `size` elements.
    pub fn subfield(&self, size: usize) -> Result<Vec<FqElem>, GfError> {
        let err = GfError::NoSubfield { q: self.q, size };
        let k = (1..=self.n).find(|&k| (self.p as usize).pow(k) == size).ok_or(err.clone())?;
        if !self.n.is_multiple_of(k) {
            return Err(err);
        }
        Ok(self.elements().filter(|&a| self.pow(a, size as u64) == a).collect())
    }

    /// The subgroup of `F_q^*` of the given order (which must divide `q - 1`).
    pub fn unit_subgroup(&self, order: usize) -> Option<Vec<FqElem>> {
        if order == 0 || !(self.q - 1).is_multiple_of(order) {
            return None;
        }
        let h = self.pow(self.generator, ((self.q - 1) / order) as u64);
        let mut out: Vec<FqElem> = (0..order as u64).map(|i| self.pow(h, i)).collect();
        out.sort_unstable();
        Some(out)
    }
}
