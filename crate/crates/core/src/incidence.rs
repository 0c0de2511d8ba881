//! Dot-product incidences for point sets `E` in F_q^d.
//!
//! `nu(t)` counts ordered pairs `(x, y)` in `E x E` with `x.y = t`. Its
//! deviation from the mean, `R(t) = nu(t) - |E|^2/q`, is kept as the exact
//! integer numerator `q nu(t) - |E|^2`. Every inequality here is decided in
//! big-integer arithmetic; floats only enter the spectral identities.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use bitvec::prelude::*;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fourier::{self, FourierError, Space, SpectralFn, VecFq};
use crate::gf::FqElem;

/// `|E|^2` at or below which [`nu`] enumerates pairs directly.
pub const BRUTE_FORCE_PAIR_LIMIT: u64 = 100_000_000;

const SPECTRAL_DEFECT_TOL: f64 = 1e-6;
const IDENTITY_REL_TOL: f64 = 1e-8;
const SPECTRAL_SAMPLE_PAIR_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IncidenceError {
    #[error("point set contains the origin")]
    OriginInSet,
    #[error("line direction must be nonzero")]
    ZeroDirection,
    #[error("remainder bound violated at t = {t}: {lhs} > {rhs}")]
    BoundViolated { t: FqElem, lhs: BigInt, rhs: BigInt },
    #[error("spectral identity violated at k = {k}: {lhs} vs {rhs}")]
    IdentityViolated { k: usize, lhs: Complex64, rhs: Complex64 },
    #[error("spectral count disagrees at t = {t}: {detail}")]
    SpectralMismatch { t: FqElem, detail: String },
    #[error(transparent)]
    Fourier(#[from] FourierError),
}

/// A subset of F_q^d as a dense bit-vector over flat indices.
#[derive(Clone, Debug)]
pub struct PointSet {
    space: Space,
    bits: BitVec,
    count: usize,
}

impl PartialEq for PointSet {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.bits == other.bits
    }
}

impl PointSet {
    pub fn empty(space: Space) -> Self {
        let bits = bitvec![0; space.size()];
        PointSet { space, bits, count: 0 }
    }

    pub fn full(space: Space) -> Self {
        let bits = bitvec![1; space.size()];
        let count = space.size();
        PointSet { space, bits, count }
    }

    pub fn from_indices(space: Space, points: impl IntoIterator<Item = usize>) -> Self {
        let mut out = Self::empty(space);
        for i in points {
            out.insert(i);
        }
        out
    }

    pub fn from_bits(space: Space, bits: BitVec) -> Self {
        assert_eq!(bits.len(), space.size());
        let count = bits.count_ones();
        PointSet { space, bits, count }
    }

    /// The line `{s y : s in F_q}` through the origin.
    pub fn line(space: Space, dir: usize) -> Self {
        let pts: Vec<usize> = space.field().elements().map(|s| space.scale(s, dir)).collect();
        Self::from_indices(space, pts)
    }

    /// `{x : x.normal = c}`.
    pub fn hyperplane(space: Space, normal: usize, c: FqElem) -> Self {
        let pts: Vec<usize> = (0..space.size()).filter(|&x| space.dot(x, normal) == c).collect();
        Self::from_indices(space, pts)
    }

    pub fn insert(&mut self, idx: usize) {
        if !self.bits[idx] {
            self.bits.set(idx, true);
            self.count += 1;
        }
    }

    pub fn remove(&mut self, idx: usize) {
        if self.bits[idx] {
            self.bits.set(idx, false);
            self.count -= 1;
        }
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    pub fn contains_origin(&self) -> bool {
        self.bits[0]
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn bits(&self) -> &BitSlice {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter_ones()
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        let mut bits = self.bits.clone();
        bits |= &other.bits;
        Self::from_bits(self.space.clone(), bits)
    }

    /// Copy of `E` without the origin.
    pub fn strip_origin(&self) -> PointSet {
        let mut out = self.clone();
        out.remove(0);
        out
    }

    pub fn indicator(&self) -> SpectralFn {
        SpectralFn::indicator(self.space.clone(), self.iter())
    }

    fn require_origin_free(&self) -> Result<(), IncidenceError> {
        if self.contains_origin() {
            Err(IncidenceError::OriginInSet)
        } else {
            Ok(())
        }
    }

    /// Coordinates of every point, flattened `d` per point.
    fn coordinate_table(&self) -> Vec<FqElem> {
        let d = self.space.d();
        let mut out = vec![FqElem::ZERO; self.count * d];
        for (chunk, idx) in out.chunks_mut(d).zip(self.iter()) {
            self.space.decode_into(idx, chunk);
        }
        out
    }
}

/// Histogram of `x.y` over ordered pairs of a point set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NuProfile {
    pub nu: Vec<u64>,
    /// `sum_t nu(t)`, always `|E|^2`.
    pub total: u64,
}

impl NuProfile {
    pub fn q(&self) -> usize {
        self.nu.len()
    }

    /// `q nu(t) - |E|^2`, which is `q R(t)`.
    pub fn r_numerator(&self, t: FqElem) -> i128 {
        self.q() as i128 * self.nu[t.idx()] as i128 - self.total as i128
    }

    pub fn second_moment(&self) -> BigInt {
        self.nu.iter().map(|&v| BigInt::from(v) * v).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_index,nu,r_numerator\n");
        for t in 0..self.q() {
            writeln!(out, "{t},{},{}", self.nu[t], self.r_numerator(FqElem(t as u32))).unwrap();
        }
        out
    }
}

/// `nu(t)` by direct enumeration of pairs, sharded over the first coordinate.
pub fn nu_bruteforce(e: &PointSet) -> NuProfile {
    let space = e.space();
    let field = space.field();
    let (q, d) = (space.q(), space.d());
    let coords = e.coordinate_table();
    let nu = coords
        .par_chunks(d.max(1) * 64)
        .fold(
            || vec![0u64; q],
            |mut hist, block| {
                for x in block.chunks(d) {
                    for y in coords.chunks(d) {
                        let t = x.iter().zip(y).fold(FqElem::ZERO, |acc, (&a, &b)| field.add(acc, field.mul(a, b)));
                        hist[t.idx()] += 1;
                    }
                }
                hist
            },
        )
        .reduce(
            || vec![0u64; q],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let n = e.len() as u64;
    NuProfile { nu, total: n * n }
}

/// `nu(t)` through the character-sum representation
/// `nu(t) = q^{-1} sum_s chi(-st) sum_{x,y in E} chi(s x.y)`.
///
/// The inner double sum is `q^d sum_{x in E} E^(-s x)`, so one forward
/// transform of the indicator suffices. Each entry is rounded to the nearest
/// integer after checking that it lies within `1e-6` of it.
pub fn nu_spectral(e: &PointSet) -> Result<NuProfile, IncidenceError> {
    let space = e.space();
    let field = space.field();
    let q = space.q();
    let n = e.len() as u64;
    if n == 0 {
        return Ok(NuProfile { nu: vec![0; q], total: 0 });
    }
    let ehat = fourier::fourier_forward(&e.indicator());
    let qd = space.size() as f64;
    let pair_sums: Vec<Complex64> = field
        .elements()
        .map(|s| {
            if s.is_zero() {
                return Complex64::new((n * n) as f64, 0.0);
            }
            let ms = field.neg(s);
            let acc: Complex64 = e.iter().map(|x| ehat.get(space.scale(ms, x))).sum();
            acc * qd
        })
        .collect();

    let mut nu = vec![0u64; q];
    for t in field.elements() {
        let raw: Complex64 = field
            .elements()
            .zip(&pair_sums)
            .map(|(s, ps)| field.chi(field.neg(field.mul(s, t))) * ps)
            .sum::<Complex64>()
            / q as f64;
        let rounded = raw.re.round();
        let defect = (raw - rounded).norm();
        if defect >= SPECTRAL_DEFECT_TOL || rounded < 0.0 {
            return Err(IncidenceError::SpectralMismatch {
                t,
                detail: format!("value {raw} is not within {SPECTRAL_DEFECT_TOL} of a nonnegative integer"),
            });
        }
        nu[t.idx()] = rounded as u64;
    }
    let profile = NuProfile { nu, total: n * n };
    if profile.nu.iter().sum::<u64>() != profile.total {
        return Err(IncidenceError::SpectralMismatch { t: FqElem::ZERO, detail: "counts do not sum to |E|^2".into() });
    }
    if n * n <= SPECTRAL_SAMPLE_PAIR_LIMIT {
        let t = FqElem::ONE;
        let brute =
            e.iter().flat_map(|x| e.iter().map(move |y| (x, y))).filter(|&(x, y)| space.dot(x, y) == t).count() as u64;
        if brute != profile.nu[1] {
            return Err(IncidenceError::SpectralMismatch {
                t,
                detail: format!("spectral {} vs enumerated {brute}", profile.nu[1]),
            });
        }
    }
    Ok(profile)
}

/// `nu` by enumeration for `|E|^2 <= 10^8`, spectrally above that.
pub fn nu(e: &PointSet) -> Result<NuProfile, IncidenceError> {
    let n = e.len() as u64;
    if n * n <= BRUTE_FORCE_PAIR_LIMIT {
        Ok(nu_bruteforce(e))
    } else {
        nu_spectral(e)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RemainderReport {
    /// `q nu(t) - |E|^2` for each `t`.
    pub numerators: Vec<i128>,
    pub worst_t: FqElem,
    /// `max_{t != 0} (q nu(t) - |E|^2)^2 / (|E|^2 q^{d+1})`, in `[0, 1]` when the bound holds.
    pub sharpness: f64,
    /// The same ratio at `t = 0`, where the bound is not asserted and may exceed 1.
    pub zero_ratio: f64,
    #[serde(serialize_with = "crate::ser_bigint")]
    pub worst_lhs: BigInt,
    #[serde(serialize_with = "crate::ser_bigint")]
    pub rhs: BigInt,
}

/// Checks `(q nu(t) - |E|^2)^2 <= |E|^2 q^{d+1}` for every `t != 0`, i.e.
/// `|R(t)| <= |E| q^{(d-1)/2}` with denominators and roots cleared. At
/// `t = 0` the bound can fail (a line of self-orthogonal vectors has
/// `nu(0) = |E|^2`), so that entry is only reported.
pub fn remainder_bound_check(e: &PointSet) -> Result<RemainderReport, IncidenceError> {
    remainder_bound_check_profile(e, &nu(e)?)
}

pub fn remainder_bound_check_profile(e: &PointSet, profile: &NuProfile) -> Result<RemainderReport, IncidenceError> {
    let space = e.space();
    let q = BigInt::from(space.q());
    let size = BigInt::from(e.len());
    let rhs = &size * &size * num_traits::pow(q, space.d() + 1);
    let numerators: Vec<i128> = (0..profile.q()).map(|t| profile.r_numerator(FqElem(t as u32))).collect();
    let mut worst = (FqElem::ONE, BigInt::zero());
    for (t, &num) in numerators.iter().enumerate().skip(1) {
        let lhs = BigInt::from(num) * num;
        if lhs > rhs {
            return Err(IncidenceError::BoundViolated { t: FqElem(t as u32), lhs, rhs });
        }
        if lhs > worst.1 {
            worst = (FqElem(t as u32), lhs);
        }
    }
    let sharpness = ratio_f64(&worst.1, &rhs);
    let zero_ratio = ratio_f64(&(BigInt::from(numerators[0]) * numerators[0]), &rhs);
    Ok(RemainderReport { numerators, worst_t: worst.0, sharpness, zero_ratio, worst_lhs: worst.1, rhs })
}

/// `num / den` rounded to f64; zero when `den` is zero.
pub(crate) fn ratio_f64(num: &BigInt, den: &BigInt) -> f64 {
    if den.is_zero() {
        return 0.0;
    }
    BigRational::new(num.clone(), den.clone()).to_f64().unwrap_or(f64::INFINITY)
}

/// `(R_t f)(x) = sum_{y : x.y = t} f(y)`.
pub fn rotating_planes_apply(f: &SpectralFn, t: FqElem) -> SpectralFn {
    let space = f.space();
    let values: Vec<Complex64> = (0..space.size())
        .into_par_iter()
        .map(|x| (0..space.size()).filter(|&y| space.dot(x, y) == t).map(|y| f.get(y)).sum())
        .collect();
    SpectralFn::new(space.clone(), values).expect("length preserved")
}

/// Least flat index on the punctured line through `x`: scale so the last
/// nonzero coordinate becomes one.
pub fn canonical_direction(space: &Space, x: usize) -> Result<usize, IncidenceError> {
    let v = space.decode(x);
    let lead = v.coords().iter().rev().find(|c| !c.is_zero()).ok_or(IncidenceError::ZeroDirection)?;
    let s = space.field().inv(*lead).expect("nonzero");
    Ok(space.scale(s, x))
}

/// `|E cap l_y|`, counting the origin when it lies in `E`.
pub fn line_intersection(e: &PointSet, y: &VecFq) -> Result<usize, IncidenceError> {
    let idx = e.space().encode(y)?;
    line_intersection_idx(e, idx)
}

pub fn line_intersection_idx(e: &PointSet, y: usize) -> Result<usize, IncidenceError> {
    if y == 0 {
        return Err(IncidenceError::ZeroDirection);
    }
    let space = e.space();
    Ok(space.field().elements().filter(|&s| e.contains(space.scale(s, y))).count())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LineMax {
    pub count: usize,
    /// Canonical direction of a line attaining `count` (least such index).
    pub direction: usize,
}

/// `max_{y != 0} |E cap l_y|`, found by bucketing points by their line.
pub fn max_line_intersection(e: &PointSet) -> LineMax {
    let space = e.space();
    let origin = e.contains_origin() as usize;
    let mut per_line: BTreeMap<usize, usize> = BTreeMap::new();
    for x in e.iter().filter(|&x| x != 0) {
        *per_line.entry(canonical_direction(space, x).expect("nonzero point")).or_default() += 1;
    }
    // BTreeMap iterates directions in increasing order, so ties keep the least.
    let best = per_line.iter().fold(None::<(usize, usize)>, |best, (&dir, &c)| match best {
        Some((_, bc)) if bc >= c => best,
        _ => Some((dir, c)),
    });
    match best {
        Some((direction, c)) => LineMax { count: c + origin, direction },
        None => LineMax { count: origin, direction: 1 },
    }
}

/// `F(m) = |{x in E : x.m = 0}|`.
pub fn hyperplane_sum(e: &PointSet) -> SpectralFn {
    let space = e.space();
    let pts: Vec<usize> = e.iter().collect();
    let values: Vec<Complex64> = (0..space.size())
        .into_par_iter()
        .map(|m| Complex64::new(pts.iter().filter(|&&x| space.dot(x, m).is_zero()).count() as f64, 0.0))
        .collect();
    SpectralFn::new(space.clone(), values).expect("length preserved")
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    /// Largest `|lhs - rhs| / (1 + |rhs|)` over all frequencies.
    pub max_rel_err: f64,
    pub points: usize,
}

fn compare_spectra(lhs: &[Complex64], rhs: impl Fn(usize) -> Complex64) -> Result<IdentityReport, IncidenceError> {
    let mut max_rel_err = 0.0f64;
    for (k, l) in lhs.iter().enumerate() {
        let r = rhs(k);
        let err = (l - r).norm() / (1.0 + r.norm());
        if err > IDENTITY_REL_TOL {
            return Err(IncidenceError::IdentityViolated { k, lhs: *l, rhs: r });
        }
        max_rel_err = max_rel_err.max(err);
    }
    Ok(IdentityReport { max_rel_err, points: lhs.len() })
}

/// `F^(k) = q^{-1} |E cap l_k|` for `k != 0` and `q^{-1} |E|` at `k = 0`,
/// for origin-free `E`.
pub fn verify_hatf_identity(e: &PointSet) -> Result<IdentityReport, IncidenceError> {
    e.require_origin_free()?;
    let q = e.space().q() as f64;
    let fhat = fourier::fourier_forward(&hyperplane_sum(e));
    compare_spectra(fhat.values(), |k| {
        let count = if k == 0 { e.len() } else { line_intersection_idx(e, k).expect("nonzero") };
        Complex64::new(count as f64 / q, 0.0)
    })
}

/// `G^(k) = q^d |E^(k)|^2` with `G = E * E` the difference convolution.
pub fn verify_hatg_identity(e: &PointSet) -> Result<IdentityReport, IncidenceError> {
    let ind = e.indicator();
    let ghat = fourier::fourier_forward(&fourier::convolve_diff(&ind, &ind)?);
    let ehat = fourier::fourier_forward(&ind);
    let qd = e.space().size() as f64;
    compare_spectra(ghat.values(), |k| Complex64::new(qd * ehat.get(k).norm_sqr(), 0.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct SecondMomentReport {
    /// `q sum_t nu(t)^2`.
    #[serde(serialize_with = "crate::ser_bigint")]
    pub lhs: BigInt,
    /// `M |E|^2 q^d + |E|^4`.
    #[serde(serialize_with = "crate::ser_bigint")]
    pub rhs: BigInt,
    pub line_max: usize,
    pub holds: bool,
}

/// `q sum_t nu(t)^2 <= M |E|^2 q^d + |E|^4` with `M` the measured maximum
/// number of points of `E` on a line through the origin.
pub fn second_moment_check(e: &PointSet) -> Result<SecondMomentReport, IncidenceError> {
    e.require_origin_free()?;
    let profile = nu(e)?;
    Ok(second_moment_from(e, &profile, max_line_intersection(e).count))
}

pub(crate) fn second_moment_from(e: &PointSet, profile: &NuProfile, line_max: usize) -> SecondMomentReport {
    let space = e.space();
    let q = BigInt::from(space.q());
    let size2 = BigInt::from(e.len()) * e.len();
    let lhs = &q * profile.second_moment();
    let rhs = BigInt::from(line_max) * &size2 * num_traits::pow(q, space.d()) + &size2 * &size2;
    let holds = lhs <= rhs;
    SecondMomentReport { lhs, rhs, line_max, holds }
}
