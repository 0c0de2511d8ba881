//! Product sets, iterated sumsets and dot-product sets, and the exact checks
//! that decide when they cover F_q^*.
//!
//! Thresholds with fractional exponents are compared after raising both sides
//! to an integer power, e.g. `|A| > q^{1/2 + 1/(2d)}` becomes
//! `|A|^{2d} > q^{d+1}`. Equality counts as "not met".

use std::sync::Arc;

use bitvec::prelude::*;
use num_bigint::{BigInt, BigUint};
use num_rational::Ratio;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fourier::Space;
use crate::gf::{FieldCtx, FieldDescriptor, FqElem};
use crate::incidence::{self, IncidenceError, PointSet};

/// At most this many missing units are listed in a verdict.
pub const MISSING_LIST_LIMIT: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoveringError {
    #[error("number of summands must be at least 1, got {0}")]
    BadArity(usize),
    #[error("bilinear form needs equally many nonempty factor lists, got {0} and {1}")]
    ArityMismatch(usize, usize),
    #[error("epsilon must lie in (0, 1/2], got {0}")]
    BadEpsilon(String),
    #[error("operands live over different fields")]
    FieldMismatch,
    #[error(transparent)]
    Incidence(#[from] IncidenceError),
    #[error(transparent)]
    Fourier(#[from] crate::fourier::FourierError),
}

/// A subset of F_q.
#[derive(Clone, Debug)]
pub struct ScalarSet {
    field: Arc<FieldCtx>,
    bits: BitVec,
    count: usize,
}

impl PartialEq for ScalarSet {
    fn eq(&self, other: &Self) -> bool {
        self.field.descriptor() == other.field.descriptor() && self.bits == other.bits
    }
}

impl Eq for ScalarSet {}

impl ScalarSet {
    pub fn empty(field: Arc<FieldCtx>) -> Self {
        let bits = bitvec![0; field.q()];
        ScalarSet { field, bits, count: 0 }
    }

    pub fn full(field: Arc<FieldCtx>) -> Self {
        let bits = bitvec![1; field.q()];
        let count = field.q();
        ScalarSet { field, bits, count }
    }

    pub fn from_elems(field: Arc<FieldCtx>, elems: impl IntoIterator<Item = FqElem>) -> Self {
        let mut out = Self::empty(field);
        for a in elems {
            out.insert(a);
        }
        out
    }

    /// Elements whose indices are set in the low `q` bits of `mask`.
    pub fn from_mask(field: Arc<FieldCtx>, mask: u64) -> Self {
        let q = field.q();
        Self::from_elems(field, (0..q.min(64)).filter(|&i| mask >> i & 1 == 1).map(|i| FqElem(i as u32)))
    }

    fn from_bits(field: Arc<FieldCtx>, bits: BitVec) -> Self {
        let count = bits.count_ones();
        ScalarSet { field, bits, count }
    }

    pub fn insert(&mut self, a: FqElem) {
        if !self.bits[a.idx()] {
            self.bits.set(a.idx(), true);
            self.count += 1;
        }
    }

    pub fn remove(&mut self, a: FqElem) {
        if self.bits[a.idx()] {
            self.bits.set(a.idx(), false);
            self.count -= 1;
        }
    }

    #[inline]
    pub fn contains(&self, a: FqElem) -> bool {
        self.bits[a.idx()]
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn field(&self) -> &Arc<FieldCtx> {
        &self.field
    }

    pub fn iter(&self) -> impl Iterator<Item = FqElem> + '_ {
        self.bits.iter_ones().map(|i| FqElem(i as u32))
    }

    pub fn to_vec(&self) -> Vec<FqElem> {
        self.iter().collect()
    }

    pub fn is_subset(&self, other: &ScalarSet) -> bool {
        self.iter().all(|a| other.contains(a))
    }

    pub fn without_zero(&self) -> ScalarSet {
        let mut out = self.clone();
        out.remove(FqElem::ZERO);
        out
    }

    /// `c A = {c a : a in A}`.
    pub fn dilate(&self, c: FqElem) -> ScalarSet {
        Self::from_elems(self.field.clone(), self.iter().map(|a| self.field.mul(c, a)))
    }

    fn same_field(&self, other: &ScalarSet) -> Result<(), CoveringError> {
        if Arc::ptr_eq(&self.field, &other.field) || self.field.descriptor() == other.field.descriptor() {
            Ok(())
        } else {
            Err(CoveringError::FieldMismatch)
        }
    }
}

/// `A.B = {a b : a in A, b in B}`.
pub fn product_of(a: &ScalarSet, b: &ScalarSet) -> Result<ScalarSet, CoveringError> {
    a.same_field(b)?;
    let f = &a.field;
    let mut out = ScalarSet::empty(f.clone());
    for x in a.iter() {
        for y in b.iter() {
            out.insert(f.mul(x, y));
        }
    }
    Ok(out)
}

/// `A^2 = {a a' : a, a' in A}`.
pub fn product_set(a: &ScalarSet) -> ScalarSet {
    product_of(a, a).expect("same field")
}

/// `S + T`. Prime fields shift the bit-vector by rotation; extension fields
/// go through field addition since index addition is not field addition.
pub fn sumset(s: &ScalarSet, t: &ScalarSet) -> Result<ScalarSet, CoveringError> {
    s.same_field(t)?;
    let f = &s.field;
    if f.n() == 1 {
        let mut acc = bitvec![0; f.q()];
        for a in s.iter() {
            let mut shifted = t.bits.clone();
            shifted.rotate_right(a.idx());
            acc |= &shifted;
        }
        return Ok(ScalarSet::from_bits(f.clone(), acc));
    }
    let mut out = ScalarSet::empty(f.clone());
    for a in s.iter() {
        for b in t.iter() {
            out.insert(f.add(a, b));
        }
    }
    Ok(out)
}

/// `S + S + ... + S` with `d` summands.
pub fn iterated_sumset(s: &ScalarSet, d: usize) -> Result<ScalarSet, CoveringError> {
    if d < 1 {
        return Err(CoveringError::BadArity(d));
    }
    let mut acc = s.clone();
    for _ in 1..d {
        if acc.len() == acc.field.q() {
            break;
        }
        acc = sumset(&acc, s)?;
    }
    Ok(acc)
}

/// `dA^2`: the `d`-fold sumset of the product set of `A`.
pub fn d_a2(a: &ScalarSet, d: usize) -> Result<ScalarSet, CoveringError> {
    iterated_sumset(&product_set(a), d)
}

/// `E = A x ... x A` (`d` factors) inside F_q^d.
pub fn power_set(a: &ScalarSet, d: usize) -> Result<PointSet, CoveringError> {
    let space = Space::new(a.field.clone(), d)?;
    let q = a.field.q();
    let elems: Vec<usize> = a.iter().map(|x| x.idx()).collect();
    let mut pts = vec![0usize];
    for _ in 0..d {
        pts = pts.iter().flat_map(|&rest| elems.iter().map(move |&c| rest * q + c)).collect();
    }
    Ok(PointSet::from_indices(space, pts))
}

/// `{x.y : x, y in E}`.
pub fn dot_product_set(e: &PointSet) -> ScalarSet {
    let space = e.space();
    let field = space.field_arc().clone();
    let q = space.q();
    let pts: Vec<usize> = e.iter().collect();
    let bits = pts
        .par_chunks(64)
        .fold(
            || bitvec![0; q],
            |mut acc, block| {
                for &x in block {
                    for &y in &pts {
                        acc.set(space.dot(x, y).idx(), true);
                    }
                }
                acc
            },
        )
        .reduce(
            || bitvec![0; q],
            |mut a, b| {
                a |= &b;
                a
            },
        );
    ScalarSet::from_bits(field, bits)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnitCoverage {
    pub covers_units: bool,
    pub zero_covered: bool,
    /// First [`MISSING_LIST_LIMIT`] uncovered units.
    pub missing: Vec<FqElem>,
    pub missing_count: usize,
}

/// Whether `S` contains every nonzero element of F_q.
pub fn covers_units(s: &ScalarSet) -> UnitCoverage {
    let missing_all = s.bits.iter_zeros().filter(|&i| i != 0);
    let missing_count = s.field.q() - 1 - s.without_zero().len();
    let missing: Vec<FqElem> = missing_all.take(MISSING_LIST_LIMIT).map(|i| FqElem(i as u32)).collect();
    UnitCoverage { covers_units: missing_count == 0, zero_covered: s.contains(FqElem::ZERO), missing, missing_count }
}

/// `|A|^{2d} > q^{d+1}`, the size that forces `dA^2` to contain F_q^*.
pub fn cover_threshold(a_len: usize, q: usize, d: usize) -> bool {
    BigUint::from(a_len).pow(2 * d as u32) > BigUint::from(q).pow(d as u32 + 1)
}

/// `|E|^2 > q^{d+1}`, the size that forces `{x.y}` to contain F_q^*.
pub fn dot_set_threshold(e_len: usize, q: usize, d: usize) -> bool {
    BigUint::from(e_len).pow(2) > BigUint::from(q).pow(d as u32 + 1)
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverageVerdict {
    pub field: FieldDescriptor,
    pub d: usize,
    /// `|A|` (or `|E|`) after any origin stripping.
    pub set_size: usize,
    /// `|dA^2|`, `|{x.y}|` or `|sum A_j B_j|`.
    pub result_size: usize,
    #[serde(flatten)]
    pub coverage: UnitCoverage,
    pub threshold_met: bool,
    #[serde(serialize_with = "crate::ser_bigint")]
    pub lhs: BigInt,
    #[serde(serialize_with = "crate::ser_bigint")]
    pub rhs: BigInt,
    /// `lhs >= rhs` (or `lhs > rhs` for the bilinear threshold).
    pub witness_holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub implied_proportion: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_proportion: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl CoverageVerdict {
    fn new(field: &FieldCtx, d: usize, set_size: usize, result: &ScalarSet, threshold_met: bool) -> Self {
        CoverageVerdict {
            field: field.descriptor(),
            d,
            set_size,
            result_size: result.len(),
            coverage: covers_units(result),
            threshold_met,
            lhs: BigInt::zero(),
            rhs: BigInt::zero(),
            witness_holds: true,
            c_size: None,
            implied_proportion: None,
            measured_proportion: None,
            ratio: None,
            warnings: Vec::new(),
        }
    }

    pub fn covers_units(&self) -> bool {
        self.coverage.covers_units
    }
}

/// `|P| (M q^d + |E|^2) >= q |E|^2` for `P = {x.y : x, y in E}` and `M` the
/// largest number of points of `E` on a line through the origin.
pub fn dot_set_lower_bound_check(e: &PointSet) -> Result<CoverageVerdict, CoveringError> {
    if e.contains_origin() {
        return Err(IncidenceError::OriginInSet.into());
    }
    let space = e.space();
    let line_max = incidence::max_line_intersection(e).count;
    let p = dot_product_set(e);
    Ok(lower_bound_verdict(space.field(), space.d(), e.len(), line_max, &p))
}

fn lower_bound_verdict(field: &FieldCtx, d: usize, e_len: usize, line_max: usize, p: &ScalarSet) -> CoverageVerdict {
    let q = BigInt::from(field.q());
    let e2 = BigInt::from(e_len) * e_len;
    let lhs = BigInt::from(p.len()) * (BigInt::from(line_max) * num_traits::pow(q.clone(), d) + &e2);
    let rhs = q * &e2;
    let mut v = CoverageVerdict::new(field, d, e_len, p, dot_set_threshold(e_len, field.q(), d));
    v.witness_holds = lhs >= rhs;
    v.lhs = lhs;
    v.rhs = rhs;
    v.measured_proportion = Some(p.len() as f64 / field.q() as f64);
    v
}

/// Positive-proportion form for `dA^2`: the lower-bound inequality specialized
/// to `E = (A \ {0})^d` with line maximum `|A \ {0}|`, i.e.
/// `|dA^2| (|A| q^d + |A|^{2d}) >= q |A|^{2d}`. A zero in `A` is removed first
/// and reported as a warning.
pub fn positive_proportion_check(a: &ScalarSet, d: usize) -> Result<CoverageVerdict, CoveringError> {
    if d < 1 {
        return Err(CoveringError::BadArity(d));
    }
    let field = a.field.clone();
    let mut warnings = Vec::new();
    if a.contains(FqElem::ZERO) {
        warnings.push("0 removed from A; the check applies to A \\ {0}".to_string());
    }
    let a0 = a.without_zero();
    let sum = d_a2(&a0, d)?;
    let k = a0.len();
    let e_len = BigInt::from(k).pow(d as u32);
    let q = BigInt::from(field.q());
    let lhs = BigInt::from(sum.len()) * (BigInt::from(k) * num_traits::pow(q.clone(), d) + &e_len * &e_len);
    let rhs = q * &e_len * &e_len;

    let mut v = CoverageVerdict::new(&field, d, k, &sum, cover_threshold(a.len(), field.q(), d));
    v.witness_holds = lhs >= rhs;
    v.lhs = lhs;
    v.rhs = rhs;
    let (qf, df) = (field.q() as f64, d as f64);
    let c_size = (k as f64).powf(df) / qf.powf(df / 2.0 + df / (2.0 * (2.0 * df - 1.0)));
    let c_pow = c_size.powf(2.0 - 1.0 / df);
    v.c_size = Some(c_size);
    v.implied_proportion = Some(c_pow / (c_pow + 1.0));
    v.measured_proportion = Some(sum.len() as f64 / qf);
    v.warnings = warnings;
    Ok(v)
}

/// `A_1 B_1 + ... + A_d B_d`, with threshold `prod_j |A_j| |B_j| > q^{d+1}`.
/// `ratio` reports `prod_j |A_j| |B_j| / q^{d+1}`.
pub fn bilinear_cover(a_sets: &[ScalarSet], b_sets: &[ScalarSet]) -> Result<CoverageVerdict, CoveringError> {
    if a_sets.len() != b_sets.len() || a_sets.is_empty() {
        return Err(CoveringError::ArityMismatch(a_sets.len(), b_sets.len()));
    }
    let field = a_sets[0].field.clone();
    let d = a_sets.len();
    let mut acc: Option<ScalarSet> = None;
    let mut mass = BigInt::one();
    for (a, b) in a_sets.iter().zip(b_sets) {
        a_sets[0].same_field(a)?;
        let prod = product_of(a, b)?;
        mass *= a.len() * b.len();
        acc = Some(match acc {
            None => prod,
            Some(s) => sumset(&s, &prod)?,
        });
    }
    let sum = acc.expect("d >= 1");
    let rhs = num_traits::pow(BigInt::from(field.q()), d + 1);
    let threshold_met = mass > rhs;
    let mut v =
        CoverageVerdict::new(&field, d, a_sets.iter().map(ScalarSet::len).max().unwrap_or(0), &sum, threshold_met);
    v.ratio = Some(incidence::ratio_f64(&mass, &rhs));
    v.witness_holds = threshold_met;
    v.lhs = mass;
    v.rhs = rhs;
    Ok(v)
}

/// Number of summands for a size exponent `1/2 + eps`: `ceil(1/(2 eps))` for
/// covering F_q^* and `ceil(1/2 + 1/(4 eps))` for a positive proportion.
pub fn d_of_eps(eps: Ratio<i64>) -> Result<(i64, i64), CoveringError> {
    let half = Ratio::new(1, 2);
    if eps <= Ratio::from_integer(0) || eps > half {
        return Err(CoveringError::BadEpsilon(eps.to_string()));
    }
    let d_cover = (eps * 2).recip().ceil().to_integer();
    let d_prop = (half + (eps * 4).recip()).ceil().to_integer();
    Ok((d_cover, d_prop))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field(p: u64, n: u32) -> Arc<FieldCtx> {
        Arc::new(FieldCtx::new(p, n).unwrap())
    }

    fn set(f: &Arc<FieldCtx>, xs: &[u32]) -> ScalarSet {
        ScalarSet::from_elems(f.clone(), xs.iter().map(|&x| FqElem(x)))
    }

    fn random_scalar_set(f: &Arc<FieldCtx>, rng: &mut ChaCha8Rng) -> ScalarSet {
        ScalarSet::from_elems(f.clone(), f.elements().filter(|_| rng.gen_bool(0.5)))
    }

    /// Oracle: every sum of `d` products, enumerated directly.
    fn d_a2_oracle(a: &ScalarSet, d: usize) -> ScalarSet {
        let f = a.field();
        let elems = a.to_vec();
        let mut sums = vec![FqElem::ZERO];
        for _ in 0..d {
            let mut next = Vec::new();
            for &s in &sums {
                for &x in &elems {
                    for &y in &elems {
                        next.push(f.add(s, f.mul(x, y)));
                    }
                }
            }
            next.sort_unstable();
            next.dedup();
            sums = next;
        }
        ScalarSet::from_elems(f.clone(), sums)
    }

    #[test]
    fn product_set_examples() {
        let f = field(5, 1);
        assert_eq!(product_set(&set(&f, &[0, 1])), set(&f, &[0, 1]));
        assert_eq!(product_set(&set(&f, &[1, 2, 3, 4])), set(&f, &[1, 2, 3, 4]));
        assert!(product_set(&ScalarSet::empty(f)).is_empty());
    }

    #[test]
    fn sumset_examples() {
        let f = field(5, 1);
        let s = set(&f, &[1, 2, 3, 4]);
        assert_eq!(iterated_sumset(&s, 1).unwrap(), s);
        assert_eq!(iterated_sumset(&s, 2).unwrap(), ScalarSet::full(f.clone()));
        assert_eq!(iterated_sumset(&s, 0), Err(CoveringError::BadArity(0)));

        let f4 = field(2, 2);
        let prime = set(&f4, &[0, 1]);
        for d in 1..6 {
            assert_eq!(iterated_sumset(&prime, d).unwrap(), prime);
        }
    }

    #[test]
    fn rotation_sumset_matches_field_addition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = field(13, 1);
        for _ in 0..50 {
            let (s, t) = (random_scalar_set(&f, &mut rng), random_scalar_set(&f, &mut rng));
            let mut direct = ScalarSet::empty(f.clone());
            for a in s.iter() {
                for b in t.iter() {
                    direct.insert(f.add(a, b));
                }
            }
            assert_eq!(sumset(&s, &t).unwrap(), direct);
        }
    }

    #[test]
    fn d_a2_examples() {
        let f = field(7, 1);
        for d in 1..4 {
            assert_eq!(d_a2(&ScalarSet::full(f.clone()), d).unwrap(), ScalarSet::full(f.clone()));
        }
        let f5 = field(5, 1);
        assert_eq!(d_a2(&set(&f5, &[1, 2, 3, 4]), 2).unwrap(), ScalarSet::full(f5));
        let f9 = field(3, 2);
        let prime = set(&f9, &[0, 1, 2]);
        let s = d_a2(&prime, 3).unwrap();
        assert_eq!(s, prime);
        assert!(!covers_units(&s).covers_units);
    }

    #[test]
    fn d_a2_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (p, n) in [(5, 1), (7, 1), (2, 3), (3, 2), (11, 1)] {
            let f = field(p, n);
            for _ in 0..20 {
                let a = random_scalar_set(&f, &mut rng);
                for d in 1..=3 {
                    assert_eq!(d_a2(&a, d).unwrap(), d_a2_oracle(&a, d));
                }
            }
        }
    }

    #[test]
    fn dot_product_set_examples() {
        let f = field(3, 1);
        let s = Space::new(f.clone(), 2).unwrap();
        assert_eq!(dot_product_set(&PointSet::full(s.clone())), ScalarSet::full(f.clone()));
        let single = PointSet::from_indices(s.clone(), [5]);
        assert_eq!(dot_product_set(&single).to_vec(), vec![s.dot(5, 5)]);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (p, n) in [(5, 1), (2, 2), (3, 2)] {
            let f = field(p, n);
            for _ in 0..10 {
                let a = random_scalar_set(&f, &mut rng);
                for d in [2, 3] {
                    assert_eq!(dot_product_set(&power_set(&a, d).unwrap()), d_a2(&a, d).unwrap());
                }
            }
        }
    }

    #[test]
    fn power_set_layout() {
        let f = field(5, 1);
        let e = power_set(&set(&f, &[1, 2]), 2).unwrap();
        let pts: Vec<usize> = e.iter().collect();
        assert_eq!(pts, vec![1 + 5, 2 + 5, 1 + 10, 2 + 10]);
        assert_eq!(power_set(&set(&f, &[3]), 3).unwrap().len(), 1);
    }

    #[test]
    fn covers_units_examples() {
        let f = field(5, 1);
        assert!(covers_units(&ScalarSet::full(f.clone())).covers_units);
        let mut s = ScalarSet::full(f.clone());
        s.remove(FqElem(1));
        let c = covers_units(&s);
        assert!(!c.covers_units);
        assert_eq!(c.missing, vec![FqElem(1)]);
        assert!(covers_units(&d_a2(&set(&f, &[1, 2, 3, 4]), 2).unwrap()).covers_units);
        let c = covers_units(&set(&f, &[1, 2, 3, 4]));
        assert!(c.covers_units && !c.zero_covered);
    }

    #[test]
    fn thresholds() {
        assert!(cover_threshold(4, 5, 2));
        assert!(!cover_threshold(3, 5, 2));
        for q in [2, 3, 4, 9, 25] {
            // q^{2d} > q^{d+1} exactly when d > 1.
            assert!(!cover_threshold(q, q, 1));
            for d in 2..5 {
                assert!(cover_threshold(q, q, d));
            }
        }
        assert!(dot_set_threshold(6, 3, 2));
        assert!(!dot_set_threshold(5, 3, 2));
        // Boundary: |A|^{2d} == q^{d+1} is not enough (2^4 = 16 = 4^2 at q=4, d=1).
        assert!(!cover_threshold(2, 4, 1));
    }

    #[test]
    fn lower_bound_examples() {
        let f = field(7, 1);
        let e = power_set(&set(&f, &[1, 2, 3]), 2).unwrap();
        let v = dot_set_lower_bound_check(&e).unwrap();
        assert!(v.witness_holds);
        assert_eq!(v.rhs, BigInt::from(7 * 81));
        assert_eq!(v.lhs, BigInt::from(v.result_size) * BigInt::from(3 * 49 + 81));

        let s = Space::new(f.clone(), 2).unwrap();
        let line = PointSet::line(s.clone(), 8).strip_origin();
        assert!(dot_set_lower_bound_check(&line).unwrap().witness_holds);
        let single = PointSet::from_indices(s.clone(), [3]);
        let v = dot_set_lower_bound_check(&single).unwrap();
        assert_eq!((v.result_size, v.lhs.clone(), v.rhs.clone()), (1, BigInt::from(50), BigInt::from(7)));
        assert!(matches!(
            dot_set_lower_bound_check(&PointSet::full(s)),
            Err(CoveringError::Incidence(IncidenceError::OriginInSet))
        ));
    }

    #[test]
    fn positive_proportion_examples() {
        let f = field(5, 1);
        let v = positive_proportion_check(&set(&f, &[1, 2, 3, 4]), 2).unwrap();
        assert_eq!(v.result_size, 5);
        assert!(v.witness_holds);
        assert!(v.warnings.is_empty());
        let v = positive_proportion_check(&set(&f, &[1]), 2).unwrap();
        assert_eq!(v.result_size, 1);
        assert!(v.witness_holds);
        let v = positive_proportion_check(&set(&f, &[0, 1, 2]), 2).unwrap();
        assert_eq!(v.set_size, 2);
        assert_eq!(v.warnings.len(), 1);

        let f25 = field(5, 2);
        let units_of_prime = ScalarSet::from_elems(f25.clone(), (1..5).map(FqElem));
        let v = positive_proportion_check(&units_of_prime, 2).unwrap();
        assert!(v.witness_holds);
        assert!(v.implied_proportion.unwrap() > 0.0);
    }

    #[test]
    fn bilinear_examples() {
        let f = field(5, 1);
        let full = ScalarSet::full(f.clone());
        let v = bilinear_cover(&[full.clone(), full.clone()], &[full.clone(), full.clone()]).unwrap();
        assert!(v.covers_units());
        assert_eq!(v.ratio, Some(5.0));

        let a = set(&f, &[1, 2, 3, 4]);
        let v = bilinear_cover(&[a.clone(), a.clone()], &[a.clone(), a.clone()]).unwrap();
        assert!(v.covers_units());
        assert_eq!(v.ratio, Some(2.048));
        assert_eq!(v.result_size, d_a2(&a, 2).unwrap().len());

        let zero = set(&f, &[0]);
        let v = bilinear_cover(&[zero.clone(), zero.clone()], &[a.clone(), a.clone()]).unwrap();
        assert!(!v.covers_units());
        let v = bilinear_cover(&[zero, full.clone()], &[a.clone(), full.clone()]).unwrap();
        assert!(v.covers_units());
        assert_eq!(bilinear_cover(std::slice::from_ref(&a), &[]).unwrap_err(), CoveringError::ArityMismatch(1, 0));
    }

    /// Exhaustive over small prime fields: above the bilinear threshold every
    /// unit is attained.
    #[test]
    fn bilinear_threshold_is_sufficient() {
        for p in [3u64, 5] {
            let f = field(p, 1);
            let subsets: Vec<ScalarSet> = (1u64..1 << p).map(|m| ScalarSet::from_mask(f.clone(), m)).collect();
            for a1 in &subsets {
                for b1 in &subsets {
                    for a2 in subsets.iter().step_by(3) {
                        let v = bilinear_cover(&[a1.clone(), a2.clone()], &[b1.clone(), a2.clone()]).unwrap();
                        if v.threshold_met {
                            assert!(v.covers_units(), "{:?} {:?} {:?}", a1.to_vec(), b1.to_vec(), a2.to_vec());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn monotonicity_and_dilation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (p, n) in [(7, 1), (2, 3), (3, 2)] {
            let f = field(p, n);
            for _ in 0..20 {
                let a = random_scalar_set(&f, &mut rng);
                let mut bigger = a.clone();
                bigger.insert(FqElem(rng.gen_range(0..f.q() as u32)));
                let c = FqElem(rng.gen_range(1..f.q() as u32));
                let c2 = f.mul(c, c);
                for d in 1..=3 {
                    let base = d_a2(&a, d).unwrap();
                    assert!(base.is_subset(&d_a2(&bigger, d).unwrap()));
                    assert_eq!(d_a2(&a.dilate(c), d).unwrap(), base.dilate(c2));
                }
            }
        }
    }

    #[test]
    fn d_of_eps_examples() {
        assert_eq!(d_of_eps(Ratio::new(1, 4)).unwrap(), (2, 2));
        assert_eq!(d_of_eps(Ratio::new(1, 2)).unwrap(), (1, 1));
        assert_eq!(d_of_eps(Ratio::new(1, 10)).unwrap(), (5, 3));
        assert_eq!(d_of_eps(Ratio::new(1, 3)).unwrap(), (2, 2));
        assert!(matches!(d_of_eps(Ratio::new(0, 1)), Err(CoveringError::BadEpsilon(_))));
        assert!(matches!(d_of_eps(Ratio::new(3, 5)), Err(CoveringError::BadEpsilon(_))));
    }
}
