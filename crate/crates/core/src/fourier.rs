//! Fourier analysis on F_q^d.
//!
//! Normalization: `f^(m) = q^{-d} sum_x chi(-x.m) f(x)` on the forward side,
//! no factor on inversion, so that `f(x) = sum_m chi(x.m) f^(m)` and
//! `sum_m f^(m) conj(g^(m)) = q^{-d} sum_x f(x) conj(g(x))`.
//!
//! Points of F_q^d are flat indices `sum_i x_i q^i`; [`Space`] converts between
//! the two and does coordinatewise arithmetic.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::gf::{FieldCtx, FqElem};

/// Largest ambient space `q^d` that gets materialized as a dense array.
pub const MAX_POINTS: usize = 1 << 24;

const KERNEL_TABLE_LIMIT: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FourierError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("value array has length {got}, expected q^d = {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("operands live over different fields or dimensions")]
    SpaceMismatch,
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("q^d exceeds the dense-space cap of {MAX_POINTS} points")]
    SpaceTooLarge,
}

/// Absolute tolerance for a float sum of `terms` unit-scale terms.
pub fn sum_tolerance(terms: usize) -> f64 {
    (1e-12 * terms as f64).max(1e-9)
}

/// A point of F_q^d.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VecFq {
    coords: Vec<FqElem>,
}

impl VecFq {
    pub fn new(coords: Vec<FqElem>) -> Self {
        VecFq { coords }
    }

    pub fn zero(d: usize) -> Self {
        VecFq { coords: vec![FqElem::ZERO; d] }
    }

    pub fn coords(&self) -> &[FqElem] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn flat_index(&self, q: usize) -> usize {
        self.coords.iter().rev().fold(0, |acc, c| acc * q + c.idx())
    }

    pub fn from_flat(mut idx: usize, q: usize, d: usize) -> Self {
        let coords = (0..d)
            .map(|_| {
                let c = FqElem((idx % q) as u32);
                idx /= q;
                c
            })
            .collect();
        VecFq { coords }
    }
}

/// The standard bilinear form `sum_i x_i y_i`.
pub fn dot(field: &FieldCtx, x: &VecFq, y: &VecFq) -> Result<FqElem, FourierError> {
    if x.dim() != y.dim() {
        return Err(FourierError::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    Ok(x.coords.iter().zip(&y.coords).fold(FqElem::ZERO, |acc, (&a, &b)| field.add(acc, field.mul(a, b))))
}

/// The vector space F_q^d with flat-index arithmetic.
#[derive(Clone, Debug)]
pub struct Space {
    field: Arc<FieldCtx>,
    d: usize,
    size: usize,
}

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d
            && (Arc::ptr_eq(&self.field, &other.field) || self.field.descriptor() == other.field.descriptor())
    }
}

impl Space {
    pub fn new(field: Arc<FieldCtx>, d: usize) -> Result<Self, FourierError> {
        if d == 0 {
            return Err(FourierError::ZeroDimension);
        }
        let size = (0..d)
            .try_fold(1usize, |acc, _| acc.checked_mul(field.q()))
            .filter(|&s| s <= MAX_POINTS)
            .ok_or(FourierError::SpaceTooLarge)?;
        Ok(Space { field, d, size })
    }

    #[inline]
    pub fn field(&self) -> &FieldCtx {
        &self.field
    }

    pub fn field_arc(&self) -> &Arc<FieldCtx> {
        &self.field
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.field.q()
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of points, `q^d`.
    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn decode(&self, idx: usize) -> VecFq {
        VecFq::from_flat(idx, self.q(), self.d)
    }

    pub fn encode(&self, v: &VecFq) -> Result<usize, FourierError> {
        if v.dim() != self.d {
            return Err(FourierError::DimensionMismatch { expected: self.d, got: v.dim() });
        }
        Ok(v.flat_index(self.q()))
    }

    /// Coordinates of `idx` written into `out` (length `d`).
    #[inline]
    pub fn decode_into(&self, mut idx: usize, out: &mut [FqElem]) {
        let q = self.q();
        for c in out.iter_mut() {
            *c = FqElem((idx % q) as u32);
            idx /= q;
        }
    }

    #[inline]
    fn zip_with(&self, mut a: usize, mut b: usize, op: impl Fn(FqElem, FqElem) -> FqElem) -> usize {
        let q = self.q();
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.d {
            let c = op(FqElem((a % q) as u32), FqElem((b % q) as u32));
            out += c.idx() * place;
            a /= q;
            b /= q;
            place *= q;
        }
        out
    }

    #[inline]
    pub fn dot(&self, a: usize, b: usize) -> FqElem {
        let f = &*self.field;
        let q = self.q();
        let (mut a, mut b) = (a, b);
        let mut acc = FqElem::ZERO;
        for _ in 0..self.d {
            acc = f.add(acc, f.mul(FqElem((a % q) as u32), FqElem((b % q) as u32)));
            a /= q;
            b /= q;
        }
        acc
    }

    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        self.zip_with(a, b, |x, y| self.field.add(x, y))
    }

    #[inline]
    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.zip_with(a, b, |x, y| self.field.sub(x, y))
    }

    #[inline]
    pub fn scale(&self, s: FqElem, a: usize) -> usize {
        self.zip_with(a, 0, |x, _| self.field.mul(s, x))
    }
}

/// A complex-valued function on F_q^d, stored densely by flat index.
#[derive(Clone, Debug)]
pub struct SpectralFn {
    space: Space,
    values: Vec<Complex64>,
}

impl SpectralFn {
    pub fn new(space: Space, values: Vec<Complex64>) -> Result<Self, FourierError> {
        if values.len() != space.size() {
            return Err(FourierError::LengthMismatch { expected: space.size(), got: values.len() });
        }
        Ok(SpectralFn { space, values })
    }

    pub fn zeros(space: Space) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); space.size()];
        SpectralFn { space, values }
    }

    pub fn constant(space: Space, c: Complex64) -> Self {
        let values = vec![c; space.size()];
        SpectralFn { space, values }
    }

    pub fn from_fn(space: Space, f: impl FnMut(usize) -> Complex64) -> Self {
        let values = (0..space.size()).map(f).collect();
        SpectralFn { space, values }
    }

    /// Indicator of the given flat indices.
    pub fn indicator(space: Space, points: impl IntoIterator<Item = usize>) -> Self {
        let mut out = Self::zeros(space);
        for i in points {
            out.values[i] = Complex64::new(1.0, 0.0);
        }
        out
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, idx: usize) -> Complex64 {
        self.values[idx]
    }

    /// Largest pointwise distance to `other`.
    pub fn max_abs_diff(&self, other: &SpectralFn) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// One `index re im` line per point, `{:.12e}` formatting.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{i} {:.12e} {:.12e}", v.re, v.im).unwrap();
        }
        out
    }
}

/// Character matrix `chi(sign * x * m)` for one axis.
enum AxisKernel<'a> {
    Table(Vec<Complex64>),
    OnTheFly(&'a FieldCtx, bool),
}

impl<'a> AxisKernel<'a> {
    fn new(field: &'a FieldCtx, negate: bool) -> Self {
        let q = field.q();
        if q > KERNEL_TABLE_LIMIT {
            return AxisKernel::OnTheFly(field, negate);
        }
        let mut table = Vec::with_capacity(q * q);
        for x in field.elements() {
            for m in field.elements() {
                let xm = field.mul(x, m);
                table.push(field.chi(if negate { field.neg(xm) } else { xm }));
            }
        }
        AxisKernel::Table(table)
    }

    #[inline]
    fn at(&self, q: usize, x: usize, m: usize) -> Complex64 {
        match self {
            AxisKernel::Table(t) => t[x * q + m],
            AxisKernel::OnTheFly(f, negate) => {
                let xm = f.mul(FqElem(x as u32), FqElem(m as u32));
                f.chi(if *negate { f.neg(xm) } else { xm })
            }
        }
    }
}

/// `d` passes of a q-point character sum, one per axis.
fn axis_transform(f: &SpectralFn, negate: bool) -> Vec<Complex64> {
    let space = &f.space;
    let q = space.q();
    let kernel = AxisKernel::new(space.field(), negate);
    let mut cur = f.values.clone();
    let mut line = vec![Complex64::new(0.0, 0.0); q];
    let mut stride = 1;
    for _ in 0..space.d() {
        let block = stride * q;
        for outer in (0..space.size()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (x, slot) in line.iter_mut().enumerate() {
                    *slot = cur[base + x * stride];
                }
                for m in 0..q {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (x, v) in line.iter().enumerate() {
                        acc += kernel.at(q, x, m) * v;
                    }
                    cur[base + m * stride] = acc;
                }
            }
        }
        stride = block;
    }
    cur
}

/// `f^(m) = q^{-d} sum_x chi(-x.m) f(x)`.
pub fn fourier_forward(f: &SpectralFn) -> SpectralFn {
    let scale = 1.0 / f.space.size() as f64;
    let values = axis_transform(f, true).into_iter().map(|v| v * scale).collect();
    SpectralFn { space: f.space.clone(), values }
}

/// `f(x) = sum_m chi(x.m) f^(m)`.
pub fn fourier_invert(fhat: &SpectralFn) -> SpectralFn {
    SpectralFn { space: fhat.space.clone(), values: axis_transform(fhat, false) }
}

/// Forward transform evaluated as the full double sum, `O(q^{2d})`.
pub fn fourier_forward_direct(f: &SpectralFn) -> SpectralFn {
    let space = &f.space;
    let field = space.field();
    let scale = 1.0 / space.size() as f64;
    let values = (0..space.size())
        .map(|m| {
            let acc: Complex64 = (0..space.size()).map(|x| field.chi(field.neg(space.dot(x, m))) * f.values[x]).sum();
            acc * scale
        })
        .collect();
    SpectralFn { space: space.clone(), values }
}

/// Both sides of Plancherel: `(sum_m f^(m) conj(g^(m)), q^{-d} sum_x f(x) conj(g(x)))`.
pub fn plancherel_check(f: &SpectralFn, g: &SpectralFn) -> Result<(Complex64, Complex64), FourierError> {
    if f.space != g.space {
        return Err(FourierError::SpaceMismatch);
    }
    let fh = fourier_forward(f);
    let gh = fourier_forward(g);
    let lhs: Complex64 = fh.values.iter().zip(&gh.values).map(|(a, b)| a * b.conj()).sum();
    let rhs: Complex64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b.conj()).sum();
    Ok((lhs, rhs / f.space.size() as f64))
}

/// Difference convolution `(f*g)(m) = sum_{y - y' = m} f(y) g(y')`.
///
/// Runs over the supports, so indicator inputs cost `O(|supp f| |supp g| d)`.
pub fn convolve_diff(f: &SpectralFn, g: &SpectralFn) -> Result<SpectralFn, FourierError> {
    if f.space != g.space {
        return Err(FourierError::SpaceMismatch);
    }
    let space = &f.space;
    let zero = Complex64::new(0.0, 0.0);
    let supp = |h: &SpectralFn| -> Vec<(usize, Complex64)> {
        h.values.iter().enumerate().filter(|(_, v)| **v != zero).map(|(i, v)| (i, *v)).collect()
    };
    let (fs, gs) = (supp(f), supp(g));
    let mut out = SpectralFn::zeros(space.clone());
    for &(y, fy) in &fs {
        for &(y2, gy2) in &gs {
            out.values[space.sub(y, y2)] += fy * gy2;
        }
    }
    Ok(out)
}

/// `sum_{t in F_q} chi(-a t)`.
pub fn orthogonality_sum(field: &FieldCtx, a: FqElem) -> Complex64 {
    field.elements().map(|t| field.chi(field.neg(field.mul(a, t)))).sum()
}
