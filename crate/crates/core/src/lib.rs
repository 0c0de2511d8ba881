//! Finite-field character sums, dot-product incidences and coverage of
//! F_q^* by iterated product sets `dA^2 = A.A + ... + A.A`.
//!
//! - [`gf`]: tabulated GF(p^n) arithmetic, trace and the additive character.
//! - [`fourier`]: the Fourier transform on F_q^d and the difference convolution.
//! - [`incidence`]: `nu(t)`, its remainder bound, line and hyperplane counts,
//!   spectral identities and the second-moment inequality.
//! - [`covering`]: product sets, sumsets, dot-product sets and the exact
//!   threshold and lower-bound checks.
//! - [`harness`]: sweeps, sampled campaigns and JSON reports behind the CLI.

pub mod covering;
pub mod fourier;
pub mod gf;
pub mod harness;
pub mod incidence;

pub use covering::{CoverageVerdict, ScalarSet};
pub use fourier::{Space, SpectralFn, VecFq};
pub use gf::{FieldCtx, FqElem};
pub use incidence::{NuProfile, PointSet};

/// Big integers go into reports as decimal strings.
pub(crate) fn ser_bigint<S: serde::Serializer>(v: &num_bigint::BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// Integers at or above 2^53 go into reports as decimal strings.
pub(crate) fn ser_u64<S: serde::Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
    if *v >= 1 << 53 {
        s.serialize_str(&v.to_string())
    } else {
        s.serialize_u64(*v)
    }
}
