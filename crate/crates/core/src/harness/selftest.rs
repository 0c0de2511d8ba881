use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Counterexample, HarnessError, RunReport};
use crate::fourier::{self, Space, SpectralFn};
use crate::gf::{FieldCtx, FqElem, GfError};
use crate::incidence::{self, PointSet};

/// Fields `(p, n)` covered by the self-test.
pub const SELFTEST_ROSTER: [(u64, u32); 10] =
    [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2), (13, 1), (2, 4), (5, 2)];
pub const SELFTEST_DIMS: [usize; 3] = [1, 2, 3];
/// Relative tolerance for float identities.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Spaces up to this size also compare the axis transform with the direct sum.
const DIRECT_LIMIT: usize = 729;

#[derive(Clone, Debug, Serialize)]
struct FieldRow {
    p: u64,
    n: u32,
    q: usize,
    modulus: Vec<u32>,
    max_rel_err: f64,
}

fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}

fn field_checks(field: &FieldCtx) -> Vec<(&'static str, bool)> {
    let els: Vec<FqElem> = field.elements().collect();
    let p = field.p() as u64;
    let mut axioms = true;
    let mut frobenius = true;
    let mut trace_linear = true;
    for &a in &els {
        axioms &= field.add(a, FqElem::ZERO) == a && field.mul(a, FqElem::ONE) == a;
        axioms &= field.add(a, field.neg(a)) == FqElem::ZERO;
        if !a.is_zero() {
            axioms &= field.inv(a).is_ok_and(|i| field.mul(a, i) == FqElem::ONE);
        }
        for &b in &els {
            axioms &= field.add(a, b) == field.add(b, a) && field.mul(a, b) == field.mul(b, a);
            frobenius &= field.pow(field.add(a, b), p) == field.add(field.pow(a, p), field.pow(b, p));
            trace_linear &= field.trace(field.add(a, b)) == (field.trace(a) + field.trace(b)) % field.p();
            for &c in &els {
                axioms &= field.mul(a, field.add(b, c)) == field.add(field.mul(a, b), field.mul(a, c));
                axioms &= field.mul(field.mul(a, b), c) == field.mul(a, field.mul(b, c));
            }
        }
    }
    let mut hit = vec![false; field.p() as usize];
    for &a in &els {
        hit[field.trace(a) as usize] = true;
    }
    let q = field.q() as f64;
    let orthogonal = els.iter().all(|&a| {
        let want = if a.is_zero() { q } else { 0.0 };
        rel_err(fourier::orthogonality_sum(field, a), Complex64::new(want, 0.0)) <= IDENTITY_TOL
    });
    vec![
        ("field_axioms", axioms),
        ("frobenius", frobenius),
        ("trace", trace_linear && hit.iter().all(|&h| h)),
        ("orthogonality", orthogonal),
    ]
}

fn random_fn(space: &Space, rng: &mut ChaCha8Rng) -> SpectralFn {
    SpectralFn::from_fn(space.clone(), |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_points(space: &Space, rng: &mut ChaCha8Rng, origin_free: bool) -> PointSet {
    let n = space.size();
    let k = rng.gen_range(1..=n.min(64));
    let mut e = PointSet::from_indices(space.clone(), index::sample(rng, n, k).into_vec());
    if origin_free {
        e.remove(0);
    }
    e
}

type NamedResults = Vec<(&'static str, bool)>;

/// Checks for one `(field, d)`; returns `(name, ok)` pairs and the largest
/// relative error seen.
fn space_checks(space: &Space, rng: &mut ChaCha8Rng) -> Result<(NamedResults, f64), HarnessError> {
    let mut out = Vec::new();
    let mut worst = 0.0f64;
    let mut check = |name: &'static str, err: f64, out: &mut NamedResults| {
        worst = worst.max(err);
        out.push((name, err <= IDENTITY_TOL));
    };

    let f = random_fn(space, rng);
    let g = random_fn(space, rng);
    let fhat = fourier::fourier_forward(&f);
    let back = fourier::fourier_invert(&fhat);
    let scale = f.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    check("inversion", back.max_abs_diff(&f) / (1.0 + scale), &mut out);

    let (lhs, rhs) = fourier::plancherel_check(&f, &g)?;
    check("plancherel", rel_err(lhs, rhs), &mut out);

    if space.size() <= DIRECT_LIMIT {
        let direct = fourier::fourier_forward_direct(&f);
        check("direct_transform", fhat.max_abs_diff(&direct), &mut out);
    }

    let e = random_points(space, rng, false);
    let g_err = match incidence::verify_hatg_identity(&e) {
        Ok(r) => r.max_rel_err,
        Err(_) => f64::INFINITY,
    };
    check("hatg_identity", g_err, &mut out);

    let e0 = random_points(space, rng, true);
    let f_err = match incidence::verify_hatf_identity(&e0) {
        Ok(r) => r.max_rel_err,
        Err(_) => f64::INFINITY,
    };
    check("hatf_identity", f_err, &mut out);

    let brute = incidence::nu_bruteforce(&e);
    let spectral = incidence::nu_spectral(&e).ok();
    let consistent = spectral.as_ref() == Some(&brute) && brute.nu.iter().sum::<u64>() == (e.len() * e.len()) as u64;
    out.push(("nu_consistency", consistent));
    Ok((out, worst))
}

/// Field axioms, Frobenius, trace, character orthogonality and the Fourier
/// identity suite on the fixed roster for `d` in 1..=3, plus a deliberately
/// reducible modulus that must be rejected.
pub fn cmd_selftest() -> Result<RunReport, HarnessError> {
    let mut report = RunReport::new("selftest", None, None);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut rows = Vec::new();
    for (p, n) in SELFTEST_ROSTER {
        let field = Arc::new(FieldCtx::new(p, n)?);
        let mut worst = 0.0f64;
        let mut results = field_checks(&field);
        for d in SELFTEST_DIMS {
            let space = Space::new(field.clone(), d)?;
            let (r, w) = space_checks(&space, &mut rng)?;
            results.extend(r);
            worst = worst.max(w);
        }
        for (name, ok) in results {
            report.tally(name, ok);
            if !ok {
                report.counterexample(Counterexample {
                    check: name.into(),
                    set: Vec::new(),
                    detail: format!("GF({}^{}) failed {name}", p, n),
                });
            }
        }
        report.worst("identity_max_rel_err", worst);
        rows.push(FieldRow { p, n, q: field.q(), modulus: field.modulus().to_vec(), max_rel_err: worst });
    }

    let rejected = matches!(FieldCtx::with_modulus(2, vec![1, 0, 1]), Err(GfError::ReducibleModulus { .. }));
    report.tally("corrupted_modulus", rejected);
    if !rejected {
        report.counterexample(Counterexample {
            check: "corrupted_modulus".into(),
            set: Vec::new(),
            detail: "x^2 + 1 over F_2 was accepted as a modulus".into(),
        });
    }
    report.details = serde_json::json!({ "fields": rows, "dims": SELFTEST_DIMS, "tolerance": IDENTITY_TOL });
    Ok(report)
}
