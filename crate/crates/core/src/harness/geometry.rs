use std::sync::Arc;

use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::enumerate::{binomial, mask_elems, sweep, ENUMERATION_BUDGET};
use super::sharpness::structured_families;
use super::{Check, Counterexample, ExperimentSpec, HarnessError, Mode, RunReport};
use crate::covering;
use crate::fourier::Space;
use crate::gf::{FieldCtx, FqElem};
use crate::incidence::{self, IncidenceError, NuProfile, PointSet};

const DEFAULT_CHECKS: [Check; 5] =
    [Check::Cover, Check::Remainder, Check::Keylowerbound, Check::Identities, Check::SecondMoment];

/// Per-set results; `None` means the check was not requested or not applicable.
#[derive(Clone, Debug, Default)]
struct GeoOutcome {
    cover: Option<bool>,
    remainder: Option<Result<(f64, f64), String>>,
    identities: Option<Result<f64, String>>,
    second_moment: Option<bool>,
    keylowerbound: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
struct SizeRow {
    size: usize,
    sets: u64,
    threshold_met: bool,
    covering: u64,
}

#[derive(Clone, Debug, Serialize)]
struct FamilyRow {
    family: String,
    size: usize,
    threshold_met: bool,
    covers_units: bool,
    remainder_sharpness: Option<f64>,
}

fn failure(res: Result<f64, IncidenceError>) -> Result<Result<f64, String>, HarnessError> {
    match res {
        Ok(v) => Ok(Ok(v)),
        Err(e @ (IncidenceError::BoundViolated { .. } | IncidenceError::IdentityViolated { .. })) => {
            Ok(Err(e.to_string()))
        }
        Err(e) => Err(e.into()),
    }
}

/// The main threshold and the remainder bound apply to `E` as given; the
/// origin-free checks run on `E \ {0}`.
fn evaluate(e: &PointSet, checks: &[Check]) -> Result<GeoOutcome, HarnessError> {
    let space = e.space();
    let (q, d) = (space.q(), space.d());
    let mut o = GeoOutcome::default();
    if checks.contains(&Check::Cover) && covering::dot_set_threshold(e.len(), q, d) {
        o.cover = Some(covering::covers_units(&covering::dot_product_set(e)).covers_units);
    }
    if checks.contains(&Check::Remainder) {
        let r = incidence::remainder_bound_check(e).map(|r| (r.sharpness, r.zero_ratio));
        o.remainder = Some(match r {
            Ok(v) => Ok(v),
            Err(err @ IncidenceError::BoundViolated { .. }) => Err(err.to_string()),
            Err(err) => return Err(err.into()),
        });
    }
    let e0 = e.strip_origin();
    if checks.contains(&Check::Identities) {
        let f = failure(incidence::verify_hatf_identity(&e0).map(|r| r.max_rel_err))?;
        let g = failure(incidence::verify_hatg_identity(e).map(|r| r.max_rel_err))?;
        o.identities = Some(match (f, g) {
            (Ok(a), Ok(b)) => Ok(a.max(b)),
            (Err(m), _) | (_, Err(m)) => Err(m),
        });
    }
    if checks.contains(&Check::SecondMoment) {
        o.second_moment = Some(incidence::second_moment_check(&e0)?.holds);
    }
    if checks.contains(&Check::Keylowerbound) {
        o.keylowerbound = Some(covering::dot_set_lower_bound_check(&e0)?.witness_holds);
    }
    Ok(o)
}

fn record(report: &mut RunReport, e: &PointSet, o: &GeoOutcome) {
    let fail = |report: &mut RunReport, check: &str, detail: String| {
        report.counterexample(Counterexample { check: check.into(), set: e.iter().collect(), detail });
    };
    if let Some(ok) = o.cover {
        report.tally("cover", ok);
        if !ok {
            fail(report, "cover", "|E|^2 > q^{d+1} but {x.y} misses a unit".into());
        }
    }
    match &o.remainder {
        Some(Ok((sharpness, zero_ratio))) => {
            report.tally("remainder", true);
            report.worst("remainder_sharpness", *sharpness);
            report.worst("remainder_zero_ratio", *zero_ratio);
        }
        Some(Err(msg)) => {
            report.tally("remainder", false);
            fail(report, "remainder", msg.clone());
        }
        None => {}
    }
    match &o.identities {
        Some(Ok(err)) => {
            report.tally("identities", true);
            report.worst("identity_max_rel_err", *err);
        }
        Some(Err(msg)) => {
            report.tally("identities", false);
            fail(report, "identities", msg.clone());
        }
        None => {}
    }
    if let Some(ok) = o.second_moment {
        report.tally("second_moment", ok);
        if !ok {
            fail(report, "second_moment", "q sum nu^2 > M |E|^2 q^d + |E|^4".into());
        }
    }
    if let Some(ok) = o.keylowerbound {
        report.tally("keylowerbound", ok);
        if !ok {
            fail(report, "keylowerbound", "|P| (M q^d + |E|^2) < q |E|^2".into());
        }
    }
}

/// `A x ... x A` with `A` drawn from the scalar families, plus subgroup grids
/// `H x F_q^{d-1}`.
fn product_families(field: &Arc<FieldCtx>, space: &Space) -> Result<Vec<(String, PointSet)>, HarnessError> {
    let q = field.q();
    let half = (q - 1).div_ceil(2).max(1);
    let mut out = Vec::new();
    for (name, a) in structured_families(field) {
        let keep = name.starts_with("subfield_")
            || name.starts_with("subgroup_")
            || name == format!("interval_{half}")
            || name == format!("geometric_{half}");
        if !keep {
            continue;
        }
        if name.starts_with("subgroup_") && !name.ends_with("+0") {
            let mut grid = PointSet::empty(space.clone());
            let rest = q.pow(space.d() as u32 - 1);
            for h in a.iter() {
                for r in 0..rest {
                    grid.insert(r * q + h.idx());
                }
            }
            out.push((format!("grid_{name}"), grid));
        }
        out.push((format!("power_{name}"), covering::power_set(&a, space.d())?));
    }
    Ok(out)
}

fn random_points(space: &Space, rng: &mut ChaCha8Rng, k: usize) -> Vec<usize> {
    index::sample(rng, space.size(), k.min(space.size())).into_vec()
}

/// Lines (including self-orthogonal ones), punctured lines, hyperplanes,
/// product sets, subgroup grids, lines plus random points, `F_q^d \ {0}` and
/// `F_q^d`.
pub fn structured_point_sets(space: &Space, spec: &ExperimentSpec) -> Result<Vec<(String, PointSet)>, HarnessError> {
    let field = space.field_arc().clone();
    let (q, d) = (space.q(), space.d());
    let mut out = Vec::new();

    let mut dirs: Vec<usize> = vec![1, space.size() - 1];
    if let Some(iso) = (1..space.size()).find(|&x| space.dot(x, x).is_zero()) {
        dirs.push(iso);
    }
    let mut seen = Vec::new();
    for dir in dirs {
        let c = incidence::canonical_direction(space, dir)?;
        if seen.contains(&c) {
            continue;
        }
        seen.push(c);
        let line = PointSet::line(space.clone(), c);
        out.push((format!("punctured_line_{c}"), line.strip_origin()));
        out.push((format!("line_{c}"), line));
    }
    for normal in [1, space.size() - 1] {
        for c in [FqElem::ZERO, FqElem::ONE] {
            out.push((format!("hyperplane_{normal}_{}", c.0), PointSet::hyperplane(space.clone(), normal, c)));
        }
    }
    out.extend(product_families(&field, space)?);

    let extra = ((q as f64).powf((d as f64 + 1.0) / 2.0) as usize).min(space.size());
    for (i, k) in [extra / 2, extra].into_iter().enumerate() {
        let mut rng = spec.rng(usize::MAX >> 32, i);
        let mut e = PointSet::line(space.clone(), 1);
        for x in random_points(space, &mut rng, k) {
            e.insert(x);
        }
        out.push((format!("line_plus_random_{k}"), e));
    }
    out.push(("punctured_space".into(), PointSet::full(space.clone()).strip_origin()));
    out.push(("full_space".into(), PointSet::full(space.clone())));
    Ok(out)
}

/// Smallest `|E|` with `|E|^2 > q^{d+1}`, capped at `q^d`.
fn threshold_size(q: usize, d: usize, n_pts: usize) -> usize {
    (0..=n_pts).find(|&k| covering::dot_set_threshold(k, q, d)).unwrap_or(n_pts)
}

/// Point-set checks in F_q^d: the dot-product covering threshold, the
/// remainder bound, the spectral identities, the second-moment inequality and
/// the key lower bound. `--csv` receives the `nu` profile of the set with the
/// worst remainder sharpness.
pub fn cmd_geometry(spec: &ExperimentSpec, csv: Option<&mut String>) -> Result<RunReport, HarnessError> {
    spec.validate()?;
    let field = spec.field()?;
    let space = Space::new(field.clone(), spec.d)?;
    let (q, d, n_pts) = (field.q(), spec.d, space.size());
    let checks = spec.checks_or(&DEFAULT_CHECKS);
    let mut report = RunReport::new("geometry", Some(&field), Some(spec));
    let mut rows: Vec<SizeRow> = Vec::new();
    let mut families: Vec<FamilyRow> = Vec::new();
    let mut worst: Option<(f64, PointSet)> = None;
    let mut track = |e: &PointSet, o: &GeoOutcome| {
        if let Some(Ok((s, _))) = o.remainder {
            if worst.as_ref().is_none_or(|(w, _)| s > *w) {
                worst = Some((s, e.clone()));
            }
        }
    };

    match spec.mode {
        Mode::Exhaustive => {
            if n_pts > 63 {
                return Err(HarnessError::BadSpec(format!(
                    "exhaustive point-set enumeration needs q^d <= 63, got {n_pts}"
                )));
            }
            let sizes: Vec<usize> = match spec.sizes {
                Some(r) => (r.min..=r.max.min(n_pts)).collect(),
                None => (0..=n_pts).filter(|&k| covering::dot_set_threshold(k, q, d)).collect(),
            };
            let count: u128 = sizes.iter().map(|&k| binomial(n_pts, k)).sum();
            if count > ENUMERATION_BUDGET {
                return Err(HarnessError::BudgetExceeded { count, budget: ENUMERATION_BUDGET });
            }
            let results = spec.install(|| {
                sizes
                    .iter()
                    .map(|&k| {
                        sweep(n_pts, k, |mask| {
                            let e = PointSet::from_indices(space.clone(), mask_elems(mask));
                            evaluate(&e, &checks).map(|o| (e, o))
                        })
                        .into_iter()
                        .collect::<Result<Vec<_>, _>>()
                        .map(|v| (k, v))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })??;
            for (k, sets) in &results {
                let mut covering_count = 0;
                for (e, o) in sets {
                    covering_count += o.cover.unwrap_or(false) as u64;
                    record(&mut report, e, o);
                    track(e, o);
                }
                rows.push(SizeRow {
                    size: *k,
                    sets: sets.len() as u64,
                    threshold_met: covering::dot_set_threshold(*k, q, d),
                    covering: covering_count,
                });
            }
        }
        Mode::Sample => {
            let sizes: Vec<usize> = match spec.sizes {
                Some(r) => (r.min..=r.max.min(n_pts)).collect(),
                None => vec![threshold_size(q, d, n_pts)],
            };
            let results = spec.install(|| {
                use rayon::prelude::*;
                sizes
                    .iter()
                    .map(|&k| {
                        (0..spec.samples)
                            .into_par_iter()
                            .map(|i| {
                                let mut rng = spec.rng(k, i);
                                let e = PointSet::from_indices(space.clone(), random_points(&space, &mut rng, k));
                                evaluate(&e, &checks).map(|o| (e, o))
                            })
                            .collect::<Result<Vec<_>, _>>()
                            .map(|v| (k, v))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })??;
            for (k, sets) in &results {
                let mut covering_count = 0;
                for (e, o) in sets {
                    covering_count += o.cover.unwrap_or(false) as u64;
                    record(&mut report, e, o);
                    track(e, o);
                }
                rows.push(SizeRow {
                    size: *k,
                    sets: sets.len() as u64,
                    threshold_met: covering::dot_set_threshold(*k, q, d),
                    covering: covering_count,
                });
            }
        }
        Mode::Structured => {
            let sets = structured_point_sets(&space, spec)?;
            let results = spec.install(|| {
                use rayon::prelude::*;
                sets.par_iter().map(|(_, e)| evaluate(e, &checks)).collect::<Result<Vec<_>, _>>()
            })??;
            for ((name, e), o) in sets.iter().zip(&results) {
                record(&mut report, e, o);
                track(e, o);
                let covers = covering::covers_units(&covering::dot_product_set(e)).covers_units;
                families.push(FamilyRow {
                    family: name.clone(),
                    size: e.len(),
                    threshold_met: covering::dot_set_threshold(e.len(), q, d),
                    covers_units: covers,
                    remainder_sharpness: o.remainder.as_ref().and_then(|r| r.as_ref().ok()).map(|r| r.0),
                });
            }
        }
    }

    let worst_json = match &worst {
        Some((s, e)) => {
            let profile: NuProfile = incidence::nu(e)?;
            if let Some(out) = csv {
                *out = profile.to_csv();
            }
            serde_json::json!({ "sharpness": s, "size": e.len(), "points": e.iter().collect::<Vec<_>>() })
        }
        None => serde_json::Value::Null,
    };
    report.details = serde_json::json!({
        "threshold_size": threshold_size(q, d, n_pts),
        "per_size": rows,
        "families": families,
        "worst_remainder_set": worst_json,
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::SizeRange;

    #[test]
    fn exhaustive_plane_over_f3() {
        let spec = ExperimentSpec { p: 3, n: 1, d: 2, mode: Mode::Exhaustive, ..Default::default() };
        let r = cmd_geometry(&spec, None).unwrap();
        assert!(r.passed(), "{}", r.to_json());
        assert_eq!(r.checks["cover"].pass, 130);
        let sizes: Vec<u64> =
            r.details["per_size"].as_array().unwrap().iter().map(|x| x["sets"].as_u64().unwrap()).collect();
        assert_eq!(sizes, vec![84, 36, 9, 1]);
    }

    #[test]
    fn structured_sets_pass() {
        for (p, n, d) in [(5, 1, 2), (2, 2, 3), (3, 2, 2)] {
            let spec = ExperimentSpec { p, n, d, mode: Mode::Structured, ..Default::default() };
            let mut csv = String::new();
            let r = cmd_geometry(&spec, Some(&mut csv)).unwrap();
            assert!(r.passed(), "{}", r.to_json());
            assert!(csv.starts_with("t_index,nu,r_numerator\n"));
            let fams = r.details["families"].as_array().unwrap();
            let punct = fams.iter().find(|f| f["family"] == "punctured_space").unwrap();
            assert_eq!(punct["covers_units"], true);
            assert!(fams.iter().any(|f| f["family"].as_str().unwrap().starts_with("line_plus_random")));
        }
    }

    #[test]
    fn self_orthogonal_line_is_reported_not_failed() {
        let spec = ExperimentSpec { p: 5, n: 1, d: 2, mode: Mode::Structured, ..Default::default() };
        let r = cmd_geometry(&spec, None).unwrap();
        assert!(r.sharpness["remainder_zero_ratio"] > 1.0);
        assert!(r.sharpness["remainder_sharpness"] <= 1.0);
    }

    #[test]
    fn sample_mode_is_worker_independent() {
        let spec = ExperimentSpec {
            p: 7,
            d: 2,
            samples: 20,
            seed: 9,
            sizes: Some(SizeRange { min: 10, max: 12 }),
            ..Default::default()
        };
        let a = cmd_geometry(&spec, None).unwrap().to_json();
        let b = cmd_geometry(&ExperimentSpec { workers: 3, ..spec }, None).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn exhaustive_budget() {
        let spec = ExperimentSpec { p: 11, d: 2, mode: Mode::Exhaustive, ..Default::default() };
        assert!(matches!(cmd_geometry(&spec, None), Err(HarnessError::BadSpec(_))));
        let spec = ExperimentSpec {
            p: 61,
            d: 1,
            mode: Mode::Exhaustive,
            sizes: Some(SizeRange { min: 10, max: 50 }),
            ..Default::default()
        };
        assert!(matches!(cmd_geometry(&spec, None), Err(HarnessError::BudgetExceeded { .. })));
    }
}
