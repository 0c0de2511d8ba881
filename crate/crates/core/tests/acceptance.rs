//! Acceptance suite: ten criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so every line reaches stdout. Exits
//! nonzero when any criterion fails.

use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use fq_sumproduct::covering::{self, ScalarSet};
use fq_sumproduct::fourier::Space;
use fq_sumproduct::gf::{FieldCtx, FqElem};
use fq_sumproduct::harness::{self, Check, ExperimentSpec, Mode, IDENTITY_TOL, SELFTEST_ROSTER};
use fq_sumproduct::incidence::{self, PointSet};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Points per random set are capped so brute-force oracles stay cheap.
const MAX_RANDOM_POINTS: usize = 400;

type Criterion<'a> = (&'static str, Duration, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    ok: bool,
    summary: String,
}

fn outcome(ok: bool, summary: impl Into<String>) -> Outcome {
    Outcome { ok, summary: summary.into() }
}

fn fields() -> Vec<Arc<FieldCtx>> {
    SELFTEST_ROSTER.iter().map(|&(p, n)| Arc::new(FieldCtx::new(p, n).expect("roster field"))).collect()
}

fn random_set(space: &Space, rng: &mut ChaCha8Rng, origin_free: bool) -> PointSet {
    let n = space.size();
    let k = rng.gen_range(1..=n.min(MAX_RANDOM_POINTS));
    let mut e = PointSet::from_indices(space.clone(), index::sample(rng, n, k).into_vec());
    if origin_free {
        e.remove(0);
    }
    e
}

/// Field and dimension for random set `i`, cycling through the roster.
fn pick(fields: &[Arc<FieldCtx>], i: usize, dims: &[usize]) -> Space {
    let f = &fields[i % fields.len()];
    let d = dims[(i / fields.len()) % dims.len()];
    Space::new(f.clone(), d).expect("small space")
}

/// Structured point sets over the roster for `d` in {2, 3}.
fn structured_sets(fields: &[Arc<FieldCtx>]) -> Vec<(String, PointSet)> {
    let spec = ExperimentSpec { seed: 7, ..Default::default() };
    let mut out = Vec::new();
    for f in fields {
        for d in [2, 3] {
            let space = Space::new(f.clone(), d).expect("small space");
            for (name, e) in harness::structured_point_sets(&space, &spec).expect("structured sets") {
                out.push((format!("GF({}) d={d} {name}", f.q()), e));
            }
        }
    }
    out
}

fn c1_fourier_identities() -> Outcome {
    let r = harness::cmd_selftest().expect("selftest runs");
    let worst = r.sharpness.get("identity_max_rel_err").copied().unwrap_or(f64::INFINITY);
    let checks: u64 = r.checks.values().map(|t| t.pass + t.fail).sum();
    outcome(
        r.passed() && worst <= IDENTITY_TOL,
        format!("{checks} checks, {} failures, max rel err {worst:.2e}", r.failures()),
    )
}

fn c2_nu_consistency(fields: &[Arc<FieldCtx>]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0;
    for i in 0..500 {
        let space = pick(fields, i, &[1, 2, 3]);
        let e = random_set(&space, &mut rng, false);
        let brute = incidence::nu_bruteforce(&e);
        let total: u64 = brute.nu.iter().sum();
        let same = incidence::nu_spectral(&e).is_ok_and(|s| s == brute);
        if !same || total != (e.len() * e.len()) as u64 {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("500 sets, {bad} mismatches"))
}

fn c3_remainder(fields: &[Arc<FieldCtx>], structured: &[(String, PointSet)]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut random: Vec<PointSet> =
        (0..1000).map(|i| random_set(&pick(fields, i, &[1, 2, 3]), &mut rng, false)).collect();
    let n_random = random.len();
    random.extend(structured.iter().map(|(_, e)| e.clone()));
    let mut violations = 0;
    let mut worst = 0.0f64;
    let mut zero_exceed = 0;
    for e in &random {
        match incidence::remainder_bound_check(e) {
            Ok(r) => {
                worst = worst.max(r.sharpness);
                zero_exceed += (r.zero_ratio > 1.0) as usize;
            }
            Err(_) => violations += 1,
        }
    }
    outcome(
        violations == 0 && structured.len() >= 50,
        format!(
            "{n_random} random + {} structured sets, {violations} violations over t != 0, worst ratio {worst:.4}; \
             t = 0 exceeds the bound on {zero_exceed} sets (not asserted)",
            structured.len()
        ),
    )
}

fn c4_cover_exhaustive() -> Outcome {
    let cases = [(3, 1, 2), (2, 2, 2), (5, 1, 2), (7, 1, 2), (2, 3, 2), (3, 2, 2), (3, 1, 3)];
    let mut subsets = 0;
    let mut failures = 0;
    for (p, n, d) in cases {
        let spec = ExperimentSpec { p, n, d, mode: Mode::Exhaustive, workers: 4, ..Default::default() };
        let r = harness::cmd_cover_exhaustive(&spec).expect("within budget");
        subsets += r.checks.get("cover").map_or(0, |t| t.pass + t.fail);
        failures += r.counterexample_count + r.failures();
    }
    outcome(
        failures == 0,
        format!("{} (q, d) pairs, {subsets} admitted subsets, {failures} counterexamples", cases.len()),
    )
}

fn c5_main_exhaustive() -> Outcome {
    let spec = ExperimentSpec {
        p: 3,
        d: 2,
        mode: Mode::Exhaustive,
        checks: vec![Check::Cover],
        workers: 4,
        ..Default::default()
    };
    let r = harness::cmd_geometry(&spec, None).expect("within budget");
    let t = r.checks.get("cover").cloned().unwrap_or_default();
    outcome(t.pass == 130 && t.fail == 0 && r.passed(), format!("{} subsets cover F_3^*, {} fail", t.pass, t.fail))
}

fn c6_lower_bounds(fields: &[Arc<FieldCtx>], structured: &[(String, PointSet)]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut sets: Vec<PointSet> = (0..1000).map(|i| random_set(&pick(fields, i, &[1, 2, 3]), &mut rng, true)).collect();
    sets.extend(structured.iter().map(|(_, e)| e.strip_origin()));
    let mut key_fail = 0;
    let mut moment_fail = 0;
    for e in &sets {
        key_fail += !covering::dot_set_lower_bound_check(e).expect("origin-free").witness_holds as usize;
        moment_fail += !incidence::second_moment_check(e).expect("origin-free").holds as usize;
    }
    outcome(
        key_fail == 0 && moment_fail == 0,
        format!("{} sets, key lower bound {key_fail} violations, second moment {moment_fail} violations", sets.len()),
    )
}

fn c7_hatf(fields: &[Arc<FieldCtx>]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bad = 0;
    let mut worst = 0.0f64;
    for i in 0..200 {
        let e = random_set(&pick(fields, i, &[2, 3]), &mut rng, true);
        match incidence::verify_hatf_identity(&e) {
            Ok(r) => worst = worst.max(r.max_rel_err),
            Err(_) => bad += 1,
        }
    }
    outcome(bad == 0 && worst <= IDENTITY_TOL, format!("200 sets, {bad} failures, max rel err {worst:.2e}"))
}

fn c8_sharpness() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (p, n) in [(2, 2), (3, 2), (2, 4), (5, 2)] {
        let spec = ExperimentSpec { p, n, d: 2, max_d: 6, ..Default::default() };
        let r = harness::cmd_sharpness(&spec).expect("sharpness runs");
        let sub = &r.details["subfield"];
        let closed = sub["closed_for_all_d_up_to"] == 6;
        let covers = sub["covers_units"] == true;
        ok &= closed && !covers && r.passed();
        notes.push(format!(
            "q={} |A|={} ratio {:.3}",
            p.pow(n),
            sub["size"],
            sub["ratio"].as_f64().unwrap_or(f64::NAN)
        ));
    }
    outcome(ok, format!("dA^2 = A for d <= 6, no unit cover: {}", notes.join(", ")))
}

fn c9_power_set(fields: &[Arc<FieldCtx>]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut bad = 0;
    for i in 0..200 {
        let f = &fields[i % fields.len()];
        let d = [2, 3][(i / fields.len()) % 2];
        let q = f.q();
        let k = rng.gen_range(1..=q);
        let a = ScalarSet::from_elems(f.clone(), index::sample(&mut rng, q, k).into_iter().map(|x| FqElem(x as u32)));
        let e = covering::power_set(&a, d).expect("small space");
        if covering::dot_product_set(&e) != covering::d_a2(&a, d).expect("d >= 1") {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("200 sets, {bad} mismatches"))
}

fn c10_determinism() -> Outcome {
    let run = |workers: &str| {
        Command::new(env!("CARGO_BIN_EXE_fq-sumproduct"))
            .args(["cover-sample", "--p", "101", "--samples", "500", "--seed", "42"])
            .args(["--checks", "cover,keylowerbound,bilinear", "--workers", workers])
            .output()
            .expect("binary runs")
    };
    let (a, b) = (run("1"), run("8"));
    let ok = a.status.success() && b.status.success() && a.stdout == b.stdout && !a.stdout.is_empty();
    outcome(
        ok,
        format!("workers 1 vs 8: {} vs {} bytes, identical = {}", a.stdout.len(), b.stdout.len(), a.stdout == b.stdout),
    )
}

fn main() -> ExitCode {
    let fields = fields();
    let structured = structured_sets(&fields);
    let criteria: Vec<Criterion> = vec![
        ("1 fourier identities", Duration::from_secs(60), Box::new(c1_fourier_identities)),
        ("2 nu consistency", Duration::from_secs(60), Box::new(|| c2_nu_consistency(&fields))),
        ("3 remainder bound", Duration::from_secs(300), Box::new(|| c3_remainder(&fields, &structured))),
        ("4 cover exhaustive", Duration::from_secs(60), Box::new(c4_cover_exhaustive)),
        ("5 dot-product cover q=3 d=2", Duration::from_secs(10), Box::new(c5_main_exhaustive)),
        (
            "6 key lower bound + second moment",
            Duration::from_secs(300),
            Box::new(|| c6_lower_bounds(&fields, &structured)),
        ),
        ("7 hatF identity", Duration::from_secs(300), Box::new(|| c7_hatf(&fields))),
        ("8 subfield sharpness", Duration::from_secs(10), Box::new(c8_sharpness)),
        ("9 dot_product_set(A^d) = dA^2", Duration::from_secs(300), Box::new(|| c9_power_set(&fields))),
        ("10 worker determinism", Duration::from_secs(300), Box::new(c10_determinism)),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let ok = o.ok && elapsed <= budget;
        failed += !ok as usize;
        println!(
            "{} criterion {name}: {} [{:.2}s of {}s]",
            if ok { "PASS" } else { "FAIL" },
            o.summary,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
