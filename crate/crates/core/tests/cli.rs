use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fq-sumproduct")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

#[test]
fn selftest_exits_zero() {
    let out = run(&["selftest"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["counterexample_count"], 0);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["cover-exhaustive", "--p", "61", "--sizes", "20..61"]).status.code(), Some(4));
    assert_eq!(run(&["cover-sample", "--p", "6"]).status.code(), Some(3));
    assert_eq!(run(&["cover-sample", "--checks", "cover,nope"]).status.code(), Some(3));
    assert_eq!(run(&["geometry", "--sizes", "9..3"]).status.code(), Some(3));
    assert_eq!(run(&["d-of-eps", "3/4"]).status.code(), Some(3));
    assert_eq!(run(&["sharpness", "--csv", "x.csv"]).status.code(), Some(3));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(3));
}

#[test]
fn cover_exhaustive_gf5() {
    let out = run(&["cover-exhaustive", "--p", "5", "--d", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["details"]["admitted_subsets"], 6);
    assert_eq!(r["field"]["modulus"], serde_json::json!([0, 1]));
}

#[test]
fn d_of_eps_quarter() {
    let r = json(&run(&["d-of-eps", "1/4"]));
    assert_eq!(r["details"]["d_cover"], 2);
    assert_eq!(r["details"]["d_proportion"], 2);
}

#[test]
fn geometry_writes_csv_and_report() {
    let dir = std::env::temp_dir().join(format!("fq-sumproduct-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (csv, report) = (dir.join("nu.csv"), dir.join("report.json"));
    let out = run(&[
        "geometry",
        "--p",
        "5",
        "--mode",
        "structured",
        "--csv",
        csv.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t_index,nu,r_numerator\n"));
    assert_eq!(text.lines().count(), 6);
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["command"], "geometry");
    assert!(r.get("elapsed_ms").is_none());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn timing_is_opt_in() {
    let r = json(&run(&["d-of-eps", "1/2", "--timing"]));
    assert!(r["elapsed_ms"].is_u64());
}
