use std::process::{Command, Output};

fn mahler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mahler"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn verify_single_identity_emits_json() {
    let out = mahler(&["verify", "run", "--id", "A648", "--digits", "25", "--no-timing"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let report: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    assert_eq!(report["id"], "A648");
    assert_eq!(report["status"], "verified");
    assert!(report["digits_agreed"].as_u64().unwrap() >= 25);
    assert_eq!(report["runtime_ms"], 0);
    let keys: Vec<&str> = report.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys.len(), 11);
    assert!(text.find("\"id\"").unwrap() < text.find("\"paper_anchor\"").unwrap());
}

#[test]
fn json_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for path in [&a, &b] {
        let out = mahler(&[
            "verify", "run", "--filter", "lemma22", "--no-timing", "--json", path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());
    assert_eq!(String::from_utf8(first).unwrap().lines().count(), 10);
}

#[test]
fn conjectures_skip_without_files() {
    let out = mahler(&["verify", "run", "--filter", "conjectural"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).matches("conditional-skipped").count(), 5);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(mahler(&["verify", "run", "--id", "NOPE"]).status.code(), Some(2));
    assert_eq!(mahler(&["verify", "run", "--filter", "nothing"]).status.code(), Some(2));
    assert_eq!(mahler(&["eval", "--quantity", "f2", "--args", "x"]).status.code(), Some(2));
    assert_eq!(mahler(&["eval", "--quantity", "Lprime0", "--args", "g99"]).status.code(), Some(2));
    assert_eq!(mahler(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn failures_exit_one() {
    // f3 between the G-series boundary and the hypergeometric threshold on
    // the negative side has no route
    let out = mahler(&["eval", "--quantity", "f3", "--args", "-50", "--digits", "10"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn eval_matches_known_values() {
    let out = mahler(&["eval", "--quantity", "s4", "--args", "1", "--digits", "20"]);
    assert!(stdout(&out).starts_with("648.000000000000000"));
    let out = mahler(&["eval", "--quantity", "dirichlet", "--args", "-4", "2", "--digits", "20"]);
    assert!(stdout(&out).starts_with("0.91596559417721901505"), "{}", stdout(&out));
    let out = mahler(&["eval", "--quantity", "pfq", "--args", "1,1", "2", "1/2", "--digits", "20"]);
    // ₂F₁(1,1;2;x) = −log(1−x)/x
    assert!(stdout(&out).starts_with("1.3862943611198906188"), "{}", stdout(&out));
}

#[test]
fn coefficient_files_feed_back_into_verify() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.txt");
    let out = mahler(&["coeffs", "--form", "h", "--count", "300", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# h 16 3 -4 1\n1 1\n"));

    let out = mahler(&["verify", "run", "--id", "A64", "--coeff-file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert!(report["rhs_method"].as_str().unwrap().contains("h(N=16,D=-4,eps=1)"));

    let short = dir.path().join("short.txt");
    mahler(&["coeffs", "--form", "h", "--count", "10", "--out", short.to_str().unwrap()]);
    let out = mahler(&["verify", "run", "--id", "A64", "--digits", "30", "--coeff-file", short.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient coefficients"));

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "# h 16 3 -4 1\n1 1\n2 0\n4 0\n").unwrap();
    let out = mahler(&["verify", "run", "--id", "A64", "--coeff-file", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn integrate_smyth() {
    let out = mahler(&["integrate", "--family", "smyth", "--samples", "200000", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v: f64 = stdout(&out).trim().parse().unwrap();
    assert!((v - 0.3230659472).abs() < 1e-3);
}

#[test]
fn list_covers_registry() {
    let out = mahler(&["verify", "list"]);
    let text = stdout(&out);
    for id in ["A64", "C13-8", "T1-hyperII", "TR-3", "B31", "CP1-b", "SMYTH", "S4-f4m82944", "L22-s4-614656"] {
        assert!(text.contains(id), "{id} missing");
    }
}
