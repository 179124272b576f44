use std::path::PathBuf;
use std::process::Command;

use cvxkob::cli_harness::*;

const MINIMAL: &str = r#"{"name": "ball-oracle", "domain": {"dim": 2, "kind": "ball", "radius": 1.0}}"#;

fn tmp_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("cvxkob-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cvxkob"))
}

#[test]
fn minimal_ball_spec_is_valid() {
    let s = parse_spec_str(MINIMAL).unwrap();
    assert_eq!(s.name, "ball-oracle");
    assert_eq!(s.seed, 0);
    assert!(s.automorphisms.is_empty());
}

#[test]
fn zero_exponent_is_rejected_by_field() {
    let text = r#"{"name": "ellipsoid-limit-set", "domain": {"dim": 2, "kind": "ellipsoid", "exponents": [1, 0]}}"#;
    match parse_spec_str(text) {
        Err(HarnessError::Validation { field, message }) => {
            assert_eq!(field, "domain.exponents[1]");
            assert!(message.contains(">= 1"), "{message}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_fields_and_syntax_errors_carry_positions() {
    let text = "{\n  \"name\": \"ball-oracle\",\n  \"domain\": {\"dim\": 2, \"kind\": \"ball\", \"radius\": 1.0, \"colour\": 3}\n}";
    match parse_spec_str(text) {
        Err(HarnessError::Parse { line, message, .. }) => {
            assert_eq!(line, 3);
            assert!(message.contains("colour"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    let e = parse_spec_str("{\"name\": \"ball-oracle\",\n\"domain\": }").unwrap_err();
    assert!(matches!(e, HarnessError::Parse { line: 2, .. }), "{e:?}");
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn unknown_suite_lists_the_registry() {
    let e = parse_spec_str(r#"{"name": "nope", "domain": {"dim": 2, "kind": "ball", "radius": 1.0}}"#).unwrap_err();
    let msg = e.to_string();
    for s in suite_names() {
        assert!(msg.contains(s), "{msg}");
    }
    assert_eq!(suite_names().len(), 10);
}

#[test]
fn misplaced_and_unknown_parameters_are_rejected() {
    let t = r#"{"name": "ball-oracle", "domain": {"dim": 2, "kind": "ball", "radius": 1.0, "exponents": [1, 1]}}"#;
    assert!(matches!(parse_spec_str(t), Err(HarnessError::Validation { field, .. }) if field == "domain.exponents"));
    let t = r#"{"name": "ball-oracle", "domain": {"dim": 2, "kind": "ball", "radius": 1.0}, "parameters": {"width": 1.0}}"#;
    assert!(matches!(parse_spec_str(t), Err(HarnessError::Validation { field, .. }) if field == "parameters.width"));
    let t = r#"{"name": "ping-pong", "domain": {"dim": 2, "kind": "ball", "radius": 1.0}, "automorphisms": [{"a": [0.1, 0.0], "u": [2.0, 0.0]}]}"#;
    assert!(matches!(parse_spec_str(t), Err(HarnessError::Validation { .. })));
}

#[test]
fn nested_domains_are_constructed() {
    let t = r#"{"name": "ball-oracle", "domain": {"dim": 2, "kind": "intersection", "parts": [
        {"dim": 2, "kind": "ball", "radius": 1.0},
        {"dim": 2, "kind": "affine", "linear": [[[2.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]], "offset": [[0.5, 0.0], [0.0, 0.0]],
         "base": {"dim": 2, "kind": "ellipsoid", "exponents": [1, 2]}}]}}"#;
    let s = parse_spec_str(t).unwrap();
    let d = build_domain(&s.domain, "domain").unwrap();
    assert_eq!(d.dim(), 2);
}

#[test]
fn canonical_form_round_trips() {
    let messy = r#"{"seed": 7, "domain": {"radius": 1.0, "kind": "ball", "dim": 2}, "name": "gromov", "parameters": {"levels": 12}}"#;
    let s = parse_spec_str(messy).unwrap();
    let canon = to_canonical_string(&s);
    let again = parse_spec_str(&canon).unwrap();
    assert_eq!(again, s);
    assert_eq!(to_canonical_string(&again), canon);
    assert!(canon.starts_with("{\n  \"name\": \"gromov\""), "{canon}");
    assert!(canon.contains("\"outputs\": \"out\""));
    for name in suite_names() {
        let d = default_spec(name).unwrap();
        assert_eq!(parse_spec_str(&to_canonical_string(&d)).unwrap(), d);
    }
}

#[test]
fn ball_oracle_suite_passes_and_cites_operations() {
    let r = run_suite(&default_spec("ball-oracle").unwrap(), &RunOptions::default()).unwrap();
    assert!(r.passed(), "{}", r.to_text());
    assert!(r.assertions.iter().all(|a| a.op.contains("::")));
    assert!(!r.header.is_empty());
    assert!(r.constant("median_width").unwrap() <= 5e-3);
}

#[test]
fn failing_assertions_are_reported_not_skipped() {
    let mut s = default_spec("ball-oracle").unwrap();
    s.parameters.insert("median_width".into(), 0.0);
    let r = run_suite(&s, &RunOptions::default()).unwrap();
    assert!(!r.passed());
    assert_eq!(r.failures(), 1);
    assert_eq!(r.assertions.len(), 2);
    // A stage failure marks every dependent assertion as failed.
    let mut s = default_spec("ball-oracle").unwrap();
    s.domain = DomainSpec { kind: DomainKindSpec::Ellipsoid, radius: None, center: None, exponents: Some(vec![1, 2]), ..s.domain };
    let r = run_suite(&s, &RunOptions::default()).unwrap();
    assert_eq!(r.failures(), r.assertions.len());
    assert!(r.assertions.iter().any(|a| a.detail.contains("prerequisite")));
}

#[test]
fn csv_output_is_deterministic() {
    let spec = default_spec("lie-toolkit").unwrap();
    let a = run_suite(&spec, &RunOptions::default()).unwrap();
    let b = run_suite(&spec, &RunOptions::default()).unwrap();
    assert!(!a.tables.is_empty());
    for (x, y) in a.tables.iter().zip(&b.tables) {
        let (cx, cy) = (x.to_csv().unwrap(), y.to_csv().unwrap());
        assert_eq!(cx, cy);
        assert!(!cx.contains('\r'));
        assert!(cx.lines().next().unwrap().starts_with("id,lower,upper,width"));
    }
    let c = run_suite(&spec, &RunOptions { seed: Some(99), ..Default::default() }).unwrap();
    assert_eq!(c.seed, 99);
}

#[test]
fn csv_floats_have_seventeen_digits() {
    let mut t = Table::new(PlotKind::Residuals, "r", &["n", "R", "hausdorff"]);
    t.push(vec![1.0, 0.1, 1.0 / 3.0]);
    assert_eq!(t.to_csv().unwrap(), "n,R,hausdorff\n1.0000000000000000e0,1.0000000000000001e-1,3.3333333333333331e-1\n");
}

#[test]
fn emit_writes_only_the_requested_kind() {
    let dir = tmp_dir("emit");
    let r = run_suite(&default_spec("normal-lines").unwrap(), &RunOptions::default()).unwrap();
    let files = emit_plot_data(&r, "curve", &dir).unwrap();
    assert_eq!(files.len(), 1);
    let text = std::fs::read_to_string(&files[0]).unwrap();
    assert!(text.starts_with("t,re_1,im_1,re_2,im_2\n"));
    assert!(emit_plot_data(&r, "orbit", &dir).unwrap().is_empty());
    assert!(matches!(emit_plot_data(&r, "histogram", &dir), Err(HarnessError::Validation { .. })));
}

#[test]
fn binary_exit_codes() {
    let dir = tmp_dir("bin");
    let st = bin().args(["run", "--suite", "ball-oracle", "--out"]).arg(&dir).output().unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    assert!(dir.join("ball-oracle-report.txt").exists());
    assert!(dir.join("ball-oracle-brackets.csv").exists());

    let failing = dir.join("failing.json");
    std::fs::write(&failing, r#"{"name": "ball-oracle", "domain": {"dim": 2, "kind": "ball", "radius": 1.0}, "parameters": {"median_width": 0.0}}"#)
        .unwrap();
    let st = bin().args(["run", "--out"]).arg(&dir).arg("--spec").arg(&failing).output().unwrap();
    assert_eq!(st.status.code(), Some(1));

    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"name": "ball-oracle", "domain": {"dim": 2, "kind": "ellipsoid", "exponents": [1, 0]}}"#).unwrap();
    let st = bin().arg("check-spec").arg("--spec").arg(&bad).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&st.stderr).contains("domain.exponents[1]"));

    let good = dir.join("good.json");
    std::fs::write(&good, MINIMAL).unwrap();
    let st = bin().arg("check-spec").arg("--spec").arg(&good).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&st.stdout), to_canonical_string(&parse_spec_str(MINIMAL).unwrap()));

    let st = bin().args(["run", "--suite", "nope"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    let st = bin().args(["emit", "--suite", "ball-oracle", "--kind", "histogram"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    let st = bin().arg("run").arg("--spec").arg(dir.join("missing.json")).output().unwrap();
    assert_eq!(st.status.code(), Some(3));
}

#[test]
fn binary_runs_are_byte_identical() {
    let (a, b) = (tmp_dir("det-a"), tmp_dir("det-b"));
    for d in [&a, &b] {
        let st = bin()
            .args(["emit", "--suite", "rescale-ball", "--kind", "residuals", "--seed", "5", "--preferred-first", "1,0,0,0", "--out"])
            .arg(d)
            .output()
            .unwrap();
        assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    }
    let fa = std::fs::read(a.join("rescale-ball-residuals.csv")).unwrap();
    let fb = std::fs::read(b.join("rescale-ball-residuals.csv")).unwrap();
    assert!(!fa.is_empty());
    assert_eq!(fa, fb);
}
