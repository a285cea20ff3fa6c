//! End-to-end tests of the `gpscal` binary: artifact formats, exit codes,
//! and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn testdata(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("testdata")
        .join(name)
}

fn gpscal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpscal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

#[test]
fn leftover_emits_the_expected_breakpoint_table() {
    let path = testdata("two_flow.json");
    let out = gpscal(&["leftover", path.to_str().unwrap(), "--flow", "1"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    // max{t/2, 3t/4 - 1/2}: kink at t = 2
    assert_eq!(text, "# curve.csv\nt,value,slope\n0,0,0.5\n2,1,0.75\n");
}

#[test]
fn universal_reports_the_exhaustion_time() {
    let path = testdata("greedy_lazy.json");
    let out = gpscal(&["universal", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("inf,inf"), "{text}");
    assert!(
        text.starts_with("# curve.csv\nt,value,slope\n0,0,0\n"),
        "{text}"
    );
}

#[test]
fn simulate_on_empty_arrivals_is_all_zero() {
    let path = testdata("empty_arrivals.json");
    let out = gpscal(&["simulate", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("t,D_x,D_y,B_x,B_y"), "{text}");
    assert!(text.contains("\n4,0,0,0,0\n"), "{text}");
    assert!(text.contains("0,x;y"), "{text}");
}

#[test]
fn sample_emits_grid_rows() {
    let path = testdata("two_flow.json");
    let out = gpscal(&[
        "sample",
        path.to_str().unwrap(),
        "--flow",
        "1",
        "--grid",
        "0,1,2",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout_of(&out), "# sample.csv\nt,value\n0,0\n1,0.5\n2,1\n");
}

#[test]
fn verify_passes_on_greedy_lazy_scenario() {
    let path = testdata("greedy_lazy.json");
    let out = gpscal(&["verify", path.to_str().unwrap(), "--seed", "11"]);
    assert!(out.status.success(), "{}", stdout_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("PASS greedy-lazy-tightness"), "{text}");
    assert!(text.contains("PASS gps-compliance"), "{text}");
    assert!(!text.contains("FAIL"), "{text}");
}

#[test]
fn verify_passes_on_mixed_scenario() {
    let path = testdata("mixed.json");
    let out = gpscal(&["verify", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stdout_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("PASS strict-service bursty"), "{text}");
    assert!(!text.contains("FAIL"), "{text}");
}

#[test]
fn bounds_passes_and_negative_tolerance_probes_the_margin() {
    let path = testdata("greedy_lazy.json");
    let out = gpscal(&["bounds", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stdout_of(&out));

    // saturating scenario: strict-service slack is exactly zero, so asking
    // for strictly positive margin must fail with exit 1
    let out = gpscal(&["bounds", path.to_str().unwrap(), "--tolerance=-1e-3"]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout_of(&out));
    assert!(stdout_of(&out).contains("FAIL"));
}

#[test]
fn non_concave_envelope_is_a_usage_error() {
    let dir = std::env::temp_dir().join("gpscal-test-nonconcave");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.json");
    std::fs::write(
        &path,
        r#"{
            "flows": [{"id": "a", "weight": "1",
                       "envelope": {"kind": "pl-concave",
                                    "segments": [
                                        {"start": "0", "jump": "0", "slope": "1"},
                                        {"start": "1", "jump": "0", "slope": "2"}]}}],
            "service": {"curve": {"kind": "latency-rates",
                                  "pieces": [{"R": "1", "L": "0"}]}},
            "horizon": "5"
        }"#,
    )
    .unwrap();
    let out = gpscal(&["universal", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("not concave"), "{err}");
}

#[test]
fn noncompliant_arrivals_report_a_witness_pair() {
    let dir = std::env::temp_dir().join("gpscal-test-witness");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.json");
    std::fs::write(
        &path,
        r#"{
            "flows": [{"id": "a", "weight": "1",
                       "envelope": {"kind": "token-buckets",
                                    "pieces": [{"sigma": "1", "rho": "1"}]},
                       "arrivals": {"kind": "pl",
                                    "segments": [{"start": "0", "jump": "0", "slope": "2"}]}}],
            "service": {"curve": {"kind": "latency-rates",
                                  "pieces": [{"R": "4", "L": "0"}]}},
            "horizon": "5"
        }"#,
    )
    .unwrap();
    let out = gpscal(&["simulate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("exceeds the envelope"), "{err}");
    assert!(err.contains("at s ="), "{err}");
}

#[test]
fn identical_invocations_are_byte_identical() {
    let path = testdata("mixed.json");
    for args in [
        vec!["simulate", path.to_str().unwrap()],
        vec!["verify", path.to_str().unwrap(), "--seed", "5"],
        vec!["universal", path.to_str().unwrap()],
    ] {
        let a = gpscal(&args);
        let b = gpscal(&args);
        assert_eq!(a.stdout, b.stdout, "nondeterministic output for {args:?}");
        assert_eq!(a.status.code(), b.status.code());
    }
}

#[test]
fn out_dir_receives_artifacts() {
    let dir = std::env::temp_dir().join("gpscal-test-outdir");
    let _ = std::fs::remove_dir_all(&dir);
    let path = testdata("mixed.json");
    let out = gpscal(&[
        "simulate",
        path.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let trajectory = std::fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    assert!(trajectory.starts_with("t,D_bursty,D_steady,D_wild,B_bursty,B_steady,B_wild"));
    let events = std::fs::read_to_string(dir.join("events.csv")).unwrap();
    assert!(events.starts_with("t,members_of_M(t)"));
}

#[test]
fn unknown_flow_is_a_usage_error() {
    let path = testdata("two_flow.json");
    let out = gpscal(&["leftover", path.to_str().unwrap(), "--flow", "zz"]);
    assert_eq!(out.status.code(), Some(2));
}
