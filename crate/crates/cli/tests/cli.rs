use std::path::PathBuf;
use std::process::{Command, Output};

use qfi_cli::{EstimateDocument, ReportDocument, SweepDocument, VerifyDocument};

fn spec(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs");
    root.join(format!("{name}.qch")).to_string_lossy().into_owned()
}

fn qfi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfi"))
        .args(args)
        .env_remove("QFI_SEED")
        .output()
        .expect("qfi runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn example1_report_is_attainable() {
    let t: f64 = 0.6;
    let doc: ReportDocument = serde_json::from_str(&stdout(&qfi(&["report", &spec("example1"), "--theta", "0.6"]))).unwrap();
    let r = doc.one_parameter.unwrap();
    // weights t² and 1−t², the first vector tilting into the kernel; worked out by hand
    let h = 4.0 * (1.0 + t * t) / (1.0 - t * t);
    assert!(close(r.sld_information, h, 1e-6), "{}", r.sld_information);
    assert!(close(r.c_upsilon, h, 1e-6));
    assert!(r.gap.abs() < 1e-8);
    assert!(r.attainable.attainable);
}

#[test]
fn amplitude_damping_report_explains_the_gap() {
    let doc: ReportDocument =
        serde_json::from_str(&stdout(&qfi(&["report", &spec("amplitude-damping"), "--theta", "0.5"]))).unwrap();
    let r = doc.one_parameter.unwrap();
    assert!(r.gap > 1e-3);
    assert!(!r.attainable.attainable);
    assert!(r.warnings.iter().any(|w| w.contains("to test for optimal POVMs")), "{:?}", r.warnings);
}

#[test]
fn dephasing_plus_minus_is_optimal() {
    let out = stdout(&qfi(&["report", &spec("dephasing"), "--theta", "0.2", "--povm", "plus-minus"]));
    let r = serde_json::from_str::<ReportDocument>(&out).unwrap().one_parameter.unwrap();
    for v in [r.fisher.unwrap(), r.sld_information, r.c_upsilon] {
        assert!(close(v, 6.25, 1e-8), "{v}");
    }
}

#[test]
fn report_json_round_trips() {
    for args in [
        vec!["report", &spec("amplitude-damping"), "--theta", "0.3", "--povm", "sld-eigenbasis"],
        vec!["report", &spec("example2"), "--theta", "0.3,0.4", "--povm", "computational"],
    ] {
        let out = stdout(&qfi(&args));
        let doc: ReportDocument = serde_json::from_str(&out).unwrap();
        let again = serde_json::to_string_pretty(&doc).unwrap() + "\n";
        assert_eq!(out, again);
        assert_eq!(serde_json::from_str::<ReportDocument>(&again).unwrap(), doc);
    }
}

#[test]
fn multi_parameter_report_orders_the_matrices() {
    let out = stdout(&qfi(&["report", &spec("example2"), "--theta", "0.3,0.4", "--povm", "computational"]));
    let m = serde_json::from_str::<ReportDocument>(&out).unwrap().multi_parameter.unwrap();
    assert!(m.loewner.sld_le_sm.holds && m.loewner.fisher_le_sld.unwrap().holds);
    assert!(m.cramer_rao.full_rank);
    assert!(m.attainability.attainable);
}

#[test]
fn dephasing_sweep_matches_the_closed_form() {
    let out = stdout(&qfi(&["sweep", &spec("dephasing"), "--theta-grid", "0.1:0.9:0.1", "--format", "csv"]));
    let mut rdr = csv::Reader::from_reader(out.as_bytes());
    let head = rdr.headers().unwrap().clone();
    let col = |n: &str| head.iter().position(|h| h == n).unwrap();
    let (ti, hi) = (col("theta"), col("sld_information"));
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let t: f64 = rec[ti].parse().unwrap();
        let h: f64 = rec[hi].parse().unwrap();
        assert!(close(h, 1.0 / (t * (1.0 - t)), 1e-7), "θ={t}: {h}");
        n += 1;
    }
    assert_eq!(n, 9);
}

#[test]
fn example1_sweep_has_no_gap() {
    let out = stdout(&qfi(&["sweep", &spec("example1"), "--theta-grid", "0.05:0.95:0.05"]));
    let doc: SweepDocument = serde_json::from_str(&out).unwrap();
    assert_eq!(doc.rows.len(), 19);
    assert!(doc.rows.iter().all(|r| r.gap.unwrap().abs() < 1e-8));
}

#[test]
fn sweep_outside_the_domain_is_rejected() {
    let o = qfi(&["sweep", &spec("dephasing"), "--theta-grid", "0.5:1.5:0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
}

#[test]
fn validation_errors_exit_2() {
    let cases: Vec<Vec<String>> = vec![
        vec!["report".into(), spec("missing"), "--theta".into(), "0.2".into()],
        vec!["report".into(), spec("dephasing"), "--theta".into(), "0.2,0.3".into()],
        vec!["report".into(), spec("dephasing"), "--theta".into(), "0.2".into(), "--povm".into(), "nope".into()],
        vec!["report".into(), spec("dephasing")],
        vec!["verify".into(), "--suite".into(), "nope".into()],
    ];
    for args in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = qfi(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn estimation_reaches_the_floor() {
    let out = stdout(&qfi(&[
        "estimate",
        &spec("dephasing"),
        "--theta-true",
        "0.2",
        "--N",
        "10000",
        "--reps",
        "200",
        "--seed",
        "7",
    ]));
    let doc: EstimateDocument = serde_json::from_str(&out).unwrap();
    let ratio = doc.run.ratios.sld.unwrap();
    assert!((0.85..=1.15).contains(&ratio), "{ratio}");
    assert_eq!(doc.run.estimates.len(), 200);
}

#[test]
fn estimation_is_deterministic() {
    let args = ["estimate", &spec("amplitude-damping"), "--theta-true", "0.3", "--shots", "2000", "--reps", "30"];
    let a = qfi(&[&args[..], &["--seed", "11"]].concat());
    let b = qfi(&[&args[..], &["--seed", "11"]].concat());
    assert_eq!(stdout(&a), stdout(&b));
    let c = Command::new(env!("CARGO_BIN_EXE_qfi"))
        .args(args)
        .env("QFI_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(stdout(&a), stdout(&c));
    let d = qfi(&[&args[..], &["--seed", "12"]].concat());
    assert_ne!(stdout(&a), stdout(&d));
}

#[test]
fn adaptive_estimate_logs_both_measurements() {
    let out = stdout(&qfi(&[
        "estimate",
        &spec("dephasing"),
        "--theta-true",
        "0.2",
        "--N",
        "10000",
        "--reps",
        "20",
        "--adaptive",
        "--n-pilot",
        "500",
    ]));
    let doc: EstimateDocument = serde_json::from_str(&out).unwrap();
    assert!(doc.adaptive);
    let first = doc.first_replication.as_ref().unwrap();
    assert_ne!(doc.povm, first.stage2_povm);
    assert_eq!(first.pilot_counts.iter().sum::<u64>(), 500);
    assert_eq!(first.counts.iter().sum::<u64>(), 9_500);
    assert_eq!(doc.run.pilot.as_ref().unwrap().n_pilot, 500);
    assert_eq!(serde_json::to_string_pretty(&doc).unwrap() + "\n", out);
}

#[test]
fn optimize_input_finds_the_equator() {
    let out = stdout(&qfi(&["optimize-input", &spec("rotation-z"), "--theta", "0.4", "--restarts", "2"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(close(v["optimum"]["value"].as_f64().unwrap(), 1.0, 1e-6), "{v}");
}

#[test]
fn verify_suites_pass() {
    for suite in ["ordering", "gap"] {
        let o = qfi(&["verify", "--suite", suite]);
        let doc: VerifyDocument = serde_json::from_str(&stdout(&o)).unwrap();
        assert!(doc.passed);
        assert_eq!(doc.seed, 2025);
        assert!(doc.reports.iter().all(|r| r.failures.is_empty() && r.cases > 0));
    }
    let out = stdout(&qfi(&["verify", "--suite", "gap", "--format", "csv"]));
    assert!(out.starts_with("suite,passed,"));
}

#[test]
fn povm_from_a_json_file() {
    let path = std::env::temp_dir().join(format!("qfi-povm-{}.json", std::process::id()));
    let h = 0.5;
    std::fs::write(
        &path,
        format!("[[[[{h},0],[{h},0]],[[{h},0],[{h},0]]],[[[{h},0],[-{h},0]],[[-{h},0],[{h},0]]]]"),
    )
    .unwrap();
    let file = path.to_string_lossy().into_owned();
    let out = stdout(&qfi(&["report", &spec("dephasing"), "--theta", "0.2", "--povm", &file]));
    let r = serde_json::from_str::<ReportDocument>(&out).unwrap().one_parameter.unwrap();
    assert!(close(r.fisher.unwrap(), 6.25, 1e-8));
    std::fs::write(&path, "[[[[1,0],[0,0]],[[0,0],[0,0]]]]").unwrap();
    assert_eq!(qfi(&["report", &spec("dephasing"), "--theta", "0.2", "--povm", &file]).status.code(), Some(2));
    std::fs::remove_file(&path).unwrap();
}
