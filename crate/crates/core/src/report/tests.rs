use std::path::PathBuf;

use super::*;
use crate::linalg::diag_real;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn quick() -> AnalyzeOptions {
    AnalyzeOptions { energy_samples: 1, ..AnalyzeOptions::default() }
}

#[test]
fn loads_diag_fixture() {
    let op = load_operator(&fixture("diag.json")).unwrap();
    assert_eq!(op.l, diag_real(&[-1.0, 1.0]));
    assert_eq!(op.space.j(), &diag_real(&[1.0, -1.0]));
}

#[test]
fn non_involutive_j_names_the_eigenvalue() {
    let text = r#"{"schema_version": 1, "dim": 2, "J": {"matrix": {"re": [[1, 0], [0, -3]]}}, "L": {"re": [[0, 0], [0, 0]]}}"#;
    match parse_operator(text) {
        Err(Error::InvariantViolation(msg)) => assert!(msg.contains("-3"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn schema_and_parse_errors() {
    let cases = [
        (r#"{"schema_version": 1, "dim": 2, "J": {"signature": [1, 1]}}"#, "missing field \"L\""),
        (r#"{"schema_version": 1, "dim": 2, "J": {"signature": [1, 1]}, "L": {"re": [[0, 0]]}}"#, "$.L.re"),
        (r#"{"schema_version": 1, "dim": 2, "J": {"signature": [2, 1]}, "L": {"re": [[0, 0], [0, 0]]}}"#, "does not match dim"),
        (r#"{"schema_version": 1, "dim": 1, "J": {"signature": [1, 0]}, "L": {"re": [[0]]}, "extra": 1}"#, "unknown field"),
        (r#"{"schema_version": 2, "dim": 1, "J": {"signature": [1, 0]}, "L": {"re": [[0]]}}"#, "unsupported version"),
        (r#"{"schema_version": 1, "dim": 1, "J": {"signature": [1, 0]}, "L": {"re": [["x"]]}}"#, "$.L.re[0][0]"),
    ];
    for (text, want) in cases {
        match parse_operator(text) {
            Err(Error::Schema(msg)) => assert!(msg.contains(want), "{msg} lacks {want}"),
            other => panic!("{text}: {other:?}"),
        }
    }
    match parse_operator("{\n  \"dim\": ,\n}") {
        Err(Error::Parse { location, .. }) => assert!(location.starts_with("line 2"), "{location}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn canonical_save_round_trips_byte_for_byte() {
    for name in ["diag.json", "skew.json", "block.json"] {
        let doc = load_operator_document(&fixture(name)).unwrap();
        let once = operator_to_string(&doc).unwrap();
        let twice = operator_to_string(&parse_operator(&once).unwrap()).unwrap();
        assert_eq!(once, twice);
    }
    // the generated fixture is already canonical
    let text = std::fs::read_to_string(fixture("block.json")).unwrap();
    assert_eq!(operator_to_string(&parse_operator(&text).unwrap()).unwrap(), text);
    // a non-canonical J survives as a matrix
    let rot = r#"{"schema_version": 1, "dim": 2, "J": {"matrix": {"re": [[0, 1], [1, 0]]}}, "L": {"re": [[0, 0], [0, 0]]}}"#;
    let s = operator_to_string(&parse_operator(rot).unwrap()).unwrap();
    assert!(s.contains("\"matrix\""));
    assert_eq!(operator_to_string(&parse_operator(&s).unwrap()).unwrap(), s);
}

#[test]
fn save_is_atomic_and_readable() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("op.json");
    let doc = load_operator_document(&fixture("diag.json")).unwrap();
    save_operator(&doc, &path).unwrap();
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    assert_eq!(load_operator(&path).unwrap().l, doc.op.l);
}

#[test]
fn diag_fixture_passes_everything() {
    let op = load_operator(&fixture("diag.json")).unwrap();
    let rep = analyze(&op, &quick());
    let failed: Vec<_> = rep.certificates.iter().filter(|c| !c.passed).collect();
    assert!(rep.passed, "{failed:?}");
    assert!(rep.failure_stage.is_none());
    assert_eq!(rep.stages, STAGES.iter().filter(|s| **s != "deflate").map(|s| s.to_string()).collect::<Vec<_>>());
    assert!(rep.certificates.iter().all(|c| !c.instantiates.is_empty() && c.tolerance.is_finite()));
}

#[test]
fn skew_fixture_stops_then_deflates() {
    let op = load_operator(&fixture("skew.json")).unwrap();
    let rep = analyze(&op, &quick());
    assert!(!rep.passed);
    assert_eq!(rep.failure_stage.as_deref(), Some("resolvent_scan"));
    let c = rep.certificate("imaginary_axis_in_resolvent_set").unwrap();
    assert!(!c.passed && c.detail.as_deref().unwrap().starts_with("ImaginarySpectrumDetected"));
    assert!(rep.dichotomy.is_none());

    let rep = analyze(&op, &AnalyzeOptions { deflate: true, ..quick() });
    let failed: Vec<_> = rep.certificates.iter().filter(|c| !c.passed).collect();
    assert!(rep.passed, "{failed:?}");
    let d = rep.deflation.as_ref().unwrap();
    assert_eq!((d.rank, d.deflated_dim, d.deflated_signature), (2, 2, (1, 1)));
}

#[test]
fn block_fixture_reports_planted_constants() {
    let doc = load_operator_document(&fixture("block.json")).unwrap();
    let rep = analyze_document(&doc, &quick());
    let c = rep.certificate("planted_subordination_constants").unwrap();
    assert!(c.passed, "{c:?}");
    let b = rep.blocks.unwrap();
    assert_eq!(b.planted_c12, Some(0.3));
    assert!((b.c_a12 - 0.3).abs() < 1e-8 && (b.c_a21 - 0.3).abs() < 1e-8);
}

#[test]
fn not_j_dissipative_stops_at_classify() {
    let op = OperatorSpec::new(diag_real(&[1.0, 1.0]), crate::krein::KreinSpace::from_signature(1, 1).unwrap(), "x").unwrap();
    let rep = analyze(&op, &quick());
    assert_eq!(rep.failure_stage.as_deref(), Some("classify"));
    assert_eq!(rep.stages, vec!["classify".to_string()]);
    assert!(!rep.certificate("j_dissipative").unwrap().passed);
}

#[test]
fn certificates_follow_their_stages() {
    for name in ["diag.json", "skew.json", "block.json"] {
        let doc = load_operator_document(&fixture(name)).unwrap();
        for deflate in [false, true] {
            let rep = analyze_document(&doc, &AnalyzeOptions { deflate, ..quick() });
            for c in &rep.certificates {
                assert!(rep.stages.contains(&c.stage), "{name}: {} before {}", c.name, c.stage);
            }
            let order: Vec<usize> = rep.stages.iter().map(|s| STAGES.iter().position(|t| t == s).unwrap()).collect();
            assert!(order.windows(2).all(|w| w[0] < w[1]));
        }
    }
}

#[test]
fn report_is_deterministic_and_reemits_identically() {
    let doc = load_operator_document(&fixture("block.json")).unwrap();
    let a = analyze_document(&doc, &quick()).to_json().unwrap();
    let b = analyze_document(&doc, &quick()).to_json().unwrap();
    assert_eq!(a, b);
    let back = AnalysisReport::from_json(&a).unwrap();
    assert_eq!(back.to_json().unwrap(), a);
    // non-finite values survive as strings
    let skew = analyze(&load_operator(&fixture("skew.json")).unwrap(), &quick());
    let s = skew.to_json().unwrap();
    assert!(s.contains("\"c_2_19\": \"inf\""), "{s}");
    assert_eq!(AnalysisReport::from_json(&s).unwrap().to_json().unwrap(), s);
}

#[test]
fn strict_mode_halves_tolerances() {
    let op = load_operator(&fixture("diag.json")).unwrap();
    let loose = analyze(&op, &quick());
    let tight = analyze(&op, &AnalyzeOptions { strict: true, ..quick() });
    let t = |r: &AnalysisReport| r.certificate("contour_matches_schur").unwrap().tolerance;
    assert_eq!(t(&tight), 0.5 * t(&loose));
}

#[test]
fn grids() {
    assert_eq!(parse_grid("").unwrap(), Vec::<f64>::new());
    assert_eq!(parse_grid("8,16, 32").unwrap(), vec![8.0, 16.0, 32.0]);
    assert_eq!(parse_grid("0:1:5").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    assert!(matches!(parse_grid("1,x"), Err(Error::Parse { .. })));
    assert!(parse_grid("0:1").is_err());
}

#[test]
fn coupled_sweep_matches_closed_form() {
    let grid = parse_grid("0:0.9:4").unwrap();
    let s = sweep(Family::Coupled2x2, &grid, 0, &quick()).unwrap();
    for (a, d) in grid.iter().zip(&s.delta_plus) {
        // the eigenvector (a, 1 + lambda), lambda = -sqrt(1 - a^2), has [v,v]/|v|^2 = -lambda
        assert!((d - (1.0 - a * a).sqrt()).abs() < 1e-8, "a = {a}: {d}");
    }
    assert!(s.reason.iter().all(|r| r.is_empty()));
}

#[test]
fn sweep_failures_are_infinite_with_reason() {
    // a = 1 puts a double eigenvalue at 0
    let s = sweep(Family::Coupled2x2, &[0.5, 1.0], 0, &quick()).unwrap();
    assert!(s.reason[0].is_empty());
    assert_eq!(s.delta_plus[1], f64::INFINITY);
    assert!(s.reason[1].contains("resolvent_scan"), "{}", s.reason[1]);
    let csv = sweep_to_csv(&s).unwrap();
    assert!(!csv.contains("nan") && !csv.contains('\r'));
    assert!(csv.lines().nth(2).unwrap().contains(",inf,"));
}

#[test]
fn empty_sweep_and_csv_header() {
    let s = sweep(Family::Discretized, &[], 0, &quick()).unwrap();
    assert!(s.grid.is_empty());
    let csv = sweep_to_csv(&s).unwrap();
    assert_eq!(csv, format!("{}\n", sweep::SWEEP_COLUMNS.join(",")));
    // header names are SweepResult fields
    let v = serde_json::to_value(&s).unwrap();
    for col in sweep::SWEEP_COLUMNS {
        assert!(v.get(col).is_some(), "{col}");
    }
}

#[test]
fn sweep_is_deterministic() {
    let grid = [0.1, 0.2, 0.4];
    let a = sweep_to_csv(&sweep(Family::Uniform, &grid, 5, &quick()).unwrap()).unwrap();
    let b = sweep_to_csv(&sweep(Family::Uniform, &grid, 5, &quick()).unwrap()).unwrap();
    assert_eq!(a, b);
}
