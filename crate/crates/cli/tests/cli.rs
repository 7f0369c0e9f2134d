use std::fs;

use zzbound_cli::run_with;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("zzbound").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn field(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {line}"))
        .parse()
        .unwrap()
}

#[test]
fn constants_line() {
    let (code, out, _) = run(&["constants"]);
    assert_eq!(code, 0);
    assert!(out.contains("A_computed=0.03936"), "{out}");
    assert!(out.contains("A_paper=0.042"));
    assert!((field(&out, "max_gain") - 1.742).abs() < 1e-9);
    assert!((field(&out, "A_prime") - 0.0947153).abs() < 1e-7);

    let (code, out, _) = run(&["constants", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["sqrt_A_over_2"].as_f64().unwrap() - 0.140286).abs() < 1e-6);
}

#[test]
fn bound_uniform_matches_closed_form() {
    let (code, out, _) = run(&[
        "bound",
        "--prior",
        "uniform",
        "--prior-params",
        "W=0.5",
        "--kind",
        "main",
        "--scale",
        "H=1.5707963",
    ]);
    assert_eq!(code, 0);
    // x0 = 1 and t0 = 0.5: sqrt((A(t0) - B(t0) / t0) / 2) with the A, B coefficients
    assert!((field(&out, "value") - 0.0819069).abs() < 1e-6, "{out}");

    let (code, out, _) = run(&[
        "bound",
        "--prior",
        "uniform",
        "--prior-params",
        "W=0.5",
        "--kind",
        "closed-form",
        "--scale",
        "x0=1",
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.0819069).abs() < 1e-6);
}

#[test]
fn bound_direct_with_unit_fidelity_is_prior_stddev() {
    let (code, out, _) = run(&[
        "bound",
        "--prior",
        "uniform",
        "--prior-params",
        "W=2",
        "--kind",
        "direct",
        "--fidelity",
        "one",
    ]);
    assert_eq!(code, 0);
    assert!((field(&out, "value") - 2.0 / 12f64.sqrt()).abs() < 1e-8);
}

#[test]
fn exit_codes() {
    // malformed flags
    assert_eq!(run(&["bound", "--bogus"]).0, 2);
    assert_eq!(run(&["nonsense"]).0, 2);
    assert_eq!(run(&[]).0, 2);
    let (code, _, err) = run(&["scan", "--prior", "uniform"]);
    assert_eq!(code, 2);
    assert!(err.contains("Usage"), "{err}");
    // impossible parameters
    let w0 = [
        "bound",
        "--prior",
        "uniform",
        "--prior-params",
        "W=0",
        "--kind",
        "main",
        "--scale",
        "H=1",
    ];
    assert_eq!(run(&w0).0, 2);
    let h0 = [
        "bound",
        "--prior",
        "uniform",
        "--prior-params",
        "W=1",
        "--kind",
        "main",
        "--scale",
        "H=0",
    ];
    assert_eq!(run(&h0).0, 2);
    let bimodal_hpi = ["bound", "--prior", "bimodal", "--kind", "hpi"];
    assert_eq!(run(&bimodal_hpi).0, 2);
    // help is not an error
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn quadrature_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"quadrature": {"abs_tol": 1e-300, "rel_tol": 1e-300, "max_subdivisions": 1}}"#,
    )
    .unwrap();
    let (code, _, err) = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "bound",
        "--prior",
        "gaussian",
        "--kind",
        "main",
        "--scale",
        "H=1",
    ]);
    assert_eq!(code, 1, "{err}");
    assert!(err.contains("achieved error"), "{err}");
}

#[test]
fn config_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"quadrature": {"abs_tol": 1e-9, "tolerance": 1}}"#).unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "constants"]).0, 2);
    fs::write(&cfg, r#"{"threads": 2, "extra": true}"#).unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "constants"]).0, 2);
    fs::write(&cfg, r#"{"threads": 2, "quadrature": {"rel_tol": 1e-9}}"#).unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "constants"]).0, 0);
}

fn read_scan(path: &std::path::Path) -> Vec<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["t0", "value", "err", "dx", "gain"]
    );
    r.records()
        .map(|rec| rec.unwrap().iter().map(|s| s.parse().unwrap()).collect())
        .collect()
}

#[test]
fn scan_round_trip_is_monotone_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &str| {
        vec![
            "scan".to_string(),
            "--prior".into(),
            "gaussian".into(),
            "--kind".into(),
            "main".into(),
            "--t0-min".into(),
            "0.01".into(),
            "--t0-max".into(),
            "100".into(),
            "--points".into(),
            "25".into(),
            "--log".into(),
            "--fix".into(),
            "x0=1".into(),
            "--out".into(),
            out.into(),
        ]
    };
    let argv_a = args(a.to_str().unwrap());
    let argv_b = args(b.to_str().unwrap());
    assert_eq!(
        run(&argv_a.iter().map(String::as_str).collect::<Vec<_>>()).0,
        0
    );
    assert_eq!(
        run(&argv_b.iter().map(String::as_str).collect::<Vec<_>>()).0,
        0
    );
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let rows = read_scan(&a);
    assert_eq!(rows.len(), 25);
    for w in rows.windows(2) {
        // t0, bound and DeltaX all grow along the grid at fixed x0
        for col in [0, 1, 3] {
            assert!(w[1][col] > w[0][col]);
        }
    }
    assert!(rows.iter().flatten().all(|v| v.is_finite()));
}

#[test]
fn scan_json_and_fixed_width() {
    let (code, out, _) = run(&[
        "scan", "--prior", "bimodal", "--kind", "variance", "--t0-min", "0.5", "--t0-max", "2",
        "--points", "4", "--fix", "W=1", "--format", "json",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert_eq!(v["metadata"]["prior"], "bimodal");
    assert_eq!(v["metadata"]["kind"], "variance-bhatta");
    assert!((v["asymptotes"]["lpi_per_length"].as_f64().unwrap() - 0.2176181).abs() < 1e-6);
}

#[test]
fn figure_fig1_columns_and_marker() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig1.csv");
    let (code, out, _) = run(&["figure", "fig1", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("series,t0,bound,prior_stddev,lpi_benchmark")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 201);
    let marker: Vec<&str> = rows[200].split(',').collect();
    assert_eq!(marker[0], "max_gain");
    let t0: f64 = marker[1].parse().unwrap();
    assert!((t0 - 0.5).abs() < 0.1);
}

#[test]
fn rmse_baselines() {
    let (code, out, _) = run(&[
        "rmse",
        "--prior",
        "uniform",
        "--prior-params",
        "W=1",
        "--estimator",
        "mean",
        "--samples",
        "200000",
        "--seed",
        "7",
    ]);
    assert_eq!(code, 0);
    let (rmse, se, dx) = (
        field(&out, "rmse"),
        field(&out, "stderr"),
        field(&out, "prior_stddev"),
    );
    assert!((rmse - dx).abs() < 3.0 * se, "{out}");
    let (_, again, _) = run(&[
        "rmse",
        "--prior",
        "uniform",
        "--prior-params",
        "W=1",
        "--estimator",
        "mean",
        "--samples",
        "200000",
        "--seed",
        "7",
    ]);
    assert_eq!(out, again);
    let (code, out, _) = run(&[
        "rmse",
        "--prior",
        "gaussian",
        "--estimator",
        "randomguess",
        "--samples",
        "200000",
    ]);
    assert_eq!(code, 0);
    assert!((field(&out, "rmse") - 2f64.sqrt()).abs() < 4.0 * field(&out, "stderr"));
    assert_eq!(
        run(&[
            "rmse",
            "--prior",
            "gaussian",
            "--estimator",
            "mean",
            "--samples",
            "10"
        ])
        .0,
        2
    );
}

#[test]
fn tabulated_prior_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("prior.csv");
    fs::write(&path, "x,p\n0,0\n0.5,2\n1,0\n").unwrap();
    let params = format!("path={}", path.display());
    let (code, out, err) = run(&[
        "bound",
        "--prior",
        "tabulated",
        "--prior-params",
        &params,
        "--kind",
        "hpi",
    ]);
    assert_eq!(code, 0, "{err}");
    // symmetric triangle on [0, 1]
    assert!(
        (field(&out, "value") - 1.0 / 24f64.sqrt()).abs() < 1e-6,
        "{out}"
    );
    assert_eq!(
        run(&[
            "bound",
            "--prior",
            "tabulated",
            "--prior-params",
            "path=/nonexistent.csv",
            "--kind",
            "hpi"
        ])
        .0,
        1
    );
}
