use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wva-lab"))
        .args(args)
        .env_remove("WVA_LAB_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn schema_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schema")
        .join(format!("{name}.schema.json"))
}

fn assert_valid(name: &str, doc: &Value) {
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(schema_path(name)).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(doc)
        .map(|e| format!("{e} at {}", e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}");
}

/// Parses CSV output after checking the schema comment line.
fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    let (first, rest) = text.split_once('\n').unwrap();
    assert_eq!(first, "# wva-lab schema v1");
    csv::Reader::from_reader(rest.as_bytes())
        .records()
        .map(|r| r.unwrap())
        .collect()
}

fn csv_header(text: &str) -> Vec<String> {
    let rest = text.split_once('\n').unwrap().1;
    csv::Reader::from_reader(rest.as_bytes())
        .headers()
        .unwrap()
        .iter()
        .map(String::from)
        .collect()
}

#[test]
fn sweep_default_grid_has_forty_rows() {
    let out = lab(&["sweep"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(
        csv_header(&text),
        [
            "phi_deg",
            "n",
            "gamma_deg",
            "probability",
            "sigma_z_exact",
            "sigma_z_first_order",
            "weak_value_im"
        ]
    );
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 40);
    let row = rows
        .iter()
        .find(|r| &r[0] == "47.5" && &r[1] == "1")
        .unwrap();
    assert_eq!(&row[2], "1.0");
    let p: f64 = row[3].parse().unwrap();
    assert!((p - 0.007896).abs() < 5e-7);
}

#[test]
fn sweep_without_coupling_has_zero_readout_and_is_reproducible() {
    let a = lab(&["sweep", "--gamma-deg", "0"]);
    assert_eq!(code(&a), 0);
    for r in csv_rows(&stdout(&a)) {
        assert_eq!(r[4].parse::<f64>().unwrap(), 0.0);
    }
    let b = lab(&["sweep", "--gamma-deg", "0"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_rejects_orthogonal_grid_point() {
    let out = lab(&["sweep", "--phi-deg-range", "44:46:0.5"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("phi_deg_range"));
}

#[test]
fn negative_couplings_parse() {
    let out = lab(&[
        "sweep",
        "--gamma-deg",
        "-1",
        "--n-list",
        "1",
        "--phi-deg-range",
        "47.5:47.5:1",
    ]);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&stdout(&out));
    assert!(rows[0][4].parse::<f64>().unwrap() < 0.0);
}

#[test]
fn scaling_builtin_settings_ratio_is_nearly_quadratic() {
    let out = lab(&["scaling"]);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 4);
    let p = |i: usize| rows[i][4].parse::<f64>().unwrap();
    let ratio = p(3) / p(0);
    assert!((13.0..=16.0).contains(&ratio), "{ratio}");
}

#[test]
fn scaling_target_mode_follows_n_squared() {
    let out = lab(&["scaling", "--target-aw", "100", "--gamma-deg", "0.0573"]);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 8);
    let p1: f64 = rows[0][4].parse().unwrap();
    for r in &rows {
        let n: f64 = r[1].parse().unwrap();
        let p: f64 = r[4].parse().unwrap();
        assert!((p / p1 / (n * n) - 1.0).abs() < 0.01, "N = {n}");
        assert!((r[3].parse::<f64>().unwrap() - 100.0).abs() < 1e-9);
    }
}

#[test]
fn scaling_single_n_reference_is_the_probability() {
    let out = lab(&["scaling", "--n-list", "1"]);
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows[0][4], rows[0][6]);
}

#[test]
fn scaling_with_trials_fills_monte_carlo_columns() {
    let out = lab(&[
        "scaling",
        "--target-aw",
        "100",
        "--gamma-deg",
        "0.0573",
        "--n-list",
        "1,4",
        "--trials",
        "200",
    ]);
    assert_eq!(code(&out), 0);
    for r in csv_rows(&stdout(&out)) {
        let rmse: f64 = r[7].parse().unwrap();
        let crb: f64 = r[9].parse().unwrap();
        assert!(rmse / crb > 0.7 && rmse / crb < 1.3);
    }
}

#[test]
fn strict_weakness_reports_the_failing_ratio() {
    let out = lab(&["scaling", "--strict-weakness"]);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("|A_w|") && err.contains("N = 3"), "{err}");
    let relaxed = lab(&[
        "scaling",
        "--strict-weakness",
        "--weakness-threshold",
        "0.4",
    ]);
    assert_eq!(code(&relaxed), 0);
}

#[test]
fn estimate_single_n_is_insufficient() {
    let out = lab(&["estimate", "--trials", "100", "--n-list", "1"]);
    assert_eq!(code(&out), 4);
    let few = lab(&["estimate", "--trials", "99", "--n-list", "1,2"]);
    assert_eq!(code(&few), 4);
}

#[test]
fn estimate_is_independent_of_thread_count() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_wva-lab"))
            .args([
                "estimate", "--trials", "300", "--n-list", "1,2,4", "--seed", "5",
            ])
            .env("WVA_LAB_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, run("4").stdout);
    let bad = run("zero");
    assert_eq!(code(&bad), 2);
}

#[test]
fn verify_passes_and_fault_fails() {
    let ok = lab(&["verify", "--cases", "100"]);
    assert_eq!(code(&ok), 0);
    assert!(stdout(&ok).contains("[ok]"));
    let bad = lab(&["verify", "--cases", "20", "--fault", "1e-3"]);
    assert_eq!(code(&bad), 1);
    let err = String::from_utf8_lossy(&bad.stderr);
    let json = err.split_once("worst instance: ").unwrap().1.trim();
    let worst: Value = serde_json::from_str(json).unwrap();
    assert!(worst["equivalence"]["index"].is_u64());
}

#[test]
fn verify_single_qubit_subset_is_at_rounding_level() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.json");
    let out = lab(&[
        "verify",
        "--n-list",
        "1",
        "--cases",
        "100",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_valid("verify", &doc);
    assert!(
        doc["report"]["equivalence"]["max_infidelity"]
            .as_f64()
            .unwrap()
            < 1e-14
    );
}

#[test]
fn json_outputs_match_shipped_schemas() {
    let cases: [(&str, Vec<&str>); 3] = [
        ("sweep", vec!["sweep"]),
        (
            "scaling",
            vec![
                "scaling",
                "--target-aw",
                "50",
                "--n-list",
                "1,2",
                "--trials",
                "100",
                "--gamma-deg",
                "0.1",
            ],
        ),
        (
            "estimate",
            vec![
                "estimate",
                "--trials",
                "100",
                "--n-list",
                "1,2",
                "--mode",
                "entangled",
            ],
        ),
    ];
    for (name, mut args) in cases {
        args.extend(["--format", "json"]);
        let out = lab(&args);
        assert_eq!(code(&out), 0, "{name}");
        let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_valid(name, &doc);
    }
    let builtin = lab(&["scaling", "--format", "json"]);
    assert_valid("scaling", &serde_json::from_str(&stdout(&builtin)).unwrap());
}

#[test]
fn schema_rejects_malformed_document() {
    let out = lab(&["sweep", "--format", "json", "--n-list", "1"]);
    let mut doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    doc["rows"][0]["probability"] = Value::from(1.5);
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(schema_path("sweep")).unwrap()).unwrap();
    assert!(!jsonschema::validator_for(&schema).unwrap().is_valid(&doc));
}

#[test]
fn config_file_precedence_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "n_list = [2]\nphi_deg_range = \"50:51:1\"\ngamma_deg = 0.5\n",
    )
    .unwrap();
    let out = lab(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--gamma-deg",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| &r[1] == "2" && &r[2] == "2.0"));

    std::fs::write(&cfg, "seed = 1\nphotonz = 5\n").unwrap();
    let bad = lab(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&bad), 2);
    let err = String::from_utf8_lossy(&bad.stderr);
    assert!(err.contains("photonz") && err.contains("line 2"), "{err}");

    std::fs::write(&cfg, "n_list = [25]\n").unwrap();
    let range = lab(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&range), 2);
    assert!(String::from_utf8_lossy(&range.stderr).contains("n_list (config file)"));
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let to_file = lab(&["sweep", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&to_file), 0);
    assert_eq!(std::fs::read(&path).unwrap(), lab(&["sweep"]).stdout);
}

#[test]
fn help_documents_precedence_and_exit_codes() {
    let text = stdout(&lab(&["--help"]));
    assert!(
        text.contains("precedence")
            && text.contains("Exit codes")
            && text.contains("WVA_LAB_THREADS")
    );
}
