use gapforge::driver::LatticeSpec;
use gapforge::hill1d::kp_gap_edges;
use gapforge::lattice::LatticeKind;
use gapforge_cli::commands::fixture_gap;
use gapforge_cli::format::{parse_dispersion_csv, read_potential};
use gapforge_cli::manifest::check_manifest;
use serde_json::Value;
use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

fn gapforge(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gapforge"))
        .current_dir(dir)
        .args(args)
        .env_remove("GAPFORGE_THREADS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {text}"))
}

/// Eigenvalues of `|k|^2 - Delta_h - 2i k . D_h` on an `n x n` periodic
/// unit square: second differences plus central first differences.
fn discrete_free_square(k: [f64; 2], n: usize, count: usize) -> Vec<f64> {
    let h = 1.0 / n as f64;
    let mut e = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let t = [
                2.0 * PI * i as f64 / n as f64,
                2.0 * PI * j as f64 / n as f64,
            ];
            let mut x = k[0] * k[0] + k[1] * k[1];
            for (ti, ki) in t.iter().zip(k) {
                x += 4.0 / (h * h) * (ti / 2.0).sin().powi(2) + 2.0 * ki * ti.sin() / h;
            }
            e.push(x);
        }
    }
    e.sort_by(f64::total_cmp);
    e.truncate(count);
    e
}

#[test]
fn free_square_bands_match_the_discrete_symbol() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "bands.json",
        r#"{"command": "bands", "m": 1, "lattice": "square", "n": 8, "v_plus": 100,
            "potential": {"kind": "constant", "value": 0},
            "k_sampling": {"kind": "points", "points": [[0.5, 0.25], [1.0, -2.0], [3.0, 3.1]]},
            "bands": 5}"#,
    );
    let o = gapforge(
        dir.path(),
        &["bands", "--config", "bands.json", "--out", "o"],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = parse_dispersion_csv(
        &std::fs::read_to_string(dir.path().join("o/dispersion.csv")).unwrap(),
    )
    .unwrap();
    assert_eq!(rows.len(), 3);
    for (_, kx, ky, e) in rows {
        let want = discrete_free_square([kx, ky], 8, 5);
        for (a, b) in e.iter().zip(&want) {
            assert!(
                (a - b).abs() <= 1e-9 * b.max(1.0),
                "k = ({kx}, {ky}): {a} vs {b}"
            );
        }
    }
    assert!(check_manifest(&dir.path().join("o")).unwrap().is_empty());
}

#[test]
fn one_dimensional_step_bands_use_exact_edges() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "kp.toml",
        "command = \"bands\"\nm = 2\ndim = 1\nv_plus = 100.0\nperiod = 1.0\n\
         [potential]\nkind = \"step\"\nbreakpoints = [0.0, 0.4]\nvalues = [100.0, 0.0]\n",
    );
    let o = gapforge(dir.path(), &["--config", "kp.toml", "--out", "o"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let gap = read_json(&dir.path().join("o/gap.json"));
    let (alpha, beta) = kp_gap_edges(0.4, 1.0, 100.0, 2).unwrap();
    assert!((gap["alpha"].as_f64().unwrap() - alpha).abs() < 1e-8);
    assert!((gap["beta"].as_f64().unwrap() - beta).abs() < 1e-8);
}

#[test]
fn missing_field_is_a_config_error_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "c.json",
        r#"{"command": "optimize1d", "v_plus": 100}"#,
    );
    let o = gapforge(dir.path(), &["--config", "c.json", "--out", "o"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["exit_code"], 2);
    assert_eq!(e["field"], "m");
}

#[test]
fn syntax_errors_report_a_position() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "c.json",
        "{\"command\": \"bands\",\n  \"m\": 1,,\n}",
    );
    let o = gapforge(dir.path(), &["--config", "c.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["line"], 2);
}

#[test]
fn empty_contrast_list_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "s.json",
        r#"{"command": "sweep", "kind": "contrast", "lattices": ["square"], "v_plus_list": [], "m": 1, "n": 12}"#,
    );
    let o = gapforge(dir.path(), &["--config", "s.json", "--out", "o"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        !dir.path().join("o").exists(),
        "nothing is written for a bad config"
    );
}

#[test]
fn conflicting_commands_and_bad_threads_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{"command": "bands", "m": 1}"#);
    assert_eq!(
        gapforge(dir.path(), &["sweep", "--config", "c.json"])
            .status
            .code(),
        Some(2)
    );
    let o = Command::new(env!("CARGO_BIN_EXE_gapforge"))
        .current_dir(dir.path())
        .args(["--config", "c.json"])
        .env("GAPFORGE_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["field"], "threads");
}

const OPT1D: &str = r#"{"command": "optimize1d", "m": 1, "v_plus": 100, "n": 200}"#;

#[test]
fn optimize1d_reaches_the_known_optimum_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", OPT1D);
    write(
        dir.path(),
        "c.toml",
        "command = \"optimize1d\"\nm = 1\nv_plus = 100.0\nn = 200\n",
    );
    for (cfg, out) in [("c.json", "a"), ("c.json", "b"), ("c.toml", "c")] {
        let o = gapforge(
            dir.path(),
            &["--config", cfg, "--out", out, "--threads", "1"],
        );
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(check_manifest(&dir.path().join(out)).unwrap().is_empty());
    }
    let gap = read_json(&dir.path().join("a/gap.json"));
    assert!((gap["G"].as_f64().unwrap() - 1.12370).abs() < 1e-3);
    for name in [
        "potential_grid.csv",
        "trace.jsonl",
        "potential.json",
        "gap.json",
    ] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        assert_eq!(
            a,
            std::fs::read(dir.path().join("b").join(name)).unwrap(),
            "{name} differs on rerun"
        );
        assert_eq!(
            a,
            std::fs::read(dir.path().join("c").join(name)).unwrap(),
            "{name} differs for TOML"
        );
    }
    let grid = read_potential(&dir.path().join("a/potential_grid.csv")).unwrap();
    assert_eq!((grid.dim, grid.n), (1, 200));
    let manifest = read_json(&dir.path().join("a/manifest.json"));
    assert_eq!(manifest["threads"], 1);
    assert_eq!(manifest["command"], "optimize1d");
}

#[test]
fn tampered_outputs_fail_the_manifest_check() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", OPT1D);
    assert_eq!(
        gapforge(dir.path(), &["--config", "c.json", "--out", "o"])
            .status
            .code(),
        Some(0)
    );
    let gap = dir.path().join("o/gap.json");
    let mut text = std::fs::read_to_string(&gap).unwrap();
    text.push(' ');
    std::fs::write(&gap, text).unwrap();
    assert_eq!(
        check_manifest(&dir.path().join("o")).unwrap(),
        vec!["gap.json".to_string()]
    );
}

#[test]
fn optimize2d_budget_exit_and_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "o.toml",
        "command = \"optimize2d\"\nm = 1\nv_plus = 100.0\nlattice = \"square\"\nn = 12\nmax_outer = 3\n\
         restarts = 1\nk_sampling = { kind = \"ibz-boundary\", points_per_side = 2 }\n",
    );
    let o = gapforge(dir.path(), &["--config", "o.toml", "--out", "o"]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let out = dir.path().join("o");
    let trace = std::fs::read_to_string(out.join("trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 4);
    let v = read_potential(&out.join("potential.csv")).unwrap();
    assert_eq!((v.dim, v.n, v.v_plus), (2, 12, 100.0));
    // The 12-digit grid reproduces the reported gap.
    let reread = fixture_gap(
        &out.join("potential.csv"),
        LatticeSpec::Named(LatticeKind::Square),
        1,
        2,
    )
    .unwrap();
    let reported = read_json(&out.join("gap.json"))["G"].as_f64().unwrap();
    assert!(
        (reread.g - reported).abs() < 1e-9,
        "{} vs {reported}",
        reread.g
    );
    assert!(check_manifest(&out).unwrap().is_empty());
}

#[test]
fn verify_only_runs_the_selected_group() {
    let dir = tempfile::tempdir().unwrap();
    let o = gapforge(dir.path(), &["verify", "--only", "1d", "--out", "v"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let report = read_json(&dir.path().join("v/verify.json"));
    let ids: Vec<&str> = report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["1", "2", "3", "4"]);
}

#[test]
fn tampered_bessel_zero_fails_the_constant_row() {
    let dir = tempfile::tempdir().unwrap();
    let clean = gapforge(dir.path(), &["verify", "--row", "7g", "--out", "a"]);
    assert_eq!(clean.status.code(), Some(0));
    let o = gapforge(
        dir.path(),
        &["verify", "--row", "7g", "--tamper-bessel", "--out", "b"],
    );
    assert_eq!(o.status.code(), Some(4));
    let report = read_json(&dir.path().join("b/verify.json"));
    let row = &report["rows"][0];
    assert_eq!(row["id"], "7g");
    assert_eq!(row["passed"], false);
}
