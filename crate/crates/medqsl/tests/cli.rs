use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use medqsl_core::hamiltonian::builtin;

fn medqsl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_medqsl"))
        .args(args)
        .env_remove("MEDQSL_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn evolve_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let run = medqsl(&[
        "evolve",
        "--ham",
        "direct-optimal:2",
        "--state",
        "ket:00",
        "--tmax",
        "0.8",
        "--target",
        "max-entangled",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let csv = fs::read_to_string(&out).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(
        header.starts_with("T,negativity,fidelity_to_target"),
        "{header}"
    );
    let peak = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!((peak - 0.5).abs() < 1e-5, "{peak}");
    let manifest = json(&dir.path().join("traj.csv.manifest.json"));
    assert_eq!(manifest["subcommand"], "evolve");
    assert_eq!(manifest["outputs"][0], out.display().to_string());
}

#[test]
fn bound_reports_unified_bound() {
    let run = medqsl(&[
        "bound",
        "--ham",
        "direct-optimal:2",
        "--state",
        "ket:00",
        "--target",
        "max-entangled",
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let report: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    let bound = report["bound"].as_f64().unwrap();
    assert!(
        (bound - std::f64::consts::FRAC_PI_4).abs() < 1e-12,
        "{report}"
    );
}

#[test]
fn malformed_hspec_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.hspec", "system A:2;\nH = 0.5 * X(A) +;\n");
    for args in [
        vec!["parse", "--check", path.as_str()],
        vec![
            "evolve",
            "--ham",
            path.as_str(),
            "--state",
            "ket:0",
            "--tmax",
            "1",
        ],
    ] {
        let run = medqsl(&args);
        assert_eq!(code(&run), 2);
        let err = stderr(&run);
        assert!(err.contains("bad.hspec:2:17"), "{err}");
        assert!(err.contains('^'), "{err}");
    }
}

#[test]
fn bad_input_exits_2() {
    for args in [
        vec!["evolve", "--ham", "no-such-builtin", "--tmax", "1"],
        vec![
            "evolve",
            "--ham",
            "cmi-product",
            "--state",
            "ket:0",
            "--tmax",
            "1",
        ],
        vec!["evolve", "--ham", "cmi-product", "--tmax", "-1"],
        vec!["reproduce", "fig2", "--d", "9"],
        vec!["frobnicate"],
    ] {
        assert_eq!(code(&medqsl(&args)), 2, "{args:?}");
    }
}

#[test]
fn positivity_loss_exits_3() {
    let run = medqsl(&[
        "evolve",
        "--ham",
        "cmi-product",
        "--tmax",
        "0.01",
        "--lindblad",
        "damping:1e5",
    ]);
    assert_eq!(code(&run), 3, "{}", stderr(&run));
}

#[test]
fn stationary_state_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let ham = write(dir.path(), "z.hspec", "system A:2;\nH = Z(A);\n");
    let run = medqsl(&[
        "bound", "--ham", &ham, "--state", "ket:1", "--target", "ket:0",
    ]);
    assert_eq!(code(&run), 4, "{}", stderr(&run));
}

#[test]
fn emitted_matrix_matches_builtin() {
    let golden =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/cmi-entangled.hspec");
    let run = medqsl(&[
        "parse",
        "--check",
        golden.to_str().unwrap(),
        "--emit",
        "matrix",
    ]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let value: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    let (h, _) = builtin("cmi-entangled").unwrap();
    let m = h.matrix();
    for (i, row) in value["matrix"].as_array().unwrap().iter().enumerate() {
        for (j, z) in row.as_array().unwrap().iter().enumerate() {
            let expected = m.row(i)[j];
            assert!((z[0].as_f64().unwrap() - expected.re).abs() < 1e-12);
            assert!((z[1].as_f64().unwrap() - expected.im).abs() < 1e-12);
        }
    }
}

#[test]
fn reproduce_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("w{workers}"));
        let run = medqsl(&[
            "reproduce",
            "conjecture-d2",
            "--n",
            "300",
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&run), 0, "{}", stderr(&run));
        let manifest = json(&out.join("manifest.json"));
        assert_eq!(manifest["workers"], workers.parse::<u64>().unwrap());
        assert_eq!(manifest["seed"], 42);
        runs.push(
            ["report.json", "envelope.csv", "summary.json"].map(|f| fs::read(out.join(f)).unwrap()),
        );
    }
    assert!(runs[0] == runs[1]);
}
