use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn afp(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_afp"));
    cmd.args(args).env_remove("AFP_OUT_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn list_filters() {
    let all = afp(&["list"], &[]);
    assert!(all.status.success());
    let text = stdout(&all);
    for name in ["identity", "scaling", "shift-and-clip", "polynomial", "zero", "linear", "logistic-growth", "saturating"] {
        assert!(text.contains(name), "{name} missing");
    }
    let rot = stdout(&afp(&["list", "rotation"], &[]));
    assert_eq!(rot.lines().filter(|l| !l.starts_with(' ')).count(), 2);
    let none = afp(&["list", "nonexistent"], &[]);
    assert!(none.status.success());
    assert!(stdout(&none).is_empty());
}

#[test]
fn identity_scenario_has_zero_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let out = afp(&["run", scenario("identity-square").to_str().unwrap(), "--out", dir.path().to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", stdout(&out));
    let csv = std::fs::read_to_string(dir.path().join("identity-square.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "rho_residual").unwrap();
    let rows: Vec<f64> = lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert_eq!(rows, vec![0.0, 0.0]);
}

#[test]
fn exponential_summary_and_env_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = afp(&["run", scenario("exponential").to_str().unwrap()], &[("AFP_OUT_DIR", dir.path())]);
    assert!(out.status.success());
    let text = stdout(&out);
    let line = text.lines().find(|l| l.contains("u(T) = [")).unwrap();
    let value: f64 = line.split('[').nth(1).unwrap().trim_end_matches(']').parse().unwrap();
    assert!((value - std::f64::consts::E).abs() < 1e-3);
    assert!(dir.path().join("exponential_solution.csv").exists());
    assert!(dir.path().join("exponential_residuals.csv").exists());
}

#[test]
fn audit_only_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out");
    let out = afp(
        &["run", scenario("rotation-square").to_str().unwrap(), "--audit-only", "--out", target.to_str().unwrap()],
        &[],
    );
    assert!(out.status.success());
    assert!(stdout(&out).contains("self-map"));
    assert!(!target.exists());
}

#[test]
fn invalid_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "kind = \"afp_map\"\n[body]\ncube = { dim = 2, radius = 1.0 }\n[map]\nname = \"spiral\"\n").unwrap();
    let out = afp(&["run", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 5") && err.contains("spiral"), "{err}");
}

#[test]
fn failing_audit_sets_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("leaky.toml");
    // Clipping to the bounding box does not keep a triangle invariant.
    std::fs::write(
        &path,
        "kind = \"afp_map\"\n[body]\ngenerators = { points = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] }\n[map]\nname = \"shift-and-clip\"\n",
    )
    .unwrap();
    let out = afp(&["run", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("[FAIL] self-map"));
}

#[test]
fn seed_override_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let target = dir.path().join(sub);
        let out = afp(
            &["run", scenario("orbit-rotation").to_str().unwrap(), "--seed", "11", "--out", target.to_str().unwrap()],
            &[],
        );
        assert!(out.status.success());
        std::fs::read(target.join("orbit-rotation.json")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn functional_labels_name_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = afp(&["run", scenario("harmonic").to_str().unwrap(), "--out", dir.path().to_str().unwrap()], &[]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("harmonic_residuals.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "k,uniform,weak_sum,weak_difference");

    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        "kind = \"ode\"\n[ode]\nfield = \"linear\"\nu0 = [1.0]\nfunctionals = [[1.0]]\nlabels = [\"a\", \"b\"]\n",
    )
    .unwrap();
    let out = afp(&["run", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 6"));
}
