use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const REFERENCE: &str = r#"
[graph]
rows = 1
cols = 3

[target]
j0 = 3.4e-3
j = 0.6e-3

[physics]
kappa0 = 0.01
delta = 30.0
gamma = 1e-8
temperature = 0.01
r = 1.0
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omcluster"))
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .unwrap()
}

fn value<'a>(stdout: &'a str, key: &str) -> &'a str {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|rest| rest.strip_prefix(" = ")))
        .unwrap_or_else(|| panic!("missing `{key}` in\n{stdout}"))
}

#[test]
fn synthesize_reports_plan() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "reference.toml", REFERENCE);
    let json = dir.path().join("plan.json");
    let out = run(&["synthesize", "--output", json.to_str().unwrap()], &cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(value(&stdout, "m"), "2");
    assert_eq!(value(&stdout, "n"), "3");
    assert!(value(&stdout, "round_trip_residual").parse::<f64>().unwrap() <= 1e-9);
    let plan: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert!(plan.is_object());
}

#[test]
fn uncoupled_vacuum_is_its_own_target() {
    let dir = tempfile::tempdir().unwrap();
    let text = REFERENCE
        .replace("j0 = 3.4e-3", "j0 = 0.0")
        .replace("j = 0.6e-3", "j = 0.0")
        .replace("gamma = 1e-8", "gamma = 1e-3")
        .replace("temperature = 0.01", "temperature = 0.0")
        .replace("r = 1.0", "r = 0.0");
    let cfg = write_config(dir.path(), "vac.toml", &text);
    let out = run(&["steady"], &cfg);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    let f: f64 = value(&stdout, "fidelity").parse().unwrap();
    assert!((f - 1.0).abs() < 1e-9, "{f}");
    assert_eq!(value(&stdout, "m"), "0");
}

#[test]
fn steady_and_validate_at_the_reference_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "reference.toml", REFERENCE);
    let out = run(&["steady"], &cfg);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let f: f64 = value(&stdout, "fidelity").parse().unwrap();
    assert!((f - 0.990086).abs() < 1e-5, "{f}");
    assert_eq!(value(&stdout, "physical"), "true");

    let out = run(&["validate"], &cfg);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(value(&stdout, "ideal_fidelity").parse::<f64>().unwrap() >= 1.0 - 1e-6);
    assert_eq!(value(&stdout, "ideal_oracle_pass"), "true");
    assert_eq!(value(&stdout, "adiabatic_agreement_pass"), "true");
}

#[test]
fn dump_target_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "reference.toml", REFERENCE);
    let json = dir.path().join("target.json");
    let out = run(&["dump-target", "-o", json.to_str().unwrap()], &cfg);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v["edges"], serde_json::json!([[1, 2], [2, 3]]));
    assert_eq!(v["covariance"]["rows"], 6);
}

#[test]
fn unknown_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        &REFERENCE.replace("r = 1.0", "r = 1.0\nsqueezing = 2.0"),
    );
    let out = run(&["steady"], &cfg);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("error code=2 kind=config"), "{stderr}");
}

#[test]
fn unstable_point_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = REFERENCE
        .replace("rows = 1", "rows = 2")
        .replace("j0 = 3.4e-3", "j0 = 8.5e-4")
        .replace("j = 0.6e-3", "j = 4.4e-4")
        .replace("kappa0 = 0.01", "kappa0 = 0.05")
        .replace("delta = 30.0", "delta = 10.0");
    let cfg = write_config(dir.path(), "unstable.toml", &text);
    let out = run(&["steady"], &cfg);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8(out.stderr).unwrap().contains("kind=unstable"));
}

#[test]
fn even_grid_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "even.toml",
        &REFERENCE
            .replace("rows = 1", "rows = 2")
            .replace("cols = 3", "cols = 2"),
    );
    for cmd in ["synthesize", "steady"] {
        let out = run(&[cmd], &cfg);
        assert_eq!(out.status.code(), Some(4), "{cmd}");
        assert!(String::from_utf8(out.stderr).unwrap().contains("kind=constraint"));
    }
}

#[test]
fn sweep_csv_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{REFERENCE}\n[sweep]\naxes = \"kappa-delta\"\na = {{ min = 1e-3, max = 0.1, points = 5 }}\nb = {{ min = 1.2, max = 100.0, points = 5 }}\n"
    );
    let cfg = write_config(dir.path(), "sweep.toml", &text);
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    for path in [&first, &second] {
        let out = run(&["sweep", "--output", path.to_str().unwrap()], &cfg);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(value(&String::from_utf8(out.stdout).unwrap(), "points"), "25");
    }
    let a = std::fs::read(&first).unwrap();
    assert_eq!(a, std::fs::read(&second).unwrap());
    let out = run(&["sweep"], &cfg);
    assert_eq!(out.stdout, a);
}

#[test]
fn optimize_beats_reference_point() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{REFERENCE}\n[optimize]\nj0 = [1e-4, 1e-2]\nj = [1e-4, 1e-2]\ngrid = 6\nmax_evals = 60\n");
    let cfg = write_config(dir.path(), "opt.toml", &text);
    let out = run(&["optimize"], &cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let f: f64 = value(&stdout, "fidelity").parse().unwrap();
    assert!(f >= value(&stdout, "grid_fidelity").parse::<f64>().unwrap());
    assert!(f > 0.98, "{f}");
}
