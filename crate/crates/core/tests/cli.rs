use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_triphase"))
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

#[test]
fn mms_case_succeeds_and_writes_its_table() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["--config", configs().join("mms-mechanical.toml").to_str().unwrap()])
        .args(["--output", out.path().to_str().unwrap(), "--quiet"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(status.stderr.is_empty());
    let csv = std::fs::read_to_string(out.path().join("convergence.csv")).unwrap();
    assert!(csv.starts_with("n,h_m,l2_error_p,"));
    assert!(!csv.contains('\r'));
}

#[test]
fn case_flag_overrides_the_file() {
    let out = tempfile::tempdir().unwrap();
    let result = bin()
        .args(["--config", configs().join("mms-mechanical.toml").to_str().unwrap()])
        .args(["--output", out.path().to_str().unwrap(), "--case", "mms-thermal"])
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.path().join("convergence.csv")).unwrap();
    assert!(csv.contains("l2_error_theta_s"));
    assert!(String::from_utf8_lossy(&result.stderr).contains("mms-thermal"));
}

#[test]
fn invalid_config_exits_with_one_and_lists_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("mechanical.toml"))
        .unwrap()
        .replace("phi_g = 0.8", "phi_g = 0.7")
        .replace("dt_s = 0.0025", "dt_s = -1.0");
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, text).unwrap();
    let result = bin().args(["--config", path.to_str().unwrap(), "--quiet"]).output().unwrap();
    assert_eq!(result.status.code(), Some(1));
    let err = String::from_utf8_lossy(&result.stderr);
    assert!(err.contains("sum to") && err.contains("dt_s"), "{err}");
}

#[test]
fn syntax_error_exits_with_one_and_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "case = \"thermal\"\n\n[mesh\n").unwrap();
    let result = bin().args(["--config", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(result.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&result.stderr).contains("line 3"));
}

#[test]
fn newton_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("thermal.toml"))
        .unwrap()
        .replace("newton_max_iter = 20", "newton_max_iter = 1")
        .replace("newton_abs_tol = 1e-10", "newton_abs_tol = 1e-300")
        .replace("newton_rel_tol = 1e-10", "newton_rel_tol = 1e-300");
    let path = dir.path().join("thermal.toml");
    std::fs::write(&path, text).unwrap();
    let result = bin()
        .args(["--config", path.to_str().unwrap(), "--output", dir.path().join("out").to_str().unwrap(), "--quiet"])
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2), "{}", String::from_utf8_lossy(&result.stderr));
}

#[test]
fn floating_skeleton_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("mechanical.toml"))
        .unwrap()
        .replace("top_displacement_mm = [0.0, -0.01]", "top_traction_pa = [0.0, -1000.0]")
        .replace("fix_bottom = true", "fix_bottom = false");
    let path = dir.path().join("mech.toml");
    std::fs::write(&path, text).unwrap();
    let result = bin()
        .args(["--config", path.to_str().unwrap(), "--output", dir.path().join("out").to_str().unwrap(), "--quiet"])
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2), "{}", String::from_utf8_lossy(&result.stderr));
}

#[test]
fn missing_config_file_exits_with_one() {
    let result = bin().args(["--config", "/nonexistent/run.toml"]).output().unwrap();
    assert_eq!(result.status.code(), Some(1));
}
