use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cyclic_emission::Config;

const BIN: &str = env!("CARGO_BIN_EXE_cyclic-emission");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, c: &Config) -> String {
    let p = dir.join(name);
    fs::write(&p, c.to_json()).unwrap();
    p.to_str().unwrap().to_string()
}

/// Γ21 = 0 with no 1–2 dephasing and the 3–1 drive off: level 1 is dark
/// and the steady state is not unique.
fn degenerate() -> Config {
    let mut c = Config::reference();
    c.atom.gamma_pop_21 = 0.0;
    c.atom.gamma_coh_12 = 0.0;
    c.drives.rabi_31 = cyclic_emission::Rabi::OFF;
    c
}

#[test]
fn steady_reference_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ref.json", &Config::reference());
    let json = dir.path().join("report.json");
    let o = run(&["steady", "--config", &cfg, "--out", json.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("|I_g| = 0.5182 nA"), "{text}");
    assert!(text.contains("J = 3.168 nA"), "{text}");

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    let ig = report["numeric"]["ig_na"].as_f64().unwrap();
    assert!((ig - 0.518190).abs() < 1e-5);
    let a = report["analytic"]["a_norm"].as_f64().unwrap();
    assert!((a - 262150.0).abs() < 1e-6);
}

#[test]
fn steady_without_drives_stays_in_ground_state() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = Config::reference();
    c.drives = cyclic_emission::DriveConfig::off();
    let cfg = write_config(dir.path(), "off.json", &c);
    let json = dir.path().join("r.json");
    let o = run(&["steady", "--config", &cfg, "--method", "numeric", "--out", json.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("rho11 = 1.000"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(report["numeric"]["populations"][0].as_f64().unwrap(), 1.0);
}

#[test]
fn strong_probe_warns() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = Config::reference();
    c.drives.rabi_21 = cyclic_emission::Rabi::real(5.0);
    let cfg = write_config(dir.path(), "p.json", &c);
    let o = run(&["validate", "--config", &cfg]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("probe not weak"));
}

#[test]
fn negative_pure_dephasing_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = Config::reference();
    c.atom.gamma_coh_12 = 4.0;
    let cfg = write_config(dir.path(), "bad.json", &c);
    for cmd in ["validate", "steady"] {
        let o = run(&[cmd, "--config", &cfg]);
        assert_eq!(code(&o), 2, "{cmd}");
        assert!(stderr(&o).contains("negative pure dephasing"), "{}", stderr(&o));
    }
}

#[test]
fn schema_errors_are_user_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("typo.json");
    let mut v: serde_json::Value = serde_json::from_str(&Config::reference().to_json()).unwrap();
    v["atom"]["gamma_pop_99"] = serde_json::json!(1.0);
    fs::write(&p, v.to_string()).unwrap();
    let o = run(&["steady", "--config", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("schema"));

    let o = run(&["steady", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["figure", "7c"])), 2);
}

#[test]
fn degenerate_steady_state_is_a_solver_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "deg.json", &degenerate());
    let o = run(&["steady", "--config", &cfg]);
    assert_eq!(code(&o), 3, "{}", stdout(&o));
    assert!(stderr(&o).contains("degenerate"), "{}", stderr(&o));
}

#[test]
fn sweep_with_every_point_failing_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let spec = serde_json::json!({
        "base": serde_json::to_value(degenerate()).unwrap(),
        "axes": [{ "path": "drives.detuning_32_mhz", "min": -1.0, "max": 1.0, "points": 3 }],
        "observables": ["ig_na"],
    });
    let sp = dir.path().join("spec.json");
    fs::write(&sp, spec.to_string()).unwrap();
    let out = dir.path().join("deg.csv");
    let o = run(&["sweep", "--config", sp.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let csv = fs::read_to_string(out).unwrap();
    assert!(csv.lines().next().unwrap().ends_with(",error"));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = run(&["figure", "3a", "--points", "5", "--out", blocker.to_str().unwrap()]);
    assert_eq!(code(&o), 4);

    let cfg = write_config(dir.path(), "ref.json", &Config::reference());
    let o = run(&["steady", "--config", &cfg, "--out", blocker.join("r.json").to_str().unwrap()]);
    assert_eq!(code(&o), 4);
}

#[test]
fn sweep_reproduces_figure_3a_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(&["figure", "3a", "--points", "201", "--out", d.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let spec = serde_json::json!({
        "base": serde_json::to_value(Config::reference()).unwrap(),
        "axes": [{ "path": "delta_mhz", "min": -100.0, "max": 100.0, "points": 201 }],
        "observables": ["ig_na"],
        "method": "both",
    });
    let sp = d.join("spec.json");
    fs::write(&sp, spec.to_string()).unwrap();
    let out = d.join("sweep").join("spectrum.csv");
    let o = run(&["--threads", "2", "sweep", "--config", sp.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let a = fs::read(d.join("3a.csv")).unwrap();
    let b = fs::read(&out).unwrap();
    assert_eq!(a, b);
    assert!(String::from_utf8(b).unwrap().starts_with("delta_mhz,ig_na_numeric,ig_na_analytic\n"));

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("sweep").join("spectrum.meta.json")).unwrap()).unwrap();
    let meta_fig: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("3a.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["metadata"]["config_hash"], meta_fig["metadata"]["config_hash"]);
    assert_eq!(meta["metadata"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn figure_headers_follow_the_column_contracts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for (id, pts, header) in [
        ("3b", "4", "omega_mhz,ig_na_numeric,ig_na_analytic,ig_na_closed_form"),
        ("4b", "3,4", "omega21_mhz,theta_rad,it_na"),
        ("5b-inset", "4", "omega32_mhz,t2"),
    ] {
        let o = run(&["figure", id, "--points", pts, "--out", d]);
        assert_eq!(code(&o), 0, "{id}: {}", stderr(&o));
        let csv = fs::read_to_string(dir.path().join(format!("{id}.csv"))).unwrap();
        assert_eq!(csv.lines().next().unwrap(), header);
    }
    let o = run(&["figure", "4b", "--points", "3", "--out", d]);
    assert_eq!(code(&o), 2);
}
