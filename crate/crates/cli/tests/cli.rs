use std::path::Path;
use std::process::{Command, Output};

fn csi_foc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csi-foc"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn write_scenario(dir: &Path, json: &str) -> String {
    let p = dir.join("scenario.json");
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_owned()
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn run_writes_every_artifact_and_prints_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), r#"{"sim": {"t_end": 0.5}}"#);
    let out = dir.path().join("out");
    let res = csi_foc(&["run", &sc, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for f in [
        "trace.csv",
        "metrics.json",
        "scenario.resolved.json",
        "speed.svg",
        "theta_hat_vs_star.svg",
        "theta_true_vs_hat.svg",
        "currents_true.svg",
        "currents_estimated.svg",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    assert_eq!(String::from_utf8(res.stdout).unwrap(), read(out.join("metrics.json")));
    assert_eq!(read(out.join("trace.csv")).lines().count(), 1 + 2501);
}

#[test]
fn metrics_subcommand_reproduces_metrics_json() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), "{}");
    let out = dir.path().join("out");
    assert!(csi_foc(&["run", &sc, "--out", out.to_str().unwrap(), "--no-plots"]).status.success());
    let res = csi_foc(&["metrics", out.join("trace.csv").to_str().unwrap()]);
    assert!(res.status.success());
    assert_eq!(String::from_utf8(res.stdout).unwrap(), read(out.join("metrics.json")));
}

#[test]
fn same_seed_gives_identical_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), r#"{"sim": {"t_end": 0.3, "noise": {"enabled": true}}}"#);
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        assert!(csi_foc(&["run", &sc, "--out", out.to_str().unwrap(), "--seed", seed, "--no-plots"]).status.success());
        read(out.join("trace.csv"))
    };
    let a = run("a", "11");
    assert_eq!(a, run("b", "11"));
    assert_ne!(a, run("c", "12"));
    let resolved = read(dir.path().join("c").join("scenario.resolved.json"));
    assert!(resolved.contains("\"rng_seed\": 12"));
}

#[test]
fn invalid_scenario_names_key_and_unit() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), r#"{"cable": {"l_c": -1e-3}}"#);
    let res = csi_foc(&["run", &sc, "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!res.status.success());
    let err = String::from_utf8(res.stderr).unwrap();
    assert!(err.contains("cable.l_c") && err.contains("(H)"), "{err}");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn missing_scenario_file_is_reported() {
    let res = csi_foc(&["run", "/nonexistent/scenario.json"]);
    assert!(!res.status.success());
    assert!(String::from_utf8(res.stderr).unwrap().contains("/nonexistent/scenario.json"));
}

#[test]
fn sweep_tabulates_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), r#"{"sim": {"t_end": 0.2}}"#);
    let res = csi_foc(&["sweep", &sc, "--param", "sim.delay_cycles", "--values", "0,1,2"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = String::from_utf8(res.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert!(lines[0].starts_with("sim.delay_cycles,t_t2,"));
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("2,"));
}

#[test]
fn sweep_with_unknown_parameter_fails() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), "{}");
    let res = csi_foc(&["sweep", &sc, "--param", "motor.nope", "--values", "1"]);
    assert!(!res.status.success());
    assert!(String::from_utf8(res.stderr).unwrap().contains("motor.nope"));
}

#[test]
fn plot_rebuilds_figures_from_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_scenario(dir.path(), r#"{"sim": {"t_end": 0.2}}"#);
    let out = dir.path().join("out");
    assert!(csi_foc(&["run", &sc, "--out", out.to_str().unwrap(), "--no-plots"]).status.success());
    let figs = dir.path().join("figs");
    let res = csi_foc(&["plot", out.join("trace.csv").to_str().unwrap(), "--out", figs.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(String::from_utf8(res.stdout).unwrap().lines().count(), 5);
    assert!(read(figs.join("speed.svg")).starts_with("<svg"));
}

#[test]
fn fault_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    // an unfiltered, stiff speed loop loses lock shortly after T3
    let sc = write_scenario(dir.path(), r#"{"pi": {"speed_filter_cutoff": 0.0}}"#);
    let res = csi_foc(&["run", &sc, "--out", dir.path().join("o").to_str().unwrap(), "--no-plots"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8(res.stderr).unwrap().contains("fault"));
}
