//! End-to-end checks of the CLI: determinism, validation, exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ppl-lab"))
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn simulate_is_deterministic_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sim.json");
    write(
        &config,
        r#"{"model":{"kind":"poisson","intensity":{"kind":"constant","value":250.0}},"count":3,"seed":7}"#,
    );
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    for out in [&out1, &out2] {
        let status = bin()
            .args(["simulate", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    for name in ["window.json", "pattern_0000.csv", "pattern_0001.csv", "pattern_0002.csv"] {
        let a = fs::read(out1.join(name)).unwrap();
        let b = fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} should be byte-identical across runs");
    }
}

#[test]
fn simulate_hardcore_respects_min_distance() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sim.json");
    write(
        &config,
        r#"{"model":{"kind":"hardcore","beta":100.0,"range":0.05,"burn_in":30000},"count":2,"seed":3}"#,
    );
    let out = dir.path().join("hc");
    assert!(bin()
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    for i in 0..2 {
        let window = ppl_core::io::read_window_json(&out.join("window.json")).unwrap();
        let x =
            ppl_core::io::read_pattern_csv(&out.join(format!("pattern_{i:04}.csv")), window)
                .unwrap();
        assert!(x.min_pairwise_distance().unwrap() >= 0.05);
    }
}

#[test]
fn invalid_config_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sim.json");
    write(&config, r#"{"model":{"kind":"nope"},"count":1,"seed":1}"#);
    let status = bin()
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("x"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn experiment_csv_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.json");
    write(
        &config,
        r#"{
            "name": "smoke",
            "seed": 5,
            "replicates": 3,
            "grid_resolution": 32,
            "model": {"kind":"poisson","intensity":{"kind":"constant","value":80.0}},
            "task": {"kind":"constant_intensity","gammas":[0.0],"cv":[{"kind":"mccv","p":0.5,"k":10}],"indicator":"always_one","truth":80.0}
        }"#,
    );
    let out1 = dir.path().join("r1.csv");
    let out2 = dir.path().join("r2.csv");
    for out in [&out1, &out2] {
        assert!(bin()
            .args(["experiment", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap()
            .success());
    }
    let a = fs::read_to_string(&out1).unwrap();
    assert_eq!(a, fs::read_to_string(&out2).unwrap());
    assert!(a.starts_with("# ppl-lab schema v1\n"));
}

#[test]
fn fit_constant_on_simulated_poisson() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim.json");
    write(
        &sim,
        r#"{"model":{"kind":"poisson","intensity":{"kind":"constant","value":250.0}},"count":1,"seed":42}"#,
    );
    let data = dir.path().join("data");
    assert!(bin()
        .args(["simulate", "--config"])
        .arg(&sim)
        .arg("--out")
        .arg(&data)
        .status()
        .unwrap()
        .success());

    let fit_cfg = dir.path().join("fit.json");
    write(&fit_cfg, r#"{"cv":{"kind":"mccv","p":0.5,"k":400},"gamma":0.0}"#);
    let out = dir.path().join("fit_out.json");
    let status = bin()
        .args(["fit", "--pattern"])
        .arg(data.join("pattern_0000.csv"))
        .arg("--window")
        .arg(data.join("window.json"))
        .args(["--task", "constant", "--config"])
        .arg(&fit_cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let theta = record["estimates"]["theta_mean"].as_f64().unwrap();
    let classical = record["baselines"]["theta_classical"].as_f64().unwrap();
    // Single-sample sanity: the CV estimate sits near the classical one.
    assert!((theta - classical).abs() / classical < 0.15, "theta {theta} vs {classical}");
}

#[test]
fn fit_hardcore_range_is_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim.json");
    write(
        &sim,
        r#"{"model":{"kind":"hardcore","beta":100.0,"range":0.05,"burn_in":50000},"count":1,"seed":9}"#,
    );
    let data = dir.path().join("data");
    assert!(bin()
        .args(["simulate", "--config"])
        .arg(&sim)
        .arg("--out")
        .arg(&data)
        .status()
        .unwrap()
        .success());

    let cfg = dir.path().join("fit.json");
    write(
        &cfg,
        r#"{"cv":{"kind":"mccv","p":0.1,"k":50},"f":{"kind":"inverse"},"loss":"l2","r_candidates":32}"#,
    );
    let out = dir.path().join("fit.json.out");
    assert!(bin()
        .args(["fit", "--pattern"])
        .arg(data.join("pattern_0000.csv"))
        .arg("--window")
        .arg(data.join("window.json"))
        .args(["--task", "hardcore", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--grid-resolution", "128"])
        .status()
        .unwrap()
        .success());
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let range = record["estimates"]["range"].as_f64().unwrap();

    let window = ppl_core::io::read_window_json(&data.join("window.json")).unwrap();
    let x = ppl_core::io::read_pattern_csv(&data.join("pattern_0000.csv"), window).unwrap();
    assert!(range <= x.min_pairwise_distance().unwrap());
}
