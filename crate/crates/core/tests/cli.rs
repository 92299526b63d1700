use std::process::Command;

fn locus() -> Command {
    Command::new(env!("CARGO_BIN_EXE_locus"))
}

#[test]
fn layout_prints_csv() {
    let out = locus().args(["layout", "--n", "7"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "slot,level,x,y,parent,heir");
    assert_eq!(lines.len(), 8);
    assert!(lines[1].starts_with("1,0,"));
}

#[test]
fn bad_layout_is_a_config_error() {
    let out = locus()
        .args(["layout", "--n", "7", "--rmin", "4", "--rmax", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_experiment_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = locus()
        .args(["run", "--experiment", "9", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "trails = 3\n").unwrap();
    let out = locus().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = locus()
        .args(["run", "--config"])
        .arg(dir.path().join("absent.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "1", "trials": 1, "sizes": [2], "algorithms": ["mobs"], "tick_budget": 100}"#,
    )
    .unwrap();
    let out = locus()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&blocker)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn run_from_config_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "experiment = \"2\"\ntrials = 2\nsizes = [3]\ntick_budget = 5000\nworkers = 2\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = locus()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let exp = out_dir.join("exp2");
    for f in ["results.csv", "summary.csv", "metadata.json", "exp2_times.svg"] {
        assert!(exp.join(f).is_file(), "{f}");
    }
    let results = std::fs::read_to_string(exp.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 2 * 2);
}

#[test]
fn trial_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = locus()
        .args(["trial", "--algo", "mobs", "--n", "3", "--seed", "4", "--budget", "300", "--trace"])
        .arg(&trace)
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 4);
    assert!(v["result"]["ticks"].as_u64().unwrap() <= 300);
    let rows = std::fs::read_to_string(&trace).unwrap().lines().count();
    assert_eq!(rows, 1 + 3 * v["result"]["ticks"].as_u64().unwrap() as usize);
}

#[test]
fn plume_raster() {
    let out = locus()
        .args(["plume", "--raster", "--half-width", "2", "--step", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 25);
    assert!(text.contains("0.000,0.000,1.000000e0"));
}
