use std::path::Path;
use std::process::{Command, Output};

fn dtopsc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dtopsc")).args(args).env_remove("RUST_BACKTRACE").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = dtopsc(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const DTOP: &str = r#"{
  "depot": {"x": 0.0, "y": 0.0},
  "window": [0.0, 40.0],
  "vehicles": 2,
  "customers": [
    {"id": 1, "location": {"x": 3.0, "y": 4.0}, "profit": 2.0, "duration": 1.0, "open": 0.0, "close": 30.0, "dynamic": false},
    {"id": 2, "location": {"x": 6.0, "y": 8.0}, "profit": 1.5, "duration": 1.0, "open": 5.0, "close": 25.0, "dynamic": true},
    {"id": 3, "location": {"x": 30.0, "y": 0.0}, "profit": 9.0, "duration": 1.0, "open": 0.0, "close": 35.0, "dynamic": false}
  ]
}"#;

#[test]
fn generate_simulate_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["generate", "--family", "base", "--count", "2", "--seed", "3", "--out", path(d)]);
    let inst = d.join("base_3.json");
    assert!(inst.exists() && d.join("base_4.json").exists());

    let solved = ok(&["solve-static", "--instance", path(&inst), "--iters", "200", "--seed", "1"]);
    assert!(solved.starts_with("profit "));
    assert_eq!(solved, ok(&["solve-static", "--instance", path(&inst), "--iters", "200", "--seed", "1"]));

    let runs = d.join("runs");
    std::fs::create_dir(&runs).unwrap();
    let sim = |policy: &str, file: &str| {
        let out = ok(&[
            "simulate",
            "--instance",
            path(&inst),
            "--policy",
            policy,
            "--scenarios",
            "3",
            "--iters",
            "80",
            "--seed",
            "5",
            "--parallel",
            "2",
            "--out",
            path(&runs.join(file)),
        ]);
        out.lines().next().unwrap().split(" mean_epoch_ms").next().unwrap().to_string()
    };
    let first = sim("scenario", "a.json");
    assert_eq!(first, sim("scenario", "b.json"));
    sim("myopic", "c.json");

    let refs = d.join("refs.csv");
    std::fs::write(&refs, "instance,z_mip,z_cp\nbase_3,40.0,\n").unwrap();
    let table = d.join("table.csv");
    ok(&["report", "--runs", path(&runs), "--refs", path(&refs), "--out", path(&table)]);
    let text = std::fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("instance,policy,seed,profit,z_mip,z_cp,gap_mip,gap_cp,mean_epoch_ms"));
    assert_eq!(lines.len(), 1 + 3 + 2);
    assert!(lines[1..4].iter().all(|l| l.starts_with("base_3,") && l.contains(",40.00,")));
    assert_eq!(lines.iter().filter(|l| l.starts_with("summary,")).count(), 2);
}

#[test]
fn benchmark_instance_through_oracle_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let src = d.join("dtop.json");
    std::fs::write(&src, DTOP).unwrap();
    let inst = d.join("inst.json");
    ok(&["convert-dtop", "--input", path(&src), "--out", path(&inst)]);

    // The far customer needs 30 out and 30 back, beyond the 40 window.
    let oracle = ok(&["oracle", "--instance", path(&inst)]);
    assert!(oracle.starts_with("profit 3.5"), "{oracle}");

    let lp = d.join("model.lp");
    ok(&["export-mip", "--instance", path(&inst), "--out", path(&lp)]);
    let text = std::fs::read_to_string(&lp).unwrap();
    assert!(text.contains("Maximize") && text.contains("Subject To") && text.trim_end().ends_with("End"));
    assert!(text.contains(" release_0_2: a_0_2 - "));

    let limited = dtopsc(&["oracle", "--instance", path(&inst), "--max-tasks", "2"]);
    assert!(!limited.status.success());
}

#[test]
fn rejects_bad_input() {
    let out = dtopsc(&["simulate", "--instance", "/nonexistent/instance.json"]);
    assert!(!out.status.success());
    let out = dtopsc(&["simulate", "--instance", "x.json", "--alpha", "2.0"]);
    assert!(!out.status.success());
}
