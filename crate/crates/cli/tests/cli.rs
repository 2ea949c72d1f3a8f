use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gqaoa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gqaoa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_instance(dir: &Path) -> String {
    let path = dir.join("four.json");
    fs::write(
        &path,
        "[[-0,+2,+3],[+0,+2,-3],[-1,+2,-3],[-1,-2,-3],[-1,-2,+3],[+1,+2,-3],[+0,+2,+3],[-0,+1,-3]]",
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn generate_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = gqaoa(&["--seed", "4", "--out-dir", out, "generate", "--n", "8", "--count", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = fs::read_to_string(dir.path().join("instance_0002.cnf")).unwrap();
    assert!(a.starts_with("p cnf 8 "));
    let again = gqaoa(&["--seed", "4", "generate", "--n", "8", "--count", "3"]);
    assert!(stdout(&again).contains(&a));
}

#[test]
fn spectrum_of_example() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path());
    let o = gqaoa(&["spectrum", &inst]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n"], 4);
    assert_eq!(v["m"], 8);
    let counts: Vec<u64> = serde_json::from_value(v["counts"].clone()).unwrap();
    assert_eq!(counts.iter().sum::<u64>(), 16);
    assert_eq!(v["solutions"], counts[0]);
}

#[test]
fn optimize_and_rounds() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path());
    let cfg = dir.path().join("opt.toml");
    fs::write(&cfg, "grid_spacing = 0.0872664625997164\ntop_k = 4\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let o = gqaoa(&["--config", cfg, "optimize", &inst, "--rounds", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["cost"].as_f64().unwrap() < 1.0);

    let o = gqaoa(&["--config", cfg, "optimize", &inst, "--rounds", "2", "--mixer", "x", "--mode", "per-round"]);
    assert!(o.status.success());

    let o = gqaoa(&["--config", cfg, "rounds", &inst, "--target", "0.9"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["result"]["solution_probability"].as_f64().unwrap() >= 0.9);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path());
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "no_such_field = 3\n").unwrap();
    let o = gqaoa(&["--config", cfg.to_str().unwrap(), "optimize", &inst]);
    assert_eq!(o.status.code(), Some(2));
    let o = gqaoa(&["compile", "--algorithm", "g-qaoa", "--n", "5", "--m", "8"]);
    assert_eq!(o.status.code(), Some(2));
    let o = gqaoa(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    let o = gqaoa(&["spectrum", "/definitely/missing.cnf"]);
    assert_eq!(o.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cnf");
    fs::write(&bad, "p cnf 3 1\n1 1 2 0\n").unwrap();
    let o = gqaoa(&["spectrum", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compile_reports() {
    let o = gqaoa(&["compile", "--algorithm", "g-qaoa", "--n", "5", "--m", "8", "--rounds", "1"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["entangling_total"], 73);
    assert_eq!(v["ancillas"], 2);
    let o = gqaoa(&["compile", "--algorithm", "grover-baseline", "--n", "10", "--m", "10", "--probability", "0.25"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["entangling_per_round"], 500);
    assert_eq!(v["estimate"], true);
}

#[test]
fn emit_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path());
    let o = gqaoa(&["emit", &inst, "--beta", "1.2", "--gamma", "0.4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("qubits 5\n"));
    let parsed = gqaoa_core::compiler::parse_circuit_text(&text).unwrap();
    assert_eq!(parsed.entangling_count(), 6 * 8 + 5 * 3);
}

#[test]
fn fairness_on_counts() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("two.json");
    // only 110 and 111 satisfy
    fs::write(&inst, "[[+0,+1,+2],[+0,+1,-2],[+0,-1,+2],[+0,-1,-2],[-0,+1,+2],[-0,+1,-2]]").unwrap();
    let counts = dir.path().join("counts.json");
    fs::write(&counts, r#"{"111": 40}"#).unwrap();
    let cfg = dir.path().join("fair.toml");
    fs::write(&cfg, "reject_trials = 101\nall_trials = 100\n").unwrap();
    let o = gqaoa(&[
        "--config",
        cfg.to_str().unwrap(),
        "fairness",
        counts.to_str().unwrap(),
        inst.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["solution_percent"], 100.0);
    assert_eq!(v["fairness"]["shots_to_reject"], 4);
}

#[test]
fn speedup_landscape_and_clustering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    fs::write(
        &cfg,
        "n_values = [6]\ninstances_per_n = 4\ntargets = [0.5]\n[optimizer]\ngrid_spacing = 0.17453292519943295\ntop_k = 3\n",
    )
    .unwrap();
    let out = dir.path().join("study");
    let o = gqaoa(&["--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap(), "speedup"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let records = out.join("records.jsonl");
    assert_eq!(fs::read_to_string(&records).unwrap().lines().count(), 4);

    // an impossible slope band is an acceptance-check failure
    let o = gqaoa(&["--config", cfg.to_str().unwrap(), "speedup", "--expect-slope", "5,6"]);
    assert_eq!(o.status.code(), Some(3));

    let o = gqaoa(&["clustering", records.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("n,m,objective,beta,gamma\n"));

    let inst = write_instance(dir.path());
    let o = gqaoa(&["landscape", &inst, "--rounds", "3", "--spacing-deg", "10"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert_eq!(csv.lines().count(), 37);
    let first_row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').skip(1).map(|x| x.parse().unwrap()).collect();
    assert!(first_row.iter().all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn empty_study_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.json");
    fs::write(&cfg, r#"{"n_values": []}"#).unwrap();
    let o = gqaoa(&["--config", cfg.to_str().unwrap(), "speedup"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
}

#[test]
fn table1_on_one_instance() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path());
    let cfg = dir.path().join("fair.toml");
    fs::write(&cfg, "reject_trials = 51\nall_trials = 200\ncap = 2000\n").unwrap();
    let o = gqaoa(&["--config", cfg.to_str().unwrap(), "table1", &inst, "--rounds", "2", "--expect-g-percent", "99.4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    let g = csv.lines().find(|l| l.starts_with("4,G,2,")).unwrap();
    assert!(g.ends_with(",cap"), "{g}");
}
