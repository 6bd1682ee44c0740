use std::path::Path;
use std::process::{Command, Output};

fn holosurf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holosurf"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .env_remove("HQC_SEED")
        .env_remove("HQC_TRIALS")
        .env_remove("HQC_CONFIG")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn body(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn braid_check_reports_the_cnot_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = holosurf(dir.path(), &["braid-check"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for line in ["X1 -> X1 X2: Same", "X2 -> X2: Same", "Z1 -> Z1: Same", "Z2 -> Z1 Z2: Same"] {
        assert!(text.contains(line), "{text}");
    }
    let report: serde_json::Value = serde_json::from_str(&read(dir.path(), "braid.json")).unwrap();
    assert_eq!(report["report"]["pass"], true);
    assert_eq!(report["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn rate_curve_contains_the_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    assert!(holosurf(dir.path(), &["rate-curve"]).status.success());
    let csv = read(dir.path(), "rate_curve.csv");
    let rows = body(&csv);
    assert_eq!(rows[0], "d,cbj,m,rate");
    let row = rows.iter().find(|r| r.starts_with("11,12.0,100000000.0,")).unwrap();
    let rate: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!((7e-9..9e-9).contains(&rate), "{rate}");
}

#[test]
fn zero_trials_give_a_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = holosurf(dir.path(), &["--trials", "0", "montecarlo"]);
    assert!(out.status.success());
    assert_eq!(body(&read(dir.path(), "montecarlo_memory.csv")), vec!["trial,outcome"]);
}

#[test]
fn output_is_identical_across_runs_and_worker_counts() {
    let cfg_dir = tempfile::tempdir().unwrap();
    let cfg = cfg_dir.path().join("vote.json");
    std::fs::write(&cfg, r#"{"montecarlo": {"kind": "vote", "d": 16, "p": 0.05}}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "3", "3"] {
        let dir = tempfile::tempdir().unwrap();
        let args = ["--config", cfg, "--seed", "7", "--trials", "9000", "--workers", workers, "montecarlo"];
        assert!(holosurf(dir.path(), &args).status.success());
        outputs.push(read(dir.path(), "montecarlo_vote.csv"));
    }
    assert_eq!(body(&outputs[0]).len(), 9001);
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn replay_reproduces_trials_and_catches_edits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("distill.json");
    std::fs::write(&cfg, r#"{"montecarlo": {"kind": "distill", "p": 0.05, "code": "reed_muller"}}"#).unwrap();
    let run = holosurf(dir.path(), &["--config", cfg.to_str().unwrap(), "--trials", "500", "montecarlo"]);
    assert!(run.status.success());
    let log = dir.path().join("montecarlo_distill.csv");
    let ok = holosurf(dir.path(), &["replay", log.to_str().unwrap()]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    let one = holosurf(dir.path(), &["replay", "--only", "123", log.to_str().unwrap()]);
    assert!(String::from_utf8(one.stdout).unwrap().contains("replayed 1 trials, 0 mismatches"));

    let text = std::fs::read_to_string(&log).unwrap();
    let edited: String = text
        .lines()
        .map(|l| {
            if l.starts_with("17,") {
                format!("17,{}", if l.ends_with("reject") { "ok" } else { "reject" })
            } else {
                l.into()
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(&log, edited).unwrap();
    assert_eq!(holosurf(dir.path(), &["replay", log.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn environment_mirrors_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_holosurf"))
        .env("HQC_OUT", dir.path())
        .env("HQC_TRIALS", "5")
        .arg("montecarlo")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(body(&read(dir.path(), "montecarlo_memory.csv")).len(), 6);
}

#[test]
fn estimate_and_oracle_reports() {
    let dir = tempfile::tempdir().unwrap();
    assert!(holosurf(dir.path(), &["estimate"]).status.success());
    let est: serde_json::Value = serde_json::from_str(&read(dir.path(), "estimate.json")).unwrap();
    assert_eq!((est["report"]["d"].as_u64(), est["report"]["n_tot"].as_u64()), (Some(11), Some(441)));
    let out = holosurf(dir.path(), &["oracle-verify"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(body(&read(dir.path(), "oracle_curve.csv")).len(), 6);
}

#[test]
fn bad_input_and_failed_checks_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"lattice": {"l": 20, "unknown": 1}}"#).unwrap();
    assert_eq!(holosurf(dir.path(), &["--config", cfg.to_str().unwrap(), "build-lattice"]).status.code(), Some(2));
    std::fs::write(&cfg, r#"{"estimate": {"p": 0.2, "cbj": 1.0}}"#).unwrap();
    assert_eq!(holosurf(dir.path(), &["--config", cfg.to_str().unwrap(), "estimate"]).status.code(), Some(2));
    // Shorter and shorter steps make the error curve rise.
    std::fs::write(&cfg, r#"{"oracle": {"t_values": [32.0, 16.0, 8.0]}}"#).unwrap();
    assert_eq!(holosurf(dir.path(), &["--config", cfg.to_str().unwrap(), "oracle-verify"]).status.code(), Some(1));
}

#[test]
fn program_runs_a_bell_pair() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("bell.json");
    std::fs::write(
        &prog,
        r#"{"x_slots": 2, "z_slots": 2, "steps": [
            {"op": "claim", "params": {"kind": "Z", "basis": "X"}},
            {"op": "claim", "params": {"kind": "X", "basis": "Z"}},
            {"op": "cnot", "qubits": [0, 1]},
            {"op": "measure", "qubits": [0], "params": {"basis": "Z"}},
            {"op": "measure", "qubits": [1], "params": {"basis": "Z"}}]}"#,
    )
    .unwrap();
    for seed in ["1", "2", "3"] {
        assert!(holosurf(dir.path(), &["--seed", seed, "program", prog.to_str().unwrap()]).status.success());
        let rep: serde_json::Value = serde_json::from_str(&read(dir.path(), "program.json")).unwrap();
        let rec = &rep["report"]["records"];
        assert_eq!(rec[3]["outcome"], rec[4]["outcome"]);
    }
}
