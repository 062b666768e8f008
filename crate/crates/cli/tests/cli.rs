//! End-to-end checks of the command-line surface, driving the built
//! binary through every verb.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_slotroute")
}

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("slotroute-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const TASK: &str = r#"{
  "depot": {"x": 1.0, "y": 1.0},
  "jobs": [
    {"id": 1, "coords": {"x": 1.0, "y": 2.0}, "window": [0.0, 5.0]},
    {"id": 2, "coords": {"x": 1.0, "y": 0.0}, "window": [0.0, 5.0]},
    {"id": 3, "coords": {"x": 0.2, "y": 1.7}, "window": [4.0, 9.0]}
  ],
  "params": {
    "n_vehicles": 2, "alpha": 2.0, "beta": 3.0, "travel_coeff": 1.0,
    "service_duration": 1.0,
    "calendar": {
      "slots_per_day": 2, "lookahead_days": 5, "day_length": 9.0,
      "windows": [[0.0, 5.0], [4.0, 9.0]]
    }
  }
}"#;

#[test]
fn generate_writes_decodable_instances() {
    let dir = tempdir("generate");
    let out = run(
        &[
            "generate", "--preset", "S1", "--count", "2", "--seed", "3", "--out", "inst",
        ],
        &dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for i in 0..2 {
        let path = dir.join("inst").join(format!("instance_{:04}.json", i));
        let text = std::fs::read_to_string(&path).unwrap();
        let inst: slotroute_core::Instance =
            slotroute_core::instance::decode_instance(&text).unwrap();
        assert!(inst.total_customers() > 0);
    }
}

#[test]
fn generate_accepts_a_location_pool() {
    let dir = tempdir("pool");
    std::fs::write(
        dir.join("pool.txt"),
        "# case-study coordinates\n0.25 0.75\n1.50 1.25\n0.80 0.40\n",
    )
    .unwrap();
    let out = run(
        &[
            "generate", "--preset", "S2", "--count", "1", "--seed", "9", "--out", "inst", "--pool",
            "pool.txt",
        ],
        &dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.join("inst").join("instance_0000.json")).unwrap();
    let inst: slotroute_core::Instance = slotroute_core::instance::decode_instance(&text).unwrap();
    let pool = inst.gen.location_pool.as_ref().unwrap();
    assert_eq!(pool.len(), 3);
    for c in inst.arrivals.iter().flatten() {
        assert!(pool.contains(&c.coords));
    }

    // Malformed pools are reported with their line number.
    std::fs::write(dir.join("bad.txt"), "0.25 0.75\nnot numbers\n").unwrap();
    let out = run(
        &[
            "generate", "--preset", "S2", "--out", "inst2", "--pool", "bad.txt",
        ],
        &dir,
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn solve_and_oracle_agree_on_a_small_task() {
    let dir = tempdir("solve");
    std::fs::write(dir.join("task.json"), TASK).unwrap();
    let solve = run(&["solve", "--task", "task.json", "--seed", "1"], &dir);
    assert!(
        solve.status.success(),
        "{}",
        String::from_utf8_lossy(&solve.stderr)
    );
    let oracle = run(&["oracle", "--task", "task.json"], &dir);
    assert!(
        oracle.status.success(),
        "{}",
        String::from_utf8_lossy(&oracle.stderr)
    );

    let objective = |output: &Output| -> f64 {
        String::from_utf8_lossy(&output.stdout)
            .lines()
            .find_map(|l| {
                l.strip_prefix("objective=")?
                    .split_whitespace()
                    .next()
                    .map(String::from)
            })
            .expect("objective line")
            .parse()
            .unwrap()
    };
    let h = objective(&solve);
    let x = objective(&oracle);
    assert!(
        h >= x - 1e-9 && h <= x * 1.02 + 1e-9,
        "heuristic {h} vs oracle {x}"
    );
}

#[test]
fn export_milp_writes_an_lp_document() {
    let dir = tempdir("milp");
    std::fs::write(dir.join("task.json"), TASK).unwrap();
    let out = run(&["export-milp", "--task", "task.json", "--out", "lp"], &dir);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.join("lp").join("task.lp")).unwrap();
    assert!(text.starts_with("\\ soft-time-window routing task"));
    assert!(text.contains("Minimize"));
    assert!(text.contains("Binaries"));
    assert!(text.trim_end().ends_with("End"));
}

#[test]
fn run_produces_reports_and_is_reproducible() {
    let dir = tempdir("run");
    let config = r#"{
        "preset": "S1",
        "gen": {
            "horizon_days": 2, "n_pre_mean": 3.0, "n_daily_mean": 2.0,
            "count_sd": 1.0, "area": 2.0, "depot": {"x": 1.0, "y": 1.0},
            "prefs_per_customer": 3
        },
        "policies": [{"name": "ran"}, {"name": "seg"}],
        "instances": 3,
        "base_seed": 11,
        "router_sweeps": 50,
        "jobs": 2
    }"#;
    std::fs::write(dir.join("bench.json"), config).unwrap();

    let first = run(&["run", "--config", "bench.json", "--out", "rep1"], &dir);
    assert!(
        first.status.success(),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let second = run(&["run", "--config", "bench.json", "--out", "rep2"], &dir);
    assert!(second.status.success());

    for file in ["episodes.csv", "summary.txt"] {
        let a = std::fs::read(dir.join("rep1").join(file)).unwrap();
        let b = std::fs::read(dir.join("rep2").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    // 2 policies x 3 instances + column header + two comment lines.
    let rows = std::fs::read_to_string(dir.join("rep1").join("episodes.csv")).unwrap();
    assert_eq!(rows.lines().count(), 9);
    assert!(rows.starts_with("# config_hash: "));
    // Timing exists but is excluded from the reproducibility contract.
    assert!(dir.join("rep1").join("timing.csv").exists());

    // A seed override changes the report.
    let third = run(
        &[
            "run",
            "--config",
            "bench.json",
            "--out",
            "rep3",
            "--seed",
            "12",
        ],
        &dir,
    );
    assert!(third.status.success());
    let a = std::fs::read(dir.join("rep1").join("episodes.csv")).unwrap();
    let c = std::fs::read(dir.join("rep3").join("episodes.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn run_rejects_bad_configs() {
    let dir = tempdir("badcfg");
    std::fs::write(
        dir.join("bench.json"),
        r#"{"policies": [], "instances": 1}"#,
    )
    .unwrap();
    let out = run(&["run", "--config", "bench.json"], &dir);
    assert!(!out.status.success());

    std::fs::write(
        dir.join("bench2.json"),
        r#"{"preset": "S9", "policies": [{"name": "ran"}], "instances": 1}"#,
    )
    .unwrap();
    let out = run(&["run", "--config", "bench2.json"], &dir);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("S9"), "{err}");
}

#[test]
fn oracle_rejects_oversized_tasks() {
    let dir = tempdir("oversize");
    let mut task: serde_json::Value = serde_json::from_str(TASK).unwrap();
    let jobs = task["jobs"].as_array_mut().unwrap();
    for i in 4..=10 {
        let mut job = jobs[0].clone();
        job["id"] = serde_json::json!(i);
        jobs.push(job);
    }
    std::fs::write(dir.join("big.json"), serde_json::to_string(&task).unwrap()).unwrap();
    let out = run(&["oracle", "--task", "big.json"], &dir);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("exact solver limited"));
}
